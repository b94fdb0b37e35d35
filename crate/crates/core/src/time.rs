use std::fmt;

use serde::{Deserialize, Serialize};

/// Capture timestamp in microseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const MICROS_PER_SEC: i64 = 1_000_000;

    pub fn from_secs(secs: i64) -> Self {
        Timestamp(secs * Self::MICROS_PER_SEC)
    }

    pub fn from_parts(secs: i64, micros: i64) -> Self {
        Timestamp(secs * Self::MICROS_PER_SEC + micros)
    }

    pub fn from_secs_f64(secs: f64) -> Self {
        Timestamp((secs * Self::MICROS_PER_SEC as f64).round() as i64)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    /// Whole seconds, rounded toward negative infinity.
    pub fn secs(self) -> i64 {
        self.0.div_euclid(Self::MICROS_PER_SEC)
    }

    pub fn subsec_micros(self) -> i64 {
        self.0.rem_euclid(Self::MICROS_PER_SEC)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::MICROS_PER_SEC as f64
    }

    /// Signed difference `self - earlier` in seconds.
    pub fn secs_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / Self::MICROS_PER_SEC as f64
    }

    pub fn add_secs_f64(self, secs: f64) -> Self {
        Timestamp(self.0 + (secs * Self::MICROS_PER_SEC as f64).round() as i64)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.secs(), self.subsec_micros())
    }
}

impl std::str::FromStr for Timestamp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if frac.len() > 6 {
            return Err(format!("timestamp {s:?} has more than microsecond precision"));
        }
        let whole: i64 = whole.parse().map_err(|_| format!("bad timestamp {s:?}"))?;
        let mut micros = 0i64;
        if !frac.is_empty() {
            let digits: i64 = frac.parse().map_err(|_| format!("bad timestamp {s:?}"))?;
            micros = digits * 10i64.pow(6 - frac.len() as u32);
        }
        let v = whole * Timestamp::MICROS_PER_SEC + micros;
        Ok(Timestamp(if neg { -v } else { v }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_roundtrip() {
        for t in [Timestamp(0), Timestamp(1_609_718_400_000_001), Timestamp(12_500_000)] {
            let s = t.to_string();
            assert_eq!(s.parse::<Timestamp>().unwrap(), t);
        }
        assert_eq!("3.5".parse::<Timestamp>().unwrap(), Timestamp(3_500_000));
    }

    #[test]
    fn secs_floor() {
        assert_eq!(Timestamp(2_999_999).secs(), 2);
        assert_eq!(Timestamp(-1).secs(), -1);
    }
}
