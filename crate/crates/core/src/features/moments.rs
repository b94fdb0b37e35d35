use serde::{Deserialize, Serialize};

/// Population moments; kurtosis is non-excess (normal = 3).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub var: f64,
    pub skew: f64,
    pub kurtosis: f64,
}

/// Mean, variance (÷n), std, skewness `m3/var^1.5` and kurtosis `m4/var²`.
///
/// An empty series gives all zeros. A series whose values are all equal
/// (including a single value) has zero spread, so std, var, skew and
/// kurtosis are all zero and the mean is that value.
pub fn moments(series: &[f64]) -> Moments {
    let Some(&first) = series.first() else {
        return Moments::default();
    };
    if series.iter().all(|&x| x == first) {
        return Moments {
            mean: first,
            ..Moments::default()
        };
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let var = m2 / n;
    let (m3, m4) = (m3 / n, m4 / n);
    if var <= 0.0 {
        return Moments {
            mean,
            ..Moments::default()
        };
    }
    Moments {
        mean,
        std: var.sqrt(),
        var,
        skew: m3 / (var * var.sqrt()),
        kurtosis: m4 / (var * var),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_constant() {
        assert_eq!(moments(&[]), Moments::default());
        assert_eq!(
            moments(&[5.0, 5.0, 5.0]),
            Moments { mean: 5.0, ..Default::default() }
        );
        assert_eq!(moments(&[60.0]).mean, 60.0);
        assert_eq!(moments(&[0.1, 0.1, 0.1]).mean, 0.1);
    }

    #[test]
    fn three_point_series() {
        // Values worked out by hand: deviations -100, 0, 100.
        let m = moments(&[100.0, 200.0, 300.0]);
        assert_eq!(m.mean, 200.0);
        assert!((m.var - 20000.0 / 3.0).abs() < 1e-9);
        assert!((m.std - 81.649_658_092_772_6).abs() < 1e-9);
        assert!(m.skew.abs() < 1e-12);
        assert!((m.kurtosis - 1.5).abs() < 1e-12);
    }

    #[test]
    fn skewed_series_sign() {
        assert!(moments(&[1.0, 1.0, 1.0, 10.0]).skew > 0.0);
        assert!(moments(&[-10.0, 1.0, 1.0, 1.0]).skew < 0.0);
    }
}
