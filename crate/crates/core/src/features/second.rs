use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::moments::moments;
use crate::capture::{AttributedPacket, DeviceId};
use crate::time::Timestamp;

/// Byte statistics over one second of a device's traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondWindowRow {
    pub device_id: DeviceId,
    pub second_start: Timestamp,
    pub bytes_sum: u64,
    pub bytes_avg: f64,
    pub bytes_std: f64,
}

impl SecondWindowRow {
    pub const NUMERIC_NAMES: [&'static str; 3] = ["bytes_sum", "bytes_avg", "bytes_std"];

    pub fn numeric(&self) -> [f64; 3] {
        [self.bytes_sum as f64, self.bytes_avg, self.bytes_std]
    }
}

/// One row per (device, whole second) that saw at least one packet.
pub fn extract_second_window<'a, I>(packets: I) -> Vec<SecondWindowRow>
where
    I: IntoIterator<Item = &'a AttributedPacket>,
{
    let mut groups: BTreeMap<(DeviceId, i64), Vec<f64>> = BTreeMap::new();
    for ap in packets {
        groups
            .entry((ap.device_id, ap.packet.timestamp.secs()))
            .or_default()
            .push(ap.packet.wire_len as f64);
    }
    let mut rows: Vec<SecondWindowRow> = groups
        .into_iter()
        .map(|((device_id, sec), sizes)| {
            let m = moments(&sizes);
            SecondWindowRow {
                device_id,
                second_start: Timestamp::from_secs(sec),
                bytes_sum: sizes.iter().map(|&s| s as u64).sum(),
                bytes_avg: m.mean,
                bytes_std: m.std,
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.second_start, r.device_id));
    rows
}
