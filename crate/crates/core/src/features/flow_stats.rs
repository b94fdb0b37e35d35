use serde::{Deserialize, Serialize};

use super::moments::moments;
use crate::capture::{DeviceId, Transport};
use crate::flow::{resolve_domain, DomainMap, FlowRecord};
use crate::time::Timestamp;

/// Per-segment flow statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowFeatureRow {
    pub device_id: DeviceId,
    pub start_time: Timestamp,
    pub src_port: u16,
    pub dest_port: u16,
    pub bytes_out: u64,
    pub bytes_in: u64,
    pub pkts_out: u32,
    pub pkts_in: u32,
    pub ipt_mean: f64,
    pub ipt_std: f64,
    pub ipt_var: f64,
    pub ipt_skew: f64,
    pub ipt_kurtosis: f64,
    pub b_mean: f64,
    pub b_std: f64,
    pub b_var: f64,
    pub b_skew: f64,
    pub b_kurtosis: f64,
    pub duration: f64,
    /// IP protocol number: 6 for TCP, 17 for UDP.
    pub protocol: u8,
    pub domain: String,
}

impl FlowFeatureRow {
    pub const NUMERIC_NAMES: [&'static str; 18] = [
        "src_port",
        "dest_port",
        "bytes_out",
        "bytes_in",
        "pkts_out",
        "pkts_in",
        "ipt_mean",
        "ipt_std",
        "ipt_var",
        "ipt_skew",
        "ipt_kurtosis",
        "b_mean",
        "b_std",
        "b_var",
        "b_skew",
        "b_kurtosis",
        "duration",
        "protocol",
    ];

    /// All features except the domain, in `NUMERIC_NAMES` order.
    pub fn numeric(&self) -> [f64; 18] {
        [
            self.src_port as f64,
            self.dest_port as f64,
            self.bytes_out as f64,
            self.bytes_in as f64,
            self.pkts_out as f64,
            self.pkts_in as f64,
            self.ipt_mean,
            self.ipt_std,
            self.ipt_var,
            self.ipt_skew,
            self.ipt_kurtosis,
            self.b_mean,
            self.b_std,
            self.b_var,
            self.b_skew,
            self.b_kurtosis,
            self.duration,
            self.protocol as f64,
        ]
    }
}

pub fn extract_flow_features(flow: &FlowRecord, map: &DomainMap) -> FlowFeatureRow {
    let intervals: Vec<f64> = flow
        .pkt_times
        .windows(2)
        .map(|w| w[1].secs_since(w[0]))
        .collect();
    let sizes: Vec<f64> = flow.pkt_sizes.iter().map(|&s| s as f64).collect();
    let ipt = moments(&intervals);
    let b = moments(&sizes);
    FlowFeatureRow {
        device_id: flow.device_id,
        start_time: flow.start_time,
        src_port: flow.key.src_port,
        dest_port: flow.key.dst_port,
        bytes_out: flow.bytes_out,
        bytes_in: flow.bytes_in,
        pkts_out: flow.pkts_out,
        pkts_in: flow.pkts_in,
        ipt_mean: ipt.mean,
        ipt_std: ipt.std,
        ipt_var: ipt.var,
        ipt_skew: ipt.skew,
        ipt_kurtosis: ipt.kurtosis,
        b_mean: b.mean,
        b_std: b.std,
        b_var: b.var,
        b_skew: b.skew,
        b_kurtosis: b.kurtosis,
        duration: flow.duration_secs(),
        protocol: match flow.key.transport {
            Transport::Tcp => 6,
            Transport::Udp => 17,
            Transport::Other => 0,
        },
        domain: resolve_domain(map, flow.device_id, flow.key.dst_ip, flow.start_time),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::DnsObservation;
    use crate::flow::FlowKey;
    use std::net::Ipv4Addr;

    fn record(times: &[f64], sizes: &[u32]) -> FlowRecord {
        FlowRecord {
            key: FlowKey {
                src_ip: Ipv4Addr::new(192, 168, 1, 10),
                dst_ip: Ipv4Addr::new(216, 58, 0, 1),
                src_port: 50000,
                dst_port: 443,
                transport: Transport::Tcp,
            },
            device_id: DeviceId(0),
            start_time: Timestamp::from_secs_f64(times[0]),
            end_time: Timestamp::from_secs_f64(*times.last().unwrap()),
            bytes_out: sizes.iter().map(|&s| s as u64).sum(),
            bytes_in: 0,
            pkts_out: sizes.len() as u32,
            pkts_in: 0,
            pkt_sizes: sizes.to_vec(),
            pkt_times: times.iter().map(|&t| Timestamp::from_secs_f64(t)).collect(),
            remote_domain: String::new(),
            continuation_index: 0,
        }
    }

    #[test]
    fn single_packet_flow() {
        let f = extract_flow_features(&record(&[10.0], &[60]), &DomainMap::new());
        assert_eq!((f.pkts_out + f.pkts_in, f.b_mean, f.b_std, f.duration), (1, 60.0, 0.0, 0.0));
        assert_eq!([f.ipt_mean, f.ipt_std, f.ipt_var, f.ipt_skew, f.ipt_kurtosis], [0.0; 5]);
        assert_eq!(f.protocol, 6);
        assert_eq!(f.domain, "");
    }

    #[test]
    fn single_interval() {
        let f = extract_flow_features(&record(&[0.0, 0.5], &[60, 60]), &DomainMap::new());
        assert_eq!((f.ipt_mean, f.ipt_std), (0.5, 0.0));
    }

    #[test]
    fn size_moments_and_domain() {
        let map = DomainMap::from_observations(&[DnsObservation {
            timestamp: Timestamp::from_secs(0),
            queried_name: "time.google.com".into(),
            resolved_ip: Ipv4Addr::new(216, 58, 0, 1),
            device_id: DeviceId(0),
        }]);
        let f = extract_flow_features(&record(&[1.0, 2.0, 3.0], &[100, 200, 300]), &map);
        assert_eq!(f.b_mean, 200.0);
        assert!((f.b_std - 81.649_658_092_772_6).abs() < 1e-9);
        assert!((f.b_var - f.b_std * f.b_std).abs() <= 1e-9 * f.b_var);
        assert_eq!(f.domain, "google.com");
        assert_eq!(f.duration, 2.0);
    }
}
