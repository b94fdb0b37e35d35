use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capture::dns::DNS_PORT;
use crate::capture::{AttributedPacket, DeviceId, TlsClientHelloObservation, Transport};
use crate::flow::FlowRecord;
use crate::time::Timestamp;

pub const HOUR_SECS: i64 = 3600;
pub const NTP_PORT: u16 = 123;

/// One wall-clock hour of a device's traffic: three token bags for the
/// first classification stage and six numeric features for the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourWindowRow {
    pub device_id: DeviceId,
    pub window_start: Timestamp,
    pub bag_of_ports: Vec<u16>,
    pub bag_of_domains: Vec<String>,
    pub bag_of_ciphers: Vec<u16>,
    pub flow_volume: u64,
    pub flow_duration: f64,
    pub flow_rate: f64,
    pub sleep_time: f64,
    pub dns_interval: f64,
    pub ntp_interval: f64,
}

impl HourWindowRow {
    pub const NUMERIC_NAMES: [&'static str; 6] = [
        "flow_volume",
        "flow_duration",
        "flow_rate",
        "sleep_time",
        "dns_interval",
        "ntp_interval",
    ];

    pub fn numeric(&self) -> [f64; 6] {
        [
            self.flow_volume as f64,
            self.flow_duration,
            self.flow_rate,
            self.sleep_time,
            self.dns_interval,
            self.ntp_interval,
        ]
    }

    fn empty(device_id: DeviceId, window_start: Timestamp) -> Self {
        HourWindowRow {
            device_id,
            window_start,
            bag_of_ports: Vec::new(),
            bag_of_domains: Vec::new(),
            bag_of_ciphers: Vec::new(),
            flow_volume: 0,
            flow_duration: 0.0,
            flow_rate: 0.0,
            sleep_time: 0.0,
            dns_interval: 0.0,
            ntp_interval: 0.0,
        }
    }
}

pub fn hour_of(t: Timestamp) -> Timestamp {
    Timestamp::from_secs(t.secs().div_euclid(HOUR_SECS) * HOUR_SECS)
}

fn mean_gap(times: &[Timestamp]) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    times[times.len() - 1].secs_since(times[0]) / (times.len() - 1) as f64
}

#[derive(Default)]
struct HourAcc<'a> {
    packet_times: Vec<Timestamp>,
    dns_queries: Vec<Timestamp>,
    ntp_requests: Vec<Timestamp>,
    flows: Vec<&'a FlowRecord>,
    ciphers: Vec<u16>,
}

/// Builds hour rows for every (device, hour) with at least one packet.
///
/// Flow segments belong to the hour they start in; `flows` should already
/// carry their resolved `remote_domain`.
pub fn extract_hour_window<'a>(
    packets: impl IntoIterator<Item = &'a AttributedPacket>,
    flows: &'a [FlowRecord],
    tls: &[TlsClientHelloObservation],
) -> Vec<HourWindowRow> {
    let mut acc: BTreeMap<(DeviceId, Timestamp), HourAcc<'a>> = BTreeMap::new();
    for ap in packets {
        let p = &ap.packet;
        let a = acc.entry((ap.device_id, hour_of(p.timestamp))).or_default();
        a.packet_times.push(p.timestamp);
        if ap.originated && p.transport == Transport::Udp {
            if p.dst_port == DNS_PORT {
                a.dns_queries.push(p.timestamp);
            } else if p.dst_port == NTP_PORT {
                a.ntp_requests.push(p.timestamp);
            }
        }
    }
    for f in flows {
        if let Some(a) = acc.get_mut(&(f.device_id, hour_of(f.start_time))) {
            a.flows.push(f);
        }
    }
    for h in tls {
        if let Some(a) = acc.get_mut(&(h.device_id, hour_of(h.timestamp))) {
            a.ciphers.extend_from_slice(&h.cipher_suites);
        }
    }

    acc.into_iter()
        .map(|((device_id, start), mut a)| {
            let mut row = HourWindowRow::empty(device_id, start);
            a.packet_times.sort_unstable();
            a.dns_queries.sort_unstable();
            a.ntp_requests.sort_unstable();

            row.bag_of_ports = a.flows.iter().map(|f| f.key.dst_port).collect();
            row.bag_of_domains = a
                .flows
                .iter()
                .filter(|f| !f.remote_domain.is_empty())
                .map(|f| f.remote_domain.clone())
                .collect();
            row.bag_of_ciphers = a.ciphers;
            row.flow_volume = a.flows.iter().map(|f| f.total_bytes()).sum();
            if !a.flows.is_empty() {
                row.flow_duration =
                    a.flows.iter().map(|f| f.duration_secs()).sum::<f64>() / a.flows.len() as f64;
            }
            row.flow_rate = row.flow_volume as f64 / HOUR_SECS as f64;

            let end = Timestamp::from_secs(start.secs() + HOUR_SECS);
            let mut prev = start;
            let mut sleep = 0.0f64;
            for &t in a.packet_times.iter().chain(std::iter::once(&end)) {
                sleep = sleep.max(t.secs_since(prev));
                prev = t;
            }
            row.sleep_time = sleep;
            row.dns_interval = mean_gap(&a.dns_queries);
            row.ntp_interval = mean_gap(&a.ntp_requests);
            row
        })
        .collect()
}
