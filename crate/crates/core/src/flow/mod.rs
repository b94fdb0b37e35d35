//! Flow segmentation over a device-centric 5-tuple table and the per-device
//! IP→domain map built from DNS answers.

mod store;

use std::collections::{BTreeMap, HashMap};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::capture::{AttributedPacket, DeviceId, DnsObservation, PacketRecord, Transport};
use crate::error::{Error, Result};
use crate::time::Timestamp;

pub use store::{read_flow_csv, write_flow_csv, FLOW_CSV_HEADER};

/// A segment is exported when the next packet arrives more than this long
/// after the segment's latest packet.
pub const INACTIVE_TIMEOUT: i64 = 10 * Timestamp::MICROS_PER_SEC;
/// A segment never spans more than this much time.
pub const ACTIVE_TIMEOUT: i64 = 30 * Timestamp::MICROS_PER_SEC;
/// Per-packet sizes and times are kept for the first this-many packets.
pub const MAX_TRACKED_PACKETS: usize = 50;

/// Device-centric 5-tuple: `src_*` is always the device side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub transport: Transport,
}

impl FlowKey {
    /// `None` for packets that are neither TCP nor UDP.
    pub fn for_packet(p: &PacketRecord, originated: bool) -> Option<FlowKey> {
        if p.transport == Transport::Other {
            return None;
        }
        Some(if originated {
            FlowKey {
                src_ip: p.src_ip,
                dst_ip: p.dst_ip,
                src_port: p.src_port,
                dst_port: p.dst_port,
                transport: p.transport,
            }
        } else {
            FlowKey {
                src_ip: p.dst_ip,
                dst_ip: p.src_ip,
                src_port: p.dst_port,
                dst_port: p.src_port,
                transport: p.transport,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub key: FlowKey,
    pub device_id: DeviceId,
    pub start_time: Timestamp,
    pub end_time: Timestamp,
    pub bytes_out: u64,
    pub bytes_in: u64,
    pub pkts_out: u32,
    pub pkts_in: u32,
    /// Wire lengths of the first packets, both directions, arrival order.
    pub pkt_sizes: Vec<u32>,
    pub pkt_times: Vec<Timestamp>,
    pub remote_domain: String,
    pub continuation_index: u32,
}

impl FlowRecord {
    pub fn duration_secs(&self) -> f64 {
        self.end_time.secs_since(self.start_time)
    }

    pub fn total_packets(&self) -> u64 {
        self.pkts_out as u64 + self.pkts_in as u64
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes_out + self.bytes_in
    }
}

#[derive(Debug, Clone)]
struct Segment {
    record: FlowRecord,
}

impl Segment {
    fn open(key: FlowKey, device_id: DeviceId, at: Timestamp, continuation_index: u32) -> Self {
        Segment {
            record: FlowRecord {
                key,
                device_id,
                start_time: at,
                end_time: at,
                bytes_out: 0,
                bytes_in: 0,
                pkts_out: 0,
                pkts_in: 0,
                pkt_sizes: Vec::new(),
                pkt_times: Vec::new(),
                remote_domain: String::new(),
                continuation_index,
            },
        }
    }

    fn push(&mut self, p: &PacketRecord, originated: bool) {
        let r = &mut self.record;
        r.start_time = r.start_time.min(p.timestamp);
        r.end_time = r.end_time.max(p.timestamp);
        if originated {
            r.bytes_out += p.wire_len as u64;
            r.pkts_out += 1;
        } else {
            r.bytes_in += p.wire_len as u64;
            r.pkts_in += 1;
        }
        if r.pkt_sizes.len() < MAX_TRACKED_PACKETS {
            r.pkt_sizes.push(p.wire_len);
            r.pkt_times.push(p.timestamp);
        }
    }

    /// Whether a packet at `t` must start a new segment.
    fn expires_at(&self, t: Timestamp) -> bool {
        let r = &self.record;
        let idle = t.micros() - r.end_time.micros();
        let span = r.end_time.max(t).micros() - r.start_time.min(t).micros();
        idle > INACTIVE_TIMEOUT || span > ACTIVE_TIMEOUT
    }
}

/// Open flow segments keyed by device and 5-tuple.
///
/// Timeouts are evaluated lazily when the flow's next packet arrives or on
/// [`FlowTable::flush`].
#[derive(Debug, Default, Clone)]
pub struct FlowTable {
    open: BTreeMap<(DeviceId, FlowKey), Segment>,
}

impl FlowTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    /// Adds one packet; returns the segment it closed, if any.
    pub fn advance(
        &mut self,
        device_id: DeviceId,
        packet: &PacketRecord,
        originated: bool,
    ) -> Result<Option<FlowRecord>> {
        let key = FlowKey::for_packet(packet, originated).ok_or_else(|| {
            Error::InvalidInput("flow table accepts only TCP and UDP packets".into())
        })?;
        let t = packet.timestamp;
        let mut exported = None;
        match self.open.get_mut(&(device_id, key)) {
            Some(seg) => {
                if seg.expires_at(t) {
                    let next = Segment::open(key, device_id, t, seg.record.continuation_index + 1);
                    exported = Some(std::mem::replace(seg, next).record);
                }
                seg.push(packet, originated);
            }
            None => {
                let mut seg = Segment::open(key, device_id, t, 0);
                seg.push(packet, originated);
                self.open.insert((device_id, key), seg);
            }
        }
        Ok(exported)
    }

    pub fn advance_attributed(&mut self, ap: &AttributedPacket) -> Result<Option<FlowRecord>> {
        self.advance(ap.device_id, &ap.packet, ap.originated)
    }

    /// Exports every open segment, ordered by start time then key.
    pub fn flush(&mut self) -> Vec<FlowRecord> {
        let mut out: Vec<FlowRecord> = std::mem::take(&mut self.open)
            .into_values()
            .map(|s| s.record)
            .filter(|r| r.total_packets() > 0)
            .collect();
        sort_records(&mut out);
        out
    }
}

pub fn sort_records(records: &mut [FlowRecord]) {
    records.sort_by(|a, b| {
        (a.start_time, a.device_id, a.key, a.continuation_index).cmp(&(
            b.start_time,
            b.device_id,
            b.key,
            b.continuation_index,
        ))
    });
}

/// Runs TCP/UDP packets through a fresh table and returns every segment,
/// sorted by start time. Other transports are ignored.
pub fn segment_packets<'a, I>(packets: I) -> Vec<FlowRecord>
where
    I: IntoIterator<Item = &'a AttributedPacket>,
{
    let mut table = FlowTable::new();
    let mut out = Vec::new();
    for ap in packets {
        if ap.packet.transport == Transport::Other {
            continue;
        }
        if let Some(r) = table.advance_attributed(ap).expect("transport checked") {
            out.push(r);
        }
    }
    out.extend(table.flush());
    sort_records(&mut out);
    out
}

/// Second-level plus top-level label: `"cdn.eu.example.com"` → `"example.com"`.
pub fn sld_of(fqdn: &str) -> String {
    let name = fqdn.trim_end_matches('.');
    let mut labels = name.rsplit('.');
    match (labels.next(), labels.next()) {
        (Some(tld), Some(sld)) => format!("{sld}.{tld}"),
        _ => name.to_string(),
    }
}

/// Per-device history of IP → SLD bindings learned from DNS answers.
#[derive(Debug, Clone, Default)]
pub struct DomainMap {
    bindings: HashMap<(DeviceId, Ipv4Addr), Vec<(Timestamp, String)>>,
}

impl DomainMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations<'a, I>(obs: I) -> Self
    where
        I: IntoIterator<Item = &'a DnsObservation>,
    {
        let mut m = Self::new();
        for o in obs {
            m.insert(o);
        }
        m
    }

    pub fn insert(&mut self, obs: &DnsObservation) {
        let history = self.bindings.entry((obs.device_id, obs.resolved_ip)).or_default();
        let at = history.partition_point(|(t, _)| *t <= obs.timestamp);
        history.insert(at, (obs.timestamp, sld_of(&obs.queried_name)));
    }

    /// Most recent SLD bound to `ip` for this device at or before `at`.
    pub fn resolve(&self, device_id: DeviceId, ip: Ipv4Addr, at: Timestamp) -> Option<&str> {
        let history = self.bindings.get(&(device_id, ip))?;
        let n = history.partition_point(|(t, _)| *t <= at);
        n.checked_sub(1).map(|i| history[i].1.as_str())
    }
}

/// Domain for a remote address, empty when never resolved.
pub fn resolve_domain(map: &DomainMap, device_id: DeviceId, remote_ip: Ipv4Addr, at: Timestamp) -> String {
    map.resolve(device_id, remote_ip, at).unwrap_or_default().to_string()
}

/// Fills `remote_domain` on each record from the map, as of the record's start.
pub fn annotate_domains(records: &mut [FlowRecord], map: &DomainMap) {
    for r in records {
        r.remote_domain = resolve_domain(map, r.device_id, r.key.dst_ip, r.start_time);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::MacAddr;

    pub(crate) fn udp_packet(t_secs: f64, len: u32, originated: bool) -> PacketRecord {
        let dev = Ipv4Addr::new(192, 168, 1, 10);
        let remote = Ipv4Addr::new(8, 8, 4, 4);
        let (src_ip, dst_ip, src_port, dst_port) = if originated {
            (dev, remote, 40000, 123)
        } else {
            (remote, dev, 123, 40000)
        };
        PacketRecord {
            timestamp: Timestamp::from_secs_f64(t_secs),
            src_mac: MacAddr::default(),
            dst_mac: MacAddr::default(),
            src_ip,
            dst_ip,
            src_port,
            dst_port,
            transport: Transport::Udp,
            wire_len: len,
            data: Vec::new(),
            payload_offset: 0,
        }
    }

    fn run(times: &[f64]) -> Vec<FlowRecord> {
        let mut table = FlowTable::new();
        let mut out = Vec::new();
        for &t in times {
            out.extend(table.advance(DeviceId(0), &udp_packet(t, 100, true), true).unwrap());
        }
        out.extend(table.flush());
        out
    }

    #[test]
    fn sld_examples() {
        assert_eq!(sld_of("example.com"), "example.com");
        assert_eq!(sld_of("cdn.eu.example.com"), "example.com");
        assert_eq!(sld_of("localhost"), "localhost");
    }

    #[test]
    fn under_both_thresholds() {
        let r = run(&[0.0, 5.0, 8.0]);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].duration_secs(), 8.0);
        assert_eq!(r[0].total_packets(), 3);
    }

    #[test]
    fn inactivity_export_on_next_packet() {
        let mut table = FlowTable::new();
        assert!(table.advance(DeviceId(0), &udp_packet(0.0, 100, true), true).unwrap().is_none());
        let exported = table
            .advance(DeviceId(0), &udp_packet(11.0, 100, true), true)
            .unwrap()
            .expect("t=11 closes the first segment");
        assert_eq!(exported.start_time, exported.end_time);
        assert_eq!(exported.continuation_index, 0);
        let rest = table.flush();
        assert_eq!(rest.len(), 1);
        assert_eq!(rest[0].start_time, Timestamp::from_secs(11));
        assert_eq!(rest[0].continuation_index, 1);
    }

    #[test]
    fn exactly_ten_seconds_is_not_inactive() {
        assert_eq!(run(&[0.0, 10.0]).len(), 1);
        assert_eq!(run(&[0.0, 10.000001]).len(), 2);
    }

    #[test]
    fn active_timeout_splits_at_thirty() {
        let times: Vec<f64> = (0..=31).map(|s| s as f64).collect();
        let r = run(&times);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].start_time, Timestamp::from_secs(0));
        assert_eq!(r[0].end_time, Timestamp::from_secs(30));
        assert_eq!(r[0].total_packets(), 31);
        assert_eq!(r[1].start_time, Timestamp::from_secs(31));
    }

    #[test]
    fn flush_empty_and_many() {
        let mut t = FlowTable::new();
        assert!(t.flush().is_empty());
        t.advance(DeviceId(0), &udp_packet(0.0, 60, true), true).unwrap();
        let mut other = udp_packet(1.0, 60, true);
        other.dst_port = 53;
        t.advance(DeviceId(0), &other, true).unwrap();
        assert_eq!(t.flush().len(), 2);
        assert!(t.is_empty());
    }

    #[test]
    fn caps_tracked_packets_at_fifty() {
        let times: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let r = run(&times);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].pkt_sizes.len(), 50);
        assert_eq!(r[0].pkt_times.len(), 50);
        assert_eq!(r[0].total_packets(), 60);
        assert_eq!(r[0].pkt_times[49], Timestamp::from_secs_f64(4.9));
    }

    #[test]
    fn reply_maps_to_same_key() {
        let out = udp_packet(0.0, 60, true);
        let back = udp_packet(0.1, 80, false);
        assert_eq!(FlowKey::for_packet(&out, true), FlowKey::for_packet(&back, false));
        let r = run(&[0.0]);
        assert_eq!(r[0].pkts_out, 1);
        let mut t = FlowTable::new();
        t.advance(DeviceId(0), &out, true).unwrap();
        t.advance(DeviceId(0), &back, false).unwrap();
        let r = t.flush();
        assert_eq!((r[0].pkts_out, r[0].pkts_in, r[0].bytes_out, r[0].bytes_in), (1, 1, 60, 80));
    }

    #[test]
    fn other_transport_rejected() {
        let mut p = udp_packet(0.0, 60, true);
        p.transport = Transport::Other;
        assert!(FlowTable::new().advance(DeviceId(0), &p, true).is_err());
    }

    fn obs(t: i64, name: &str, ip: Ipv4Addr) -> DnsObservation {
        DnsObservation {
            timestamp: Timestamp::from_secs(t),
            queried_name: name.into(),
            resolved_ip: ip,
            device_id: DeviceId(0),
        }
    }

    #[test]
    fn domain_resolution_most_recent_wins() {
        let ip = Ipv4Addr::new(216, 58, 0, 1);
        let mut m = DomainMap::from_observations(&[obs(0, "time.google.com", ip)]);
        assert_eq!(resolve_domain(&m, DeviceId(0), ip, Timestamp::from_secs(1)), "google.com");
        assert_eq!(resolve_domain(&m, DeviceId(0), Ipv4Addr::new(1, 1, 1, 1), Timestamp::from_secs(1)), "");
        assert_eq!(resolve_domain(&m, DeviceId(1), ip, Timestamp::from_secs(1)), "");

        let ip2 = Ipv4Addr::new(10, 0, 0, 1);
        m.insert(&obs(5, "b.y.net", ip2));
        m.insert(&obs(1, "a.x.com", ip2));
        assert_eq!(resolve_domain(&m, DeviceId(0), ip2, Timestamp::from_secs(6)), "y.net");
        assert_eq!(resolve_domain(&m, DeviceId(0), ip2, Timestamp::from_secs(3)), "x.com");
        assert_eq!(resolve_domain(&m, DeviceId(0), ip2, Timestamp::from_secs(0)), "");
    }
}
