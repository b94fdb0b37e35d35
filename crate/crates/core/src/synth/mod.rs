//! Deterministic synthetic IoT traffic with scheduled behavioral drift.
//!
//! Each device emits flows on a jittered schedule; a flow is an optional DNS
//! exchange followed by TCP or UDP packets whose sizes and gaps come from
//! clamped Gaussians in the device profile. Drift events mutate a profile
//! from the start of a given week onward.

pub mod frames;
pub mod presets;

use std::collections::HashSet;
use std::io::Write;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::capture::dns::{build_query, build_response, ResponseRecord, DNS_PORT};
use crate::capture::pcap::PcapWriter;
use crate::capture::tls::build_client_hello;
use crate::capture::{DeviceId, DeviceManifest, MacAddr, ManifestEntry, Transport};
use crate::error::{Error, Result};
use crate::time::Timestamp;
use frames::{FrameSpec, L4};

pub const WEEK_SECS: i64 = 7 * 24 * 3600;
/// Monday 2021-01-04 00:00:00 UTC.
pub const DEFAULT_START: i64 = 1_609_718_400;
pub const MIN_FRAME: f64 = 60.0;
pub const MAX_FRAME: f64 = 1514.0;
pub const GATEWAY_MAC: MacAddr = MacAddr([0x02, 0, 0, 0, 0, 0x01]);
pub const GATEWAY_IP: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 1);
pub const NTP_SERVER: Ipv4Addr = Ipv4Addr::new(129, 6, 15, 28);
const NTP_FRAME: usize = 90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub const fn new(mean: f64, std: f64) -> Self {
        Gaussian { mean, std }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.std <= 0.0 {
            return self.mean;
        }
        Normal::new(self.mean, self.std).expect("finite std").sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub domain: String,
    pub ip: Ipv4Addr,
    pub port: u16,
    pub protocol: Transport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: DeviceId,
    pub name: String,
    pub mac: MacAddr,
    /// Flows per hour.
    pub flow_rate: f64,
    pub remote_endpoints: Vec<Endpoint>,
    /// Frame size in bytes, clamped to 60..=1514.
    pub packet_size: Gaussian,
    pub packets_per_flow: Gaussian,
    /// Seconds between packets of a flow.
    pub inter_packet_gap: Gaussian,
    pub dns_before_flow: bool,
    #[serde(default)]
    pub tls_cipher_suites: Vec<u16>,
    /// Seconds between NTP exchanges; 0 disables NTP.
    #[serde(default)]
    pub ntp_interval: f64,
}

impl DeviceProfile {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("profile {}: {what}", self.name)));
        if !(self.flow_rate > 0.0
            && self.packet_size.mean > 0.0
            && self.packets_per_flow.mean > 0.0
            && self.inter_packet_gap.mean > 0.0)
        {
            return bad("all means must be positive");
        }
        if self.packet_size.std < 0.0 || self.packets_per_flow.std < 0.0 || self.inter_packet_gap.std < 0.0 {
            return bad("negative std");
        }
        if self.remote_endpoints.is_empty() {
            return bad("no remote endpoints");
        }
        if self.remote_endpoints.iter().any(|e| e.protocol == Transport::Other) {
            return bad("endpoint protocol must be tcp or udp");
        }
        if self.ntp_interval < 0.0 {
            return bad("negative ntp interval");
        }
        Ok(())
    }

    pub fn ip(&self) -> Ipv4Addr {
        device_ip(self.device_id)
    }
}

pub fn device_ip(id: DeviceId) -> Ipv4Addr {
    Ipv4Addr::from(u32::from(Ipv4Addr::new(192, 168, 1, 0)) + 10 + id.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Multiply the mean and std of packet sizes.
    ShiftSizes(f64),
    ChangeEndpoints(Vec<Endpoint>),
    /// Multiply the flow rate.
    ChangeRate(f64),
    /// Multiply the inter-packet gap mean and std.
    ChangeGap(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    /// First week (1-based) the mutation applies to.
    pub at_week: u32,
    /// Target device; `None` applies to every device.
    #[serde(default)]
    pub device_id: Option<DeviceId>,
    pub mutation: Mutation,
}

impl DriftEvent {
    fn applies_to(&self, id: DeviceId) -> bool {
        self.device_id.is_none_or(|d| d == id)
    }

    fn apply(&self, p: &mut DeviceProfile) {
        match &self.mutation {
            Mutation::ShiftSizes(f) => {
                p.packet_size.mean *= f;
                p.packet_size.std *= f;
            }
            Mutation::ChangeEndpoints(eps) => p.remote_endpoints = eps.clone(),
            Mutation::ChangeRate(f) => p.flow_rate *= f,
            Mutation::ChangeGap(f) => {
                p.inter_packet_gap.mean *= f;
                p.inter_packet_gap.std *= f;
            }
        }
    }
}

/// Everything needed to regenerate a fixture; also the JSON scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_start")]
    pub start_time: i64,
    pub weeks: u32,
    pub seed: u64,
    pub profiles: Vec<DeviceProfile>,
    #[serde(default)]
    pub drift: Vec<DriftEvent>,
}

fn default_start() -> i64 {
    DEFAULT_START
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn week_origin(&self) -> Timestamp {
        Timestamp::from_secs(self.start_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub timestamp: Timestamp,
    pub device_id: DeviceId,
    pub wire_len: u32,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub pcap: Vec<u8>,
    pub manifest: DeviceManifest,
    /// One row per packet, in file order.
    pub labels: Vec<LabelRow>,
}

impl SynthOutput {
    pub fn write_labels_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["timestamp", "device_id"])?;
        for l in &self.labels {
            csv.write_record([l.timestamp.to_string(), l.device_id.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn packets_per_device(&self) -> Vec<u64> {
        let mut v = vec![0u64; self.manifest.len()];
        for l in &self.labels {
            v[l.device_id.index()] += 1;
        }
        v
    }

    pub fn bytes_per_device(&self) -> Vec<u64> {
        let mut v = vec![0u64; self.manifest.len()];
        for l in &self.labels {
            v[l.device_id.index()] += l.wire_len as u64;
        }
        v
    }
}

struct Emitted {
    ts: Timestamp,
    device: DeviceId,
    seq: u64,
    frame: Vec<u8>,
}

struct DeviceGen<'a> {
    profile: &'a DeviceProfile,
    rng: ChaCha8Rng,
    ip_id: u16,
    seq: u64,
    /// Resolver queries reuse one source port per device.
    dns_port: u16,
    out: Vec<Emitted>,
}

impl DeviceGen<'_> {
    fn emit(&mut self, ts: Timestamp, originated: bool, remote_ip: Ipv4Addr, l4: L4, payload: &[u8], size: usize) {
        let (src_mac, dst_mac, src_ip, dst_ip) = if originated {
            (self.profile.mac, GATEWAY_MAC, self.profile.ip(), remote_ip)
        } else {
            (GATEWAY_MAC, self.profile.mac, remote_ip, self.profile.ip())
        };
        self.ip_id = self.ip_id.wrapping_add(1);
        let frame = FrameSpec { src_mac, dst_mac, src_ip, dst_ip, l4, ip_id: self.ip_id }.build(payload, size);
        self.seq += 1;
        self.out.push(Emitted { ts, device: self.profile.device_id, seq: self.seq, frame });
    }

    fn ephemeral_port(&mut self) -> u16 {
        self.rng.random_range(49152..=65535)
    }

    fn flow(&mut self, start: Timestamp, p: &DeviceProfile) {
        let ep = p.remote_endpoints[self.rng.random_range(0..p.remote_endpoints.len())].clone();
        let mut t = start;
        if p.dns_before_flow {
            let id: u16 = self.rng.random();
            let sport = self.dns_port;
            let q = build_query(id, &ep.domain);
            let r = build_response(id, &ep.domain, &[ResponseRecord::A { owner: ep.domain.clone(), ip: ep.ip }]);
            self.emit(t, true, GATEWAY_IP, L4::Udp { src_port: sport, dst_port: DNS_PORT }, &q, 0);
            self.emit(t.add_secs_f64(0.010), false, GATEWAY_IP, L4::Udp { src_port: DNS_PORT, dst_port: sport }, &r, 0);
            t = t.add_secs_f64(0.050);
        }
        let sport = self.ephemeral_port();
        let n = p.packets_per_flow.sample(&mut self.rng).round().max(1.0) as usize;
        let mut seq: u32 = self.rng.random();
        let pattern = format!("{} {} ", ep.domain, ep.port).into_bytes();
        for i in 0..n {
            let originated = i == 0 || self.rng.random_bool(0.5);
            let mut size = p.packet_size.sample(&mut self.rng).round().clamp(MIN_FRAME, MAX_FRAME) as usize;
            let (src_port, dst_port) = if originated { (sport, ep.port) } else { (ep.port, sport) };
            let l4 = match ep.protocol {
                Transport::Udp => L4::Udp { src_port, dst_port },
                _ => L4::Tcp { src_port, dst_port, seq, flags: 0x18 },
            };
            let header = match ep.protocol {
                Transport::Udp => 42,
                _ => 54,
            };
            let hello = i == 0 && ep.protocol == Transport::Tcp && ep.port == 443 && !p.tls_cipher_suites.is_empty();
            let payload: Vec<u8> = if hello {
                let h = build_client_hello(&p.tls_cipher_suites);
                size = size.max(header + h.len());
                h
            } else {
                pattern.iter().copied().cycle().take(size.saturating_sub(header)).collect()
            };
            seq = seq.wrapping_add(size.saturating_sub(header) as u32);
            self.emit(t, originated, ep.ip, l4, &payload, size);
            t = t.add_secs_f64(p.inter_packet_gap.sample(&mut self.rng).max(0.001));
        }
    }

    fn ntp(&mut self, t: Timestamp) {
        let l4 = L4::Udp { src_port: 123, dst_port: 123 };
        let mut req = vec![0u8; 48];
        req[0] = 0x23;
        self.emit(t, true, NTP_SERVER, l4, &req, NTP_FRAME);
        let mut resp = vec![0u8; 48];
        resp[0] = 0x24;
        self.emit(t.add_secs_f64(0.020), false, NTP_SERVER, l4, &resp, NTP_FRAME);
    }
}

fn device_seed(seed: u64, id: DeviceId) -> u64 {
    crate::ml::derive_seed(seed, id.0 as u64)
}

/// Generates the capture, manifest and per-packet ground truth.
pub fn generate(profiles: &[DeviceProfile], weeks: u32, drift: &[DriftEvent], seed: u64) -> Result<SynthOutput> {
    generate_from(&Scenario {
        start_time: DEFAULT_START,
        weeks,
        seed,
        profiles: profiles.to_vec(),
        drift: drift.to_vec(),
    })
}

pub fn generate_from(s: &Scenario) -> Result<SynthOutput> {
    if s.profiles.len() < 2 {
        return Err(Error::InvalidInput("need at least two device profiles".into()));
    }
    if s.weeks == 0 {
        return Err(Error::InvalidInput("weeks must be at least 1".into()));
    }
    let mut macs = HashSet::new();
    for p in &s.profiles {
        p.validate()?;
        if !macs.insert(p.mac) {
            return Err(Error::InvalidInput(format!("duplicate MAC {}", p.mac)));
        }
    }
    for d in &s.drift {
        if d.at_week == 0 || d.at_week > s.weeks {
            return Err(Error::InvalidInput(format!("drift week {} outside 1..={}", d.at_week, s.weeks)));
        }
    }
    let manifest = DeviceManifest::new(
        s.profiles
            .iter()
            .map(|p| ManifestEntry { mac: p.mac, device_id: p.device_id, name: p.name.clone() })
            .collect(),
    )?;

    let start = Timestamp::from_secs(s.start_time);
    let end = Timestamp::from_secs(s.start_time + s.weeks as i64 * WEEK_SECS);
    let mut all = Vec::new();
    for base in &s.profiles {
        // Effective profile for each week, index 0 = week 1.
        let weekly: Vec<DeviceProfile> = (1..=s.weeks)
            .map(|w| {
                let mut p = base.clone();
                for d in s.drift.iter().filter(|d| d.at_week <= w && d.applies_to(base.device_id)) {
                    d.apply(&mut p);
                }
                p
            })
            .collect();
        let week_of = |t: Timestamp| ((t.micros() - start.micros()) / (WEEK_SECS * 1_000_000)) as usize;

        let mut rng = ChaCha8Rng::seed_from_u64(device_seed(s.seed, base.device_id));
        let dns_port = rng.random_range(49152..=65535);
        let mut g = DeviceGen { profile: base, rng, ip_id: 0, seq: 0, dns_port, out: Vec::new() };
        let first_gap = 3600.0 / weekly[0].flow_rate;
        let mut t = start.add_secs_f64(g.rng.random_range(0.0..first_gap));
        while t < end {
            let p = &weekly[week_of(t)];
            g.flow(t, p);
            let mean = 3600.0 / p.flow_rate;
            let gap = Gaussian::new(mean, 0.2 * mean).sample(&mut g.rng).max(1.0);
            t = t.add_secs_f64(gap);
        }
        if base.ntp_interval > 0.0 {
            let mut t = start.add_secs_f64(g.rng.random_range(0.0..base.ntp_interval));
            while t < end {
                g.ntp(t);
                let iv = base.ntp_interval;
                t = t.add_secs_f64(Gaussian::new(iv, 0.1 * iv).sample(&mut g.rng).max(1.0));
            }
        }
        all.extend(g.out);
    }
    all.retain(|e| e.ts < end);
    all.sort_by_key(|e| (e.ts, e.device, e.seq));

    let mut w = PcapWriter::new(Vec::new(), 65535)?;
    let mut labels = Vec::with_capacity(all.len());
    for e in &all {
        w.write_packet(e.ts, e.frame.len() as u32, &e.frame)?;
        labels.push(LabelRow { timestamp: e.ts, device_id: e.device, wire_len: e.frame.len() as u32 });
    }
    Ok(SynthOutput { pcap: w.into_inner(), manifest, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::parse_pcap;

    fn small(weeks: u32) -> Scenario {
        let mut s = presets::stationary(7);
        s.weeks = weeks;
        s.profiles.truncate(2);
        s
    }

    #[test]
    fn same_seed_same_bytes() {
        let s = small(1);
        assert_eq!(generate_from(&s).unwrap().pcap, generate_from(&s).unwrap().pcap);
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(generate_from(&s).unwrap().pcap, generate_from(&other).unwrap().pcap);
    }

    #[test]
    fn two_profiles_parse_back_to_two_devices() {
        let out = generate_from(&small(1)).unwrap();
        let parsed = parse_pcap(&out.pcap[..], &out.manifest).unwrap();
        let ids: HashSet<_> = parsed.packets.iter().map(|p| p.device_id).collect();
        assert_eq!(ids.len(), 2);
        assert_eq!(parsed.counters.malformed, 0);
        assert_eq!(parsed.counters.emitted as usize, out.labels.len());
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = small(1);
        s.profiles[1].mac = s.profiles[0].mac;
        assert!(generate_from(&s).is_err());
        let mut s = small(1);
        s.profiles.truncate(1);
        assert!(generate_from(&s).is_err());
        let mut s = small(1);
        s.weeks = 0;
        assert!(generate_from(&s).is_err());
        let mut s = small(2);
        s.drift.push(DriftEvent { at_week: 3, device_id: None, mutation: Mutation::ChangeRate(2.0) });
        assert!(generate_from(&s).is_err());
        let mut s = small(1);
        s.profiles[0].packet_size.mean = 0.0;
        assert!(generate_from(&s).is_err());
    }

    #[test]
    fn scenario_json_roundtrip() {
        let s = presets::drifting(3);
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(s.to_json().contains("\"shift_sizes\""));
    }
}
