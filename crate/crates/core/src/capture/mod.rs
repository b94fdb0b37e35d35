//! Pcap ingest: decoding, per-device attribution by MAC address, and the DNS
//! and TLS ClientHello side channels used by the feature pipelines.

pub mod decode;
pub mod dns;
pub mod pcap;
pub mod tls;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Timestamp;
use decode::{decode_frame, DecodeError};
use pcap::{PcapReader, ReadOutcome};

pub use dns::{extract_dns, DnsObservation};
pub use tls::{extract_tls_ciphers, TlsClientHelloObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    pub fn from_slice(b: &[u8]) -> Self {
        let mut a = [0u8; 6];
        a.copy_from_slice(&b[..6]);
        MacAddr(a)
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl FromStr for MacAddr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 6 {
            return Err(Error::Manifest(format!("bad MAC address {s:?}")));
        }
        let mut a = [0u8; 6];
        for (i, p) in parts.iter().enumerate() {
            if p.len() != 2 {
                return Err(Error::Manifest(format!("bad MAC address {s:?}")));
            }
            a[i] = u8::from_str_radix(p, 16)
                .map_err(|_| Error::Manifest(format!("bad MAC address {s:?}")))?;
        }
        Ok(MacAddr(a))
    }
}

impl Serialize for MacAddr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MacAddr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dense device identifier; doubles as the classifier's class index.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

impl DeviceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub mac: MacAddr,
    pub device_id: DeviceId,
    pub name: String,
}

/// MAC allowlist mapping each monitored device to its class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceManifest {
    entries: Vec<ManifestEntry>,
    by_mac: HashMap<MacAddr, DeviceId>,
}

impl DeviceManifest {
    /// Validates uniqueness of MACs and that device IDs are exactly `0..n`.
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut by_mac = HashMap::new();
        let mut ids = HashSet::new();
        for e in &entries {
            if by_mac.insert(e.mac, e.device_id).is_some() {
                return Err(Error::Manifest(format!("duplicate MAC {}", e.mac)));
            }
            if !ids.insert(e.device_id) {
                return Err(Error::Manifest(format!("duplicate device_id {}", e.device_id)));
            }
        }
        let n = entries.len() as u32;
        if let Some(bad) = entries.iter().find(|e| e.device_id.0 >= n) {
            return Err(Error::Manifest(format!(
                "device_id {} is not contiguous from 0 ({} entries)",
                bad.device_id, n
            )));
        }
        entries.sort_by_key(|e| e.device_id);
        Ok(DeviceManifest { entries, by_mac })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<ManifestEntry> = serde_json::from_str(text)?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("manifest serializes")
    }

    pub fn lookup(&self, mac: &MacAddr) -> Option<DeviceId> {
        self.by_mac.get(mac).copied()
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: DeviceId) -> Option<&str> {
        self.entries.get(id.index()).map(|e| e.name.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    Tcp,
    Udp,
    Other,
}

impl Transport {
    pub fn protocol_number(self) -> u8 {
        match self {
            Transport::Tcp => decode::IPPROTO_TCP,
            Transport::Udp => decode::IPPROTO_UDP,
            Transport::Other => 0,
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transport::Tcp => "tcp",
            Transport::Udp => "udp",
            Transport::Other => "other",
        })
    }
}

impl FromStr for Transport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tcp" => Ok(Transport::Tcp),
            "udp" => Ok(Transport::Udp),
            "other" => Ok(Transport::Other),
            _ => Err(Error::InvalidInput(format!("unknown transport {s:?}"))),
        }
    }
}

/// One decoded Ethernet/IPv4 packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub timestamp: Timestamp,
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    /// Zero unless the transport is TCP or UDP.
    pub src_port: u16,
    pub dst_port: u16,
    pub transport: Transport,
    pub wire_len: u32,
    /// Captured bytes starting at the Ethernet header.
    pub data: Vec<u8>,
    pub payload_offset: usize,
}

impl PacketRecord {
    /// Decodes a captured frame. `wire_len` must be at least `data.len()`.
    pub fn decode(
        timestamp: Timestamp,
        wire_len: u32,
        data: Vec<u8>,
    ) -> std::result::Result<Self, DecodeError> {
        if (wire_len as usize) < data.len() {
            return Err(DecodeError::Malformed("captured length exceeds wire length"));
        }
        let d = decode_frame(&data)?;
        Ok(PacketRecord {
            timestamp,
            src_mac: d.src_mac,
            dst_mac: d.dst_mac,
            src_ip: d.src_ip,
            dst_ip: d.dst_ip,
            src_port: d.src_port,
            dst_port: d.dst_port,
            transport: d.transport,
            wire_len,
            payload_offset: d.payload_offset,
            data,
        })
    }

    /// Transport payload bytes (empty for non-TCP/UDP).
    pub fn payload(&self) -> &[u8] {
        &self.data[self.payload_offset.min(self.data.len())..]
    }
}

/// A packet attributed to a manifest device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributedPacket {
    pub device_id: DeviceId,
    /// True when the device is the sender (its MAC is the source).
    pub originated: bool,
    pub packet: PacketRecord,
}

impl AttributedPacket {
    pub fn remote_port(&self) -> u16 {
        if self.originated {
            self.packet.dst_port
        } else {
            self.packet.src_port
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounters {
    pub total: u64,
    pub emitted: u64,
    pub skipped_unknown_mac: u64,
    pub skipped_non_ipv4: u64,
    pub malformed: u64,
}

impl IngestCounters {
    pub fn merge(&mut self, other: &IngestCounters) {
        self.total += other.total;
        self.emitted += other.emitted;
        self.skipped_unknown_mac += other.skipped_unknown_mac;
        self.skipped_non_ipv4 += other.skipped_non_ipv4;
        self.malformed += other.malformed;
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCapture {
    pub packets: Vec<AttributedPacket>,
    pub counters: IngestCounters,
}

/// Parses a pcap stream and keeps packets to or from a manifest device.
///
/// A packet whose source and destination are both manifest devices is
/// attributed once, to the source. Truncated records are counted as
/// malformed and end the stream.
pub fn parse_pcap<R: Read>(reader: R, manifest: &DeviceManifest) -> Result<ParsedCapture> {
    if manifest.is_empty() {
        return Err(Error::Manifest("manifest is empty".into()));
    }
    let mut pcap = PcapReader::new(reader)?;
    let mut out = ParsedCapture::default();
    while let Some(outcome) = pcap.next_record()? {
        out.counters.total += 1;
        let raw = match outcome {
            ReadOutcome::Record(r) => r,
            ReadOutcome::Truncated => {
                out.counters.malformed += 1;
                continue;
            }
        };
        let packet = match PacketRecord::decode(raw.timestamp, raw.orig_len, raw.data) {
            Ok(p) => p,
            Err(DecodeError::NotIpv4) => {
                out.counters.skipped_non_ipv4 += 1;
                continue;
            }
            Err(DecodeError::Malformed(why)) => {
                log::debug!("malformed packet #{}: {why}", out.counters.total);
                out.counters.malformed += 1;
                continue;
            }
        };
        let (device_id, originated) = match manifest.lookup(&packet.src_mac) {
            Some(id) => (id, true),
            None => match manifest.lookup(&packet.dst_mac) {
                Some(id) => (id, false),
                None => {
                    out.counters.skipped_unknown_mac += 1;
                    continue;
                }
            },
        };
        out.counters.emitted += 1;
        out.packets.push(AttributedPacket {
            device_id,
            originated,
            packet,
        });
    }
    Ok(out)
}
