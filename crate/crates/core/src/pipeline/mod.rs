//! Glue from a parsed capture to flows and feature sets.

mod store;

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::capture::{
    extract_dns, extract_tls_ciphers, parse_pcap, AttributedPacket, DeviceManifest, DnsObservation,
    IngestCounters, ParsedCapture, TlsClientHelloObservation,
};
use crate::error::Result;
use crate::features::{
    build_grids, extract_flow_features, extract_hour_window, extract_second_window, FeatureSet, Schema,
};
use crate::flow::{annotate_domains, segment_packets, DomainMap, FlowRecord};

pub use store::{read_capture, store_paths, write_capture, COUNTERS_FILE, DNS_FILE, FRAMES_FILE, PACKETS_FILE, TLS_FILE};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideChannelCounters {
    pub dns_observations: u64,
    pub dns_malformed: u64,
    pub tls_hellos: u64,
    pub tls_malformed: u64,
}

/// Attributed packets plus the DNS and TLS observations drawn from them,
/// kept in capture-file order.
#[derive(Debug, Clone, Default)]
pub struct Capture {
    pub packets: Vec<AttributedPacket>,
    pub dns: Vec<DnsObservation>,
    pub tls: Vec<TlsClientHelloObservation>,
    pub counters: IngestCounters,
    pub side: SideChannelCounters,
}

impl Capture {
    pub fn from_parsed(parsed: ParsedCapture) -> Self {
        let dns = extract_dns(&parsed.packets);
        let tls = extract_tls_ciphers(&parsed.packets);
        Capture {
            side: SideChannelCounters {
                dns_observations: dns.observations.len() as u64,
                dns_malformed: dns.malformed,
                tls_hellos: tls.observations.len() as u64,
                tls_malformed: tls.malformed,
            },
            dns: dns.observations,
            tls: tls.observations,
            counters: parsed.counters,
            packets: parsed.packets,
        }
    }

    pub fn from_pcap<R: Read>(reader: R, manifest: &DeviceManifest) -> Result<Self> {
        Ok(Self::from_parsed(parse_pcap(reader, manifest)?))
    }

    /// Appends another capture (e.g. a second pcap file for the same
    /// manifest).
    pub fn extend(&mut self, other: Capture) {
        self.packets.extend(other.packets);
        self.dns.extend(other.dns);
        self.tls.extend(other.tls);
        self.counters.merge(&other.counters);
        self.side.dns_observations += other.side.dns_observations;
        self.side.dns_malformed += other.side.dns_malformed;
        self.side.tls_hellos += other.side.tls_hellos;
        self.side.tls_malformed += other.side.tls_malformed;
    }

    pub fn domain_map(&self) -> DomainMap {
        DomainMap::from_observations(&self.dns)
    }

    /// Flow segments with resolved remote domains, sorted by start time.
    pub fn flows(&self) -> Vec<FlowRecord> {
        let mut flows = segment_packets(&self.packets);
        annotate_domains(&mut flows, &self.domain_map());
        flows
    }

    pub fn extract(&self, schema: Schema) -> FeatureSet {
        match schema {
            Schema::Second => FeatureSet::Second(extract_second_window(&self.packets)),
            Schema::Grid => FeatureSet::Grid(build_grids(&self.packets)),
            Schema::Flow => {
                let map = self.domain_map();
                FeatureSet::Flow(
                    segment_packets(&self.packets)
                        .iter()
                        .map(|f| extract_flow_features(f, &map))
                        .collect(),
                )
            }
            Schema::Hour => {
                let flows = self.flows();
                FeatureSet::Hour(extract_hour_window(&self.packets, &flows, &self.tls))
            }
        }
    }
}
