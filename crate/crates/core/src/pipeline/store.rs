//! On-disk form of an ingested capture: a packet index CSV, the raw frames
//! back to back in `frames.bin`, DNS and TLS observation CSVs, and the
//! ingest counters as JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Capture, SideChannelCounters};
use crate::capture::{AttributedPacket, DeviceId, DnsObservation, IngestCounters, PacketRecord, TlsClientHelloObservation};
use crate::error::{Error, Result};
use crate::io::{read, write_atomic};
use crate::time::Timestamp;

pub const PACKETS_FILE: &str = "packets.csv";
pub const FRAMES_FILE: &str = "frames.bin";
pub const DNS_FILE: &str = "dns.csv";
pub const TLS_FILE: &str = "tls.csv";
pub const COUNTERS_FILE: &str = "ingest.json";

const PACKET_HEADER: [&str; 11] = [
    "timestamp",
    "device_id",
    "originated",
    "wire_len",
    "frame_offset",
    "frame_len",
    "src_ip",
    "dst_ip",
    "src_port",
    "dst_port",
    "transport",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Counters {
    ingest: IngestCounters,
    side: SideChannelCounters,
}

pub fn store_paths(dir: &Path) -> Vec<PathBuf> {
    [PACKETS_FILE, FRAMES_FILE, DNS_FILE, TLS_FILE, COUNTERS_FILE].iter().map(|f| dir.join(f)).collect()
}

fn csv_bytes(write: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        write(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

pub fn write_capture(dir: &Path, cap: &Capture) -> Result<()> {
    let mut frames = Vec::new();
    let packets = csv_bytes(|w| {
        w.write_record(PACKET_HEADER)?;
        for ap in &cap.packets {
            let p = &ap.packet;
            w.write_record([
                p.timestamp.to_string(),
                ap.device_id.to_string(),
                (ap.originated as u8).to_string(),
                p.wire_len.to_string(),
                frames.len().to_string(),
                p.data.len().to_string(),
                p.src_ip.to_string(),
                p.dst_ip.to_string(),
                p.src_port.to_string(),
                p.dst_port.to_string(),
                p.transport.to_string(),
            ])?;
            frames.extend_from_slice(&p.data);
        }
        Ok(())
    })?;
    let dns = csv_bytes(|w| {
        w.write_record(["timestamp", "device_id", "queried_name", "resolved_ip"])?;
        for o in &cap.dns {
            w.write_record([
                o.timestamp.to_string(),
                o.device_id.to_string(),
                o.queried_name.clone(),
                o.resolved_ip.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let tls = csv_bytes(|w| {
        w.write_record(["timestamp", "device_id", "cipher_suites"])?;
        for o in &cap.tls {
            let suites: Vec<String> = o.cipher_suites.iter().map(|c| format!("{c:04x}")).collect();
            w.write_record([o.timestamp.to_string(), o.device_id.to_string(), suites.join(";")])?;
        }
        Ok(())
    })?;
    let counters = serde_json::to_string_pretty(&Counters { ingest: cap.counters, side: cap.side })?;
    write_atomic(&dir.join(FRAMES_FILE), &frames)?;
    write_atomic(&dir.join(PACKETS_FILE), &packets)?;
    write_atomic(&dir.join(DNS_FILE), &dns)?;
    write_atomic(&dir.join(TLS_FILE), &tls)?;
    write_atomic(&dir.join(COUNTERS_FILE), format!("{counters}\n").as_bytes())
}

fn bad(file: &str, line: usize, what: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{file} record {line}: {what}"))
}

fn get<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, file: &str, line: usize) -> Result<T> {
    let s = rec.get(i).unwrap_or("");
    s.parse().map_err(|_| bad(file, line, format_args!("bad value {s:?} in column {i}")))
}

fn time(rec: &csv::StringRecord, i: usize, file: &str, line: usize) -> Result<Timestamp> {
    rec.get(i).unwrap_or("").parse().map_err(|e: String| bad(file, line, e))
}

fn records(dir: &Path, file: &str) -> Result<Vec<csv::StringRecord>> {
    let bytes = read(&dir.join(file))?;
    Ok(csv::Reader::from_reader(&bytes[..]).records().collect::<std::result::Result<_, _>>()?)
}

/// Loads a store written by [`write_capture`]. Frames are decoded again, so
/// the loaded capture matches the ingested one exactly.
pub fn read_capture(dir: &Path) -> Result<Capture> {
    let frames = read(&dir.join(FRAMES_FILE))?;
    let mut packets = Vec::new();
    for (line, rec) in records(dir, PACKETS_FILE)?.iter().enumerate() {
        let f = PACKETS_FILE;
        let offset: usize = get(rec, 4, f, line)?;
        let len: usize = get(rec, 5, f, line)?;
        let data = frames
            .get(offset..offset.saturating_add(len))
            .ok_or_else(|| bad(f, line, "frame lies outside frames.bin"))?
            .to_vec();
        let packet = PacketRecord::decode(time(rec, 0, f, line)?, get(rec, 3, f, line)?, data)
            .map_err(|e| bad(f, line, format_args!("{e:?}")))?;
        packets.push(AttributedPacket {
            device_id: DeviceId(get(rec, 1, f, line)?),
            originated: get::<u8>(rec, 2, f, line)? == 1,
            packet,
        });
    }
    let mut dns = Vec::new();
    for (line, rec) in records(dir, DNS_FILE)?.iter().enumerate() {
        dns.push(DnsObservation {
            timestamp: time(rec, 0, DNS_FILE, line)?,
            device_id: DeviceId(get(rec, 1, DNS_FILE, line)?),
            queried_name: rec.get(2).unwrap_or("").to_string(),
            resolved_ip: get(rec, 3, DNS_FILE, line)?,
        });
    }
    let mut tls = Vec::new();
    for (line, rec) in records(dir, TLS_FILE)?.iter().enumerate() {
        let text = rec.get(2).unwrap_or("");
        let cipher_suites = if text.is_empty() {
            Vec::new()
        } else {
            text.split(';')
                .map(|c| u16::from_str_radix(c, 16).map_err(|_| bad(TLS_FILE, line, format_args!("bad suite {c:?}"))))
                .collect::<Result<_>>()?
        };
        tls.push(TlsClientHelloObservation {
            timestamp: time(rec, 0, TLS_FILE, line)?,
            device_id: DeviceId(get(rec, 1, TLS_FILE, line)?),
            cipher_suites,
        });
    }
    let counters: Counters = serde_json::from_slice(&read(&dir.join(COUNTERS_FILE))?)?;
    Ok(Capture { packets, dns, tls, counters: counters.ingest, side: counters.side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_from, presets};

    #[test]
    fn store_roundtrip() {
        let mut s = presets::stationary(2);
        s.weeks = 1;
        let out = generate_from(&s).unwrap();
        let cap = Capture::from_pcap(&out.pcap[..], &out.manifest).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_capture(dir.path(), &cap).unwrap();
        let back = read_capture(dir.path()).unwrap();
        assert_eq!(back.packets, cap.packets);
        assert_eq!(back.dns, cap.dns);
        assert_eq!(back.tls, cap.tls);
        assert_eq!((back.counters, back.side), (cap.counters, cap.side));
    }

    #[test]
    fn frame_offsets_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = presets::stationary(2);
        s.weeks = 1;
        let out = generate_from(&s).unwrap();
        write_capture(dir.path(), &Capture::from_pcap(&out.pcap[..], &out.manifest).unwrap()).unwrap();
        std::fs::write(dir.path().join(FRAMES_FILE), b"short").unwrap();
        assert!(matches!(read_capture(dir.path()), Err(Error::InvalidInput(_))));
    }
}
