//! Flow record CSV: key fields, counters, then 50 size slots and 50 time
//! slots (empty cells past the tracked packets).

use std::io::{Read, Write};

use super::{FlowKey, FlowRecord, MAX_TRACKED_PACKETS};
use crate::capture::DeviceId;
use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const FLOW_CSV_HEADER: [&str; 14] = [
    "device_id",
    "src_ip",
    "src_port",
    "dst_ip",
    "dst_port",
    "transport",
    "start_time",
    "end_time",
    "bytes_out",
    "bytes_in",
    "pkts_out",
    "pkts_in",
    "remote_domain",
    "continuation_index",
];

fn header() -> Vec<String> {
    let mut h: Vec<String> = FLOW_CSV_HEADER.iter().map(|s| s.to_string()).collect();
    h.extend((0..MAX_TRACKED_PACKETS).map(|i| format!("size_{i}")));
    h.extend((0..MAX_TRACKED_PACKETS).map(|i| format!("time_{i}")));
    h
}

pub fn write_flow_csv<W: Write>(w: W, records: &[FlowRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header())?;
    for r in records {
        let mut row = vec![
            r.device_id.to_string(),
            r.key.src_ip.to_string(),
            r.key.src_port.to_string(),
            r.key.dst_ip.to_string(),
            r.key.dst_port.to_string(),
            r.key.transport.to_string(),
            r.start_time.to_string(),
            r.end_time.to_string(),
            r.bytes_out.to_string(),
            r.bytes_in.to_string(),
            r.pkts_out.to_string(),
            r.pkts_in.to_string(),
            r.remote_domain.clone(),
            r.continuation_index.to_string(),
        ];
        for i in 0..MAX_TRACKED_PACKETS {
            row.push(r.pkt_sizes.get(i).map(|s| s.to_string()).unwrap_or_default());
        }
        for i in 0..MAX_TRACKED_PACKETS {
            row.push(r.pkt_times.get(i).map(|t| t.to_string()).unwrap_or_default());
        }
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).unwrap_or("");
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("flow csv column {i}: bad value {s:?}")))
}

pub fn read_flow_csv<R: Read>(r: R) -> Result<Vec<FlowRecord>> {
    let mut csv = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    let base = FLOW_CSV_HEADER.len();
    for rec in csv.records() {
        let rec = rec?;
        let mut pkt_sizes = Vec::new();
        let mut pkt_times = Vec::new();
        for i in 0..MAX_TRACKED_PACKETS {
            let s = rec.get(base + i).unwrap_or("");
            if s.is_empty() {
                break;
            }
            pkt_sizes.push(field(&rec, base + i)?);
            pkt_times.push(
                rec.get(base + MAX_TRACKED_PACKETS + i)
                    .unwrap_or("")
                    .parse::<Timestamp>()
                    .map_err(Error::InvalidInput)?,
            );
        }
        let ts = |i: usize| -> Result<Timestamp> {
            rec.get(i).unwrap_or("").parse::<Timestamp>().map_err(Error::InvalidInput)
        };
        out.push(FlowRecord {
            device_id: DeviceId(field(&rec, 0)?),
            key: FlowKey {
                src_ip: field(&rec, 1)?,
                src_port: field(&rec, 2)?,
                dst_ip: field(&rec, 3)?,
                dst_port: field(&rec, 4)?,
                transport: field(&rec, 5)?,
            },
            start_time: ts(6)?,
            end_time: ts(7)?,
            bytes_out: field(&rec, 8)?,
            bytes_in: field(&rec, 9)?,
            pkts_out: field(&rec, 10)?,
            pkts_in: field(&rec, 11)?,
            remote_domain: rec.get(12).unwrap_or("").to_string(),
            continuation_index: field(&rec, 13)?,
            pkt_sizes,
            pkt_times,
        });
    }
    Ok(out)
}
