//! CSV stores for the tabular schemas; packet grids go to a flat binary file
//! of 2500-byte records with a CSV index beside it.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{FeatureSet, FlowFeatureRow, HourWindowRow, PacketGrid, Schema, SecondWindowRow, GRID_CELLS};
use crate::capture::DeviceId;
use crate::error::{Error, Result};
use crate::flow::FlowKey;
use crate::time::Timestamp;

/// Files a schema is persisted to inside a feature directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureFiles {
    pub primary: PathBuf,
    pub index: Option<PathBuf>,
}

impl FeatureFiles {
    pub fn for_schema(dir: &Path, schema: Schema) -> Self {
        match schema {
            Schema::Hour => FeatureFiles { primary: dir.join("hour.csv"), index: None },
            Schema::Second => FeatureFiles { primary: dir.join("second.csv"), index: None },
            Schema::Flow => FeatureFiles { primary: dir.join("flow_features.csv"), index: None },
            Schema::Grid => FeatureFiles {
                primary: dir.join("grid.bin"),
                index: Some(dir.join("grid_index.csv")),
            },
        }
    }

    pub fn paths(&self) -> Vec<&Path> {
        let mut v = vec![self.primary.as_path()];
        v.extend(self.index.as_deref());
        v
    }
}

fn join_tokens<T: ToString>(items: &[T]) -> String {
    items.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";")
}

fn split_tokens<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| t.parse().map_err(|_| Error::InvalidInput(format!("bad token {t:?}"))))
        .collect()
}

fn hex_tokens(items: &[u16]) -> String {
    items.iter().map(|c| format!("{c:04x}")).collect::<Vec<_>>().join(";")
}

fn split_hex(s: &str) -> Result<Vec<u16>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| u16::from_str_radix(t, 16).map_err(|_| Error::InvalidInput(format!("bad cipher {t:?}"))))
        .collect()
}

fn get<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).unwrap_or("");
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("column {i}: bad value {s:?}")))
}

fn ts(rec: &csv::StringRecord, i: usize) -> Result<Timestamp> {
    rec.get(i).unwrap_or("").parse().map_err(Error::InvalidInput)
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>> {
    Ok(BufReader::new(std::fs::File::open(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_feature_set(dir: &Path, set: &FeatureSet) -> Result<FeatureFiles> {
    let files = FeatureFiles::for_schema(dir, set.schema());
    match set {
        FeatureSet::Hour(rows) => write_hour(create(&files.primary)?, rows)?,
        FeatureSet::Second(rows) => write_second(create(&files.primary)?, rows)?,
        FeatureSet::Flow(rows) => write_flow(create(&files.primary)?, rows)?,
        FeatureSet::Grid(grids) => {
            let index = files.index.as_ref().expect("grid index path");
            write_grids(create(&files.primary)?, create(index)?, grids)?
        }
    }
    Ok(files)
}

pub fn read_feature_set(dir: &Path, schema: Schema) -> Result<FeatureSet> {
    let files = FeatureFiles::for_schema(dir, schema);
    Ok(match schema {
        Schema::Hour => FeatureSet::Hour(read_hour(open(&files.primary)?)?),
        Schema::Second => FeatureSet::Second(read_second(open(&files.primary)?)?),
        Schema::Flow => FeatureSet::Flow(read_flow(open(&files.primary)?)?),
        Schema::Grid => {
            let index = files.index.as_ref().expect("grid index path");
            FeatureSet::Grid(read_grids(open(&files.primary)?, open(index)?)?)
        }
    })
}

fn write_hour<W: Write>(w: W, rows: &[HourWindowRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["device_id", "window_start", "bag_of_ports", "bag_of_domains", "bag_of_ciphers"];
    header.extend(HourWindowRow::NUMERIC_NAMES);
    csv.write_record(&header)?;
    for r in rows {
        csv.write_record([
            r.device_id.to_string(),
            r.window_start.to_string(),
            join_tokens(&r.bag_of_ports),
            join_tokens(&r.bag_of_domains),
            hex_tokens(&r.bag_of_ciphers),
            r.flow_volume.to_string(),
            r.flow_duration.to_string(),
            r.flow_rate.to_string(),
            r.sleep_time.to_string(),
            r.dns_interval.to_string(),
            r.ntp_interval.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

fn read_hour<R: Read>(r: R) -> Result<Vec<HourWindowRow>> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(r).records() {
        let rec = rec?;
        out.push(HourWindowRow {
            device_id: DeviceId(get(&rec, 0)?),
            window_start: ts(&rec, 1)?,
            bag_of_ports: split_tokens(rec.get(2).unwrap_or(""))?,
            bag_of_domains: split_tokens(rec.get(3).unwrap_or(""))?,
            bag_of_ciphers: split_hex(rec.get(4).unwrap_or(""))?,
            flow_volume: get(&rec, 5)?,
            flow_duration: get(&rec, 6)?,
            flow_rate: get(&rec, 7)?,
            sleep_time: get(&rec, 8)?,
            dns_interval: get(&rec, 9)?,
            ntp_interval: get(&rec, 10)?,
        });
    }
    Ok(out)
}

fn write_second<W: Write>(w: W, rows: &[SecondWindowRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["device_id", "second_start", "bytes_sum", "bytes_avg", "bytes_std"])?;
    for r in rows {
        csv.write_record([
            r.device_id.to_string(),
            r.second_start.to_string(),
            r.bytes_sum.to_string(),
            r.bytes_avg.to_string(),
            r.bytes_std.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

fn read_second<R: Read>(r: R) -> Result<Vec<SecondWindowRow>> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(r).records() {
        let rec = rec?;
        out.push(SecondWindowRow {
            device_id: DeviceId(get(&rec, 0)?),
            second_start: ts(&rec, 1)?,
            bytes_sum: get(&rec, 2)?,
            bytes_avg: get(&rec, 3)?,
            bytes_std: get(&rec, 4)?,
        });
    }
    Ok(out)
}

fn write_flow<W: Write>(w: W, rows: &[FlowFeatureRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["device_id", "start_time"];
    header.extend(FlowFeatureRow::NUMERIC_NAMES);
    header.push("domain");
    csv.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.device_id.to_string(), r.start_time.to_string()];
        rec.extend([
            r.src_port.to_string(),
            r.dest_port.to_string(),
            r.bytes_out.to_string(),
            r.bytes_in.to_string(),
            r.pkts_out.to_string(),
            r.pkts_in.to_string(),
        ]);
        rec.extend(
            [
                r.ipt_mean,
                r.ipt_std,
                r.ipt_var,
                r.ipt_skew,
                r.ipt_kurtosis,
                r.b_mean,
                r.b_std,
                r.b_var,
                r.b_skew,
                r.b_kurtosis,
                r.duration,
            ]
            .iter()
            .map(f64::to_string),
        );
        rec.push(r.protocol.to_string());
        rec.push(r.domain.clone());
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

fn read_flow<R: Read>(r: R) -> Result<Vec<FlowFeatureRow>> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(r).records() {
        let rec = rec?;
        out.push(FlowFeatureRow {
            device_id: DeviceId(get(&rec, 0)?),
            start_time: ts(&rec, 1)?,
            src_port: get(&rec, 2)?,
            dest_port: get(&rec, 3)?,
            bytes_out: get(&rec, 4)?,
            bytes_in: get(&rec, 5)?,
            pkts_out: get(&rec, 6)?,
            pkts_in: get(&rec, 7)?,
            ipt_mean: get(&rec, 8)?,
            ipt_std: get(&rec, 9)?,
            ipt_var: get(&rec, 10)?,
            ipt_skew: get(&rec, 11)?,
            ipt_kurtosis: get(&rec, 12)?,
            b_mean: get(&rec, 13)?,
            b_std: get(&rec, 14)?,
            b_var: get(&rec, 15)?,
            b_skew: get(&rec, 16)?,
            b_kurtosis: get(&rec, 17)?,
            duration: get(&rec, 18)?,
            protocol: get(&rec, 19)?,
            domain: rec.get(20).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

fn write_grids<W: Write, I: Write>(mut bin: W, index: I, grids: &[PacketGrid]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(index);
    csv.write_record([
        "device_id", "src_ip", "src_port", "dst_ip", "dst_port", "transport", "first_seen", "offset",
    ])?;
    for (i, g) in grids.iter().enumerate() {
        bin.write_all(&g.cells)?;
        csv.write_record([
            g.device_id.to_string(),
            g.key.src_ip.to_string(),
            g.key.src_port.to_string(),
            g.key.dst_ip.to_string(),
            g.key.dst_port.to_string(),
            g.key.transport.to_string(),
            g.first_seen.to_string(),
            (i * GRID_CELLS).to_string(),
        ])?;
    }
    bin.flush()?;
    csv.flush()?;
    Ok(())
}

fn read_grids<R: Read, I: Read>(mut bin: R, index: I) -> Result<Vec<PacketGrid>> {
    let mut data = Vec::new();
    bin.read_to_end(&mut data)?;
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(index).records() {
        let rec = rec?;
        let offset: usize = get(&rec, 7)?;
        let cells = data
            .get(offset..offset + GRID_CELLS)
            .ok_or_else(|| Error::InvalidInput(format!("grid offset {offset} past end of grid.bin")))?
            .to_vec();
        out.push(PacketGrid {
            device_id: DeviceId(get(&rec, 0)?),
            key: FlowKey {
                src_ip: get(&rec, 1)?,
                src_port: get(&rec, 2)?,
                dst_ip: get(&rec, 3)?,
                dst_port: get(&rec, 4)?,
                transport: get(&rec, 5)?,
            },
            first_seen: ts(&rec, 6)?,
            cells,
        });
    }
    Ok(out)
}
