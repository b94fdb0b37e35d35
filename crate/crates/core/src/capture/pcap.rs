//! Classic libpcap file format (not pcapng).

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
pub const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
pub const LINKTYPE_ETHERNET: u32 = 1;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(a),
            Endian::Big => u32::from_be_bytes(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalHeader {
    pub version_major: u16,
    pub version_minor: u16,
    pub snaplen: u32,
    pub linktype: u32,
    pub nanosecond: bool,
}

/// One raw packet record as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub timestamp: Timestamp,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

/// Outcome of reading one record.
#[derive(Debug)]
pub enum ReadOutcome {
    Record(RawRecord),
    /// The file ended inside a record header or body.
    Truncated,
}

pub struct PcapReader<R> {
    inner: R,
    endian: Endian,
    header: GlobalHeader,
    done: bool,
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut buf = [0u8; GLOBAL_HEADER_LEN];
        let n = read_full(&mut inner, &mut buf)?;
        if n < GLOBAL_HEADER_LEN {
            return Err(Error::PcapFormat(format!(
                "global header truncated ({n} of {GLOBAL_HEADER_LEN} bytes)"
            )));
        }
        let le = u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]);
        let (endian, nanosecond) = match le {
            MAGIC_MICROS => (Endian::Little, false),
            MAGIC_NANOS => (Endian::Little, true),
            _ => match le.swap_bytes() {
                MAGIC_MICROS => (Endian::Big, false),
                MAGIC_NANOS => (Endian::Big, true),
                _ => return Err(Error::PcapFormat(format!("bad magic 0x{le:08x}"))),
            },
        };
        let u16_at = |off: usize| {
            let a = [buf[off], buf[off + 1]];
            match endian {
                Endian::Little => u16::from_le_bytes(a),
                Endian::Big => u16::from_be_bytes(a),
            }
        };
        let header = GlobalHeader {
            version_major: u16_at(4),
            version_minor: u16_at(6),
            snaplen: endian.u32(&buf[16..20]),
            linktype: endian.u32(&buf[20..24]),
            nanosecond,
        };
        if header.linktype != LINKTYPE_ETHERNET {
            return Err(Error::PcapFormat(format!(
                "unsupported linktype {} (only Ethernet)",
                header.linktype
            )));
        }
        Ok(PcapReader {
            inner,
            endian,
            header,
            done: false,
        })
    }

    pub fn header(&self) -> &GlobalHeader {
        &self.header
    }

    /// Next record, `None` at a clean end of file. After a truncated record
    /// the reader is exhausted.
    pub fn next_record(&mut self) -> Result<Option<ReadOutcome>> {
        if self.done {
            return Ok(None);
        }
        let mut hdr = [0u8; RECORD_HEADER_LEN];
        let n = read_full(&mut self.inner, &mut hdr)?;
        if n == 0 {
            self.done = true;
            return Ok(None);
        }
        if n < RECORD_HEADER_LEN {
            self.done = true;
            return Ok(Some(ReadOutcome::Truncated));
        }
        let secs = self.endian.u32(&hdr[0..4]) as i64;
        let frac = self.endian.u32(&hdr[4..8]) as i64;
        let incl_len = self.endian.u32(&hdr[8..12]) as usize;
        let orig_len = self.endian.u32(&hdr[12..16]);
        // A record claiming more than 256 KiB is garbage; treat as truncation.
        if incl_len > 262_144 {
            self.done = true;
            return Ok(Some(ReadOutcome::Truncated));
        }
        let mut data = vec![0u8; incl_len];
        let got = read_full(&mut self.inner, &mut data)?;
        if got < incl_len {
            self.done = true;
            return Ok(Some(ReadOutcome::Truncated));
        }
        let micros = if self.header.nanosecond { frac / 1000 } else { frac };
        Ok(Some(ReadOutcome::Record(RawRecord {
            timestamp: Timestamp::from_parts(secs, micros),
            orig_len,
            data,
        })))
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

/// Little-endian microsecond pcap writer, Ethernet linktype.
pub struct PcapWriter<W> {
    inner: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W, snaplen: u32) -> io::Result<Self> {
        let mut h = Vec::with_capacity(GLOBAL_HEADER_LEN);
        h.extend_from_slice(&MAGIC_MICROS.to_le_bytes());
        h.extend_from_slice(&2u16.to_le_bytes());
        h.extend_from_slice(&4u16.to_le_bytes());
        h.extend_from_slice(&0i32.to_le_bytes());
        h.extend_from_slice(&0u32.to_le_bytes());
        h.extend_from_slice(&snaplen.to_le_bytes());
        h.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
        inner.write_all(&h)?;
        Ok(PcapWriter { inner })
    }

    pub fn write_packet(&mut self, ts: Timestamp, orig_len: u32, data: &[u8]) -> io::Result<()> {
        let mut h = [0u8; RECORD_HEADER_LEN];
        h[0..4].copy_from_slice(&(ts.secs() as u32).to_le_bytes());
        h[4..8].copy_from_slice(&(ts.subsec_micros() as u32).to_le_bytes());
        h[8..12].copy_from_slice(&(data.len() as u32).to_le_bytes());
        h[12..16].copy_from_slice(&orig_len.to_le_bytes());
        self.inner.write_all(&h)?;
        self.inner.write_all(data)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}
