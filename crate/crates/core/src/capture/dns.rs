//! DNS response parsing over UDP/53 with CNAME chain resolution.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::{AttributedPacket, DeviceId, Transport};
use crate::time::Timestamp;

pub const DNS_PORT: u16 = 53;
const TYPE_A: u16 = 1;
const TYPE_CNAME: u16 = 5;
const CLASS_IN: u16 = 1;
const MAX_POINTER_JUMPS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnsObservation {
    pub timestamp: Timestamp,
    /// Lowercase name the device originally asked for.
    pub queried_name: String,
    pub resolved_ip: Ipv4Addr,
    pub device_id: DeviceId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnsAnswer {
    pub owner: String,
    pub data: AnswerData,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerData {
    A(Ipv4Addr),
    Cname(String),
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnsMessage {
    pub id: u16,
    pub is_response: bool,
    pub question: Option<String>,
    pub answers: Vec<DnsAnswer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DnsParseError(pub &'static str);

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u8(&mut self) -> Result<u8, DnsParseError> {
        let b = *self.buf.get(self.pos).ok_or(DnsParseError("truncated"))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, DnsParseError> {
        Ok(u16::from_be_bytes([self.u8()?, self.u8()?]))
    }

    fn skip(&mut self, n: usize) -> Result<(), DnsParseError> {
        if self.pos + n > self.buf.len() {
            return Err(DnsParseError("truncated"));
        }
        self.pos += n;
        Ok(())
    }

    fn name(&mut self) -> Result<String, DnsParseError> {
        let (name, end) = read_name(self.buf, self.pos)?;
        self.pos = end;
        Ok(name)
    }
}

/// Reads a possibly compressed name at `start`; returns the lowercased
/// dotted name and the offset just past it in the original stream.
fn read_name(buf: &[u8], start: usize) -> Result<(String, usize), DnsParseError> {
    let mut labels: Vec<String> = Vec::new();
    let mut pos = start;
    let mut end = None;
    let mut jumps = 0;
    loop {
        let len = *buf.get(pos).ok_or(DnsParseError("truncated name"))? as usize;
        if len & 0xc0 == 0xc0 {
            let lo = *buf.get(pos + 1).ok_or(DnsParseError("truncated pointer"))? as usize;
            if end.is_none() {
                end = Some(pos + 2);
            }
            jumps += 1;
            if jumps > MAX_POINTER_JUMPS {
                return Err(DnsParseError("compression loop"));
            }
            pos = ((len & 0x3f) << 8) | lo;
            continue;
        }
        if len & 0xc0 != 0 {
            return Err(DnsParseError("reserved label type"));
        }
        if len == 0 {
            pos += 1;
            break;
        }
        let label = buf
            .get(pos + 1..pos + 1 + len)
            .ok_or(DnsParseError("truncated label"))?;
        labels.push(String::from_utf8_lossy(label).to_ascii_lowercase());
        pos += 1 + len;
    }
    Ok((labels.join("."), end.unwrap_or(pos)))
}

pub fn parse_message(buf: &[u8]) -> Result<DnsMessage, DnsParseError> {
    let mut c = Cursor { buf, pos: 0 };
    let id = c.u16()?;
    let flags = c.u16()?;
    let qdcount = c.u16()?;
    let ancount = c.u16()?;
    c.skip(4)?;
    let mut question = None;
    for i in 0..qdcount {
        let name = c.name()?;
        c.skip(4)?;
        if i == 0 {
            question = Some(name);
        }
    }
    let mut answers = Vec::with_capacity(ancount as usize);
    for _ in 0..ancount {
        let owner = c.name()?;
        let rtype = c.u16()?;
        let class = c.u16()?;
        c.skip(4)?;
        let rdlen = c.u16()? as usize;
        let rdata_start = c.pos;
        if rdata_start + rdlen > buf.len() {
            return Err(DnsParseError("truncated rdata"));
        }
        let data = match (rtype, class) {
            (TYPE_A, CLASS_IN) if rdlen == 4 => {
                let r = &buf[rdata_start..rdata_start + 4];
                AnswerData::A(Ipv4Addr::new(r[0], r[1], r[2], r[3]))
            }
            (TYPE_A, CLASS_IN) => return Err(DnsParseError("A record length")),
            (TYPE_CNAME, CLASS_IN) => AnswerData::Cname(read_name(buf, rdata_start)?.0),
            _ => AnswerData::Other,
        };
        c.pos = rdata_start + rdlen;
        answers.push(DnsAnswer { owner, data });
    }
    Ok(DnsMessage {
        id,
        is_response: flags & 0x8000 != 0,
        question,
        answers,
    })
}

/// Addresses reachable from `qname` by following CNAME records, in answer
/// order.
pub fn resolve_chain(qname: &str, answers: &[DnsAnswer]) -> Vec<Ipv4Addr> {
    let mut aliases = vec![qname.to_string()];
    // Chains are short; iterate until no new alias appears.
    loop {
        let before = aliases.len();
        for a in answers {
            if let AnswerData::Cname(target) = &a.data {
                if aliases.contains(&a.owner) && !aliases.contains(target) {
                    aliases.push(target.clone());
                }
            }
        }
        if aliases.len() == before {
            break;
        }
    }
    answers
        .iter()
        .filter_map(|a| match a.data {
            AnswerData::A(ip) if aliases.contains(&a.owner) => Some(ip),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DnsExtraction {
    pub observations: Vec<DnsObservation>,
    pub malformed: u64,
}

/// Collects A-record answers from UDP/53 responses, attributed to the
/// originally queried name.
pub fn extract_dns<'a, I>(packets: I) -> DnsExtraction
where
    I: IntoIterator<Item = &'a AttributedPacket>,
{
    let mut out = DnsExtraction::default();
    for ap in packets {
        let p = &ap.packet;
        if p.transport != Transport::Udp || p.src_port != DNS_PORT {
            continue;
        }
        let msg = match parse_message(p.payload()) {
            Ok(m) => m,
            Err(_) => {
                out.malformed += 1;
                continue;
            }
        };
        if !msg.is_response {
            continue;
        }
        let Some(qname) = msg.question.filter(|q| !q.is_empty()) else {
            continue;
        };
        for ip in resolve_chain(&qname, &msg.answers) {
            out.observations.push(DnsObservation {
                timestamp: p.timestamp,
                queried_name: qname.clone(),
                resolved_ip: ip,
                device_id: ap.device_id,
            });
        }
    }
    out
}

/// Encodes a dotted name as uncompressed DNS labels.
pub fn encode_name(name: &str, out: &mut Vec<u8>) {
    for label in name.split('.').filter(|l| !l.is_empty()) {
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
}

/// Builds a standard A query.
pub fn build_query(id: u16, name: &str) -> Vec<u8> {
    let mut m = Vec::with_capacity(18 + name.len());
    m.extend_from_slice(&id.to_be_bytes());
    m.extend_from_slice(&0x0100u16.to_be_bytes());
    m.extend_from_slice(&[0, 1, 0, 0, 0, 0, 0, 0]);
    encode_name(name, &mut m);
    m.extend_from_slice(&TYPE_A.to_be_bytes());
    m.extend_from_slice(&CLASS_IN.to_be_bytes());
    m
}

/// Answer record for [`build_response`].
#[derive(Debug, Clone)]
pub enum ResponseRecord {
    A { owner: String, ip: Ipv4Addr },
    Cname { owner: String, target: String },
}

/// Builds a response to `name`; owners equal to the question name are
/// compressed to a pointer at the question.
pub fn build_response(id: u16, name: &str, records: &[ResponseRecord]) -> Vec<u8> {
    let mut m = Vec::new();
    m.extend_from_slice(&id.to_be_bytes());
    m.extend_from_slice(&0x8180u16.to_be_bytes());
    m.extend_from_slice(&1u16.to_be_bytes());
    m.extend_from_slice(&(records.len() as u16).to_be_bytes());
    m.extend_from_slice(&[0, 0, 0, 0]);
    encode_name(name, &mut m);
    m.extend_from_slice(&TYPE_A.to_be_bytes());
    m.extend_from_slice(&CLASS_IN.to_be_bytes());
    let owner = |m: &mut Vec<u8>, o: &str| {
        if o == name {
            m.extend_from_slice(&[0xc0, 0x0c]);
        } else {
            encode_name(o, m);
        }
    };
    for r in records {
        match r {
            ResponseRecord::A { owner: o, ip } => {
                owner(&mut m, o);
                m.extend_from_slice(&TYPE_A.to_be_bytes());
                m.extend_from_slice(&CLASS_IN.to_be_bytes());
                m.extend_from_slice(&300u32.to_be_bytes());
                m.extend_from_slice(&4u16.to_be_bytes());
                m.extend_from_slice(&ip.octets());
            }
            ResponseRecord::Cname { owner: o, target } => {
                owner(&mut m, o);
                m.extend_from_slice(&TYPE_CNAME.to_be_bytes());
                m.extend_from_slice(&CLASS_IN.to_be_bytes());
                m.extend_from_slice(&300u32.to_be_bytes());
                let mut rdata = Vec::new();
                encode_name(target, &mut rdata);
                m.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
                m.extend_from_slice(&rdata);
            }
        }
    }
    m
}
