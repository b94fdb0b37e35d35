//! Stateless TLS ClientHello detection on single TCP segments.

use serde::{Deserialize, Serialize};

use super::{AttributedPacket, DeviceId, Transport};
use crate::time::Timestamp;

const CONTENT_HANDSHAKE: u8 = 0x16;
const HANDSHAKE_CLIENT_HELLO: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlsClientHelloObservation {
    pub timestamp: Timestamp,
    pub device_id: DeviceId,
    /// Offered suites in wire order.
    pub cipher_suites: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelloParse {
    NotClientHello,
    Truncated,
    Suites,
}

/// Parses the cipher suite vector of a ClientHello at the start of `payload`.
/// Only the bytes up to the end of the suite vector are required.
pub fn parse_client_hello(payload: &[u8]) -> (HelloParse, Vec<u16>) {
    if payload.len() < 6
        || payload[0] != CONTENT_HANDSHAKE
        || payload[1] != 0x03
        || payload[5] != HANDSHAKE_CLIENT_HELLO
    {
        return (HelloParse::NotClientHello, Vec::new());
    }
    // record header (5) + handshake header (4) + version (2) + random (32)
    let sid_len_at = 5 + 4 + 2 + 32;
    let Some(&sid_len) = payload.get(sid_len_at) else {
        return (HelloParse::Truncated, Vec::new());
    };
    let cs_len_at = sid_len_at + 1 + sid_len as usize;
    let Some(len_bytes) = payload.get(cs_len_at..cs_len_at + 2) else {
        return (HelloParse::Truncated, Vec::new());
    };
    let cs_len = u16::from_be_bytes([len_bytes[0], len_bytes[1]]) as usize;
    if cs_len == 0 || !cs_len.is_multiple_of(2) {
        return (HelloParse::Truncated, Vec::new());
    }
    let Some(vec) = payload.get(cs_len_at + 2..cs_len_at + 2 + cs_len) else {
        return (HelloParse::Truncated, Vec::new());
    };
    let suites = vec
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    (HelloParse::Suites, suites)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TlsExtraction {
    pub observations: Vec<TlsClientHelloObservation>,
    pub malformed: u64,
}

pub fn extract_tls_ciphers<'a, I>(packets: I) -> TlsExtraction
where
    I: IntoIterator<Item = &'a AttributedPacket>,
{
    let mut out = TlsExtraction::default();
    for ap in packets {
        if ap.packet.transport != Transport::Tcp {
            continue;
        }
        match parse_client_hello(ap.packet.payload()) {
            (HelloParse::Suites, cipher_suites) => {
                out.observations.push(TlsClientHelloObservation {
                    timestamp: ap.packet.timestamp,
                    device_id: ap.device_id,
                    cipher_suites,
                })
            }
            (HelloParse::Truncated, _) => out.malformed += 1,
            (HelloParse::NotClientHello, _) => {}
        }
    }
    out
}

/// Minimal ClientHello record offering `suites`, with an empty session id,
/// null compression and no extensions.
pub fn build_client_hello(suites: &[u16]) -> Vec<u8> {
    let mut body = Vec::new();
    body.extend_from_slice(&[0x03, 0x03]);
    body.extend_from_slice(&[0x5a; 32]);
    body.push(0);
    body.extend_from_slice(&((suites.len() * 2) as u16).to_be_bytes());
    for s in suites {
        body.extend_from_slice(&s.to_be_bytes());
    }
    body.extend_from_slice(&[1, 0]);
    let mut hs = vec![HANDSHAKE_CLIENT_HELLO];
    hs.extend_from_slice(&(body.len() as u32).to_be_bytes()[1..]);
    hs.extend_from_slice(&body);
    let mut rec = vec![CONTENT_HANDSHAKE, 0x03, 0x01];
    rec.extend_from_slice(&(hs.len() as u16).to_be_bytes());
    rec.extend_from_slice(&hs);
    rec
}
