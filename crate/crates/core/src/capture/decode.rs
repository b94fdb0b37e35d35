//! Ethernet / IPv4 / TCP / UDP header decoding.

use std::net::Ipv4Addr;

use super::{MacAddr, Transport};

pub const ETHERNET_HEADER_LEN: usize = 14;
pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const IPPROTO_TCP: u8 = 6;
pub const IPPROTO_UDP: u8 = 17;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub transport: Transport,
    /// Offset of the transport payload inside the frame.
    pub payload_offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    /// Frame is well formed but not IPv4 (ARP, IPv6, ...).
    NotIpv4,
    Malformed(&'static str),
}

fn be16(b: &[u8], off: usize) -> u16 {
    u16::from_be_bytes([b[off], b[off + 1]])
}

pub fn decode_frame(frame: &[u8]) -> Result<Decoded, DecodeError> {
    if frame.len() < ETHERNET_HEADER_LEN {
        return Err(DecodeError::Malformed("short ethernet header"));
    }
    let dst_mac = MacAddr::from_slice(&frame[0..6]);
    let src_mac = MacAddr::from_slice(&frame[6..12]);
    if be16(frame, 12) != ETHERTYPE_IPV4 {
        return Err(DecodeError::NotIpv4);
    }
    let ip = &frame[ETHERNET_HEADER_LEN..];
    if ip.len() < 20 {
        return Err(DecodeError::Malformed("short ipv4 header"));
    }
    if ip[0] >> 4 != 4 {
        return Err(DecodeError::Malformed("ipv4 version field"));
    }
    let ihl = ((ip[0] & 0x0f) as usize) * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err(DecodeError::Malformed("ipv4 header length"));
    }
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let frag_offset = be16(ip, 6) & 0x1fff;
    let l4_start = ETHERNET_HEADER_LEN + ihl;
    let l4 = &frame[l4_start..];

    let mut out = Decoded {
        src_mac,
        dst_mac,
        src_ip,
        dst_ip,
        src_port: 0,
        dst_port: 0,
        transport: Transport::Other,
        payload_offset: frame.len(),
    };
    if frag_offset != 0 {
        return Ok(out);
    }
    match ip[9] {
        IPPROTO_TCP => {
            if l4.len() < 20 {
                return Err(DecodeError::Malformed("short tcp header"));
            }
            let data_off = ((l4[12] >> 4) as usize) * 4;
            if data_off < 20 || l4.len() < data_off {
                return Err(DecodeError::Malformed("tcp data offset"));
            }
            out.src_port = be16(l4, 0);
            out.dst_port = be16(l4, 2);
            out.transport = Transport::Tcp;
            out.payload_offset = l4_start + data_off;
        }
        IPPROTO_UDP => {
            if l4.len() < 8 {
                return Err(DecodeError::Malformed("short udp header"));
            }
            out.src_port = be16(l4, 0);
            out.dst_port = be16(l4, 2);
            out.transport = Transport::Udp;
            out.payload_offset = l4_start + 8;
        }
        _ => {}
    }
    Ok(out)
}
