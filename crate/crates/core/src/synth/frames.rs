//! Ethernet/IPv4/TCP/UDP frame construction for generated traffic.

use std::net::Ipv4Addr;

use crate::capture::MacAddr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L4 {
    Tcp { src_port: u16, dst_port: u16, seq: u32, flags: u8 },
    Udp { src_port: u16, dst_port: u16 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub l4: L4,
    pub ip_id: u16,
}

impl FrameSpec {
    pub fn header_len(&self) -> usize {
        14 + 20
            + match self.l4 {
                L4::Tcp { .. } => 20,
                L4::Udp { .. } => 8,
            }
    }

    /// Builds the frame carrying `payload`, zero-extended so the frame is at
    /// least `min_len` bytes. The padding counts as transport payload.
    pub fn build(&self, payload: &[u8], min_len: usize) -> Vec<u8> {
        let hdr = self.header_len();
        let total = (hdr + payload.len()).max(min_len);
        let mut f = Vec::with_capacity(total);
        f.extend_from_slice(&self.dst_mac.0);
        f.extend_from_slice(&self.src_mac.0);
        f.extend_from_slice(&0x0800u16.to_be_bytes());

        let ip_total = (total - 14) as u16;
        let proto = match self.l4 {
            L4::Tcp { .. } => 6u8,
            L4::Udp { .. } => 17u8,
        };
        let mut ip = [0u8; 20];
        ip[0] = 0x45;
        ip[2..4].copy_from_slice(&ip_total.to_be_bytes());
        ip[4..6].copy_from_slice(&self.ip_id.to_be_bytes());
        ip[6] = 0x40;
        ip[8] = 64;
        ip[9] = proto;
        ip[12..16].copy_from_slice(&self.src_ip.octets());
        ip[16..20].copy_from_slice(&self.dst_ip.octets());
        let csum = ipv4_checksum(&ip);
        ip[10..12].copy_from_slice(&csum.to_be_bytes());
        f.extend_from_slice(&ip);

        match self.l4 {
            L4::Tcp { src_port, dst_port, seq, flags } => {
                f.extend_from_slice(&src_port.to_be_bytes());
                f.extend_from_slice(&dst_port.to_be_bytes());
                f.extend_from_slice(&seq.to_be_bytes());
                f.extend_from_slice(&0u32.to_be_bytes());
                f.push(5 << 4);
                f.push(flags);
                f.extend_from_slice(&65535u16.to_be_bytes());
                f.extend_from_slice(&[0, 0, 0, 0]);
            }
            L4::Udp { src_port, dst_port } => {
                f.extend_from_slice(&src_port.to_be_bytes());
                f.extend_from_slice(&dst_port.to_be_bytes());
                f.extend_from_slice(&((total - 34) as u16).to_be_bytes());
                f.extend_from_slice(&[0, 0]);
            }
        }
        f.extend_from_slice(payload);
        f.resize(total, 0);
        f
    }
}

fn ipv4_checksum(h: &[u8; 20]) -> u16 {
    let mut sum: u32 = h
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
        .sum();
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}
