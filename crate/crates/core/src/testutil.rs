//! Packet fixtures for unit tests.

use std::net::Ipv4Addr;

use crate::capture::{AttributedPacket, DeviceId, MacAddr, PacketRecord, Transport};
use crate::synth::frames::{FrameSpec, L4};
use crate::time::Timestamp;

pub fn device_ip(device: u32) -> Ipv4Addr {
    Ipv4Addr::new(192, 168, 1, 10 + device as u8)
}

pub fn device_mac(device: u32) -> MacAddr {
    MacAddr([0xaa, 0xbb, 0xcc, 0xdd, 0xee, device as u8 + 1])
}

/// Header-only outbound UDP packet to port 5683.
pub fn attributed(device: u32, t_secs: f64, wire_len: u32) -> AttributedPacket {
    attributed_udp(device, t_secs, wire_len, 5683)
}

pub fn attributed_udp(device: u32, t_secs: f64, wire_len: u32, dst_port: u16) -> AttributedPacket {
    AttributedPacket {
        device_id: DeviceId(device),
        originated: true,
        packet: PacketRecord {
            timestamp: Timestamp::from_secs_f64(t_secs),
            src_mac: device_mac(device),
            dst_mac: MacAddr([2, 0, 0, 0, 0, 1]),
            src_ip: device_ip(device),
            dst_ip: Ipv4Addr::new(52, 1, 2, 3),
            src_port: 40000,
            dst_port,
            transport: Transport::Udp,
            wire_len,
            data: Vec::new(),
            payload_offset: 0,
        },
    }
}

/// Fully built TCP frame with a patterned payload.
pub fn tcp_frame_packet(device: u32, t_secs: f64, wire_len: usize, originated: bool) -> AttributedPacket {
    let (src_mac, dst_mac, src_ip, dst_ip, sp, dp) = if originated {
        (device_mac(device), MacAddr([2, 0, 0, 0, 0, 1]), device_ip(device), Ipv4Addr::new(52, 1, 2, 3), 50000, 443)
    } else {
        (MacAddr([2, 0, 0, 0, 0, 1]), device_mac(device), Ipv4Addr::new(52, 1, 2, 3), device_ip(device), 443, 50000)
    };
    let payload: Vec<u8> = (0..wire_len.saturating_sub(54)).map(|i| (i % 251) as u8 + 1).collect();
    let frame = FrameSpec {
        src_mac,
        dst_mac,
        src_ip,
        dst_ip,
        l4: L4::Tcp { src_port: sp, dst_port: dp, seq: 7, flags: 0x18 },
        ip_id: 1,
    }
    .build(&payload, wire_len);
    let packet = PacketRecord::decode(Timestamp::from_secs_f64(t_secs), frame.len() as u32, frame)
        .expect("fixture decodes");
    AttributedPacket {
        device_id: DeviceId(device),
        originated,
        packet,
    }
}
