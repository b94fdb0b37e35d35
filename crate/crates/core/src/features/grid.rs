use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::capture::decode::{ETHERNET_HEADER_LEN, ETHERTYPE_IPV4};
use crate::capture::{AttributedPacket, DeviceId, PacketRecord, Transport};
use crate::flow::FlowKey;
use crate::time::Timestamp;

pub const GRID_ROWS: usize = 10;
pub const GRID_COLS: usize = 250;
pub const GRID_CELLS: usize = GRID_ROWS * GRID_COLS;

/// First packets of a flow as a zero-padded, anonymized byte matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketGrid {
    pub device_id: DeviceId,
    pub key: FlowKey,
    pub first_seen: Timestamp,
    /// Row-major `GRID_ROWS × GRID_COLS`.
    pub cells: Vec<u8>,
}

impl PacketGrid {
    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * GRID_COLS..(i + 1) * GRID_COLS]
    }
}

/// Byte ranges zeroed in every row: both MAC addresses and, for IPv4
/// frames, the source and destination addresses.
pub fn anonymized_ranges(frame: &[u8]) -> Vec<std::ops::Range<usize>> {
    let mut r = Vec::with_capacity(2);
    r.push(0..12);
    let is_ipv4 = frame.len() >= ETHERNET_HEADER_LEN
        && u16::from_be_bytes([frame[12], frame[13]]) == ETHERTYPE_IPV4
        && frame.get(ETHERNET_HEADER_LEN).is_some_and(|b| b >> 4 == 4);
    if is_ipv4 {
        let ip = ETHERNET_HEADER_LEN;
        r.push(ip + 12..ip + 20);
    }
    r
}

/// Builds the grid from a flow's packets in arrival order.
pub fn build_packet_grid(
    device_id: DeviceId,
    key: FlowKey,
    packets: &[&PacketRecord],
) -> PacketGrid {
    let mut cells = vec![0u8; GRID_CELLS];
    for (row, p) in packets.iter().take(GRID_ROWS).enumerate() {
        let n = p.data.len().min(GRID_COLS);
        let dst = &mut cells[row * GRID_COLS..row * GRID_COLS + n];
        dst.copy_from_slice(&p.data[..n]);
        for range in anonymized_ranges(&p.data) {
            let end = range.end.min(n);
            if range.start < end {
                dst[range.start..end].fill(0);
            }
        }
    }
    PacketGrid {
        device_id,
        key,
        first_seen: packets.first().map(|p| p.timestamp).unwrap_or_default(),
        cells,
    }
}

/// One grid per (device, flow key) over the whole capture, in order of each
/// flow's first packet.
pub fn build_grids<'a, I>(packets: I) -> Vec<PacketGrid>
where
    I: IntoIterator<Item = &'a AttributedPacket>,
{
    let mut order: Vec<(DeviceId, FlowKey)> = Vec::new();
    let mut members: HashMap<(DeviceId, FlowKey), Vec<&PacketRecord>> = HashMap::new();
    for ap in packets {
        if ap.packet.transport == Transport::Other {
            continue;
        }
        let key = FlowKey::for_packet(&ap.packet, ap.originated).expect("tcp or udp");
        let slot = members.entry((ap.device_id, key)).or_insert_with(|| {
            order.push((ap.device_id, key));
            Vec::new()
        });
        if slot.len() < GRID_ROWS {
            slot.push(&ap.packet);
        }
    }
    order
        .into_iter()
        .map(|(dev, key)| build_packet_grid(dev, key, &members[&(dev, key)]))
        .collect()
}
