//! Ready-made scenarios: six household devices over six weeks.

use std::net::Ipv4Addr;

use super::{DeviceProfile, DriftEvent, Endpoint, Gaussian, Mutation, Scenario, DEFAULT_START};
use crate::capture::{DeviceId, MacAddr, Transport};

pub const PRESET_WEEKS: u32 = 6;
pub const DRIFT_WEEK: u32 = 4;

struct Spec {
    name: &'static str,
    size: f64,
    domains: [&'static str; 2],
    port: u16,
    drifted: [&'static str; 2],
    drifted_port: u16,
}

const DEVICES: [Spec; 6] = [
    Spec {
        name: "Blink camera",
        size: 100.0,
        domains: ["rest-prod.immedia-semi.com", "clips.immedia-semi.com"],
        port: 8883,
        drifted: ["api.blinkcloud.net", "media.blinkcloud.net"],
        drifted_port: 9443,
    },
    Spec {
        name: "Apple TV",
        size: 300.0,
        domains: ["gs-loc.apple.com", "mesu.apple.com"],
        port: 5223,
        drifted: ["tv-edge.icloud-content.com", "push.icloud-content.com"],
        drifted_port: 5228,
    },
    Spec {
        name: "Echodot",
        size: 900.0,
        domains: ["avs-alexa-na.amazon.com", "device-metrics-us.amazon.com"],
        port: 4070,
        drifted: ["alexa.amazonvoice.net", "metrics.amazonvoice.net"],
        drifted_port: 4080,
    },
    Spec {
        name: "Philips hub",
        size: 160.0,
        domains: ["ws.meethue.com", "diag.meethue.com"],
        port: 2100,
        drifted: ["bridge.hue-cloud.io", "fw.hue-cloud.io"],
        drifted_port: 2200,
    },
    Spec {
        name: "Smart Kettle",
        size: 480.0,
        domains: ["iot.smarter.am", "status.smarter.am"],
        port: 2081,
        drifted: ["cloud.kettlehub.org", "ota.kettlehub.org"],
        drifted_port: 2091,
    },
    Spec {
        name: "Nest thermostat",
        size: 1440.0,
        domains: ["frontdoor.nest.com", "transport.home.nest.com"],
        port: 11095,
        drifted: ["nest-edge.googleapis.net", "tele.googleapis.net"],
        drifted_port: 11099,
    },
];

const CIPHER_GROUPS: [&[u16]; 3] = [
    &[0x1301, 0x1302, 0x1303],
    &[0xc02b, 0xc02f, 0xc030, 0x009c],
    &[0x002f, 0x0035, 0x000a],
];

fn endpoints(device: usize, domains: [&str; 2], port: u16, block: u8) -> Vec<Endpoint> {
    let ip = |k: u8| Ipv4Addr::new(52, block, device as u8, 10 + k);
    vec![
        Endpoint { domain: domains[0].into(), ip: ip(0), port: 443, protocol: Transport::Tcp },
        Endpoint { domain: domains[1].into(), ip: ip(1), port, protocol: Transport::Tcp },
    ]
}

fn profiles() -> Vec<DeviceProfile> {
    DEVICES
        .iter()
        .enumerate()
        .map(|(i, d)| DeviceProfile {
            device_id: DeviceId(i as u32),
            name: d.name.into(),
            mac: MacAddr([0x02, 0x10, 0, 0, 0, 0x20 + i as u8]),
            flow_rate: 2.0,
            remote_endpoints: endpoints(i, d.domains, d.port, 1),
            packet_size: Gaussian::new(d.size, 0.06 * d.size),
            packets_per_flow: Gaussian::new(8.0, 2.0),
            inter_packet_gap: Gaussian::new(0.4, 0.1),
            dns_before_flow: true,
            tls_cipher_suites: CIPHER_GROUPS[i / 2].to_vec(),
            ntp_interval: 6.0 * 3600.0,
        })
        .collect()
}

/// No behavior changes across the six weeks.
pub fn stationary(seed: u64) -> Scenario {
    Scenario { start_time: DEFAULT_START, weeks: PRESET_WEEKS, seed, profiles: profiles(), drift: Vec::new() }
}

/// From week 4 every device talks to new endpoints and its packet sizes
/// triple, landing on another device's former size range.
pub fn drifting(seed: u64) -> Scenario {
    let mut s = stationary(seed);
    for (i, d) in DEVICES.iter().enumerate() {
        let id = Some(DeviceId(i as u32));
        s.drift.push(DriftEvent {
            at_week: DRIFT_WEEK,
            device_id: id,
            mutation: Mutation::ChangeEndpoints(endpoints(i, d.drifted, d.drifted_port, 2)),
        });
    }
    s.drift.push(DriftEvent { at_week: DRIFT_WEEK, device_id: None, mutation: Mutation::ShiftSizes(3.0) });
    s
}
