use std::net::Ipv4Addr;

use iotid_core::eval::{assign_week, row_weeks};
use iotid_core::pipeline::Capture;
use iotid_core::synth::{generate, generate_from, presets, DeviceProfile, DriftEvent, Endpoint, Gaussian, Mutation};
use iotid_core::{DeviceId, FeatureSet, MacAddr, Schema, Timestamp, Transport};

fn plain_profile(id: u32, size: f64) -> DeviceProfile {
    DeviceProfile {
        device_id: DeviceId(id),
        name: format!("device-{id}"),
        mac: MacAddr([2, 0, 0, 0, 1, id as u8]),
        flow_rate: 4.0,
        remote_endpoints: vec![Endpoint {
            domain: format!("d{id}.example.com"),
            ip: Ipv4Addr::new(52, 9, id as u8, 1),
            port: 8000 + id as u16,
            protocol: Transport::Tcp,
        }],
        packet_size: Gaussian::new(size, size * 0.05),
        packets_per_flow: Gaussian::new(10.0, 2.0),
        inter_packet_gap: Gaussian::new(0.3, 0.05),
        dns_before_flow: false,
        tls_cipher_suites: Vec::new(),
        ntp_interval: 0.0,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn size_shift_triples_second_window_average() {
    let profiles = [plain_profile(0, 100.0), plain_profile(1, 150.0)];
    let drift = [DriftEvent { at_week: 2, device_id: None, mutation: Mutation::ShiftSizes(3.0) }];
    let out = generate(&profiles, 3, &drift, 11).unwrap();
    let cap = Capture::from_pcap(&out.pcap[..], &out.manifest).unwrap();
    let FeatureSet::Second(rows) = cap.extract(Schema::Second) else { unreachable!() };
    let origin = Timestamp::from_secs(iotid_core::synth::DEFAULT_START);
    for dev in 0..2 {
        let avg = |week: u32| {
            mean(
                rows.iter()
                    .filter(|r| r.device_id == DeviceId(dev) && assign_week(r.second_start, origin).unwrap() == week)
                    .map(|r| r.bytes_avg),
            )
        };
        let ratio = avg(3) / avg(1);
        assert!((2.5..=3.5).contains(&ratio), "device {dev}: ratio {ratio}");
    }
}

#[test]
fn bytes_are_conserved_through_the_pipeline() {
    let out = generate_from(&presets::drifting(5)).unwrap();
    let cap = Capture::from_pcap(&out.pcap[..], &out.manifest).unwrap();
    assert_eq!(cap.counters.malformed, 0);
    assert_eq!(cap.side.dns_malformed, 0);
    assert_eq!(cap.side.tls_malformed, 0);
    assert_eq!(cap.counters.emitted as usize, out.labels.len());

    let truth = out.bytes_per_device();
    let mut from_packets = vec![0u64; truth.len()];
    for p in &cap.packets {
        from_packets[p.device_id.index()] += p.packet.wire_len as u64;
    }
    assert_eq!(from_packets, truth);

    let mut from_flows = vec![0u64; truth.len()];
    for f in cap.flows() {
        from_flows[f.device_id.index()] += f.total_bytes();
    }
    assert_eq!(from_flows, truth);

    let FeatureSet::Second(rows) = cap.extract(Schema::Second) else { unreachable!() };
    let mut from_seconds = vec![0u64; truth.len()];
    for r in &rows {
        from_seconds[r.device_id.index()] += r.bytes_sum;
    }
    assert_eq!(from_seconds, truth);
}

#[test]
fn stationary_weeks_look_alike() {
    let s = presets::stationary(8);
    let out = generate_from(&s).unwrap();
    let origin = s.week_origin();
    let weeks = out.labels.iter().map(|l| assign_week(l.timestamp, origin).unwrap()).max().unwrap() as usize;
    let devices = out.manifest.len();
    let mut bytes = vec![vec![0f64; weeks]; devices];
    for l in &out.labels {
        let w = assign_week(l.timestamp, origin).unwrap() as usize - 1;
        bytes[l.device_id.index()][w] += l.wire_len as f64;
    }
    for (dev, per_week) in bytes.iter().enumerate() {
        for pair in per_week.windows(2) {
            let diff = (pair[1] - pair[0]).abs() / pair[0];
            assert!(diff < 0.10, "device {dev}: week-over-week byte change {diff:.3}");
        }
    }
}

#[test]
fn endpoint_change_moves_domains_after_drift() {
    let s = presets::drifting(4);
    let out = generate_from(&s).unwrap();
    let cap = Capture::from_pcap(&out.pcap[..], &out.manifest).unwrap();
    let data = cap.extract(Schema::Flow);
    let weeks = row_weeks(&data, s.week_origin()).unwrap();
    let FeatureSet::Flow(rows) = data else { unreachable!() };
    let domains = |pred: &dyn Fn(u32) -> bool| -> std::collections::BTreeSet<String> {
        rows.iter().zip(&weeks).filter(|(_, w)| pred(**w)).map(|(r, _)| r.domain.clone()).collect()
    };
    let before = domains(&|w| w < presets::DRIFT_WEEK);
    let after = domains(&|w| w >= presets::DRIFT_WEEK);
    let shared: Vec<&String> = before.intersection(&after).filter(|d| !d.is_empty()).collect();
    assert!(shared.is_empty(), "domains seen on both sides of the drift: {shared:?}");
    assert!(before.len() > 1 && after.len() > 1);
}

#[test]
fn labels_csv_has_one_row_per_packet() {
    let mut s = presets::stationary(1);
    s.weeks = 1;
    let out = generate_from(&s).unwrap();
    let mut buf = Vec::new();
    out.write_labels_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("timestamp,device_id"));
    assert_eq!(lines.count(), out.labels.len());
}
