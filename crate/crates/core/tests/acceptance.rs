//! Acceptance suite: one pass/fail line per criterion, then a single
//! assertion over all of them.
//!
//! Tolerances:
//! - drift: in-period weekly macro-F1 >= 0.90, mean weeks 4-6 at least
//!   20 pp lower; stationary |degradation| < 5 pp; runtime <= 900 s
//! - moments: 1e-9 relative to max(|expected|, series scale)
//! - F1: per-class values equal the correctly rounded rational exactly,
//!   macro within 1e-12
//! - gradients: 1e-4 relative (floor 1e-7) against central differences

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::net::Ipv4Addr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iotid_core::eval::{run_experiment, EvalReport, PeriodSpec};
use iotid_core::features::moments;
use iotid_core::flow::FlowTable;
use iotid_core::ml::{
    f1_scores, Cnn, CnnShape, DecisionTree, DropoutMode, ForestConfig, Mlp, ModelArtifact, ModelKind, Network,
    RandomForest, TrainConfig, TrainOptions,
};
use iotid_core::pipeline::Capture;
use iotid_core::synth::{generate_from, presets, Scenario};
use iotid_core::{DeviceId, FeatureSet, MacAddr, PacketRecord, Schema, Timestamp, Transport};

type Outcome = Result<String, String>;

const CLASSES: usize = 6;
const MODELS: [(ModelKind, Schema); 6] = [
    (ModelKind::TwoStage, Schema::Hour),
    (ModelKind::Cnn, Schema::Grid),
    (ModelKind::Dt, Schema::Second),
    (ModelKind::Rf, Schema::Second),
    (ModelKind::Rf, Schema::Flow),
    (ModelKind::Fcnn, Schema::Flow),
];

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Trains every model/schema pair on weeks 1-2 of a scenario.
fn drift_runs(scenario: &Scenario) -> Vec<EvalReport> {
    let out = generate_from(scenario).expect("scenario generates");
    let capture = Capture::from_pcap(&out.pcap[..], &out.manifest).expect("capture parses");
    let spec = PeriodSpec::parse("1-2", scenario.week_origin()).unwrap();
    let mut reports = Vec::new();
    let mut sets: BTreeMap<Schema, FeatureSet> = BTreeMap::new();
    for (kind, schema) in MODELS {
        let data = sets.entry(schema).or_insert_with(|| capture.extract(schema));
        let opts = TrainOptions { seed: 7, ..Default::default() };
        let mut r = run_experiment(data, kind, &spec, CLASSES, &opts).expect("experiment runs");
        reports.push(r.remove(0));
    }
    reports
}

fn post_drift(r: &EvalReport) -> f64 {
    r.mean_f1(|w| (4..=6).contains(&w)).expect("weeks 4-6 present")
}

fn criterion_1(reports: &[EvalReport], elapsed: Duration) -> Outcome {
    let mut lines = Vec::new();
    for r in reports {
        let inp = r.in_period_f1.unwrap();
        let post = post_drift(r);
        for w in r.weeks.iter().filter(|w| w.in_period) {
            let f = w.macro_f1.unwrap();
            check(f >= 0.90, || format!("{}/{} week {} in-period F1 {f:.3} < 0.90", r.model, r.schema, w.week))?;
        }
        check(inp - post >= 0.20, || {
            format!("{}/{} drop {:.1} pp < 20 pp", r.model, r.schema, (inp - post) * 100.0)
        })?;
        lines.push(format!("{}/{} {:.3}->{:.3}", r.model, r.schema, inp, post));
    }
    check(elapsed <= Duration::from_secs(900), || format!("runtime {elapsed:?} exceeds 900 s"))?;
    Ok(format!("{} ({:.0} s)", lines.join(", "), elapsed.as_secs_f64()))
}

fn criterion_2(reports: &[EvalReport]) -> Outcome {
    let mut worst: f64 = 0.0;
    for r in reports {
        let d = r.degradation_pp.unwrap();
        check(d.abs() < 5.0, || format!("{}/{} degradation {d:.2} pp", r.model, r.schema))?;
        for w in r.weeks.iter().filter(|w| w.in_period) {
            check(w.macro_f1.unwrap() >= 0.9, || format!("{}/{} in-period week below 0.9", r.model, r.schema))?;
        }
        worst = worst.max(d.abs());
    }
    Ok(format!("max |degradation| {worst:.2} pp"))
}

// ---------- criterion 3: flow segmentation oracle ----------

#[derive(Debug, Clone)]
struct RawPkt {
    t: i64,
    device: u32,
    local_port: u16,
    remote_port: u16,
    udp: bool,
    originated: bool,
    len: u32,
}

fn to_record(p: &RawPkt) -> PacketRecord {
    let dev_ip = Ipv4Addr::new(192, 168, 1, 10 + p.device as u8);
    let remote = Ipv4Addr::new(52, 0, 0, 1);
    let (src_ip, dst_ip, src_port, dst_port) = if p.originated {
        (dev_ip, remote, p.local_port, p.remote_port)
    } else {
        (remote, dev_ip, p.remote_port, p.local_port)
    };
    PacketRecord {
        timestamp: Timestamp(p.t),
        src_mac: MacAddr([2, 0, 0, 0, 0, 1]),
        dst_mac: MacAddr([2, 0, 0, 0, 0, 2]),
        src_ip,
        dst_ip,
        src_port,
        dst_port,
        transport: if p.udp { Transport::Udp } else { Transport::Tcp },
        wire_len: p.len,
        data: Vec::new(),
        payload_offset: 0,
    }
}

/// (device, local port, remote port, udp, start, end, pkts out, pkts in,
/// bytes out, bytes in, continuation)
type Seg = (u32, u16, u16, bool, i64, i64, u32, u32, u64, u64, u32);

/// Applies the two timeout rules directly to each key's packets in time
/// order.
fn oracle_segments(pkts: &[RawPkt]) -> Vec<Seg> {
    let mut by_key: BTreeMap<(u32, u16, u16, bool), Vec<&RawPkt>> = BTreeMap::new();
    for p in pkts {
        by_key.entry((p.device, p.local_port, p.remote_port, p.udp)).or_default().push(p);
    }
    let mut out = Vec::new();
    for ((d, lp, rp, udp), list) in by_key {
        let mut cont = 0;
        let mut cur: Option<Seg> = None;
        for p in list {
            if let Some(s) = cur {
                let inactive = p.t - s.5 > 10_000_000;
                let too_long = p.t - s.4 > 30_000_000;
                if inactive || too_long {
                    out.push(s);
                    cont += 1;
                    cur = None;
                }
            }
            let s = cur.get_or_insert((d, lp, rp, udp, p.t, p.t, 0, 0, 0, 0, cont));
            s.5 = p.t;
            if p.originated {
                s.6 += 1;
                s.8 += p.len as u64;
            } else {
                s.7 += 1;
                s.9 += p.len as u64;
            }
        }
        out.extend(cur);
    }
    out.sort();
    out
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut segments = 0;
    for case in 0..1000 {
        let n = rng.random_range(0..=200);
        let mut t: i64 = 1_609_718_400_000_000;
        let pkts: Vec<RawPkt> = (0..n)
            .map(|_| {
                t += match rng.random_range(0..6) {
                    0 => 0,
                    1 => 10_000_000,
                    2 => rng.random_range(9_000_000..11_000_001),
                    3 => rng.random_range(0..3_000_000),
                    4 => rng.random_range(0..200_000),
                    _ => rng.random_range(0..15_000_000),
                };
                RawPkt {
                    t,
                    device: rng.random_range(0..2),
                    local_port: [50000, 50001][rng.random_range(0..2)],
                    remote_port: [443, 53][rng.random_range(0..2)],
                    udp: rng.random_bool(0.5),
                    originated: rng.random_bool(0.6),
                    len: rng.random_range(60..=1514),
                }
            })
            .collect();
        let mut table = FlowTable::new();
        let mut got = Vec::new();
        for p in &pkts {
            if let Some(r) = table.advance(DeviceId(p.device), &to_record(p), p.originated).unwrap() {
                got.push(r);
            }
        }
        got.extend(table.flush());
        let mut got: Vec<Seg> = got
            .iter()
            .map(|r| {
                (
                    r.device_id.0,
                    r.key.src_port,
                    r.key.dst_port,
                    r.key.transport == Transport::Udp,
                    r.start_time.micros(),
                    r.end_time.micros(),
                    r.pkts_out,
                    r.pkts_in,
                    r.bytes_out,
                    r.bytes_in,
                    r.continuation_index,
                )
            })
            .collect();
        got.sort();
        let want = oracle_segments(&pkts);
        check(got == want, || format!("case {case}: segments differ\n got {got:?}\nwant {want:?}"))?;
        let pk: u64 = got.iter().map(|s| (s.6 + s.7) as u64).sum();
        let by: u64 = got.iter().map(|s| s.8 + s.9).sum();
        check(pk == pkts.len() as u64, || format!("case {case}: packet count not conserved"))?;
        check(by == pkts.iter().map(|p| p.len as u64).sum::<u64>(), || format!("case {case}: bytes not conserved"))?;
        segments += got.len();
    }
    Ok(format!("1000 lists, {segments} segments match"))
}

// ---------- criterion 4: moments oracle ----------

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let series: Vec<f64> = match case {
            0 => vec![],
            1 => vec![42.5],
            2 => vec![0.1; 7],
            _ => {
                let n = rng.random_range(0..=60);
                match rng.random_range(0..4) {
                    0 => (0..n).map(|_| rng.random_range(60..=1514) as f64).collect(),
                    1 => (0..n).map(|_| rng.random_range(0.0..30.0)).collect(),
                    2 => vec![rng.random_range(-5.0..5.0); n],
                    _ => (0..n).map(|_| [90.0, 1514.0, 60.0][rng.random_range(0..3)]).collect(),
                }
            }
        };
        let got = moments(&series);
        // Direct formulas over exact rationals.
        let (mean, var, m3, m4) = if series.is_empty() {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let n = BigRational::from_integer(BigInt::from(series.len()));
            let xs: Vec<BigRational> = series.iter().map(|&x| exact(x)).collect();
            let mean = xs.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
            let central = |k: u32| {
                xs.iter().fold(BigRational::zero(), |a, x| a + num_traits::pow(x - &mean, k as usize)) / &n
            };
            let f = |r: BigRational| r.to_f64().unwrap();
            (f(mean.clone()), f(central(2)), f(central(3)), f(central(4)))
        };
        let (std, skew, kurt) = if var == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (var.sqrt(), m3 / var.powf(1.5), m4 / (var * var))
        };
        let scale = series.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
        let close = |a: f64, b: f64, s: f64| (a - b).abs() <= 1e-9 * b.abs().max(s);
        let pairs = [
            ("mean", got.mean, mean, scale),
            ("var", got.var, var, scale * scale),
            ("std", got.std, std, scale),
            ("skew", got.skew, skew, 1.0),
            ("kurtosis", got.kurtosis, kurt, 1.0),
        ];
        for (name, a, b, s) in pairs {
            check(close(a, b, s), || format!("case {case} {name}: got {a} want {b} for {series:?}"))?;
        }
    }
    Ok("1000 series within 1e-9".into())
}

// ---------- criterion 5: metric oracle ----------

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut equal_pr = 0;
    let mut zero_pr = 0;
    for case in 0..50 {
        let k = rng.random_range(2..=5);
        let n = rng.random_range(1..=30);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<usize> = truth
            .iter()
            .map(|&t| if rng.random_bool(0.5) { t } else { rng.random_range(0..k) })
            .collect();
        let got = f1_scores(&pred, &truth, k).map_err(|e| e.to_string())?;
        let mut f1s = Vec::new();
        for c in 0..k {
            let tp = (0..n).filter(|&i| pred[i] == c && truth[i] == c).count() as i64;
            let fp = (0..n).filter(|&i| pred[i] == c && truth[i] != c).count() as i64;
            let fn_ = (0..n).filter(|&i| pred[i] != c && truth[i] == c).count() as i64;
            let ratio = |a: i64, b: i64| if b == 0 { Ratio::from_integer(0) } else { Ratio::new(a, b) };
            let p = ratio(tp, tp + fp);
            let r = ratio(tp, tp + fn_);
            let f1 = if (p + r).is_zero() {
                zero_pr += 1;
                Ratio::from_integer(0)
            } else {
                Ratio::from_integer(2) * p * r / (p + r)
            };
            let s = got.per_class[c];
            let f = |x: Ratio<i64>| x.to_f64().unwrap();
            check(s.precision == f(p) && s.recall == f(r) && s.f1 == f(f1), || {
                format!("case {case} class {c}: got ({}, {}, {}) want ({p}, {r}, {f1})", s.precision, s.recall, s.f1)
            })?;
            if p == r {
                equal_pr += 1;
                check(f1 == p && s.f1 == s.precision, || format!("case {case} class {c}: P=R but F1 != P"))?;
            }
            if tp + fn_ > 0 {
                f1s.push(f1);
            }
        }
        let macro_f1 = f1s.iter().fold(Ratio::from_integer(0), |a, b| a + b) / Ratio::from_integer(f1s.len() as i64);
        check((got.macro_f1 - macro_f1.to_f64().unwrap()).abs() < 1e-12, || format!("case {case}: macro"))?;
    }
    Ok(format!("50 sets exact; {equal_pr} P=R classes, {zero_pr} P+R=0 classes"))
}

// ---------- criterion 6: gradient checks ----------

fn fd_check<N: Network>(net: &N, params: &[f64], batch: &[(Vec<f64>, usize)], masks: &[Vec<f64>]) -> f64 {
    let mode = |i: usize| if masks.is_empty() { DropoutMode::Off } else { DropoutMode::Mask(&masks[i]) };
    let total = |p: &[f64]| -> f64 {
        batch.iter().enumerate().map(|(i, (x, y))| net.loss(p, x, *y, mode(i))).sum()
    };
    let mut grad = vec![0.0; params.len()];
    for (i, (x, y)) in batch.iter().enumerate() {
        net.loss_grad(params, x, *y, mode(i), &mut grad);
    }
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for j in 0..params.len() {
        let mut p = params.to_vec();
        p[j] += eps;
        let up = total(&p);
        p[j] -= 2.0 * eps;
        let down = total(&p);
        let fd = (up - down) / (2.0 * eps);
        let rel = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-7);
        worst = worst.max(rel);
    }
    worst
}

/// Zero-initialised biases can park units exactly on the ReLU kink, where
/// central differences are meaningless; nudging every parameter avoids it.
fn jitter(mut params: Vec<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    params.iter_mut().for_each(|p| *p += rng.random_range(-0.1..0.1));
    params
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mlp = Mlp::with_hidden(4, &[5, 4], 3);
    let params = jitter(mlp.init_params(1), &mut rng);
    let batch: Vec<(Vec<f64>, usize)> =
        (0..6).map(|i| ((0..4).map(|_| rng.random_range(-2.0..2.0)).collect(), i % 3)).collect();
    let mlp_err = fd_check(&mlp, &params, &batch, &[]);
    check(mlp_err < 1e-4, || format!("FCNN max relative error {mlp_err:e}"))?;

    let cnn = Cnn::new(CnnShape { height: 10, width: 14, filters1: 2, filters2: 3, classes: 3 }).unwrap();
    let params = jitter(cnn.init_params(2), &mut rng);
    let batch: Vec<(Vec<f64>, usize)> =
        (0..3).map(|i| ((0..140).map(|_| rng.random_range(0.0..1.0)).collect(), i)).collect();
    let masks: Vec<Vec<f64>> = (0..3).map(|i| cnn.dropout_mask(100 + i)).collect();
    let cnn_err = fd_check(&cnn, &params, &batch, &masks);
    check(cnn_err < 1e-4, || format!("CNN max relative error {cnn_err:e}"))?;

    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-50.0..50.0)).collect();
        let s: f64 = mlp.probs(&mlp.init_params(rng.random()), &x).iter().sum();
        check((s - 1.0).abs() <= 1e-6, || format!("softmax sums to {s}"))?;
    }
    Ok(format!("FCNN {mlp_err:.1e}, CNN {cnn_err:.1e}"))
}

// ---------- criterion 7: degenerate forest ----------

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let d = rng.random_range(1..=6);
        let k = rng.random_range(2..=4);
        let n = rng.random_range(5..=80);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.random_range(0..10) as f64).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let tree = DecisionTree::train(&rows, &labels, k).map_err(|e| e.to_string())?;
        let cfg = ForestConfig { n_trees: 1, features_per_split: Some(d), bootstrap: false, seed: rng.random() };
        let forest = RandomForest::train(&rows, &labels, k, cfg).map_err(|e| e.to_string())?;
        let probes: Vec<Vec<f64>> =
            (0..50).map(|_| (0..d).map(|_| rng.random_range(-1.0..11.0)).collect()).collect();
        for x in rows.iter().chain(&probes) {
            check(tree.predict(x).class_index == forest.predict(x).class_index, || {
                format!("case {case}: prediction differs at {x:?}")
            })?;
        }
    }
    Ok("20 fixtures identical".into())
}

// ---------- criterion 8: CNN shape ----------

fn criterion_8() -> Outcome {
    let cnn = Cnn::for_grids(CLASSES).map_err(|e| e.to_string())?;
    let d = cnn.dims();
    check(d.conv1 == (8, 248) && d.pool1 == (4, 124) && d.conv2 == (2, 122) && d.pool2 == (1, 61), || {
        format!("layer shapes {d:?}")
    })?;
    check(d.flat == 976, || format!("flattened width {}", d.flat))?;
    let p = cnn.probs(&cnn.init_params(0), &vec![0.5; 2500]);
    check(p.len() == CLASSES, || "output width".into())?;
    Ok("10x250 -> 8x248x8 -> 4x124x8 -> 2x122x16 -> 1x61x16 -> 976".into())
}

// ---------- criterion 9: determinism and round-trips ----------

fn small_scenario() -> Scenario {
    let mut s = presets::drifting(9);
    s.weeks = 2;
    s.drift.clear();
    s.profiles.truncate(3);
    s
}

fn criterion_9(extra_reports: &mut Vec<EvalReport>) -> Outcome {
    let s = small_scenario();
    let out = generate_from(&s).map_err(|e| e.to_string())?;
    check(generate_from(&s).unwrap().pcap == out.pcap, || "pcap not reproducible".into())?;
    let cap = Capture::from_pcap(&out.pcap[..], &out.manifest).map_err(|e| e.to_string())?;
    let opts = TrainOptions {
        seed: 3,
        n_trees: 20,
        trainer: TrainConfig { epochs: 3, ..Default::default() },
        period: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let mut kinds = Vec::new();
    for kind in ModelKind::ALL {
        let schema = kind.schemas()[0];
        let data = cap.extract(schema);
        let a = ModelArtifact::train(kind, &data, 3, &opts).map_err(|e| e.to_string())?;
        let b = ModelArtifact::train(kind, &data, 3, &opts).map_err(|e| e.to_string())?;
        let bytes = a.to_bytes().unwrap();
        check(bytes == b.to_bytes().unwrap(), || format!("{kind}: model bytes differ across runs"))?;
        let path = dir.path().join(format!("{kind}.model"));
        a.save(&path).unwrap();
        let loaded = ModelArtifact::load(&path).map_err(|e| e.to_string())?;
        let before = a.predict_proba(&data).unwrap();
        let after = loaded.predict_proba(&data).unwrap();
        let same = before.iter().zip(&after).all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
        check(same && before.len() == after.len(), || format!("{kind}: predictions changed after reload"))?;
        kinds.push(kind.name());
    }
    let spec = PeriodSpec::parse("1,2", s.week_origin()).unwrap();
    for (kind, schema) in [(ModelKind::Rf, Schema::Flow), (ModelKind::Fcnn, Schema::Second)] {
        let data = cap.extract(schema);
        let a = run_experiment(&data, kind, &spec, 3, &opts).map_err(|e| e.to_string())?;
        let b = run_experiment(&data, kind, &spec, 3, &opts).map_err(|e| e.to_string())?;
        let ja: Vec<String> = a.iter().map(|r| r.to_json()).collect();
        let jb: Vec<String> = b.iter().map(|r| r.to_json()).collect();
        check(ja == jb, || format!("{kind}: reports differ across runs"))?;
        extra_reports.extend(a);
    }
    Ok(format!("byte-identical and reload-stable: {}", kinds.join(", ")))
}

// ---------- criterion 10: leakage audit ----------

fn criterion_10(reports: &[EvalReport]) -> Outcome {
    for r in reports {
        let train: BTreeSet<usize> = r.audit.train_ids.iter().copied().collect();
        check(!train.is_empty(), || "empty training audit".into())?;
        let mut seen = BTreeSet::new();
        for (week, ids) in &r.audit.evaluated {
            for id in ids {
                check(!train.contains(id), || {
                    format!("{}/{}: training row {id} scored in week {week}", r.model, r.schema)
                })?;
                check(seen.insert(*id), || format!("row {id} scored in two weeks"))?;
            }
            let w = r.weeks.iter().find(|w| w.week == *week).unwrap();
            check(w.samples == ids.len(), || "week sample count disagrees with audit".into())?;
        }
    }
    Ok(format!("{} runs audited, no overlap", reports.len()))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut run = |n: usize, f: &mut dyn FnMut() -> Outcome| {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        // Straight to the stdout handle so the lines survive libtest's capture.
        let line = match &r {
            Ok(m) => format!("[PASS] criterion {n}: {m}\n"),
            Err(m) => format!("[FAIL] criterion {n}: {m}\n"),
        };
        let _ = std::io::stdout().lock().write_all(line.as_bytes());
        results.push((n, r));
    };

    let mut audited: Vec<EvalReport> = Vec::new();
    let start = Instant::now();
    let drift = drift_runs(&presets::drifting(42));
    let drift_time = start.elapsed();
    run(1, &mut || criterion_1(&drift, drift_time));
    let stationary = drift_runs(&presets::stationary(42));
    run(2, &mut || criterion_2(&stationary));
    run(3, &mut criterion_3);
    run(4, &mut criterion_4);
    run(5, &mut criterion_5);
    run(6, &mut criterion_6);
    run(7, &mut criterion_7);
    run(8, &mut criterion_8);
    run(9, &mut || criterion_9(&mut audited));
    audited.extend(drift);
    audited.extend(stationary);
    run(10, &mut || criterion_10(&audited));

    let failed: Vec<usize> = results.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
