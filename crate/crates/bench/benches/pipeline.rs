use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use iotid_core::features::moments;
use iotid_core::flow::segment_packets;
use iotid_core::ml::{Cnn, ForestConfig, Network, RandomForest, TrainOptions};
use iotid_core::pipeline::Capture;
use iotid_core::synth::{generate_from, presets};
use iotid_core::{FeatureSet, ModelArtifact, ModelKind, Schema};

fn one_week() -> Capture {
    let mut s = presets::stationary(1);
    s.weeks = 1;
    let out = generate_from(&s).unwrap();
    Capture::from_pcap(&out.pcap[..], &out.manifest).unwrap()
}

fn ingest(c: &mut Criterion) {
    let mut s = presets::stationary(1);
    s.weeks = 1;
    let out = generate_from(&s).unwrap();
    c.bench_function("ingest_one_week", |b| {
        b.iter(|| Capture::from_pcap(black_box(&out.pcap[..]), &out.manifest).unwrap())
    });
}

fn features(c: &mut Criterion) {
    let cap = one_week();
    c.bench_function("segment_flows", |b| b.iter(|| segment_packets(black_box(&cap.packets))));
    for schema in Schema::ALL {
        c.bench_function(&format!("extract_{schema}"), |b| b.iter(|| cap.extract(black_box(schema))));
    }
    let series: Vec<f64> = (0..50).map(|i| 60.0 + ((i * 37) % 1400) as f64).collect();
    c.bench_function("moments_50", |b| b.iter(|| moments(black_box(&series))));
}

fn models(c: &mut Criterion) {
    let cap = one_week();
    let FeatureSet::Second(rows) = cap.extract(Schema::Second) else { unreachable!() };
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.numeric().to_vec()).collect();
    let ys: Vec<usize> = rows.iter().map(|r| r.device_id.index()).collect();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("rf_second_20_trees", |b| {
        b.iter(|| RandomForest::train(&xs, &ys, 6, ForestConfig { n_trees: 20, seed: 1, ..Default::default() }).unwrap())
    });
    let hour = cap.extract(Schema::Hour);
    group.bench_function("two_stage_hour", |b| {
        b.iter(|| ModelArtifact::train(ModelKind::TwoStage, &hour, 6, &TrainOptions::default()).unwrap())
    });
    group.finish();

    let cnn = Cnn::for_grids(6).unwrap();
    let params = cnn.init_params(3);
    let grid = vec![0.5; 2500];
    c.bench_function("cnn_forward", |b| b.iter(|| cnn.probs(&params, black_box(&grid))));
    c.bench_function("cnn_backward", |b| {
        b.iter_batched(
            || vec![0.0; params.len()],
            |mut g| cnn.loss_grad(&params, &grid, 2, iotid_core::ml::DropoutMode::Seeded(5), &mut g),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, ingest, features, models);
criterion_main!(benches);
