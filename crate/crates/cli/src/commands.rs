use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use iotid_core::eval::{evaluate_artifact, midnight_before, parse_periods, run_experiment, train_period, Period};
use iotid_core::eval::{degradation_summary, plot_series, write_summary_csv};
use iotid_core::features::{read_feature_set, write_feature_set, FeatureFiles};
use iotid_core::io::write_atomic;
use iotid_core::ml::TrainOptions;
use iotid_core::pipeline::{read_capture, store_paths, write_capture, Capture};
use iotid_core::synth::{generate_from, presets, Scenario};
use iotid_core::{
    DeviceManifest, Error, EvalReport, FeatureSet, ModelArtifact, ModelKind, PeriodSpec, Schema, Timestamp,
};

use crate::{
    Command, EvaluateArgs, ExtractArgs, IngestArgs, ModelChoice, Output, Preset, ReportArgs, SynthArgs, TrainArgs,
    UsageError,
};

const MANIFEST_FILE: &str = "manifest.json";
const RUN_LOG: &str = "run.log";

pub fn run(command: Command) -> Result<()> {
    let started = Instant::now();
    let (name, log_dir) = match command {
        Command::Ingest(a) => ("ingest", ingest(a)?),
        Command::Extract(a) => ("extract", extract(a)?),
        Command::Train(a) => ("train", train(a)?),
        Command::Evaluate(a) => ("evaluate", evaluate(a)?),
        Command::Report(a) => ("report", report(a)?),
        Command::Synth(a) => ("synth", synth(a)?),
    };
    append_run_log(&log_dir, name, started)
}

/// Wall-clock metadata lives only in this sidecar so the real outputs stay
/// byte-identical between runs.
fn append_run_log(dir: &Path, command: &str, started: Instant) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let path = dir.join(RUN_LOG);
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    writeln!(f, "{now} {command} {:.3}s", started.elapsed().as_secs_f64())?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Creates the output directory and refuses to replace any of `files`
/// unless forced.
fn prepare(output: &Output, files: &[PathBuf]) -> Result<()> {
    std::fs::create_dir_all(&output.out).with_context(|| format!("cannot create {}", output.out.display()))?;
    if !output.force {
        if let Some(existing) = files.iter().find(|p| p.exists()) {
            return Err(usage(format!("{} already exists (pass --force to overwrite)", existing.display())));
        }
    }
    Ok(())
}

fn load_manifest(path: &Path) -> Result<DeviceManifest> {
    DeviceManifest::load(path).with_context(|| format!("cannot load manifest {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<PathBuf> {
    let manifest = load_manifest(&a.manifest)?;
    let out = &a.output.out;
    let mut files = store_paths(out);
    files.push(out.join(MANIFEST_FILE));
    prepare(&a.output, &files)?;

    let mut cap = Capture::default();
    for path in &a.pcaps {
        let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let part = Capture::from_pcap(BufReader::new(f), &manifest)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        log::info!("{}: {} packets kept of {}", path.display(), part.counters.emitted, part.counters.total);
        cap.extend(part);
    }
    write_capture(out, &cap)?;
    write_atomic(&out.join(MANIFEST_FILE), format!("{}\n", manifest.to_json()).as_bytes())?;

    let mut counts = vec![0u64; manifest.len()];
    for p in &cap.packets {
        counts[p.device_id.index()] += 1;
    }
    for (e, n) in manifest.entries().iter().zip(&counts) {
        println!("{}\t{}\t{n} packets", e.device_id, e.name);
    }
    let c = cap.counters;
    println!(
        "{} packets ({} records read, {} unknown MAC, {} non-IPv4, {} malformed)",
        c.emitted, c.total, c.skipped_unknown_mac, c.skipped_non_ipv4, c.malformed
    );
    println!("{} DNS answers, {} TLS ClientHellos", cap.dns.len(), cap.tls.len());
    Ok(out.clone())
}

fn extract(a: ExtractArgs) -> Result<PathBuf> {
    let cap = read_capture(&a.store).with_context(|| format!("cannot read packet store {}", a.store.display()))?;
    let out = &a.output.out;
    let mut files: Vec<PathBuf> =
        FeatureFiles::for_schema(out, a.schema).paths().into_iter().map(Path::to_path_buf).collect();
    files.push(out.join(MANIFEST_FILE));
    // The manifest is shared by every schema written to the same directory.
    prepare(&a.output, &files[..files.len() - 1])?;

    let set = cap.extract(a.schema);
    write_feature_set(out, &set)?;
    let src = a.store.join(MANIFEST_FILE);
    if src.exists() {
        let text = std::fs::read(&src).with_context(|| format!("cannot read {}", src.display()))?;
        write_atomic(&out.join(MANIFEST_FILE), &text)?;
    }
    println!("{}: {} rows", a.schema, set.len());
    Ok(out.clone())
}

fn week_origin(choice: &ModelChoice, data: &FeatureSet) -> Result<Timestamp> {
    if let Some(text) = &choice.week_origin {
        return text.parse::<Timestamp>().map_err(|e| usage(format!("bad --week-origin: {e}")));
    }
    let first = data.timestamps().into_iter().min().ok_or_else(|| Error::InvalidInput("feature set is empty".into()))?;
    Ok(midnight_before(first))
}

fn class_count(choice: &ModelChoice, features: &Path) -> Result<usize> {
    let path = choice.manifest.clone().unwrap_or_else(|| features.join(MANIFEST_FILE));
    Ok(load_manifest(&path)?.len())
}

fn check_schema(kind: ModelKind, schema: Schema) -> Result<()> {
    if !kind.supports(schema) {
        let expected: Vec<&str> = kind.schemas().iter().map(|s| s.name()).collect();
        return Err(Error::SchemaMismatch { expected: expected.join(" or "), actual: schema.name().into() })
            .with_context(|| format!("model {kind} cannot be used with schema {schema}"));
    }
    Ok(())
}

fn load_features(dir: &Path, schema: Schema) -> Result<FeatureSet> {
    read_feature_set(dir, schema).with_context(|| format!("cannot read {schema} features from {}", dir.display()))
}

fn periods(text: &str) -> Result<Vec<Period>> {
    parse_periods(text).map_err(|e| usage(e.to_string()))
}

fn train(a: TrainArgs) -> Result<PathBuf> {
    let c = &a.choice;
    let kind = c.model.ok_or_else(|| usage("--model is required"))?;
    let schema = c.schema.unwrap_or(kind.schemas()[0]);
    check_schema(kind, schema)?;
    let mut ps = periods(&a.periods)?;
    if ps.len() != 1 {
        bail!(UsageError(format!("train takes one period, got {:?}", a.periods)));
    }
    let period = ps.remove(0);
    let out = &a.output.out;
    if out.exists() && !a.output.force {
        return Err(usage(format!("{} already exists (pass --force to overwrite)", out.display())));
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).with_context(|| format!("cannot create {}", parent.display()))?;

    let data = load_features(&a.features, schema)?;
    let classes = class_count(c, &a.features)?;
    let origin = week_origin(c, &data)?;
    let opts = TrainOptions { seed: c.seed, ..Default::default() };
    let model = train_period(&data, kind, &period, origin, classes, &opts)?;
    model.save(out)?;
    println!("{kind}/{schema} trained on weeks {period} (seed {}) -> {}", c.seed, out.display());
    if let Some(h) = model.history() {
        println!("best epoch {} with validation accuracy {:.4}", h.best_epoch, h.best_accuracy);
    }
    Ok(parent)
}

fn report_stem(r: &EvalReport) -> String {
    format!("eval-{}-{}-{}", r.model, r.schema, r.period.label)
}

fn write_reports(output: &Output, reports: &[EvalReport]) -> Result<()> {
    let files: Vec<PathBuf> = reports
        .iter()
        .flat_map(|r| {
            let stem = report_stem(r);
            [output.out.join(format!("{stem}.json")), output.out.join(format!("{stem}.csv"))]
        })
        .collect();
    prepare(output, &files)?;
    for r in reports {
        let stem = report_stem(r);
        write_atomic(&output.out.join(format!("{stem}.json")), format!("{}\n", r.to_json()).as_bytes())?;
        write_atomic(&output.out.join(format!("{stem}.csv")), r.weekly_csv()?.as_bytes())?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{}/{} period {}: in {} out {} degradation {} pp",
            r.model,
            r.schema,
            r.period,
            fmt(r.in_period_f1),
            fmt(r.out_period_f1),
            r.degradation_pp.map(|d| format!("{d:.2}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<PathBuf> {
    let c = &a.choice;
    let reports = if let Some(path) = &a.artifact {
        let model =
            ModelArtifact::load(path).with_context(|| format!("cannot load model {}", path.display()))?;
        if let Some(schema) = c.schema {
            if schema != model.schema {
                return Err(Error::SchemaMismatch { expected: model.schema.name().into(), actual: schema.name().into() })
                    .with_context(|| format!("model {} was trained on {} features", model.kind, model.schema));
            }
        }
        let data = load_features(&a.features, model.schema)?;
        let origin = week_origin(c, &data)?;
        vec![evaluate_artifact(&model, &data, origin)?]
    } else {
        let kind = c.model.ok_or_else(|| usage("either --artifact or --model is required"))?;
        let schema = c.schema.unwrap_or(kind.schemas()[0]);
        check_schema(kind, schema)?;
        let data = load_features(&a.features, schema)?;
        let origin = week_origin(c, &data)?;
        let spec = match &a.periods {
            Some(text) => PeriodSpec::new(periods(text)?, origin).map_err(|e| usage(e.to_string()))?,
            None => PeriodSpec::default_for(origin),
        };
        let classes = class_count(c, &a.features)?;
        run_experiment(&data, kind, &spec, classes, &TrainOptions { seed: c.seed, ..Default::default() })?
    };
    write_reports(&a.output, &reports)?;
    Ok(a.output.out.clone())
}

fn collect_reports(inputs: &[PathBuf]) -> Result<Vec<EvalReport>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = std::fs::read_dir(input).with_context(|| format!("cannot list {}", input.display()))?;
            for e in entries {
                let p = e?.path();
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if name.starts_with("eval-") && name.ends_with(".json") {
                    files.push(p);
                }
            }
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    files.dedup();
    let mut reports = files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            EvalReport::from_json(&text).with_context(|| format!("{} is not an evaluation report", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    if reports.is_empty() {
        bail!(UsageError("no evaluation reports found".into()));
    }
    reports.sort_by(|a, b| {
        (a.model.name(), a.schema.name(), a.period.start_week).cmp(&(b.model.name(), b.schema.name(), b.period.start_week))
    });
    Ok(reports)
}

fn report(a: ReportArgs) -> Result<PathBuf> {
    let reports = collect_reports(&a.inputs)?;
    let summary = write_summary_csv(&degradation_summary(&reports))?;
    let plots = plot_series(&reports)?;
    let out = &a.output.out;
    let mut files = vec![out.join("summary.csv")];
    files.extend(plots.iter().map(|(name, _)| out.join(name)));
    prepare(&a.output, &files)?;
    write_atomic(&out.join("summary.csv"), summary.as_bytes())?;
    for (name, csv) in &plots {
        write_atomic(&out.join(name), csv.as_bytes())?;
    }
    print!("{summary}");
    Ok(out.clone())
}

fn synth(a: SynthArgs) -> Result<PathBuf> {
    let mut scenario = match &a.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Scenario::from_json(&text).with_context(|| format!("bad scenario {}", path.display()))?
        }
        None => {
            let seed = a.seed.unwrap_or(42);
            match a.preset {
                Preset::Drifting => presets::drifting(seed),
                Preset::Stationary => presets::stationary(seed),
            }
        }
    };
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let out = &a.output.out;
    let names = ["capture.pcap", MANIFEST_FILE, "labels.csv", "scenario.json"];
    let files: Vec<PathBuf> = names.iter().map(|n| out.join(n)).collect();
    prepare(&a.output, &files)?;

    let generated = generate_from(&scenario)?;
    let mut labels = Vec::new();
    generated.write_labels_csv(&mut labels)?;
    write_atomic(&files[0], &generated.pcap)?;
    write_atomic(&files[1], format!("{}\n", generated.manifest.to_json()).as_bytes())?;
    write_atomic(&files[2], &labels)?;
    write_atomic(&files[3], format!("{}\n", scenario.to_json()).as_bytes())?;
    let counts = generated.packets_per_device();
    for (e, n) in generated.manifest.entries().iter().zip(&counts) {
        println!("{}\t{}\t{n} packets", e.device_id, e.name);
    }
    println!("{} packets over {} weeks (seed {})", generated.labels.len(), scenario.weeks, scenario.seed);
    Ok(out.clone())
}
