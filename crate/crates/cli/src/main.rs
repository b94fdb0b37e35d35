//! `iotid`: ingest captures, extract features, train and evaluate device
//! classifiers, and summarise how their accuracy decays over time.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iotid_core::{ModelKind, Schema};

#[derive(Debug, Parser)]
#[command(name = "iotid", version, about = "IoT device identification with temporal evaluation")]
struct Cli {
    /// Worker threads for parallel stages (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse pcap files into a packet store.
    Ingest(IngestArgs),
    /// Build one feature schema from a packet store.
    Extract(ExtractArgs),
    /// Train a model on one period of a feature directory.
    Train(TrainArgs),
    /// Score a saved model, or run the full train-and-score protocol.
    Evaluate(EvaluateArgs),
    /// Merge evaluation reports into the degradation table and plot series.
    Report(ReportArgs),
    /// Generate a labelled synthetic capture.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Output directory (or file, for `train`).
    #[arg(long)]
    out: PathBuf,
    /// Replace existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Device manifest (JSON list of {mac, device_id, name}).
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    output: Output,
    /// Capture files, read in the order given.
    #[arg(required = true)]
    pcaps: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, value_parser = parse_schema)]
    schema: Schema,
    #[command(flatten)]
    output: Output,
    /// Directory written by `ingest`.
    store: PathBuf,
}

#[derive(Debug, Args)]
struct ModelChoice {
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    /// Feature schema; defaults to the model's first supported schema.
    #[arg(long, value_parser = parse_schema)]
    schema: Option<Schema>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Manifest giving the class count; defaults to the one in the feature
    /// directory.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Start of week 1 as Unix seconds; defaults to midnight UTC before the
    /// first row.
    #[arg(long)]
    week_origin: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    choice: ModelChoice,
    /// A single training period, e.g. `1-9`.
    #[arg(long)]
    periods: String,
    #[command(flatten)]
    output: Output,
    /// Directory written by `extract`.
    features: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Saved model to rescore; without it `--model` and `--periods` run the
    /// whole protocol.
    #[arg(long, conflicts_with_all = ["model", "periods"])]
    artifact: Option<PathBuf>,
    #[command(flatten)]
    choice: ModelChoice,
    /// Comma-separated training periods.
    #[arg(long)]
    periods: Option<String>,
    #[command(flatten)]
    output: Output,
    features: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    output: Output,
    /// Report files or directories holding `eval-*.json`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Drifting,
    Stationary,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Scenario JSON; overrides `--preset`.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Drifting)]
    preset: Preset,
    /// Generator seed; overrides the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

fn parse_schema(s: &str) -> Result<Schema, String> {
    s.parse().map_err(|_| {
        let valid: Vec<&str> = Schema::ALL.iter().map(|s| s.name()).collect();
        format!("unknown schema {s:?}; valid schemas: {}", valid.join(", "))
    })
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|_| {
        let valid: Vec<&str> = ModelKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown model {s:?}; valid models: {}", valid.join(", "))
    })
}

/// Errors the user can fix by changing the command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    use iotid_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Training(_) => EXIT_INTERNAL,
                _ => EXIT_DATA,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_INTERNAL
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IOTID_LOG", "warn")).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
