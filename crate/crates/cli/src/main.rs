use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pmu_sentinel_cli::error::CliError;
use pmu_sentinel_cli::{artifacts, pipeline, RunConfig};

/// Anomaly detection for PMU time series: synthesize or ingest data, inject
/// false-data attacks, train forecasters, detect, and evaluate.
#[derive(Parser)]
#[command(name = "pmu-sentinel", version, about)]
struct Cli {
    /// Run-configuration JSON document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides and rederives every per-stage seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (defaults to output_dir from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic dataset.
    Synth,
    /// Validate and canonicalize a user-supplied PMU CSV.
    Ingest,
    /// Select the channel, unwrap/filter it, split, and fit the scaler.
    Preprocess,
    /// Add Gaussian false-data bursts with ground-truth labels.
    Inject,
    /// Train the configured forecaster on the clean training windows.
    Train,
    /// Score the injected stream and calibrate the detection threshold.
    Detect,
    /// Score detections against the ground truth and write reports.
    Eval,
    /// Execute the whole pipeline (optionally the model × filtration matrix).
    RunAll,
    /// Emit plot-ready CSVs from a completed run directory.
    ExportPlots,
}

impl Command {
    fn stage_name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest => "ingest",
            Command::Preprocess => "preprocess",
            Command::Inject => "inject",
            Command::Train => "train",
            Command::Detect => "detect",
            Command::Eval => "eval",
            Command::RunAll => "run-all",
            Command::ExportPlots => "export-plots",
        }
    }
}

fn matrix_threads() -> usize {
    std::env::var("PMU_SENTINEL_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(config_path)?.effective(cli.seed);
    cfg.validate()?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output_dir".into()))?;

    match cli.command {
        Command::Synth => pipeline::stage_synth(&cfg, &out),
        Command::Ingest => pipeline::stage_ingest(&cfg, &out),
        Command::Preprocess => pipeline::stage_preprocess(&cfg, &out, &artifacts::dataset_path(&out)),
        Command::Inject => pipeline::stage_inject(&cfg, &out),
        Command::Train => pipeline::stage_train(&cfg, &out),
        Command::Detect => pipeline::stage_detect(&cfg, &out),
        Command::Eval => pipeline::stage_eval(&cfg, &out).map(|_| ()),
        Command::RunAll => pipeline::run_all(&cfg, &out, matrix_threads()).map(|_| ()),
        Command::ExportPlots => pipeline::export_plots(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.stage_name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-parseable line on stderr.
            let line = serde_json::json!({
                "stage": stage,
                "kind": err.kind(),
                "message": err.to_string(),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
