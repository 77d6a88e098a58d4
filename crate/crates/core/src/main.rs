use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surrogate_ood::pipeline::{run_stage, PipelineConfig, Stage};

const THREADS_ENV: &str = "SURROGATE_OOD_THREADS";

#[derive(Parser)]
#[command(name = "surrogate-ood", version, about = "Surrogate OOD detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample train/test designs and evaluate the oracle.
    Doe(RunArgs),
    /// Fit the surrogate and its cross-validation fold models.
    Train(RunArgs),
    /// Compute sensitivity profiles (FNN) or predictive std (GP).
    Profile(RunArgs),
    /// Label OOD points from bootstrap error margins.
    Label(RunArgs),
    /// Tune and train the ID/OOD classifier and the neighbor baseline.
    Detector(RunArgs),
    /// Evaluate surrogate/oracle routing on the test set.
    Hybrid(RunArgs),
    /// Consolidate metrics into report/report.json.
    Report(RunArgs),
    /// Every stage in order.
    Run(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: {THREADS_ENV}: {e}");
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let (stages, args) = match cli.command {
        Command::Doe(a) => (vec![Stage::Doe], a),
        Command::Train(a) => (vec![Stage::Train], a),
        Command::Profile(a) => (vec![Stage::Profile], a),
        Command::Label(a) => (vec![Stage::Label], a),
        Command::Detector(a) => (vec![Stage::Detector], a),
        Command::Hybrid(a) => (vec![Stage::Hybrid], a),
        Command::Report(a) => (vec![Stage::Report], a),
        Command::Run(a) => (Stage::ALL.to_vec(), a),
    };
    let config = match PipelineConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error [config]: {}: {e}", args.config.display());
            return ExitCode::FAILURE;
        }
    };
    for stage in stages {
        match run_stage(&config, &args.out, stage) {
            Ok(rec) => eprintln!("[{stage}] done in {:.2}s, {} artifacts", rec.seconds, rec.artifacts.len()),
            Err(e) => {
                eprintln!("error [{stage}]: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    ExitCode::SUCCESS
}
