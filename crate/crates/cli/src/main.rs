//! Command-line front end: path comparison, training, estimation, and
//! schedule export, with seed-reproducible artifacts.

mod commands;
mod config;
mod manifest;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

/// Exit codes: 0 ok, 2 usage, 3 divergence, 4 output conflict, 5 artifact
/// mismatch, 1 anything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Divergence(String),
    OutputConflict(String),
    ArtifactMismatch(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::OutputConflict(_) => 4,
            CliError::ArtifactMismatch(_) => 5,
            CliError::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Divergence(m)
            | CliError::OutputConflict(m)
            | CliError::ArtifactMismatch(m)
            | CliError::Internal(m) => m,
        }
    }
}

impl From<mvp_core::Error> for CliError {
    fn from(e: mvp_core::Error) -> Self {
        match e {
            mvp_core::Error::Diverged { .. } => CliError::Divergence(e.to_string()),
            mvp_core::Error::Checkpoint(_) => CliError::ArtifactMismatch(e.to_string()),
            mvp_core::Error::Domain(_) | mvp_core::Error::Csv { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "mvp", version, about = "Density ratio estimation with a learned minimum-variance path")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the path variance of the five fixed schedules and the
    /// optimized learnable path on a task.
    ComparePaths {
        #[arg(long)]
        task: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Train a joint score model, optionally learning the path.
    Train {
        #[arg(long)]
        task: String,
        /// `fixed:<name>` or `mvp`
        #[arg(long, default_value = "mvp")]
        path_mode: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Estimate mutual information or negative log-likelihood from a
    /// trained checkpoint (or the analytic score, for Gaussian oracles).
    Estimate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        task: String,
        /// `mi` or `nll`
        #[arg(long)]
        metric: String,
        /// Use the exact Gaussian marginal time score instead of a model.
        #[arg(long)]
        analytic_score: bool,
        /// Learned-path JSON for the analytic score schedule (defaults to
        /// the config's `infer.analytic_schedule`).
        #[arg(long)]
        path_json: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Write a schedule curve (t, alpha, beta, dalpha, dbeta) to CSV.
    ExportSchedule {
        /// `fixed:<name>` or `kmm:<latent.json>`
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value = "affine")]
        constraint: String,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write task samples to CSV with a descriptive header line.
    ExportSamples {
        #[arg(long)]
        task: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, CliError> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::defaults()),
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::ComparePaths { task, config, out, force } => {
            let cfg = load_config(&config)?;
            commands::compare::run(&task, &cfg, &out, force)
        }
        Command::Train { task, path_mode, config, out, force } => {
            let cfg = load_config(&config)?;
            commands::train_cmd::run(&task, &path_mode, &cfg, &out, force)
        }
        Command::Estimate {
            checkpoint,
            task,
            metric,
            analytic_score,
            path_json,
            config,
            out,
            force,
        } => {
            let cfg = load_config(&config)?;
            commands::estimate::run(commands::estimate::Args {
                checkpoint,
                task_name: &task,
                metric: &metric,
                analytic_score,
                path_json,
                cfg: &cfg,
                out: &out,
                force,
            })
        }
        Command::ExportSchedule { schedule, constraint, grid, out } => {
            commands::export_schedule::run(&schedule, &constraint, grid, &out)
        }
        Command::ExportSamples { task, config, n, out } => {
            let cfg = load_config(&config)?;
            commands::export_samples::run(&task, &cfg, n, &out)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
