//! `irl` — train, evaluate and run incremental residual super-resolution
//! models from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Usage or configuration problem (exit 2).
    Config(String),
    /// Data or I/O problem (exit 3).
    Data(String),
    /// Numeric failure, e.g. non-finite loss (exit 4).
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<irl_core::training::TrainError> for CliError {
    fn from(e: irl_core::training::TrainError) -> Self {
        use irl_core::training::TrainError::*;
        match e {
            NonFiniteLoss(_) => CliError::Numeric(e.to_string()),
            MissingPrior(_) | StageMismatch(_) | Model(_) => CliError::Config(e.to_string()),
            CorruptMagic | VersionMismatch { .. } | TruncatedPayload { .. }
            | MalformedHeader(_) | Io(_) | Data(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<irl_core::data::DataError> for CliError {
    fn from(e: irl_core::data::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<irl_core::model::ModelError> for CliError {
    fn from(e: irl_core::model::ModelError) -> Self {
        CliError::from(irl_core::training::TrainError::Model(e))
    }
}

#[derive(Parser)]
#[command(name = "irl", version, about = "Incremental residual super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one stage: stage 0 is the master, stage N >= 1 adds residual
    /// branch N on top of the frozen stage N-1 checkpoint.
    Train {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Stage to train.
        #[arg(long)]
        stage: usize,
        /// Prior checkpoint; defaults to <output_dir>/stage_<N-1>.ckpt.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a dataset directory (Y-channel PSNR/SSIM).
    Eval {
        /// Checkpoint file.
        #[arg(long)]
        ckpt: PathBuf,
        /// Directory of HR PNGs.
        #[arg(long)]
        dataset: PathBuf,
        /// Expected model scale; rejected if the checkpoint disagrees.
        #[arg(long)]
        scale: Option<usize>,
        /// Write outputs per image and composition level, plus residual
        /// visualizations (residual value + 128, clamped), into this directory.
        #[arg(long)]
        save_images: Option<PathBuf>,
        /// Write the per-image metrics CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Super-resolve one PNG.
    Sr {
        /// Checkpoint file.
        #[arg(long)]
        ckpt: PathBuf,
        /// Input PNG.
        #[arg(long)]
        input: PathBuf,
        /// Output PNG.
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the first residual branch once per configuration along the
    /// requested axes and tabulate the results. Rows are ordered with the
    /// variant axis outermost (up, down), then loss (l1, l2).
    Ablate {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of {variant, loss}.
        #[arg(long)]
        axes: String,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("IRL_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("IRL_THREADS must be a number, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Train { config, stage, resume, seed } => {
            commands::train(&config, stage, resume.as_deref(), seed)
        }
        Command::Eval { ckpt, dataset, scale, save_images, csv } => {
            commands::eval(&ckpt, &dataset, scale, save_images.as_deref(), csv.as_deref())
        }
        Command::Sr { ckpt, input, output } => commands::sr(&ckpt, &input, &output),
        Command::Ablate { config, axes, seed } => commands::ablate(&config, &axes, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
