//! `pedeval`: evaluate pedestrian detections against segmentation-enriched
//! ground truth.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pedeval_core::metrics::Subset;

use commands::{Metric, SynthArgs};
use error::CliError;

#[derive(Parser)]
#[command(name = "pedeval", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Categorize, match, sweep thresholds and write every report.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Print one scalar from the report to standard output.
        #[arg(long, value_enum)]
        metric: Option<Metric>,
        /// Category for --metric: F, B, E, C, A or reasonable.
        #[arg(long, default_value = "F", value_parser = parse_subset)]
        category: Subset,
    },
    /// Write gt_categories.json and print per-category cardinalities.
    Categorize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check inputs without evaluating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic fixture with a matching config.json.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 480)]
        width: u32,
        #[arg(long, default_value_t = 320)]
        height: u32,
        /// Write the hand-laid demo frames instead of random ones.
        #[arg(long)]
        demo: bool,
    },
}

fn parse_subset(s: &str) -> Result<Subset, String> {
    Subset::parse(s).ok_or_else(|| format!("unknown category `{s}`"))
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PEDEVAL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("PEDEVAL_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Evaluate { config, metric, category } => {
            commands::evaluate_cmd(&config, metric.map(|m| (m, category)))
        }
        Command::Categorize { config } => commands::categorize_cmd(&config),
        Command::Validate { config } => commands::validate_cmd(&config),
        Command::Synth {
            out,
            frames,
            seed,
            width,
            height,
            demo,
        } => commands::synth_cmd(&SynthArgs {
            out,
            frames,
            seed,
            width,
            height,
            demo,
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pedeval: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
