//! Command-line front end: single-pair scoring, batch dataset evaluation,
//! parameter training, distortion generation, and relative timing.
//!
//! Exit codes: 0 success, 1 success with degenerate frames flagged
//! (flat depth or floored cyclopean score), 2 input or usage error.

mod baselines;
mod batch;
mod config;
mod distort_cmd;
mod out;
mod score;
mod timing;
mod train_cmd;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "hv3d",
    version,
    about = "Stereoscopic video quality toolkit: cyclopean-fusion metric, evaluation harness, distortion generator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score one distorted stereo clip against its reference.
    Score(score::ScoreArgs),
    /// Score every manifest entry and evaluate agreement with ratings.
    Batch(batch::BatchArgs),
    /// Grid-search combination exponents and pooling parameters on a rated
    /// manifest, caching per-frame components between runs.
    Train(train_cmd::TrainArgs),
    /// Write seeded distorted copies of a stereo clip at several severities.
    Distort(distort_cmd::DistortArgs),
    /// Measure per-frame runtime of each metric and its ratio to PSNR.
    Timing(timing::TimingArgs),
}

/// What a successfully finished command reports back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Outputs were written, but some frames carried degenerate-input flags.
    Degenerate,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Score(args) => score::run(&args),
        Command::Batch(args) => batch::run(&args),
        Command::Train(args) => train_cmd::run(&args),
        Command::Distort(args) => distort_cmd::run(&args),
        Command::Timing(args) => timing::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => {
            eprintln!("warning: degenerate frames were flagged; see the summary output");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            eprintln!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            ExitCode::from(2)
        }
    }
}
