//! drcwatch: watchlist risk analytics over biometric match scores.
//!
//! Subcommands cover the whole pipeline: ingest scores and build the risk
//! landscape, assess a traveler, evaluate classifiers by leave-one-out cross
//! validation, generate planted synthetic data, monitor watchlist mutations,
//! and export plot-ready distribution data.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::SynthArgs;
use crate::config::CommonArgs;

#[derive(Parser)]
#[command(name = "drcwatch", version, about = "Watchlist risk analytics over biometric match scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank subjects into risk categories and build the landscape
    Landscape {
        /// Score CSV (subject_a,subject_b,tier_a,tier_b,score[,sample_a,sample_b])
        #[arg(long)]
        scores: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Assess one traveler against the landscape built without them
    Assess {
        #[arg(long)]
        scores: PathBuf,
        /// Subject id to assess
        #[arg(long)]
        subject: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Leave-one-out sensitivity grid over metrics and classifiers
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic score set with planted categories
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Apply watchlist mutations and report the landscape drift
    Monitor {
        #[arg(long)]
        scores: PathBuf,
        /// Mutation spec JSON: {"ops": [{"op": "remove", "subject": ...}, ...]}
        #[arg(long)]
        mutation: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Flatten a landscape JSON into plot-ready CSV rows
    Plotdata {
        /// Landscape JSON produced by the landscape subcommand
        #[arg(long)]
        landscape: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Landscape { scores, common } => {
            commands::cmd_landscape(&scores, &common.resolve()?)
        }
        Command::Assess {
            scores,
            subject,
            common,
        } => commands::cmd_assess(&scores, &subject, &common.resolve()?),
        Command::Evaluate { scores, common } => commands::cmd_evaluate(&scores, &common.resolve()?),
        Command::Synth { synth, common } => commands::cmd_synth(&synth, &common.resolve()?),
        Command::Monitor {
            scores,
            mutation,
            common,
        } => commands::cmd_monitor(&scores, &mutation, &common.resolve()?),
        Command::Plotdata { landscape, common } => {
            commands::cmd_plotdata(&landscape, &common.resolve()?)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
