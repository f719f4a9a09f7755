use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod manifest;
mod table;

use config::ConfigError;
use table::Format;

/// Efficiency analysis with CRS DEA, multi-activity DEA and sequential exclusion.
#[derive(Debug, Parser)]
#[command(name = "dea", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Lower bound on every (column-normalized) weight.
    #[arg(long, global = true, default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Seed for the multi-activity search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Two decimals, efficient units marked with `*`.
    #[arg(long, global = true)]
    pub paper_style: bool,
    /// Divide each variable by its column maximum before solving.
    #[arg(long, global = true, value_enum, default_value_t = Scaling::ColumnMax)]
    pub scaling: Scaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scaling {
    ColumnMax,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset CSV (`id` column first).
    #[arg(long)]
    pub data: PathBuf,
    /// JSON file assigning input/output roles.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Fixed priorities, shares in [0.01, 0.99].
    S1,
    /// Model-chosen priorities, shares in [0.30, 0.90].
    S2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Standard CRS DEA scores and weights.
    Ccr(DataArgs),
    /// Multi-activity DEA.
    Madea {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// Teaching priority for s1.
        #[arg(long)]
        alpha: Option<f64>,
        /// Scan points for the teaching input share.
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
    /// DEA by sequential exclusion.
    Seqex {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated μ values, or `computed`.
        #[arg(long, default_value = "computed")]
        mu: String,
        /// Use raw coordinates when computing μ.
        #[arg(long)]
        no_scale: bool,
    },
    /// Kendall distances between score tables.
    Compare {
        /// Tables to compare against (columns of the output).
        #[arg(long)]
        baseline: Vec<PathBuf>,
        /// Score tables (`id` plus `score` or `total`).
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Descriptive statistics and correlations of the dataset.
    Report(DataArgs),
    /// Mean / std dev / efficient counts of an existing multi-activity table.
    Summarize {
        #[arg(long)]
        scores: PathBuf,
        /// Column prefix, e.g. `s1_` for `s1_total`.
        #[arg(long, default_value = "")]
        prefix: String,
    },
    /// Re-run a manifest and verify its outputs are byte-identical.
    Replay { manifest: PathBuf },
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match commands::run(&cli, &args[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
