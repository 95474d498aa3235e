//! Command-line front end. Each subcommand is a thin wrapper over the
//! library; see `csgo-wpa <command> --help`.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::FileConfig;

use crate::features::FeatureError;
use crate::ingest::{ParseError, StateFileError};
use crate::navmesh::NavError;
use crate::valuation::{FilterParseError, ValuationError};
use crate::winprob::WinProbError;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20190601;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FilterParseError> for CliError {
    fn from(e: FilterParseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::SchemaMismatch(_) => CliError::Schema(e.to_string()),
            FeatureError::EmptyInput => CliError::Validation(e.to_string()),
        }
    }
}

impl From<WinProbError> for CliError {
    fn from(e: WinProbError) -> Self {
        match e {
            WinProbError::Io(io) => CliError::Io(io.to_string()),
            WinProbError::Feature(f) => f.into(),
            WinProbError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            WinProbError::EmptyInput | WinProbError::MissingLabels | WinProbError::DegenerateLabels => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<StateFileError> for CliError {
    fn from(e: StateFileError) -> Self {
        match e {
            StateFileError::Io(io) => CliError::Io(io.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<NavError> for CliError {
    fn from(e: NavError) -> Self {
        match e {
            NavError::Io(io) => CliError::Io(io.to_string()),
            NavError::UnknownArea(_) | NavError::UnknownAreaName(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ValuationError> for CliError {
    fn from(e: ValuationError) -> Self {
        match e {
            ValuationError::Model(m) => m.into(),
            ValuationError::Feature(f) => f.into(),
            ValuationError::TooFewResamples(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub(crate) fn parse_error(path: &std::path::Path, e: ParseError) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "csgo-wpa", version, about = "Win probability models and win-probability-added ratings for CSGO-style matches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Random seed (simulation, model training, bootstrap).
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file or directory (see the subcommand's help); stdout when omitted where allowed.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file overriding trade window, rating constants and model hyperparameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    /// Per-map average win rate.
    #[value(alias = "map-average", alias = "baseline")]
    MapAverage,
    #[value(alias = "logistic")]
    Logreg,
    #[value(alias = "xgboost")]
    Gbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Unit,
    Euclidean,
}

impl From<WeightingArg> for crate::navmesh::Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Unit => crate::navmesh::Weighting::Unit,
            WeightingArg::Euclidean => crate::navmesh::Weighting::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Navigation mesh JSON; enables bombsite distance features.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = WeightingArg::Unit)]
    pub weighting: WeightingArg,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Fraction of matches, latest by (date, match id), held out for evaluation.
    #[arg(long, default_value_t = 0.25)]
    pub holdout_frac: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, validate and replay match JSON into a state table (--out, default states.wpas).
    Ingest {
        /// Match JSON files or directories (searched recursively for *.json).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Train a win-probability model on the training split of a state table (--out, default model.wpm).
    Train {
        #[arg(long)]
        states: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelChoice::Gbt)]
        model: ModelChoice,
        #[command(flatten)]
        split: SplitArgs,
        /// Ignore bombsite distance features even when the states carry them.
        #[arg(long)]
        drop_distances: bool,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_child_weight: Option<f64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Log loss, Brier score, AUC, accuracy and calibration on the held-out split (--out directory).
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        states: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Evaluate on every row instead of the held-out split.
        #[arg(long, conflicts_with = "holdout_frac")]
        all: bool,
        /// Also report metrics per elapsed-time bin.
        #[arg(long)]
        by_time: bool,
        /// Width of the elapsed-time bins in seconds.
        #[arg(long, default_value_t = 10.0, requires = "by_time")]
        bin_seconds: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Reliability table (equal-width bins) on the held-out split as CSV (--out file).
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        states: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, conflicts_with = "holdout_frac")]
        all: bool,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Rate players by WPA per round next to KDR, ADR, KAST% and Rating 1.0 (--out directory).
    Rate {
        #[arg(long)]
        model: PathBuf,
        /// Match JSON files or directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Only rounds 1 and 16.
        #[arg(long)]
        pistol_only: bool,
        /// Scenario filter, e.g. "map=de_dust2|de_nuke,alive=1v2,wp=0..0.05".
        #[arg(long)]
        filter: Option<String>,
        /// Bootstrap resamples of each player's rounds.
        #[arg(long, value_name = "B")]
        bootstrap: Option<usize>,
        /// Leave credits for damage received out of WPA.
        #[arg(long)]
        exclude_received: bool,
        /// Month-to-month stability and KDR-independence report (stability.json).
        #[arg(long)]
        stability: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// List the highest-impact damage events (--out file).
    Impact {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        top_k: Option<usize>,
        /// Minimum |credit| of a listed action.
        #[arg(long)]
        threshold: Option<f64>,
        /// Actor-side win probability range before the action, e.g. 0..0.05.
        #[arg(long)]
        win_prob: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Graph distance between two navmesh areas, in both directions.
    Dist {
        #[arg(long)]
        mesh: PathBuf,
        /// Area id or name.
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value_t = WeightingArg::Unit)]
        weighting: WeightingArg,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic matches from a known ground-truth model (--out directory, default synthetic).
    Simulate {
        #[arg(long, default_value_t = 10)]
        matches: usize,
        /// Strength of the planted-by-alive-difference interaction in the ground truth.
        #[arg(long)]
        interaction: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match commands::run(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub use commands::run;
