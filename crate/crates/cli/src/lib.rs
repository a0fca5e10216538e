//! The `aroi` command line.
//!
//! Exit status is 0 on full success, 2 when the input was rejected
//! (bad manifest, unknown run, invalid parameters) and 1 when something
//! failed at run time. Errors go to stderr as `error[CODE]: message`.

mod commands;
pub mod manifest;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

pub use commands::run;
pub use manifest::{LoadedManifest, RunManifest};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Parser)]
#[command(
    name = "aroi",
    version,
    about = "Training-fraction sweeps and ROI analysis for requirement-dependency classifiers"
)]
pub struct Cli {
    /// Store directory for datasets, runs and sessions.
    #[arg(long, global = true, env = "AROI_STORE", default_value = "aroi-store")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a CSV, store it and print its hash and summary.
    Ingest {
        csv: PathBuf,
        #[arg(long, default_value = "text_a")]
        text_a: String,
        #[arg(long, default_value = "text_b")]
        text_b: String,
        #[arg(long, default_value = "label")]
        label: String,
        #[arg(long)]
        id: Option<String>,
        /// Label value of the positive class.
        #[arg(long)]
        positive: Option<String>,
        /// Label value of the negative class.
        #[arg(long)]
        negative: Option<String>,
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a synthetic corpus as canonical CSV.
    GenSynth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        class_ratio: f64,
        #[arg(long, default_value_t = 0.9)]
        signal: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a training-fraction sweep described by a manifest.
    Sweep {
        manifest: PathBuf,
        /// Threads for this sweep; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Also copy the result CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the ROI grid of a finished run.
    Roi {
        run_id: String,
        /// Cost parameters (TOML, or JSON when the name ends in .json).
        /// Defaults to the run manifest's [costs] table.
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Vary one cost parameter for one cell of a finished run.
    Sensitivity {
        run_id: String,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Cell family; defaults to the best-F1 cell.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate an active-learning session and print its efficiency curve.
    AlSimulate {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// F1 and ROI side by side for every family and fraction of a run.
    Report {
        run_id: String,
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List stored runs, newest first.
    Runs {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// Runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, env = "AROI_TOKEN", hide_env_values = true)]
        token: Option<String>,
        #[arg(long, default_value_t = 32)]
        max_upload_mb: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub kind: ErrorKind,
}

impl CliError {
    pub fn validation(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            kind: ErrorKind::Validation,
        }
    }

    pub fn runtime(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            kind: ErrorKind::Runtime,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::runtime("IO_ERROR", message)
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Runtime => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl From<aroi_core::dataset::DatasetError> for CliError {
    fn from(e: aroi_core::dataset::DatasetError) -> Self {
        use aroi_core::dataset::DatasetError::Corrupt;
        match e {
            Corrupt(_) => CliError::runtime(e.code(), e.to_string()),
            _ => CliError::validation(e.code(), e.to_string()),
        }
    }
}

impl From<aroi_core::roi::RoiError> for CliError {
    fn from(e: aroi_core::roi::RoiError) -> Self {
        CliError::validation(e.code(), e.to_string())
    }
}

impl From<aroi_core::sweep::SweepError> for CliError {
    fn from(e: aroi_core::sweep::SweepError) -> Self {
        use aroi_core::sweep::SweepError;
        match e {
            SweepError::Dataset(d) => d.into(),
            SweepError::InvalidConfig(_) => CliError::validation(e.code(), e.to_string()),
            _ => CliError::runtime(e.code(), e.to_string()),
        }
    }
}

impl From<aroi_core::active::ActiveError> for CliError {
    fn from(e: aroi_core::active::ActiveError) -> Self {
        use aroi_core::active::ActiveError;
        match e {
            ActiveError::Dataset(d) => d.into(),
            ActiveError::InvalidConfig(_) | ActiveError::TooSmall(_) => CliError::validation(e.code(), e.to_string()),
            _ => CliError::runtime(e.code(), e.to_string()),
        }
    }
}

impl From<aroi_core::store::StoreError> for CliError {
    fn from(e: aroi_core::store::StoreError) -> Self {
        use aroi_core::store::StoreError;
        match e {
            StoreError::NotFound { .. } => CliError::validation(e.code(), e.to_string()),
            StoreError::Dataset(d) => d.into(),
            _ => CliError::runtime(e.code(), e.to_string()),
        }
    }
}
