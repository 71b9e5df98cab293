//! Command-line harness for the `weakprox` library: experiment configuration,
//! CSV/JSON output, ε-sweeps against a subgradient baseline, and the
//! acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

pub mod acceptance;
pub mod bench;
pub mod config;
pub mod output;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WEAKPROX_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] weakprox::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
