//! Front end for `peqlib`: fixture validation, construction pipelines,
//! built-in examples and invariant reports.
//!
//! Exit codes: 0 success, 1 failed invariant or verification, 2 usage or
//! parse error.

pub mod commands;
pub mod fixture;
pub mod suites;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failed: {0}")]
    Failed(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// A command's report: human text, a JSON value, and the exit code.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub ok: bool,
    #[serde(skip)]
    pub text: String,
    pub report: serde_json::Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Json => serde_json::to_string_pretty(&self.report).expect("reports serialize") + "\n",
        }
    }
}
