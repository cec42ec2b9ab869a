//! Case ingestion (MATPOWER subset, native JSON) and result writers.

mod json;
mod matpower;
mod trace;

use std::path::Path;

use thiserror::Error;

use crate::netmodel::Network;

pub use json::{parse_json_case, write_json_case};
pub use matpower::{parse_matpower_case, parse_matpower_case_detailed};
pub use trace::{trace_rows, write_sensitivity_csv, write_trace_csv, TraceRole, TraceRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("empty case text")]
    EmptyInput,
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("missing required table `{0}`")]
    MissingTable(String),
    #[error("non-numeric cell {found} in `{table}` at line {line}, column {col}")]
    NonNumeric {
        table: String,
        line: usize,
        col: usize,
        found: String,
    },
    #[error("row of `{table}` at line {line} has {found} columns, expected {expected}")]
    RowArity {
        table: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("`{table}` needs at least {expected} columns, found {found}")]
    TooFewColumns {
        table: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid value in `{table}` at line {line}: {message}")]
    InvalidValue {
        table: String,
        line: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

/// A parsed network plus any non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCase {
    pub network: Network,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    MatpowerM,
    NativeJson,
}

#[derive(Debug, Clone)]
pub struct CaseSource {
    pub format: CaseFormat,
    pub raw_text: String,
}

impl CaseSource {
    /// Picks the format from the file extension, falling back to sniffing
    /// the first non-blank character.
    pub fn detect(path: Option<&Path>, raw_text: String) -> Self {
        let by_ext = path
            .and_then(|p| p.extension())
            .and_then(|e| e.to_str())
            .and_then(|e| match e.to_ascii_lowercase().as_str() {
                "json" => Some(CaseFormat::NativeJson),
                "m" => Some(CaseFormat::MatpowerM),
                _ => None,
            });
        let format = by_ext.unwrap_or_else(|| {
            if raw_text.trim_start().starts_with('{') {
                CaseFormat::NativeJson
            } else {
                CaseFormat::MatpowerM
            }
        });
        Self { format, raw_text }
    }

    pub fn parse(&self) -> Result<ParsedCase, CaseError> {
        match self.format {
            CaseFormat::MatpowerM => parse_matpower_case_detailed(&self.raw_text),
            CaseFormat::NativeJson => parse_json_case(&self.raw_text).map(|network| ParsedCase {
                network,
                warnings: Vec::new(),
            }),
        }
    }
}
