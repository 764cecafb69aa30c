//! Example corpus, table-cell expectations and the verification driver.

mod cases;
mod probes;
mod tables;
mod verify;

pub use cases::{load_case, load_corpus, parse_case, uniform_symbol, CellRef, ExampleCase, Expectation, NormClass, SymbolColumn, Subclaim};
pub use probes::{random_probe, Probe, ProbeGenerator};
pub use tables::{load_tables, parse_tables, table_kinds, CellSpec, Citation, Claim, TableRow};
pub use verify::{
    completeness, negative_controls, verify_case, verify_corpus, verify_tables, CaseReport, CellReport, CellStatus,
    Check, TableSummary, VerifyOptions,
};

use crate::analyzer::AnalyzerError;
use crate::sequence::SpecError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{path}: sequence `{which}`: {source}")]
    Spec { path: PathBuf, which: String, source: SpecError },
    #[error("{id}: declared {what} `{declared}` but classification gives `{found}`")]
    SelfConsistency { id: String, what: String, declared: String, found: String },
    #[error("{id}: {source}")]
    Analyzer { id: String, source: AnalyzerError },
    #[error("duplicate case id `{0}`")]
    Duplicate(String),
}
