//! Rating scale model analysis of ordinal questionnaire responses.

pub mod fit;
pub mod jmle;
pub mod matrix;
pub mod report;
pub mod rsm;
pub mod targeting;

use thiserror::Error;

pub use fit::{fit_statistics, reliability, FitReport, ItemFit, ReliabilityReport};
pub use jmle::{fit_jmle, JmleOptions, MeasureStatus, RaschEstimate};
pub use matrix::{simulate_responses, ResponseMatrix};
pub use report::{analyze, Analysis, AnalysisOptions};
pub use rsm::rsm_category_prob;
pub use targeting::{category_curves, wright_map, CategoryCurves, WrightMap};

#[derive(Debug, Error)]
pub enum RaschError {
    #[error("invalid response matrix: {0}")]
    InvalidMatrix(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("estimation did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
