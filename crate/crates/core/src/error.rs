use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: I/O error: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at row {row}, column {column}: cannot read {value:?} as a number")]
    Parse { row: usize, column: usize, value: String },

    #[error("invalid scenario data: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter {name} = {value} outside {domain}")]
    Parameter {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no feasible portfolio has mean above the benchmark {benchmark} (best mean {best_mean})")]
    BenchmarkUnreachable { benchmark: f64, best_mean: f64 },

    #[error("LP solve failed: {0}")]
    Solver(String),

    #[error("malformed MPS input at line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Parameter { name, value, domain }
    }
}
