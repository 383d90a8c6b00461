use std::path::PathBuf;

use exomega_core::Error;
use serde_json::json;

use crate::output::SCHEMA_VERSION;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Every point of a table was infeasible.
    #[error("{0}")]
    AllInfeasible(String),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2: bad input or dimensions, 3: infeasible or unreachable benchmark,
    /// 1: anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                Error::Infeasible(_) | Error::BenchmarkUnreachable { .. } => 3,
                Error::Solver(_) => 1,
                _ => 2,
            },
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::AllInfeasible(_) => 3,
            CliError::Failed(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::Io { .. } => "io",
                Error::Csv(_) | Error::Parse { .. } => "parse",
                Error::Validation(_) => "validation",
                Error::Dimension { .. } => "dimension",
                Error::Parameter { .. } => "parameter",
                Error::EmptyDistribution => "empty_distribution",
                Error::Infeasible(_) => "infeasible",
                Error::BenchmarkUnreachable { .. } => "benchmark_unreachable",
                Error::Solver(_) => "solver",
                Error::Mps { .. } => "mps",
                Error::Unsupported(_) => "unsupported",
            },
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::AllInfeasible(_) => "infeasible",
            CliError::Failed(_) => "failed",
        }
    }

    /// One-line JSON error record for standard error.
    pub fn to_json(&self) -> String {
        json!({
            "schema_version": SCHEMA_VERSION,
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}
