use thiserror::Error;

use sybil_atsc_core::experiment::ExperimentError;
use sybil_atsc_core::game::GameError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: invalid scenario: {}", violations.join("; "))]
    Invalid { origin: String, violations: Vec<String> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("game: {0}")]
    Game(GameError),
    #[error("scenario {label}, seed {seed}: {source}")]
    Run {
        label: String,
        seed: u64,
        #[source]
        source: ExperimentError,
    },
    #[error("{} of {total} runs failed: {}", failed.len(), failed.join("; "))]
    ArmFailures { total: usize, failed: Vec<String> },
}

impl CliError {
    /// 1 for failed runs, 2 for usage and configuration problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Run { .. } | CliError::ArmFailures { .. } => 1,
            _ => 2,
        }
    }
}
