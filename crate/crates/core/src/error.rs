use thiserror::Error;

use crate::scenario::Violation;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Csv(String, String),
    #[error("price pattern has {price} values but load pattern has {load}")]
    PatternLength { price: usize, load: usize },
    #[error("{file}: value {value} at interval {interval} is outside [0, 1]")]
    PatternValue { file: String, interval: usize, value: f64 },
    #[error("load pattern peak is {0}, expected 1")]
    LoadPeak(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("scenario document: {0}")]
    Parse(String),
    #[error("unsupported scenario schema '{0}'")]
    Schema(String),
    #[error("invalid scenario: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Error)]
pub enum ClearingError {
    #[error("interval {}: market clearing is infeasible", interval + 1)]
    Infeasible { interval: usize },
    #[error("interval {}: market clearing is unbounded", interval + 1)]
    Unbounded { interval: usize },
    #[error("interval {}: {source}", interval + 1)]
    Solver { interval: usize, source: bessbid_solver::SolverError },
    #[error("expected {expected} bid sets, got {got}")]
    BidCount { expected: usize, got: usize },
}

impl ClearingError {
    pub fn interval(&self) -> Option<usize> {
        match *self {
            ClearingError::Infeasible { interval }
            | ClearingError::Unbounded { interval }
            | ClearingError::Solver { interval, .. } => Some(interval),
            ClearingError::BidCount { .. } => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BilevelError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error(transparent)]
    Solver(#[from] bessbid_solver::SolverError),
    #[error("solution vector has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum AgcError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("{0}: {1}")]
    Csv(String, String),
    #[error("sample {index} is {value}, outside [-1, 1]")]
    Sample { index: usize, value: f64 },
    #[error("{got} samples do not fill whole intervals of {per_interval}")]
    Length { got: usize, per_interval: usize },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Bilevel(#[from] BilevelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error(transparent)]
    Agc(#[from] AgcError),
    #[error("bilevel problem is infeasible")]
    Infeasible,
    #[error("no feasible solution found before the limit ({0})")]
    NoSolution(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("oracle instance too large: {0}")]
    TooLarge(String),
    #[error("cannot compare cases: {0}")]
    Mismatch(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
