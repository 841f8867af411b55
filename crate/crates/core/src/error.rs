use thiserror::Error;

/// Errors raised by chain construction, exact analysis and experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("row {row} sums to {sum} (expected 1 within {tol:e})")]
    RowNotStochastic { row: usize, sum: f64, tol: f64 },

    #[error("state {0} has a loop p(x,x) = {1}; kernel must have a zero diagonal")]
    Loop(usize, f64),

    #[error("chain is periodic with period {0}")]
    Periodic(usize),

    #[error("chain is reducible; states not communicating with state 0: {0:?}")]
    Reducible(Vec<usize>),

    #[error("linear solve is ill-conditioned ({context}); condition estimate {condition:e}")]
    IllConditioned { context: String, condition: f64 },

    #[error("measure has zero mass at state {0}")]
    ZeroMass(usize),

    #[error("product space of {states} states exceeds the cap of {cap} base states; use the Monte Carlo path instead")]
    ProductCap { states: usize, cap: usize },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("expected work of {expected:e} steps exceeds the budget of {budget:e}")]
    Budget { expected: f64, budget: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("iteration did not converge after {iterations} sweeps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid setting: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Process exit code: 3 for budget refusals, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
