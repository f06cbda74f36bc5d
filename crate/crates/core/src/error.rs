use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integration did not converge: step-halving change {change:e} exceeds {tol:e}")]
    Integration { change: f64, tol: f64 },
    #[error("density matrix invalid at t={time}: {reason}")]
    StateValidity { time: f64, reason: String },
    #[error("initial state {index}: {source}")]
    PerState {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("exponential fit failed: {0}")]
    Fit(String),
    #[error("unknown gate name `{0}`")]
    UnknownGate(String),
    #[error("infeasible search: {0}")]
    Infeasible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
