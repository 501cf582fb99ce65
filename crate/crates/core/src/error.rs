use thiserror::Error;

use crate::tomography::{Basis, TomographyResult};

pub type Result<T, E = RpdcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RpdcError {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("analytic propagation requires beta1 = beta2 and k12 = k21; use the numeric path")]
    AsymmetricCoupler,

    #[error("axis unobservable: retardance is a multiple of 2π")]
    AxisUnobservable,

    #[error("slow axis must couple more strongly (k_slow = {k_slow}, k_fast = {k_fast})")]
    CouplingOrder { k_slow: f64, k_fast: f64 },

    #[error("measurement set is missing the {0} basis")]
    MissingBasis(Basis),

    #[error("duplicate measurement for the {0} basis")]
    DuplicateBasis(Basis),

    #[error("maximum-likelihood fit did not converge after {restarts} restarts")]
    NotConverged {
        restarts: usize,
        best: Box<TomographyResult>,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RpdcError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
}
