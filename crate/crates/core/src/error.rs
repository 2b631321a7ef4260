use thiserror::Error;

use crate::quadratic::ProbabilityEstimate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("channel Gram matrix is numerically singular (condition estimate {condition:.3e})")]
    SingularChannel { condition: f64 },

    #[error("power initialisation system is numerically singular")]
    SingularSystem,

    #[error("fixed-point iteration did not converge within {sweeps} sweeps")]
    Diverged { sweeps: usize },

    #[error(
        "quadrature could not certify tolerance {tol:.1e} (value {:.12}, bound {:.3e})",
        estimate.value,
        estimate.abs_error_bound
    )]
    ToleranceNotMet { tol: f64, estimate: ProbabilityEstimate },

    #[error("no feasible starting allocation after {doublings} doublings")]
    InfeasibleStart { doublings: usize },

    #[error("linear-term approximation inapplicable for user {user}: 1 + eta = {one_plus_eta:.6}")]
    ApproximationInapplicable { user: usize, one_plus_eta: f64 },

    #[error("nonzero eigenvalues coincide within the residue gap threshold")]
    DegenerateSpectrum,

    #[error("initial power denominator is nonpositive for user {user}")]
    NonpositiveDenominator { user: usize },
}

impl Error {
    /// Best-effort probability carried by a quadrature failure.
    pub fn into_estimate(self) -> Result<ProbabilityEstimate> {
        match self {
            Error::ToleranceNotMet { estimate, .. } => Ok(estimate),
            other => Err(other),
        }
    }
}
