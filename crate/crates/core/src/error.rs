use thiserror::Error;

use crate::gaussmath::KernelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sigma = {sigma} is outside the strategy domain [{lo}, {hi}]")]
    OutOfDomain { sigma: f64, lo: f64, hi: f64 },
    #[error("operation requires the {expected} fee scheme, got {got}")]
    WrongScheme { expected: &'static str, got: String },
    #[error("no sign change of the payoff derivative within {doublings} doublings from x = {seed}")]
    BracketFailure { seed: f64, doublings: usize },
    #[error("bound is only defined for a non-degenerate market (sigma_minus < sigma_plus)")]
    DegenerateCase,
    #[error("equilibrium assumption violated: rho = {rho} exceeds sigma_minus/sigma_plus = {limit}")]
    AssumptionViolated { rho: f64, limit: f64 },
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
