//! Scalar numerical kernel: standard-normal functions, bracketed root finding,
//! one-dimensional concave maximization and fixed-node Gauss-Legendre quadrature.
//!
//! Everything here is a pure function of its arguments.

mod normal;
mod optimize;
mod quadrature;
mod roots;

pub use normal::{norm_cdf, norm_pdf, norm_sf};
pub use optimize::{first_descent_root, maximize_concave, DIAGNOSTIC_POINTS};
pub use quadrature::{integrate, QuadratureRule, DEFAULT_NODES};
pub use roots::{find_root, Bracket, MAX_ROOT_ITERATIONS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root finder hit the iteration cap ({iterations}) with bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },
    #[error("derivative changes sign {sign_changes} times on [{lo}, {hi}]; objective is not concave")]
    NonConcave { sign_changes: usize, lo: f64, hi: f64 },
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
}
