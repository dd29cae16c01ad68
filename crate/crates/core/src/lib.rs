//! Equilibrium quoting in a two-player periodic double auction with private,
//! noisy estimates of the efficient price.
//!
//! The crate is organized bottom-up:
//!
//! * [`gaussmath`]: normal CDF/PDF, bracketed roots, concave maximization, Gauss-Legendre rules.
//! * [`model`]: market parameters, strategies, fee schemes and closed-form market statistics.
//! * [`payoff`]: limit (infinitely illiquid) payoffs for every fee scheme with analytic derivatives.
//! * [`equilibrium`]: best responses, damped fixed-point solver, degenerate roots and existence bounds.
//! * [`exchange`]: fee design, closed-form optimal fee and revenue curves.
//! * [`simulator`]: counter-based Monte Carlo of the auction at finite and infinite prior scale.

pub mod equilibrium;
pub mod error;
pub mod exchange;
pub mod gaussmath;
pub mod model;
pub mod payoff;
pub mod simulator;

pub use error::{Error, Result};
