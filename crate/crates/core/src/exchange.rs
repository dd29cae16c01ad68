//! The exchange's choice of penalty level.
//!
//! Revenue is the penalty collected from one player, `γ E[δ(σ)²]`, at the equilibrium
//! induced by `γ`. Degenerate markets have a closed-form optimum; general markets are
//! swept numerically.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;

use crate::equilibrium::{solve_degenerate, solve_fixed_point, SolverConfig};
use crate::error::{Error, Result};
use crate::gaussmath::{find_root, norm_pdf, norm_sf, Bracket};
use crate::model::{FeeScheme, MarketParams, Strategy};

/// Closed-form optimum of a degenerate market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeDesignResult {
    pub gamma_star: f64,
    pub y_star: f64,
    pub delta_star: f64,
    /// Total penalty from both players, `2γ*δ*²`.
    pub revenue: f64,
}

/// Unique root of `1 − Φ(y) − yΦ'(y)` on `[0.1, 3]`.
pub fn y_star() -> f64 {
    let f = |y: f64| norm_sf(y) - y * norm_pdf(y);
    let bracket = Bracket::new(f, 0.1, 3.0).expect("1 − Φ(y) − yΦ'(y) changes sign on [0.1, 3]");
    find_root(f, &bracket, f64::MIN_POSITIVE).expect("bracketed root converges")
}

/// Revenue-maximizing penalty for a market with `σ− = σ+ = sigma`.
///
/// Correlation enters through the effective noise `σ√(1 − ρ)`.
pub fn optimal_gamma_degenerate(sigma: f64, rho: f64) -> Result<FeeDesignResult> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::InvalidParams(format!("rho must lie in (-1, 1), got {rho}")));
    }
    let y = y_star();
    let s_eff = sigma * (1.0 - rho).sqrt();
    let gamma_star = norm_pdf(y) / (2.0 * SQRT_2 * s_eff);
    let delta_star = s_eff * y / SQRT_2;
    Ok(FeeDesignResult { gamma_star, y_star: y, delta_star, revenue: 2.0 * gamma_star * delta_star * delta_star })
}

/// `E[δ(σ)²]` over `σ ~ U[σ−, σ+]` by quadrature.
pub fn mean_sq_delta(delta: &Strategy, params: &MarketParams, cfg: &SolverConfig) -> Result<f64> {
    let rule = cfg.rule()?;
    let mut total = 0.0;
    for (s, w) in params.sigma_nodes(&rule) {
        let d = delta.eval(s)?;
        total += w * d * d;
    }
    Ok(total)
}

/// Per-player revenue `γ E[δ²]` of a half-spread penalty, at the equilibrium it induces.
pub fn revenue(gamma: f64, params: &MarketParams, cfg: &SolverConfig) -> Result<f64> {
    scheme_revenue(FeeScheme::SpreadQuad { gamma }, params, cfg)
}

/// [`revenue`] for any scheme with an equilibrium (the penalty term is `γx²` in both).
pub fn scheme_revenue(fees: FeeScheme, params: &MarketParams, cfg: &SolverConfig) -> Result<f64> {
    let p = evaluate(fees, params, cfg)?;
    if !p.converged {
        return Err(Error::NoEquilibrium(format!(
            "fixed-point iteration at gamma={} stopped after {} iterations with residual {:e}",
            p.gamma, p.iterations, p.residual
        )));
    }
    Ok(p.revenue)
}

/// One point of a revenue sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenuePoint {
    pub gamma: f64,
    /// NaN when the solve failed.
    pub revenue: f64,
    pub converged: bool,
    pub concavity_ok: bool,
    pub residual: f64,
    pub iterations: usize,
}

impl RevenuePoint {
    /// Converged with a concave payoff, so the revenue belongs to a certified equilibrium.
    pub fn valid(&self) -> bool {
        self.converged && self.concavity_ok
    }

    fn failed(gamma: f64) -> Self {
        Self { gamma, revenue: f64::NAN, converged: false, concavity_ok: false, residual: f64::NAN, iterations: 0 }
    }
}

fn evaluate(fees: FeeScheme, params: &MarketParams, cfg: &SolverConfig) -> Result<RevenuePoint> {
    let gamma = fees.gamma();
    if params.is_degenerate() {
        let d = solve_degenerate(params, fees)?;
        return Ok(RevenuePoint {
            gamma,
            revenue: gamma * d * d,
            converged: true,
            concavity_ok: true,
            residual: 0.0,
            iterations: 0,
        });
    }
    let report = solve_fixed_point(params, fees, cfg)?;
    let revenue = if report.converged { gamma * mean_sq_delta(&report.strategy, params, cfg)? } else { f64::NAN };
    Ok(RevenuePoint {
        gamma,
        revenue,
        converged: report.converged,
        concavity_ok: report.concavity_ok,
        residual: report.residual,
        iterations: report.iterations,
    })
}

fn check_grid(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::InvalidParams("gamma grid is empty".into()));
    }
    if gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) || gammas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("gamma grid must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Revenue at every γ of the grid, using `fees` as the scheme template. Points whose solve
/// fails are flagged instead of aborting the sweep.
pub fn revenue_curve(gammas: &[f64], params: &MarketParams, fees: FeeScheme, cfg: &SolverConfig) -> Result<Vec<RevenuePoint>> {
    check_grid(gammas)?;
    fees.with_gamma(gammas[0]).validate()?;
    params.check_equilibrium_assumption()?;
    cfg.validate()?;
    Ok(gammas
        .par_iter()
        .map(|&g| evaluate(fees.with_gamma(g), params, cfg).unwrap_or_else(|_| RevenuePoint::failed(g)))
        .collect())
}

/// Golden-section maximization of revenue on `[lo, hi]`; failed solves count as `−∞`.
pub fn optimal_gamma_general(
    lo: f64,
    hi: f64,
    params: &MarketParams,
    fees: FeeScheme,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidParams(format!("search interval [{lo}, {hi}] is invalid")));
    }
    let value = |g: f64| match evaluate(fees.with_gamma(g), params, cfg) {
        Ok(p) if p.valid() => p.revenue,
        _ => f64::NEG_INFINITY,
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (value(c), value(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = value(d);
        }
    }
    let candidates = [(lo, value(lo)), (0.5 * (a + b), value(0.5 * (a + b))), (hi, value(hi))];
    let best = candidates.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::NoEquilibrium(format!("no valid equilibrium on [{lo}, {hi}]")));
    }
    Ok(best)
}

/// Optimum over the valid region of a sweep: the best grid point, refined by golden
/// section between its neighbours.
pub fn optimal_gamma_from_curve(
    curve: &[RevenuePoint],
    params: &MarketParams,
    fees: FeeScheme,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<(f64, f64)> {
    let (i, _) = curve
        .iter()
        .enumerate()
        .filter(|(_, p)| p.valid())
        .max_by(|a, b| a.1.revenue.total_cmp(&b.1.revenue))
        .ok_or_else(|| Error::NoEquilibrium("no valid point on the revenue curve".into()))?;
    let lo = curve[i.saturating_sub(1)].gamma;
    let hi = curve[(i + 1).min(curve.len() - 1)].gamma;
    if lo == hi {
        return Ok((curve[i].gamma, curve[i].revenue));
    }
    optimal_gamma_general(lo, hi, params, fees, cfg, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_star_solves_its_equation() {
        let y = y_star();
        assert!((norm_sf(y) - y * norm_pdf(y)).abs() <= 1e-12);
        assert!((y - 0.751_791_524_693_564_4).abs() < 1e-13);
    }

    #[test]
    fn closed_form_optimum() {
        let r = optimal_gamma_degenerate(1.1, 0.0).unwrap();
        assert!((r.gamma_star - 0.096_659_118_505_005_48).abs() < 1e-14);
        assert!((r.delta_star - 0.584_756_573_664_332_5).abs() < 1e-14);
        assert!((r.revenue - 0.066_103_286_378_528_03).abs() < 1e-14);
        // substituting the first-order condition
        assert!((r.revenue - 0.5 * norm_sf(r.y_star) * r.delta_star).abs() < 1e-10);
    }

    #[test]
    fn homogeneity_in_sigma() {
        let a = optimal_gamma_degenerate(1.1, 0.3).unwrap();
        let b = optimal_gamma_degenerate(2.2, 0.3).unwrap();
        assert!((b.gamma_star - a.gamma_star / 2.0).abs() < 1e-15);
        assert!((b.delta_star - 2.0 * a.delta_star).abs() < 1e-14);
    }

    #[test]
    fn mapped_objective_is_stationary_at_the_optimum() {
        let r = optimal_gamma_degenerate(1.1, 0.0).unwrap();
        let g = |d: f64| 0.25 * norm_sf(SQRT_2 * d / 1.1) * d;
        let h = 1e-5;
        let slope = (g(r.delta_star + h) - g(r.delta_star - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-8);
    }

    #[test]
    fn degenerate_revenue_peaks_at_gamma_star() {
        let p = MarketParams::limit(1.1, 1.1, 0.0).unwrap();
        let cfg = SolverConfig::default();
        let best = optimal_gamma_degenerate(1.1, 0.0).unwrap();
        let top = revenue(best.gamma_star, &p, &cfg).unwrap();
        assert!((2.0 * top - best.revenue).abs() < 1e-12);
        for g in [0.05, 0.08, 0.12, 0.2] {
            assert!(revenue(g, &p, &cfg).unwrap() <= top);
        }
    }

    #[test]
    fn degenerate_curve_brackets_gamma_star() {
        let p = MarketParams::limit(1.1, 1.1, 0.0).unwrap();
        let grid: Vec<f64> = (0..200).map(|i| 0.01 + 0.3 * i as f64 / 199.0).collect();
        let curve = revenue_curve(&grid, &p, FeeScheme::SpreadQuad { gamma: 1.0 }, &SolverConfig::default()).unwrap();
        let (i, _) = curve.iter().enumerate().max_by(|a, b| a.1.revenue.total_cmp(&b.1.revenue)).unwrap();
        let gs = optimal_gamma_degenerate(1.1, 0.0).unwrap().gamma_star;
        assert!((curve[i].gamma - gs).abs() <= grid[1] - grid[0]);
        let (g, _) = optimal_gamma_from_curve(&curve, &p, FeeScheme::SpreadQuad { gamma: 1.0 }, &SolverConfig::default(), 1e-7).unwrap();
        assert!((g - gs).abs() < 1e-5);
    }

    #[test]
    fn grid_validation() {
        let p = MarketParams::limit(1.1, 1.1, 0.0).unwrap();
        let cfg = SolverConfig::default();
        let fees = FeeScheme::SpreadQuad { gamma: 1.0 };
        assert!(revenue_curve(&[], &p, fees, &cfg).is_err());
        assert!(revenue_curve(&[0.2, 0.1], &p, fees, &cfg).is_err());
    }

    #[test]
    fn unconverged_points_are_flagged() {
        let p = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        let cfg = SolverConfig { max_iter: 1, ..SolverConfig::default() };
        let curve = revenue_curve(&[2.0], &p, FeeScheme::SpreadQuad { gamma: 1.0 }, &cfg).unwrap();
        assert!(!curve[0].converged && curve[0].revenue.is_nan());
        assert!(matches!(revenue(2.0, &p, &cfg), Err(Error::NoEquilibrium(_))));
    }
}
