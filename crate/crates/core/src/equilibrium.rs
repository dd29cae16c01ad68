//! Nash equilibria of the quoting game.
//!
//! A symmetric strategy `δ` is an equilibrium when, for every noise level `σa`,
//! `δ(σa)` maximizes the player's penalized payoff against an opponent playing `δ`.
//! Equilibria are computed as fixed points of the best-response map with damped
//! Picard iteration; degenerate markets (`σ− = σ+`) reduce to a scalar root.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussmath::{
    find_root, first_descent_root, maximize_concave, norm_pdf, norm_sf, Bracket, KernelError, QuadratureRule,
};
use crate::model::{q_rho, sigma_rho, FeeScheme, MarketParams, Strategy, DEFAULT_GRID_POINTS};
use crate::payoff::{OpponentProfile, PayoffContext};

/// Bracket width at which an argmax is accepted.
const ARGMAX_TOL: f64 = 1e-13;
const MAX_DOUBLINGS: usize = 60;
/// Points of `(0, C]` sampled by the concavity check.
const CONCAVITY_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// σ grid size of the solved strategy.
    pub grid_n: usize,
    /// Weight `θ` of the new best response in `δ ← (1−θ)δ + θ BR(δ)`.
    pub damping: f64,
    /// Sup-norm best-response residual accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial upper end of the argmax search; doubled until the payoff derivative turns negative.
    pub search_cap: f64,
    /// Gauss-Legendre nodes for every σ average.
    pub quad_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_GRID_POINTS,
            damping: 0.5,
            tol: 1e-9,
            max_iter: 2000,
            search_cap: 1.0,
            quad_nodes: crate::gaussmath::DEFAULT_NODES,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::InvalidParams(format!("grid_n must be >= 2, got {}", self.grid_n)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParams(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        if !(self.search_cap > 0.0 && self.search_cap.is_finite()) {
            return Err(Error::InvalidParams(format!("search_cap must be positive, got {}", self.search_cap)));
        }
        if self.quad_nodes == 0 {
            return Err(Error::InvalidParams("quad_nodes must be positive".into()));
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        Ok(QuadratureRule::gauss_legendre(self.quad_nodes, 0.0, 1.0)?)
    }
}

/// Sufficient conditions for existence: strategies bounded by `c` when `γ >= gamma_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceBound {
    pub c: f64,
    pub gamma_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub strategy: Strategy,
    /// `sup_σ |δ(σ) − BR(δ)(σ)|` of the reported strategy.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Existence bound `C` (for a degenerate market, the first-order-condition bound).
    pub bound_c: f64,
    /// Penalty level above which existence is guaranteed; zero for degenerate markets.
    pub gamma_min: f64,
    /// Second derivative negative on `(0, max(C, sup δ)]` at every grid σ and no
    /// best response needed the non-concave tie-break.
    pub concavity_ok: bool,
    /// Residual after each iteration.
    pub residual_history: Vec<f64>,
}

/// Best response at every grid point, with the number of points where the payoff
/// was not concave and the smallest maximizer had to be picked.
struct BestResponse {
    strategy: Strategy,
    nonconcave: usize,
}

fn argmax_at(ctx: &PayoffContext, search_cap: f64) -> Result<(f64, bool)> {
    let mut hi = search_cap;
    let mut doublings = 0;
    while ctx.payoff_deriv(hi) >= 0.0 {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::BracketFailure { seed: search_cap, doublings });
        }
        hi *= 2.0;
        doublings += 1;
    }
    let f = |x: f64| ctx.penalized_payoff(x);
    let df = |x: f64| ctx.payoff_deriv(x);
    match maximize_concave(f, df, 0.0, hi, ARGMAX_TOL) {
        Ok((x, _)) => Ok((x, false)),
        Err(KernelError::NonConcave { .. }) => {
            let x = first_descent_root(df, 0.0, hi, ARGMAX_TOL)?.unwrap_or(0.0);
            Ok((x, true))
        }
        Err(e) => Err(e.into()),
    }
}

fn best_response_detailed(
    delta: &Strategy,
    params: &MarketParams,
    fees: FeeScheme,
    cfg: &SolverConfig,
    rule: &QuadratureRule,
) -> Result<BestResponse> {
    let profile = OpponentProfile::new(delta, params, rule)?;
    let points: Vec<(f64, bool)> = delta
        .grid()
        .par_iter()
        .map(|&sa| {
            let ctx = PayoffContext::from_profile(sa, &profile, params, fees)?;
            argmax_at(&ctx, cfg.search_cap)
        })
        .collect::<Result<_>>()?;
    let nonconcave = points.iter().filter(|p| p.1).count();
    let strategy = Strategy::new(delta.grid().to_vec(), points.into_iter().map(|p| p.0).collect())?;
    Ok(BestResponse { strategy, nonconcave })
}

/// Pointwise argmax of the penalized payoff against `delta`, on `delta`'s grid.
pub fn best_response(delta: &Strategy, params: &MarketParams, fees: FeeScheme, cfg: &SolverConfig) -> Result<Strategy> {
    fees.validate()?;
    let br = best_response_detailed(delta, params, fees, cfg, &cfg.rule()?)?;
    if br.nonconcave > 0 {
        return Err(KernelError::NonConcave {
            sign_changes: br.nonconcave,
            lo: 0.0,
            hi: f64::INFINITY,
        }
        .into());
    }
    Ok(br.strategy)
}

/// `sup |δ − BR(δ)|` on `delta`'s grid.
pub fn best_response_residual(delta: &Strategy, params: &MarketParams, fees: FeeScheme, cfg: &SolverConfig) -> Result<f64> {
    let br = best_response_detailed(delta, params, fees, cfg, &cfg.rule()?)?;
    Ok(delta.sup_distance(&br.strategy))
}

fn require_equilibrium_scheme(fees: FeeScheme) -> Result<f64> {
    fees.validate()?;
    match fees {
        FeeScheme::NoFee => Err(Error::NoEquilibrium(
            "without fees no finite strategy satisfies the aggregated first-order condition".into(),
        )),
        FeeScheme::MidQuad { .. } => Err(Error::NoEquilibrium(
            "a mid-price error penalty does not create an equilibrium with finite spreads".into(),
        )),
        FeeScheme::LinearDemand { gamma: 0.0, .. } => Err(Error::NoEquilibrium(
            "linear demand schedules without a half-spread penalty admit no equilibrium".into(),
        )),
        FeeScheme::SpreadQuad { gamma } | FeeScheme::LinearDemand { gamma, .. } => Ok(gamma),
    }
}

/// Upper bound on the degenerate first-order root, used to start the iteration.
fn degenerate_bound(params: &MarketParams, fees: FeeScheme) -> f64 {
    let s_eff = params.sigma_plus() * (1.0 - params.rho()).sqrt();
    match fees {
        FeeScheme::SpreadQuad { gamma } => 1.0 / (4.0 * gamma),
        FeeScheme::LinearDemand { kbar, gamma } => kbar * (s_eff / SQRT_2) * norm_pdf(0.0) / (4.0 * gamma),
        _ => f64::NAN,
    }
}

/// Damped fixed-point iteration from the default starting point.
///
/// The start is `δ ≡ C/2` inside the existence region; below the existence threshold
/// it is the degenerate root at `σ+`. Non-convergence is reported in the result, not
/// as an error.
pub fn solve_fixed_point(params: &MarketParams, fees: FeeScheme, cfg: &SolverConfig) -> Result<EquilibriumReport> {
    let gamma = require_equilibrium_scheme(fees)?;
    params.check_equilibrium_assumption()?;
    cfg.validate()?;
    let (bound_c, gamma_min) = if params.is_degenerate() {
        (degenerate_bound(params, fees), 0.0)
    } else {
        let b = existence_bound(params, fees)?;
        (b.c, b.gamma_min)
    };
    let start = if params.is_degenerate() || gamma >= gamma_min {
        0.5 * bound_c
    } else {
        let top = MarketParams::new(params.sigma_plus(), params.sigma_plus(), params.rho(), params.v())?;
        solve_degenerate(&top, fees)?
    };
    let initial = Strategy::constant(params, cfg.grid_n, start)?;
    iterate(params, fees, cfg, initial, bound_c, gamma_min)
}

/// Damped fixed-point iteration from a caller-supplied strategy (e.g. a warm start).
pub fn solve_fixed_point_from(
    params: &MarketParams,
    fees: FeeScheme,
    cfg: &SolverConfig,
    initial: Strategy,
) -> Result<EquilibriumReport> {
    require_equilibrium_scheme(fees)?;
    params.check_equilibrium_assumption()?;
    cfg.validate()?;
    let (bound_c, gamma_min) = if params.is_degenerate() {
        (degenerate_bound(params, fees), 0.0)
    } else {
        let b = existence_bound(params, fees)?;
        (b.c, b.gamma_min)
    };
    iterate(params, fees, cfg, initial, bound_c, gamma_min)
}

fn iterate(
    params: &MarketParams,
    fees: FeeScheme,
    cfg: &SolverConfig,
    initial: Strategy,
    bound_c: f64,
    gamma_min: f64,
) -> Result<EquilibriumReport> {
    let rule = cfg.rule()?;
    let theta = cfg.damping;
    let mut delta = initial;
    let mut history = Vec::new();
    let mut converged = false;
    let mut nonconcave = 0;
    let mut residual = f64::INFINITY;

    for _ in 0..cfg.max_iter {
        let br = best_response_detailed(&delta, params, fees, cfg, &rule)?;
        residual = delta.sup_distance(&br.strategy);
        nonconcave = br.nonconcave;
        history.push(residual);
        if !residual.is_finite() {
            break;
        }
        if residual <= cfg.tol {
            converged = nonconcave == 0;
            break;
        }
        delta = delta.map(|s, d| {
            let target = br.strategy.eval(s).unwrap_or(d);
            (1.0 - theta) * d + theta * target
        })?;
    }

    let concavity_ok = nonconcave == 0 && concavity_holds(&delta, params, fees, &rule, bound_c.max(delta.max_value()))?;
    Ok(EquilibriumReport {
        iterations: history.len(),
        strategy: delta,
        residual,
        converged,
        bound_c,
        gamma_min,
        concavity_ok,
        residual_history: history,
    })
}

/// Checks `payoff_second_deriv < 0` on `CONCAVITY_POINTS` points of `(0, upper]` at every grid σ.
pub fn concavity_holds(
    delta: &Strategy,
    params: &MarketParams,
    fees: FeeScheme,
    rule: &QuadratureRule,
    upper: f64,
) -> Result<bool> {
    let profile = OpponentProfile::new(delta, params, rule)?;
    let flags: Vec<bool> = delta
        .grid()
        .par_iter()
        .map(|&sa| {
            let ctx = PayoffContext::from_profile(sa, &profile, params, fees)?;
            Ok((1..=CONCAVITY_POINTS).all(|k| ctx.payoff_second_deriv(upper * k as f64 / CONCAVITY_POINTS as f64) < 0.0))
        })
        .collect::<Result<_>>()?;
    Ok(flags.into_iter().all(|f| f))
}

/// Equilibrium half-spread of a degenerate market (`σ− = σ+`): the unique positive root
/// of the scalar first-order condition.
pub fn solve_degenerate(params: &MarketParams, fees: FeeScheme) -> Result<f64> {
    if !params.is_degenerate() {
        return Err(Error::InvalidParams(format!(
            "degenerate solve needs sigma_minus = sigma_plus, got [{}, {}]",
            params.sigma_minus(),
            params.sigma_plus()
        )));
    }
    fees.validate()?;
    let foc = degenerate_foc(params, fees)?;
    let hi = degenerate_bound(params, fees);
    let bracket = Bracket::new(&foc, 0.0, hi)?;
    Ok(find_root(&foc, &bracket, f64::MIN_POSITIVE)?)
}

/// Scalar first-order condition of a degenerate market, `x ↦ e'(x)` at `δ ≡ x`.
pub fn degenerate_foc(params: &MarketParams, fees: FeeScheme) -> Result<impl Fn(f64) -> f64> {
    let s_eff = params.sigma_plus() * (1.0 - params.rho()).sqrt();
    let (kind, kbar, gamma) = match fees {
        FeeScheme::SpreadQuad { gamma } if gamma > 0.0 => (0, 0.0, gamma),
        FeeScheme::LinearDemand { kbar, gamma } if gamma > 0.0 => (1, kbar, gamma),
        other => {
            return Err(Error::WrongScheme {
                expected: "spread_quad or linear_demand with gamma > 0",
                got: other.name().to_string(),
            })
        }
    };
    Ok(move |x: f64| {
        let z = SQRT_2 * x / s_eff;
        if kind == 0 {
            0.5 * norm_sf(z) - 2.0 * gamma * x
        } else {
            0.5 * kbar * (-x * norm_sf(z) + s_eff / SQRT_2 * norm_pdf(z)) - 2.0 * gamma * x
        }
    })
}

/// `max_z (z Φ'(z) − (1 − Φ(z)))`, attained at `z = √2` where `Φ'(z)(2 − z²) = 0`.
pub fn linear_demand_curvature_max() -> f64 {
    SQRT_2 * norm_pdf(SQRT_2) - norm_sf(SQRT_2)
}

/// Closed-form existence bound `C` and penalty threshold for a non-degenerate market.
pub fn existence_bound(params: &MarketParams, fees: FeeScheme) -> Result<ExistenceBound> {
    if params.is_degenerate() {
        return Err(Error::DegenerateCase);
    }
    params.check_equilibrium_assumption()?;
    fees.validate()?;
    let (sm, sp, rho) = (params.sigma_minus(), params.sigma_plus(), params.rho());
    match fees {
        FeeScheme::SpreadQuad { .. } => {
            let ratio = (1.0 - rho * sp / sm) / (1.0 - (sm / sp).powi(2));
            let lambda = 1.0 / (2.0 * ratio + 1.0);
            let scale = (0.5 * (1.0 - rho * rho).powi(2) * sm.powi(4) / (sp * sp)).sqrt();
            let c = 2.0 * lambda * ratio * scale;
            let z = c / (SQRT_2 * sp);
            let gamma_min = norm_sf(z) / (4.0 * c) + norm_pdf(z) / (2.0 * SQRT_2 * sm);
            Ok(ExistenceBound { c, gamma_min })
        }
        FeeScheme::LinearDemand { kbar, gamma } => {
            if gamma <= 0.0 {
                return Err(Error::InvalidParams("the linear-demand bound needs gamma > 0".into()));
            }
            // the averaged Σρ·Qρ depends on σa; take its largest value over a fine σa grid
            let nodes = params.sigma_nodes(&QuadratureRule::default_rule());
            let mut worst = 0.0f64;
            for sa in params.sigma_grid(DEFAULT_GRID_POINTS) {
                let mut avg = 0.0;
                for &(sb, w) in &nodes {
                    avg += w * sigma_rho(sa, sb, rho)? * q_rho(sa, sb, rho)?;
                }
                worst = worst.max(avg);
            }
            Ok(ExistenceBound {
                c: kbar / (4.0 * gamma) * worst * norm_pdf(0.0),
                gamma_min: 0.5 * kbar * linear_demand_curvature_max(),
            })
        }
        other => Err(Error::WrongScheme { expected: "spread_quad or linear_demand", got: other.name().to_string() }),
    }
}

/// `E_{σa,σb}[ (1 − Φ((δ(σa) + δ(σb))/Σρ)) / 2 ]`: the aggregated unpenalized first-order
/// condition. It is strictly positive for every finite `δ`, so no such `δ` is an equilibrium.
pub fn no_ne_certificate(delta: &Strategy, params: &MarketParams) -> Result<f64> {
    let nodes = params.sigma_nodes(&QuadratureRule::default_rule());
    let deltas: Vec<f64> = nodes.iter().map(|&(s, _)| delta.eval(s)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for (i, &(sa, wa)) in nodes.iter().enumerate() {
        let mut inner = 0.0;
        for (j, &(sb, wb)) in nodes.iter().enumerate() {
            inner += wb * 0.5 * norm_sf((deltas[i] + deltas[j]) / sigma_rho(sa, sb, params.rho())?);
        }
        total += wa * inner;
    }
    Ok(total)
}

/// Largest payoff gain from a unilateral deviation, over the grid σ's of `delta` and
/// `x_samples` offsets in `[0, 3 sup δ]` (`[0, σ+]` when `δ ≡ 0`). Zero for an exact equilibrium.
pub fn verify_ne(delta: &Strategy, params: &MarketParams, fees: FeeScheme, x_samples: usize) -> Result<f64> {
    fees.validate()?;
    let rule = QuadratureRule::default_rule();
    let profile = OpponentProfile::new(delta, params, &rule)?;
    let top = if delta.max_value() > 0.0 { 3.0 * delta.max_value() } else { params.sigma_plus() };
    let n = x_samples.max(2);
    let gains: Vec<f64> = delta
        .grid()
        .par_iter()
        .zip(delta.values().par_iter())
        .map(|(&sa, &d)| {
            let ctx = PayoffContext::from_profile(sa, &profile, params, fees)?;
            let base = ctx.penalized_payoff(d);
            Ok((0..n)
                .map(|j| ctx.penalized_payoff(top * j as f64 / (n - 1) as f64) - base)
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(gains.into_iter().fold(0.0, f64::max))
}

/// Smallest penalty on `gammas` whose solve converges with a concave payoff.
pub fn empirical_gamma_threshold(params: &MarketParams, fees: FeeScheme, gammas: &[f64], cfg: &SolverConfig) -> Result<Option<f64>> {
    for &g in gammas {
        let report = solve_fixed_point(params, fees.with_gamma(g), cfg)?;
        if report.converged && report.concavity_ok {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degenerate(sigma: f64, rho: f64) -> MarketParams {
        MarketParams::limit(sigma, sigma, rho).unwrap()
    }

    #[test]
    fn degenerate_spread_roots() {
        let r = solve_degenerate(&degenerate(1.1, 0.0), FeeScheme::SpreadQuad { gamma: 0.09676 }).unwrap();
        assert!((r - 0.584_451_604_984_860_3).abs() < 1e-13);
        let r = solve_degenerate(&degenerate(1.1, 0.0), FeeScheme::SpreadQuad { gamma: 100.0 }).unwrap();
        assert!(r > 0.0 && r <= 1.0 / 400.0);
    }

    #[test]
    fn degenerate_linear_demand_root() {
        let p = degenerate(1.0, 0.0);
        let fees = FeeScheme::LinearDemand { kbar: 1.0, gamma: 1.0 };
        let r = solve_degenerate(&p, fees).unwrap();
        assert!((r - 0.062_935_869_033_818_34).abs() < 1e-14);
        assert!(degenerate_foc(&p, fees).unwrap()(r).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_rejects_schemes_without_equilibrium() {
        let p = degenerate(1.0, 0.0);
        assert!(matches!(solve_degenerate(&p, FeeScheme::NoFee), Err(Error::WrongScheme { .. })));
        assert!(matches!(solve_degenerate(&p, FeeScheme::MidQuad { gamma: 1.0 }), Err(Error::WrongScheme { .. })));
        let general = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        assert!(solve_degenerate(&general, FeeScheme::SpreadQuad { gamma: 1.0 }).is_err());
    }

    #[test]
    fn scale_covariance_of_degenerate_root() {
        let base = solve_degenerate(&degenerate(0.9, 0.2), FeeScheme::SpreadQuad { gamma: 0.3 }).unwrap();
        for c in [0.5, 2.0] {
            let scaled = solve_degenerate(&degenerate(0.9 * c, 0.2), FeeScheme::SpreadQuad { gamma: 0.3 / c }).unwrap();
            assert!((scaled - c * base).abs() < 1e-10);
        }
    }

    #[test]
    fn existence_bound_values() {
        let p = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        let b = existence_bound(&p, FeeScheme::SpreadQuad { gamma: 1.0 }).unwrap();
        assert!((b.c - 4.297_334_029_310_51e-3).abs() < 1e-15);
        assert!((b.gamma_min - 30.434_157_886_691_93).abs() < 1e-10);
        // ρ = 0 simplification C = 2λA σ−²/(σ+√2)
        let a = 1.0 / (1.0 - (0.1f64 / 1.1).powi(2));
        let lambda = 1.0 / (2.0 * a + 1.0);
        assert!((b.c - 2.0 * lambda * a * 0.01 / (1.1 * SQRT_2)).abs() < 1e-16);
        assert!(matches!(existence_bound(&degenerate(1.0, 0.0), FeeScheme::SpreadQuad { gamma: 1.0 }), Err(Error::DegenerateCase)));
    }

    #[test]
    fn linear_demand_constant() {
        assert!((linear_demand_curvature_max() - 0.128_904_145_185_154_8).abs() < 1e-15);
        let p = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        let b = existence_bound(&p, FeeScheme::LinearDemand { kbar: 2.0, gamma: 1.0 }).unwrap();
        assert!((b.gamma_min - linear_demand_curvature_max()).abs() < 1e-16);
        assert!(b.c > 0.0);
    }

    #[test]
    fn certificate_at_zero_spread() {
        let p = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        let v = no_ne_certificate(&Strategy::constant(&p, 101, 0.0).unwrap(), &p).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn certificate_has_monotone_lower_bound() {
        let p = MarketParams::limit(0.2, 0.8, -0.3).unwrap();
        for m in [0.1, 1.0, 5.0] {
            let d = Strategy::from_fn(&p, 101, |s| m * s / 0.8).unwrap();
            let v = no_ne_certificate(&d, &p).unwrap();
            let smin = sigma_rho(0.2, 0.2, -0.3).unwrap().min(sigma_rho(0.8, 0.8, -0.3).unwrap()).min(sigma_rho(0.2, 0.8, -0.3).unwrap());
            assert!(v >= 0.5 * norm_sf(2.0 * m / smin) - 1e-15 && v > 0.0);
        }
    }

    #[test]
    fn best_response_at_degenerate_root_is_a_fixed_point() {
        let p = degenerate(1.1, 0.0);
        let fees = FeeScheme::SpreadQuad { gamma: 0.0967 };
        let root = solve_degenerate(&p, fees).unwrap();
        let d = Strategy::constant(&p, 101, root).unwrap();
        let br = best_response(&d, &p, fees, &SolverConfig::default()).unwrap();
        assert!((br.values()[0] - root).abs() < 1e-8);
    }

    #[test]
    fn heavy_penalty_forces_tight_quotes() {
        let p = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        let d = Strategy::from_fn(&p, 101, |s| 0.2 * s).unwrap();
        let br = best_response(&d, &p, FeeScheme::SpreadQuad { gamma: 1e3 }, &SolverConfig::default()).unwrap();
        assert!(br.max_value() <= 1e-3);
    }

    #[test]
    fn verify_ne_at_degenerate_equilibrium() {
        let p = degenerate(1.1, 0.0);
        let fees = FeeScheme::SpreadQuad { gamma: 0.1 };
        let root = solve_degenerate(&p, fees).unwrap();
        let d = Strategy::constant(&p, 101, root).unwrap();
        assert!(verify_ne(&d, &p, fees, 301).unwrap() <= 1e-8);
        let off = Strategy::constant(&p, 101, root + 0.1).unwrap();
        assert!(verify_ne(&off, &p, fees, 301).unwrap() > 0.0);
        assert!(verify_ne(&d, &p, FeeScheme::NoFee, 301).unwrap() > 0.0);
    }

    #[test]
    fn schemes_without_equilibrium_are_refused() {
        let p = MarketParams::limit(0.1, 1.1, 0.0).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(solve_fixed_point(&p, FeeScheme::NoFee, &cfg), Err(Error::NoEquilibrium(_))));
        assert!(matches!(solve_fixed_point(&p, FeeScheme::MidQuad { gamma: 1.0 }, &cfg), Err(Error::NoEquilibrium(_))));
        let bad = MarketParams::limit(0.1, 1.1, 0.5).unwrap();
        assert!(matches!(
            solve_fixed_point(&bad, FeeScheme::SpreadQuad { gamma: 2.0 }, &cfg),
            Err(Error::AssumptionViolated { .. })
        ));
    }

    #[test]
    fn degenerate_fixed_point_matches_root() {
        let p = degenerate(1.1, 0.0);
        let fees = FeeScheme::SpreadQuad { gamma: 0.1 };
        let report = solve_fixed_point(&p, fees, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        let root = solve_degenerate(&p, fees).unwrap();
        assert!((report.strategy.values()[0] - root).abs() < 1e-7);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.damping = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { grid_n: 1, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
