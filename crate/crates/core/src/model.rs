//! Market parameters, quoting strategies, fee schemes and the closed-form market
//! statistics of a fixed strategy.

use std::fmt;

use crate::error::{Error, Result};
use crate::gaussmath::{norm_sf, QuadratureRule};

/// Grid size for strategies unless the solver is configured otherwise.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Slack allowed when evaluating a strategy just outside its grid.
const DOMAIN_SLACK: f64 = 1e-12;

/// Scale `v` of the Gaussian prior on the efficient-price increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorScale {
    /// The limit `v → ∞` (an arbitrarily illiquid market).
    Infinite,
    Finite(f64),
}

impl fmt::Display for PriorScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorScale::Infinite => write!(f, "inf"),
            PriorScale::Finite(v) => write!(f, "{v:.17e}"),
        }
    }
}

/// The market model: noise bounds `σ−, σ+`, signal correlation `ρ` and prior scale `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    sigma_minus: f64,
    sigma_plus: f64,
    rho: f64,
    v: PriorScale,
}

impl MarketParams {
    pub fn new(sigma_minus: f64, sigma_plus: f64, rho: f64, v: PriorScale) -> Result<Self> {
        if !(sigma_minus.is_finite() && sigma_plus.is_finite() && sigma_minus > 0.0 && sigma_minus <= sigma_plus) {
            return Err(Error::InvalidParams(format!(
                "need 0 < sigma_minus <= sigma_plus, got [{sigma_minus}, {sigma_plus}]"
            )));
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidParams(format!("rho must lie in (-1, 1), got {rho}")));
        }
        if let PriorScale::Finite(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("prior scale v must be positive, got {v}")));
            }
        }
        Ok(Self { sigma_minus, sigma_plus, rho, v })
    }

    /// Limit market (`v → ∞`).
    pub fn limit(sigma_minus: f64, sigma_plus: f64, rho: f64) -> Result<Self> {
        Self::new(sigma_minus, sigma_plus, rho, PriorScale::Infinite)
    }

    pub fn sigma_minus(&self) -> f64 {
        self.sigma_minus
    }

    pub fn sigma_plus(&self) -> f64 {
        self.sigma_plus
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn v(&self) -> PriorScale {
        self.v
    }

    pub fn with_v(self, v: PriorScale) -> Result<Self> {
        Self::new(self.sigma_minus, self.sigma_plus, self.rho, v)
    }

    /// `σ− = σ+` up to 1e-12 relative.
    pub fn is_degenerate(&self) -> bool {
        self.sigma_plus - self.sigma_minus <= 1e-12 * self.sigma_plus.max(1.0)
    }

    /// Largest correlation for which the equilibrium results apply: `σ−/σ+`.
    pub fn rho_limit(&self) -> f64 {
        self.sigma_minus / self.sigma_plus
    }

    pub fn check_equilibrium_assumption(&self) -> Result<()> {
        if self.rho > self.rho_limit() {
            return Err(Error::AssumptionViolated { rho: self.rho, limit: self.rho_limit() });
        }
        Ok(())
    }

    /// `E[σ]` for `σ ~ U[σ−, σ+]`.
    pub fn sigma_mean(&self) -> f64 {
        0.5 * (self.sigma_minus + self.sigma_plus)
    }

    /// `E[σ²] = (σ+³ − σ−³) / (3(σ+ − σ−))`, written in the form that stays finite at `σ− = σ+`.
    pub fn sigma_sq_mean(&self) -> f64 {
        let (a, b) = (self.sigma_minus, self.sigma_plus);
        (a * a + a * b + b * b) / 3.0
    }

    /// Uniform grid spanning `[σ−, σ+]`; a single point for a degenerate market.
    pub fn sigma_grid(&self, n: usize) -> Vec<f64> {
        if self.is_degenerate() || n < 2 {
            return vec![self.sigma_plus];
        }
        let (a, b) = (self.sigma_minus, self.sigma_plus);
        let last = n - 1;
        (0..n)
            .map(|i| if i == last { b } else { a + (b - a) * i as f64 / last as f64 })
            .collect()
    }

    /// Quadrature nodes and normalized weights for averages over `σ ~ U[σ−, σ+]`.
    pub fn sigma_nodes(&self, rule: &QuadratureRule) -> Vec<(f64, f64)> {
        if self.is_degenerate() {
            return vec![(self.sigma_plus, 1.0)];
        }
        rule.averaging_nodes(self.sigma_minus, self.sigma_plus)
    }
}

/// A half-spread function `σ ↦ δ(σ) ≥ 0` sampled on a grid, piecewise linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Strategy {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidParams(format!(
                "strategy grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParams("strategy grid must be strictly increasing".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParams(format!("strategy values must be finite and >= 0, found {bad}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on the market's uniform σ grid.
    pub fn from_fn(params: &MarketParams, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = params.sigma_grid(n);
        let values = grid.iter().map(|&s| f(s)).collect();
        Self::new(grid, values)
    }

    pub fn constant(params: &MarketParams, n: usize, value: f64) -> Result<Self> {
        Self::from_fn(params, n, |_| value)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Piecewise-linear evaluation, exact at grid points.
    pub fn eval(&self, sigma: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = DOMAIN_SLACK * hi.abs().max(1.0);
        if !(sigma >= lo - slack && sigma <= hi + slack) {
            return Err(Error::OutOfDomain { sigma, lo, hi });
        }
        if self.grid.len() == 1 || sigma <= lo {
            return Ok(self.values[0]);
        }
        if sigma >= hi {
            return Ok(self.values[self.values.len() - 1]);
        }
        let k = self.grid.partition_point(|&g| g <= sigma).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        let t = (sigma - x0) / (x1 - x0);
        Ok(y0 + t * (y1 - y0))
    }

    /// Same grid, values mapped through `f`.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self.grid.iter().zip(&self.values).map(|(&s, &d)| f(s, d)).collect();
        Self::new(self.grid.clone(), values)
    }

    /// `sup |self − other|` over the shared grid.
    pub fn sup_distance(&self, other: &Strategy) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Exchange penalty applied to each player's payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeeScheme {
    NoFee,
    /// `γ((P^a + P^b)/2 − P∞)²`: quadratic in the clearing-price error.
    MidQuad { gamma: f64 },
    /// `γ(P^i − P∞|i)²`: quadratic in the player's own half-spread.
    SpreadQuad { gamma: f64 },
    /// Linear demand/offer schedules with common slope `kbar`, plus the optional half-spread penalty.
    LinearDemand { kbar: f64, gamma: f64 },
}

impl FeeScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FeeScheme::NoFee => Ok(()),
            FeeScheme::MidQuad { gamma } | FeeScheme::SpreadQuad { gamma } => {
                if gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!("gamma must be positive, got {gamma}")))
                }
            }
            FeeScheme::LinearDemand { kbar, gamma } => {
                if !(kbar.is_finite() && kbar > 0.0) {
                    Err(Error::InvalidParams(format!("kbar must be positive, got {kbar}")))
                } else if !(gamma.is_finite() && gamma >= 0.0) {
                    Err(Error::InvalidParams(format!("gamma must be non-negative, got {gamma}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            FeeScheme::NoFee => 0.0,
            FeeScheme::MidQuad { gamma } | FeeScheme::SpreadQuad { gamma } | FeeScheme::LinearDemand { gamma, .. } => gamma,
        }
    }

    /// Same scheme with a different penalty level.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        match *self {
            FeeScheme::NoFee => FeeScheme::NoFee,
            FeeScheme::MidQuad { .. } => FeeScheme::MidQuad { gamma },
            FeeScheme::SpreadQuad { .. } => FeeScheme::SpreadQuad { gamma },
            FeeScheme::LinearDemand { kbar, .. } => FeeScheme::LinearDemand { kbar, gamma },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeeScheme::NoFee => "none",
            FeeScheme::MidQuad { .. } => "mid_quad",
            FeeScheme::SpreadQuad { .. } => "spread_quad",
            FeeScheme::LinearDemand { .. } => "linear_demand",
        }
    }
}

/// Market-quality statistics of a symmetric strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    /// `E[P^a − P^b]`
    pub spread_mean: f64,
    /// `V[P^a − P^b]`
    pub spread_var: f64,
    /// `E[(P^a + P^b)/2 − P∞]`
    pub mid_error_mean: f64,
    /// `V[(P^a + P^b)/2 − P∞]`
    pub mid_error_var: f64,
    /// `P[P^a ≤ P^b]`
    pub trade_prob: f64,
}

impl PairStats {
    pub const NAMES: [&'static str; 5] = ["spread_mean", "spread_var", "mid_error_mean", "mid_error_var", "trade_prob"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.spread_mean, self.spread_var, self.mid_error_mean, self.mid_error_var, self.trade_prob]
    }
}

fn check_sigmas(sa: f64, sb: f64, rho: f64) -> Result<()> {
    if !(sa > 0.0 && sb > 0.0 && sa.is_finite() && sb.is_finite()) {
        return Err(Error::Domain(format!("noise levels must be positive, got ({sa}, {sb})")));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (-1, 1), got {rho}")));
    }
    Ok(())
}

/// `Σρ = √(σa² + σb² − 2ρσaσb)`, the standard deviation of `σbεb − σaεa`.
pub fn sigma_rho(sa: f64, sb: f64, rho: f64) -> Result<f64> {
    check_sigmas(sa, sb, rho)?;
    let radicand = sa * sa + sb * sb - 2.0 * rho * sa * sb;
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!("degenerate spread variance at ({sa}, {sb}, {rho})")));
    }
    Ok(radicand.sqrt())
}

fn precision_ratio(own: f64, other: f64, rho: f64) -> Result<f64> {
    check_sigmas(own, other, rho)?;
    let cross = rho / (own * other);
    let den = 1.0 / (own * own) + 1.0 / (other * other) - 2.0 * cross;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Domain(format!("degenerate precision at ({own}, {other}, {rho})")));
    }
    Ok((1.0 / (other * other) - cross) / den)
}

/// `Qρ`: the weight of the evaluating player's own signal in the joint precision-weighted estimate.
pub fn q_rho(sa: f64, sb: f64, rho: f64) -> Result<f64> {
    precision_ratio(sa, sb, rho)
}

/// `Q̃ρ = 1 − Qρ`.
pub fn q_tilde_rho(sa: f64, sb: f64, rho: f64) -> Result<f64> {
    precision_ratio(sb, sa, rho)
}

/// Closed-form market statistics of a strategy, averages over `σ` by quadrature.
pub fn analytic_stats(delta: &Strategy, params: &MarketParams, rule: &QuadratureRule) -> Result<PairStats> {
    let nodes = params.sigma_nodes(rule);
    let deltas: Vec<f64> = nodes.iter().map(|&(s, _)| delta.eval(s)).collect::<Result<_>>()?;
    let mean_delta: f64 = nodes.iter().zip(&deltas).map(|(&(_, w), d)| w * d).sum();
    let mean_delta_sq: f64 = nodes.iter().zip(&deltas).map(|(&(_, w), d)| w * d * d).sum();
    let var_delta = (mean_delta_sq - mean_delta * mean_delta).max(0.0);

    let rho = params.rho();
    let e_s = params.sigma_mean();
    let e_s2 = params.sigma_sq_mean();

    let mut trade_prob = 0.0;
    for (i, &(sa, wa)) in nodes.iter().enumerate() {
        let mut inner = 0.0;
        for (j, &(sb, wb)) in nodes.iter().enumerate() {
            inner += wb * norm_sf((deltas[i] + deltas[j]) / sigma_rho(sa, sb, rho)?);
        }
        trade_prob += wa * inner;
    }

    Ok(PairStats {
        spread_mean: 2.0 * mean_delta,
        spread_var: (2.0 * (e_s2 - rho * e_s * e_s + var_delta)).max(0.0),
        mid_error_mean: 0.0,
        mid_error_var: (0.5 * (e_s2 + rho * e_s * e_s + var_delta)).max(0.0),
        trade_prob: trade_prob.clamp(0.0, 1.0),
    })
}
