//! Expected payoff of the selling player as a function of its quote offset `x`,
//! in the limit of an uninformative prior on the efficient price.
//!
//! All averages over the opponent's noise level `σb` are taken with a fixed quadrature
//! rule. The per-node quantities (`Σρ`, `Qρ`, `Q̃ρ`, `δ(σb)`) are cached when the context
//! is built, so each evaluation costs one `Φ` and one `Φ'` per node.

use crate::error::{Error, Result};
use crate::gaussmath::{norm_pdf, norm_sf, QuadratureRule};
use crate::model::{q_rho, q_tilde_rho, sigma_rho, FeeScheme, MarketParams, Strategy};

/// The opponent's strategy evaluated at the quadrature nodes. Shared by every `σa`.
#[derive(Debug, Clone)]
pub struct OpponentProfile {
    nodes: Vec<(f64, f64, f64)>,
    mean_delta: f64,
    mean_delta_sq: f64,
}

impl OpponentProfile {
    pub fn new(delta: &Strategy, params: &MarketParams, rule: &QuadratureRule) -> Result<Self> {
        let nodes: Vec<(f64, f64, f64)> = params
            .sigma_nodes(rule)
            .into_iter()
            .map(|(s, w)| Ok((s, w, delta.eval(s)?)))
            .collect::<Result<_>>()?;
        let mean_delta = nodes.iter().map(|n| n.1 * n.2).sum();
        let mean_delta_sq = nodes.iter().map(|n| n.1 * n.2 * n.2).sum();
        Ok(Self { nodes, mean_delta, mean_delta_sq })
    }

    /// `E[δ(σb)]`
    pub fn mean_delta(&self) -> f64 {
        self.mean_delta
    }

    /// `E[δ(σb)²]`
    pub fn mean_delta_sq(&self) -> f64 {
        self.mean_delta_sq
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeTerm {
    weight: f64,
    sigma_rho: f64,
    q: f64,
    q_tilde: f64,
    delta_b: f64,
}

/// Everything needed to evaluate one player's payoff: its own noise level, the
/// opponent's strategy, the market and the fee scheme.
#[derive(Debug, Clone)]
pub struct PayoffContext {
    sigma_a: f64,
    params: MarketParams,
    fees: FeeScheme,
    terms: Vec<NodeTerm>,
    mean_delta: f64,
    mean_delta_sq: f64,
}

impl PayoffContext {
    pub fn new(sigma_a: f64, delta: &Strategy, params: &MarketParams, fees: FeeScheme, rule: &QuadratureRule) -> Result<Self> {
        let profile = OpponentProfile::new(delta, params, rule)?;
        Self::from_profile(sigma_a, &profile, params, fees)
    }

    pub fn from_profile(sigma_a: f64, profile: &OpponentProfile, params: &MarketParams, fees: FeeScheme) -> Result<Self> {
        fees.validate()?;
        let rho = params.rho();
        let terms = profile
            .nodes
            .iter()
            .map(|&(sb, weight, delta_b)| {
                Ok(NodeTerm {
                    weight,
                    sigma_rho: sigma_rho(sigma_a, sb, rho)?,
                    q: q_rho(sigma_a, sb, rho)?,
                    q_tilde: q_tilde_rho(sigma_a, sb, rho)?,
                    delta_b,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            sigma_a,
            params: *params,
            fees,
            terms,
            mean_delta: profile.mean_delta,
            mean_delta_sq: profile.mean_delta_sq,
        })
    }

    pub fn sigma_a(&self) -> f64 {
        self.sigma_a
    }

    pub fn fees(&self) -> FeeScheme {
        self.fees
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    /// Same node caches with another fee scheme.
    pub fn with_fees(&self, fees: FeeScheme) -> Result<Self> {
        fees.validate()?;
        Ok(Self { fees, ..self.clone() })
    }

    /// Unpenalized limit payoff
    /// `E_σb[ (x−δ)/2 · (1 − Φ(u)) + Σρ(1/2 − Qρ) Φ'(u) ]`, `u = (x + δ(σb))/Σρ`.
    pub fn base_payoff(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let u = (x + t.delta_b) / t.sigma_rho;
                t.weight * (0.5 * (x - t.delta_b) * norm_sf(u) + t.sigma_rho * (0.5 - t.q) * norm_pdf(u))
            })
            .sum()
    }

    /// `E_σb[ (1 − Φ(u))/2 + (−x Q̃ρ + δ Qρ) Φ'(u)/Σρ ]`
    pub fn base_deriv(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let u = (x + t.delta_b) / t.sigma_rho;
                t.weight * (0.5 * norm_sf(u) + (-x * t.q_tilde + t.delta_b * t.q) * norm_pdf(u) / t.sigma_rho)
            })
            .sum()
    }

    /// Derivative of [`base_deriv`](Self::base_deriv):
    /// `E_σb[ (Φ'(u)/Σρ) (−(1/2 + Q̃ρ) + (Q̃ρ x² + (Q̃ρ − Qρ) x δ − Qρ δ²)/Σρ²) ]`.
    pub fn base_second_deriv(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let d = t.delta_b;
                let s2 = t.sigma_rho * t.sigma_rho;
                let u = (x + d) / t.sigma_rho;
                let poly = -(0.5 + t.q_tilde) + (t.q_tilde * x * x + (t.q_tilde - t.q) * x * d - t.q * d * d) / s2;
                t.weight * norm_pdf(u) / t.sigma_rho * poly
            })
            .sum()
    }

    /// `E[((P^a+P^b)/2 − P∞)² | P∞|a, σa] = (x² − 2xE[δ] + E[δ²] + σa² + E[σb²] + 2ρσaE[σb]) / 4`
    fn mid_error_second_moment(&self, x: f64) -> f64 {
        let p = &self.params;
        let sa = self.sigma_a;
        0.25 * (x * x - 2.0 * x * self.mean_delta
            + self.mean_delta_sq
            + sa * sa
            + p.sigma_sq_mean()
            + 2.0 * p.rho() * sa * p.sigma_mean())
    }

    /// Payoff net of the fee scheme's penalty.
    pub fn penalized_payoff(&self, x: f64) -> f64 {
        match self.fees {
            FeeScheme::NoFee => self.base_payoff(x),
            FeeScheme::MidQuad { gamma } => self.base_payoff(x) - gamma * self.mid_error_second_moment(x),
            FeeScheme::SpreadQuad { gamma } => self.base_payoff(x) - gamma * x * x,
            FeeScheme::LinearDemand { kbar, gamma } => self.half_linear_raw(x, kbar, gamma),
        }
    }

    pub fn payoff_deriv(&self, x: f64) -> f64 {
        match self.fees {
            FeeScheme::NoFee => self.base_deriv(x),
            FeeScheme::MidQuad { gamma } => self.base_deriv(x) - 0.5 * gamma * (x - self.mean_delta),
            FeeScheme::SpreadQuad { gamma } => self.base_deriv(x) - 2.0 * gamma * x,
            FeeScheme::LinearDemand { kbar, gamma } => self.half_linear_deriv_raw(x, kbar, gamma),
        }
    }

    pub fn payoff_second_deriv(&self, x: f64) -> f64 {
        match self.fees {
            FeeScheme::NoFee => self.base_second_deriv(x),
            FeeScheme::MidQuad { gamma } => self.base_second_deriv(x) - 0.5 * gamma,
            FeeScheme::SpreadQuad { gamma } => self.base_second_deriv(x) - 2.0 * gamma,
            FeeScheme::LinearDemand { kbar, gamma } => self.half_linear_second_deriv_raw(x, kbar, gamma),
        }
    }

    fn linear_demand(&self) -> Result<(f64, f64)> {
        match self.fees {
            FeeScheme::LinearDemand { kbar, gamma } => Ok((kbar, gamma)),
            other => Err(Error::WrongScheme { expected: "linear_demand", got: other.name().to_string() }),
        }
    }

    /// Expected volume-weighted gain under linear demand schedules of common slope `k̄`:
    /// `(k̄/2) E_σb[ (Σρ²(1/2 − Qρ) − (x−δ)(x+δ)/2)(1 − Φ(u)) + Σρ (x−δ)/2 Φ'(u) ] − γx²`.
    pub fn half_linear_payoff(&self, x: f64) -> Result<f64> {
        let (kbar, gamma) = self.linear_demand()?;
        Ok(self.half_linear_raw(x, kbar, gamma))
    }

    /// `(k̄/2) E_σb[ −x(1 − Φ(u)) + Σρ Qρ Φ'(u) ] − 2γx`
    pub fn half_linear_deriv(&self, x: f64) -> Result<f64> {
        let (kbar, gamma) = self.linear_demand()?;
        Ok(self.half_linear_deriv_raw(x, kbar, gamma))
    }

    /// `(k̄/2) E_σb[ −(1 − Φ(u)) + (Q̃ρ x − Qρ δ) Φ'(u)/Σρ ] − 2γ`
    pub fn half_linear_second_deriv(&self, x: f64) -> Result<f64> {
        let (kbar, gamma) = self.linear_demand()?;
        Ok(self.half_linear_second_deriv_raw(x, kbar, gamma))
    }

    fn half_linear_raw(&self, x: f64, kbar: f64, gamma: f64) -> f64 {
        let integral: f64 = self
            .terms
            .iter()
            .map(|t| {
                let d = t.delta_b;
                let s = t.sigma_rho;
                let u = (x + d) / s;
                let half_gap = 0.5 * (x - d);
                let a = s * s * (0.5 - t.q) - half_gap * (x + d);
                t.weight * (a * norm_sf(u) + s * half_gap * norm_pdf(u))
            })
            .sum();
        0.5 * kbar * integral - gamma * x * x
    }

    fn half_linear_deriv_raw(&self, x: f64, kbar: f64, gamma: f64) -> f64 {
        let integral: f64 = self
            .terms
            .iter()
            .map(|t| {
                let u = (x + t.delta_b) / t.sigma_rho;
                t.weight * (-x * norm_sf(u) + t.sigma_rho * t.q * norm_pdf(u))
            })
            .sum();
        0.5 * kbar * integral - 2.0 * gamma * x
    }

    fn half_linear_second_deriv_raw(&self, x: f64, kbar: f64, gamma: f64) -> f64 {
        let integral: f64 = self
            .terms
            .iter()
            .map(|t| {
                let u = (x + t.delta_b) / t.sigma_rho;
                t.weight * (-norm_sf(u) + (t.q_tilde * x - t.q * t.delta_b) * norm_pdf(u) / t.sigma_rho)
            })
            .sum();
        0.5 * kbar * integral - 2.0 * gamma
    }
}
