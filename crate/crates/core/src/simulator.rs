//! Monte Carlo engine for the auction.
//!
//! Every draw comes from its own ChaCha8 stream keyed by `(seed, domain)` with the
//! draw index as stream number, so a sample depends only on `(seed, draw_index)` and
//! shards can run in any order. Estimators reduce fixed-size chunks in index order,
//! which keeps results bit-identical across thread counts.
//!
//! The conditional estimators use common random numbers: the same draw index yields
//! the same underlying normals for every `x`, `p_obs` and `v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FeeScheme, MarketParams, PairStats, PriorScale, Strategy};

const DOMAIN_AUCTION: u64 = 1;
const DOMAIN_CONDITIONAL: u64 = 2;
const DOMAIN_JOINT: u64 = 3;
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub samples: u64,
    pub seed: u64,
    pub v_mode: PriorScale,
}

impl SimConfig {
    pub fn new(samples: u64, seed: u64, v_mode: PriorScale) -> Result<Self> {
        let cfg = Self { samples, seed, v_mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParams("samples must be >= 1".into()));
        }
        if let PriorScale::Finite(v) = self.v_mode {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("v must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionOutcome {
    pub p_inf: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub traded: bool,
    pub trade_price: Option<f64>,
    /// Only under linear demand schedules.
    pub volume: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimReport {
    pub stats: PairStats,
    /// Standard errors in [`PairStats::NAMES`] order.
    pub std_errors: [f64; 5],
    pub samples: u64,
    pub seed: u64,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

fn stream(seed: u64, domain: u64, draw_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(draw_index);
    rng
}

fn uniform_sigma(rng: &mut ChaCha8Rng, params: &MarketParams) -> f64 {
    let u: f64 = rng.random();
    if params.is_degenerate() {
        params.sigma_plus()
    } else {
        params.sigma_minus() + u * (params.sigma_plus() - params.sigma_minus())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// One auction from an unconditional draw. In infinite-prior mode prices are increments
/// relative to `P∞ ≡ 0`.
pub fn sample_auction(
    delta: &Strategy,
    params: &MarketParams,
    fees: FeeScheme,
    sim: &SimConfig,
    draw_index: u64,
) -> Result<AuctionOutcome> {
    let mut rng = stream(sim.seed, DOMAIN_AUCTION, draw_index);
    let sigma_a = uniform_sigma(&mut rng, params);
    let sigma_b = uniform_sigma(&mut rng, params);
    let z_inf = normal(&mut rng);
    let eps_a = normal(&mut rng);
    let eta = normal(&mut rng);
    let rho = params.rho();
    let eps_b = rho * eps_a + (1.0 - rho * rho).sqrt() * eta;
    let p_inf = match sim.v_mode {
        PriorScale::Infinite => 0.0,
        PriorScale::Finite(v) => v * z_inf,
    };
    let p_a = p_inf + sigma_a * eps_a + delta.eval(sigma_a)?;
    let p_b = p_inf + sigma_b * eps_b - delta.eval(sigma_b)?;
    let traded = p_a <= p_b;
    let volume = match fees {
        FeeScheme::LinearDemand { kbar, .. } if traded => Some(0.5 * kbar * (p_b - p_a)),
        _ => None,
    };
    Ok(AuctionOutcome {
        p_inf,
        p_a,
        p_b,
        sigma_a,
        sigma_b,
        traded,
        trade_price: traded.then_some(0.5 * (p_a + p_b)),
        volume,
    })
}

/// Chunk boundaries covering `[first, first + n)`.
fn chunks(first: u64, n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| {
            let lo = first + c * CHUNK;
            (lo, (lo + CHUNK).min(first + n))
        })
        .collect()
}

/// Sums `f` over every draw index in `[first, first + n)` in a thread-count independent order.
fn reduce<const K: usize, F>(first: u64, n: u64, f: F) -> Result<[f64; K]>
where
    F: Fn(u64) -> Result<[f64; K]> + Sync,
{
    let partial: Vec<[f64; K]> = chunks(first, n)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = [0.0; K];
            for i in lo..hi {
                let v = f(i)?;
                for k in 0..K {
                    acc[k] += v[k];
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = [0.0; K];
    for p in partial {
        for k in 0..K {
            total[k] += p[k];
        }
    }
    Ok(total)
}

/// Empirical market statistics with standard errors.
pub fn estimate_stats(delta: &Strategy, params: &MarketParams, sim: &SimConfig) -> Result<SimReport> {
    estimate_stats_from(delta, params, sim, 0)
}

/// [`estimate_stats`] over draw indices `[first_draw, first_draw + samples)`.
pub fn estimate_stats_from(delta: &Strategy, params: &MarketParams, sim: &SimConfig, first_draw: u64) -> Result<SimReport> {
    sim.validate()?;
    let n = sim.samples;
    let nf = n as f64;
    let observe = |i: u64| -> Result<(f64, f64, f64)> {
        let o = sample_auction(delta, params, FeeScheme::NoFee, sim, i)?;
        Ok((o.p_a - o.p_b, 0.5 * (o.p_a + o.p_b) - o.p_inf, if o.traded { 1.0 } else { 0.0 }))
    };

    let [s_sum, m_sum, t_sum] = reduce(first_draw, n, |i| {
        let (s, m, t) = observe(i)?;
        Ok([s, m, t])
    })?;
    let (s_mean, m_mean, p) = (s_sum / nf, m_sum / nf, t_sum / nf);

    let [s2, s4, m2, m4] = reduce(first_draw, n, |i| {
        let (s, m, _) = observe(i)?;
        let (ds, dm) = ((s - s_mean).powi(2), (m - m_mean).powi(2));
        Ok([ds, ds * ds, dm, dm * dm])
    })?;
    let (s2, s4, m2, m4) = (s2 / nf, s4 / nf, m2 / nf, m4 / nf);

    Ok(SimReport {
        stats: PairStats { spread_mean: s_mean, spread_var: s2, mid_error_mean: m_mean, mid_error_var: m2, trade_prob: p },
        std_errors: [
            (s2 / nf).sqrt(),
            ((s4 - s2 * s2).max(0.0) / nf).sqrt(),
            (m2 / nf).sqrt(),
            ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
            (p * (1.0 - p) / nf).sqrt(),
        ],
        samples: n,
        seed: sim.seed,
    })
}

/// Posterior law of `P∞` given the seller's signal: mean and standard deviation.
pub fn posterior(p_obs: f64, sigma_a: f64, v_mode: PriorScale) -> (f64, f64) {
    match v_mode {
        PriorScale::Infinite => (p_obs, sigma_a),
        PriorScale::Finite(v) => {
            let total = v * v + sigma_a * sigma_a;
            (p_obs * v * v / total, v * sigma_a / total.sqrt())
        }
    }
}

/// Draw of the opponent and the efficient price given the seller's signal.
struct ConditionalDraw {
    p_inf: f64,
    sigma_b: f64,
    p_b_signal: f64,
}

fn conditional_draw(sigma_a: f64, p_obs: f64, params: &MarketParams, sim: &SimConfig, i: u64) -> ConditionalDraw {
    let mut rng = stream(sim.seed, DOMAIN_CONDITIONAL, i);
    let sigma_b = uniform_sigma(&mut rng, params);
    let z = normal(&mut rng);
    let eta = normal(&mut rng);
    let (m, s) = posterior(p_obs, sigma_a, sim.v_mode);
    let p_inf = m + s * z;
    let eps_a = (p_obs - p_inf) / sigma_a;
    let rho = params.rho();
    let eps_b = rho * eps_a + (1.0 - rho * rho).sqrt() * eta;
    ConditionalDraw { p_inf, sigma_b, p_b_signal: p_inf + sigma_b * eps_b }
}

fn mean_and_se(sum: f64, sum_sq: f64, n: u64) -> McEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    McEstimate { mean, se: (var / nf).sqrt() }
}

/// Seller's expected gain `E[(mid − P∞) 1{P^a ≤ P^b} | P∞|a = p_obs, σa]` when quoting `p_obs + x`.
pub fn estimate_conditional_payoff(
    x: f64,
    sigma_a: f64,
    p_obs: f64,
    delta: &Strategy,
    params: &MarketParams,
    sim: &SimConfig,
) -> Result<McEstimate> {
    sim.validate()?;
    let [s, s2] = reduce(0, sim.samples, |i| {
        let d = conditional_draw(sigma_a, p_obs, params, sim, i);
        let p_a = p_obs + x;
        let p_b = d.p_b_signal - delta.eval(d.sigma_b)?;
        let g = if p_a <= p_b { 0.5 * (p_a + p_b) - d.p_inf } else { 0.0 };
        Ok([g, g * g])
    })?;
    Ok(mean_and_se(s, s2, sim.samples))
}

/// Limit (`v → ∞`) payoff by sampling its expectation form; the Monte Carlo counterpart of
/// the quadrature base payoff.
pub fn estimate_limit_payoff(x: f64, sigma_a: f64, delta: &Strategy, params: &MarketParams, samples: u64, seed: u64) -> Result<McEstimate> {
    let sim = SimConfig::new(samples, seed, PriorScale::Infinite)?;
    estimate_conditional_payoff(x, sigma_a, 0.0, delta, params, &sim)
}

/// Volume-weighted gain under linear demand schedules of common slope `k̄`, minus the
/// `γx²` penalty, in the `v → ∞` limit.
pub fn estimate_half_linear_payoff(
    x: f64,
    sigma_a: f64,
    delta: &Strategy,
    params: &MarketParams,
    fees: FeeScheme,
    sim: &SimConfig,
) -> Result<McEstimate> {
    let FeeScheme::LinearDemand { kbar, gamma } = fees else {
        return Err(Error::WrongScheme { expected: "linear_demand", got: fees.name().to_string() });
    };
    sim.validate()?;
    let limit = SimConfig { v_mode: PriorScale::Infinite, ..*sim };
    let [s, s2] = reduce(0, sim.samples, |i| {
        let d = conditional_draw(sigma_a, 0.0, params, &limit, i);
        let p_a = x;
        let p_b = d.p_b_signal - delta.eval(d.sigma_b)?;
        let g = if p_a <= p_b { 0.5 * kbar * (p_b - p_a) * (0.5 * (p_a + p_b) - d.p_inf) } else { 0.0 };
        Ok([g, g * g])
    })?;
    let mut est = mean_and_se(s, s2, sim.samples);
    est.mean -= gamma * x * x;
    Ok(est)
}

/// Conditional moments of `P∞` given `P∞|a = p_obs`, recovered by least squares on the
/// forward model `P∞ ~ N(0, v²)`, `P∞|a = P∞ + σa εa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorEstimate {
    pub mean: f64,
    pub mean_se: f64,
    pub var: f64,
    pub var_se: f64,
}

pub fn estimate_posterior_moments(sigma_a: f64, p_obs: f64, sim: &SimConfig) -> Result<PosteriorEstimate> {
    sim.validate()?;
    let PriorScale::Finite(v) = sim.v_mode else {
        return Err(Error::InvalidParams("posterior moments need a finite prior scale".into()));
    };
    if sim.samples < 3 {
        return Err(Error::InvalidParams("posterior moments need at least 3 samples".into()));
    }
    let n = sim.samples;
    let nf = n as f64;
    let draw = |i: u64| {
        let mut rng = stream(sim.seed, DOMAIN_JOINT, i);
        let p_inf = v * normal(&mut rng);
        (p_inf + sigma_a * normal(&mut rng), p_inf)
    };
    let [sx, sy] = reduce(0, n, |i| {
        let (x, y) = draw(i);
        Ok([x, y])
    })?;
    let (mx, my) = (sx / nf, sy / nf);
    let [sxx, sxy] = reduce(0, n, |i| {
        let (x, y) = draw(i);
        Ok([(x - mx) * (x - mx), (x - mx) * (y - my)])
    })?;
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let [sse] = reduce(0, n, |i| {
        let (x, y) = draw(i);
        Ok([(y - intercept - slope * x).powi(2)])
    })?;
    let var = sse / (nf - 2.0);
    Ok(PosteriorEstimate {
        mean: intercept + slope * p_obs,
        mean_se: (var * (1.0 / nf + (p_obs - mx).powi(2) / sxx)).sqrt(),
        var,
        var_se: var * (2.0 / (nf - 2.0)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmath::norm_sf;

    fn base_market() -> MarketParams {
        MarketParams::limit(0.1, 1.1, 0.0).unwrap()
    }

    #[test]
    fn draws_are_reproducible() {
        let p = base_market();
        let d = Strategy::constant(&p, 11, 0.2).unwrap();
        let sim = SimConfig::new(10, 42, PriorScale::Finite(3.0)).unwrap();
        let a = sample_auction(&d, &p, FeeScheme::NoFee, &sim, 17).unwrap();
        let b = sample_auction(&d, &p, FeeScheme::NoFee, &sim, 17).unwrap();
        assert_eq!(a, b);
        let c = sample_auction(&d, &p, FeeScheme::NoFee, &sim, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn outcome_invariants() {
        let p = base_market();
        let d = Strategy::constant(&p, 11, 0.1).unwrap();
        let sim = SimConfig::new(1, 1, PriorScale::Infinite).unwrap();
        let fees = FeeScheme::LinearDemand { kbar: 2.0, gamma: 0.0 };
        for i in 0..200 {
            let o = sample_auction(&d, &p, fees, &sim, i).unwrap();
            assert_eq!(o.traded, o.p_a <= o.p_b);
            assert_eq!(o.p_inf, 0.0);
            if o.traded {
                assert_eq!(o.trade_price, Some(0.5 * (o.p_a + o.p_b)));
                assert_eq!(o.volume, Some(o.p_b - o.p_a));
            } else {
                assert!(o.trade_price.is_none() && o.volume.is_none());
            }
            assert!((0.1..=1.1).contains(&o.sigma_a) && (0.1..=1.1).contains(&o.sigma_b));
        }
    }

    #[test]
    fn near_perfect_correlation_concentrates_the_spread() {
        let p = MarketParams::limit(0.8, 0.8, 0.9999).unwrap();
        let d = Strategy::constant(&p, 2, 0.0).unwrap();
        let r = estimate_stats(&d, &p, &SimConfig::new(20_000, 3, PriorScale::Infinite).unwrap()).unwrap();
        let expected = 2.0 * 0.64 * (1.0 - 0.9999);
        assert!((r.stats.spread_var - expected).abs() < 4.0 * r.std_errors[1] + 1e-12);
    }

    #[test]
    fn symmetric_trade_probability() {
        let p = base_market();
        let d = Strategy::constant(&p, 11, 0.0).unwrap();
        let r = estimate_stats(&d, &p, &SimConfig::new(100_000, 9, PriorScale::Infinite).unwrap()).unwrap();
        assert!((r.stats.trade_prob - 0.5).abs() <= 4.0 * r.std_errors[4]);
        assert!(r.stats.mid_error_mean.abs() <= 4.0 * r.std_errors[2]);
    }

    #[test]
    fn report_is_bit_identical_across_thread_counts() {
        let p = base_market();
        let d = Strategy::from_fn(&p, 21, |s| 0.1 * s).unwrap();
        let sim = SimConfig::new(50_000, 5, PriorScale::Finite(2.0)).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| estimate_stats(&d, &p, &sim)).unwrap();
        let b = estimate_stats(&d, &p, &sim).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn posterior_formula() {
        let (m, s) = posterior(5.0, 1.0, PriorScale::Finite(1.0));
        assert_eq!(m, 2.5);
        assert!((s * s - 0.5).abs() < 1e-15);
        assert_eq!(posterior(5.0, 0.3, PriorScale::Infinite), (5.0, 0.3));
    }

    #[test]
    fn far_quote_never_trades() {
        let p = base_market();
        let d = Strategy::constant(&p, 11, 0.2).unwrap();
        let sim = SimConfig::new(2_000, 1, PriorScale::Finite(10.0)).unwrap();
        let e = estimate_conditional_payoff(1e3, 0.5, 0.0, &d, &p, &sim).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn symmetric_limit_payoff() {
        // σ− = σ+, ρ = 0, δ ≡ 0: the limit payoff is (x/2)(1 − Φ(x/(σ√2)))
        let p = MarketParams::limit(1.0, 1.0, 0.0).unwrap();
        let d = Strategy::constant(&p, 2, 0.0).unwrap();
        let e = estimate_limit_payoff(0.4, 1.0, &d, &p, 200_000, 11).unwrap();
        let exact = 0.2 * norm_sf(0.4 / 2f64.sqrt());
        assert!((e.mean - exact).abs() <= 4.0 * e.se);
    }

    #[test]
    fn half_linear_requires_linear_demand() {
        let p = base_market();
        let d = Strategy::constant(&p, 11, 0.2).unwrap();
        let sim = SimConfig::new(10, 1, PriorScale::Infinite).unwrap();
        assert!(matches!(
            estimate_half_linear_payoff(0.1, 0.5, &d, &p, FeeScheme::SpreadQuad { gamma: 1.0 }, &sim),
            Err(Error::WrongScheme { .. })
        ));
    }

    #[test]
    fn slope_is_a_global_factor() {
        let p = base_market();
        let d = Strategy::constant(&p, 11, 0.2).unwrap();
        let sim = SimConfig::new(20_000, 4, PriorScale::Infinite).unwrap();
        let one = estimate_half_linear_payoff(0.1, 0.5, &d, &p, FeeScheme::LinearDemand { kbar: 1.0, gamma: 0.0 }, &sim).unwrap();
        let two = estimate_half_linear_payoff(0.1, 0.5, &d, &p, FeeScheme::LinearDemand { kbar: 2.0, gamma: 0.0 }, &sim).unwrap();
        assert!((two.mean - 2.0 * one.mean).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1, PriorScale::Infinite).is_err());
        assert!(SimConfig::new(1, 1, PriorScale::Finite(-1.0)).is_err());
    }
}
