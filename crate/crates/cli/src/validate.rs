//! Self-check suite run against the configured market.

use ael_core::equilibrium::{no_ne_certificate, solve_degenerate, solve_fixed_point, verify_ne, SolverConfig};
use ael_core::exchange::optimal_gamma_degenerate;
use ael_core::model::{analytic_stats, FeeScheme, MarketParams, Strategy};
use ael_core::payoff::PayoffContext;
use ael_core::simulator::{estimate_half_linear_payoff, estimate_limit_payoff, estimate_stats};
use ael_core::Error as CoreError;

use crate::commands::load_strategy;
use crate::config::RunConfig;
use crate::error::CliError;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckResult = Result<(bool, String), CliError>;
type CheckFn<'a> = Box<dyn Fn() -> CheckResult + 'a>;

fn sigma_points(m: &MarketParams, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| m.sigma_minus() + (m.sigma_plus() - m.sigma_minus()) * (i as f64 + 0.5) / n as f64)
        .collect()
}

fn penalty(cfg: &RunConfig) -> f64 {
    if cfg.fees.gamma() > 0.0 {
        cfg.fees.gamma()
    } else {
        1.0
    }
}

fn derivatives(cfg: &RunConfig, delta: &Strategy) -> CheckResult {
    let g = penalty(cfg);
    let kbar = match cfg.fees {
        FeeScheme::LinearDemand { kbar, .. } => kbar,
        _ => 1.0,
    };
    let rule = cfg.solver.rule()?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for sa in sigma_points(&cfg.market, 5) {
        let ctx = PayoffContext::new(sa, delta, &cfg.market, FeeScheme::NoFee, &rule)?;
        for f in [FeeScheme::NoFee, FeeScheme::MidQuad { gamma: g }, FeeScheme::SpreadQuad { gamma: g }, FeeScheme::LinearDemand { kbar, gamma: g }] {
            let c = ctx.with_fees(f)?;
            for i in 0..5 {
                let x = -0.5 + 0.4 * i as f64;
                let fd1 = (c.penalized_payoff(x + h) - c.penalized_payoff(x - h)) / (2.0 * h);
                let fd2 = (c.payoff_deriv(x + h) - c.payoff_deriv(x - h)) / (2.0 * h);
                worst = worst.max((c.payoff_deriv(x) - fd1).abs()).max((c.payoff_second_deriv(x) - fd2).abs());
            }
        }
    }
    Ok((worst <= 1e-6, format!("max |analytic - finite difference| = {worst:.2e} (limit 1e-6)")))
}

fn payoff_mc(cfg: &RunConfig, delta: &Strategy) -> CheckResult {
    let rule = cfg.solver.rule()?;
    let mut worst: f64 = 0.0;
    for (k, sa) in sigma_points(&cfg.market, 3).into_iter().enumerate() {
        let x = 0.1 + 0.2 * k as f64;
        let ctx = PayoffContext::new(sa, delta, &cfg.market, FeeScheme::NoFee, &rule)?;
        let mc = estimate_limit_payoff(x, sa, delta, &cfg.market, cfg.sim.samples, cfg.sim.seed.wrapping_add(k as u64))?;
        worst = worst.max((mc.mean - ctx.base_payoff(x)).abs() / mc.se.max(f64::MIN_POSITIVE));
    }
    Ok((worst <= 4.0, format!("worst deviation {worst:.2} SE over 3 points (limit 4)")))
}

fn half_linear_mc(cfg: &RunConfig, delta: &Strategy) -> CheckResult {
    let fees = match cfg.fees {
        f @ FeeScheme::LinearDemand { .. } => f,
        _ => FeeScheme::LinearDemand { kbar: 1.0, gamma: 0.0 },
    };
    let sa = 0.5 * (cfg.market.sigma_minus() + cfg.market.sigma_plus());
    let ctx = PayoffContext::new(sa, delta, &cfg.market, fees, &cfg.solver.rule()?)?;
    let mc = estimate_half_linear_payoff(0.3, sa, delta, &cfg.market, fees, &cfg.sim)?;
    let z = (mc.mean - ctx.half_linear_payoff(0.3)?).abs() / mc.se.max(f64::MIN_POSITIVE);
    Ok((z <= 4.0, format!("deviation {z:.2} SE (limit 4)")))
}

fn market_stats(cfg: &RunConfig, delta: &Strategy) -> CheckResult {
    let analytic = analytic_stats(delta, &cfg.market, &cfg.solver.rule()?)?;
    let r = estimate_stats(delta, &cfg.market, &cfg.sim)?;
    let mut worst: f64 = 0.0;
    for ((a, e), se) in analytic.to_array().iter().zip(r.stats.to_array()).zip(r.std_errors) {
        let z = if se > 0.0 { (a - e).abs() / se } else if (a - e).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
    }
    Ok((worst <= 4.0, format!("worst of five statistics {worst:.2} SE (limit 4)")))
}

fn degenerate(cfg: &RunConfig) -> CheckResult {
    let sigma = cfg.market.sigma_plus();
    let rho = cfg.market.rho();
    let best = optimal_gamma_degenerate(sigma, rho)?;
    let point = MarketParams::limit(sigma, sigma, rho)?;
    let fees = FeeScheme::SpreadQuad { gamma: best.gamma_star };
    let root = solve_degenerate(&point, fees)?;
    let closed = (root - best.delta_star).abs();
    let near = MarketParams::limit(sigma * (1.0 - 1e-6), sigma, rho)?;
    let solver = SolverConfig { grid_n: 11, ..cfg.solver };
    let r = solve_fixed_point(&near, fees, &solver)?;
    let spread = r.strategy.values().iter().map(|v| (v - root).abs()).fold(0.0, f64::max);
    Ok((
        closed <= 1e-8 && r.converged && spread <= 1e-5,
        format!("|root - closed form| = {closed:.1e}, near-degenerate solve off by {spread:.1e}"),
    ))
}

fn certificate(cfg: &RunConfig, delta: &Strategy) -> CheckResult {
    let zero = no_ne_certificate(&Strategy::constant(&cfg.market, cfg.solver.grid_n, 0.0)?, &cfg.market)?;
    let here = no_ne_certificate(delta, &cfg.market)?;
    Ok((
        (zero - 0.25).abs() <= 1e-10 && here > 0.0,
        format!("certificate(0) = {zero:.12}, certificate(strategy) = {here:.6e}"),
    ))
}

fn equilibrium(cfg: &RunConfig) -> CheckResult {
    if let Err(CoreError::AssumptionViolated { rho, limit }) = cfg.market.check_equilibrium_assumption() {
        return Ok((false, format!("assumption violated: rho = {rho} exceeds sigma_minus/sigma_plus = {limit}")));
    }
    let fees = match cfg.fees {
        f @ (FeeScheme::SpreadQuad { .. } | FeeScheme::LinearDemand { .. }) if f.gamma() > 0.0 => f,
        _ => FeeScheme::SpreadQuad { gamma: penalty(cfg) },
    };
    let r = solve_fixed_point(&cfg.market, fees, &cfg.solver)?;
    let gain = verify_ne(&r.strategy, &cfg.market, fees, 200)?;
    Ok((
        r.converged && r.residual <= 1e-6 && gain <= 1e-6,
        format!("{} gamma={}: converged={} residual={:.1e} deviation gain={gain:.1e}", fees.name(), fees.gamma(), r.converged, r.residual),
    ))
}

pub fn run(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let delta = load_strategy(cfg)?;
    let checks: [(&'static str, CheckFn); 7] = [
        ("derivatives", Box::new(|| derivatives(cfg, &delta))),
        ("payoff_monte_carlo", Box::new(|| payoff_mc(cfg, &delta))),
        ("half_linear_monte_carlo", Box::new(|| half_linear_mc(cfg, &delta))),
        ("market_statistics", Box::new(|| market_stats(cfg, &delta))),
        ("degenerate_consistency", Box::new(|| degenerate(cfg))),
        ("no_ne_certificate", Box::new(|| certificate(cfg, &delta))),
        ("equilibrium", Box::new(|| equilibrium(cfg))),
    ];
    let mut out = Vec::new();
    for (name, f) in checks.iter() {
        eprintln!("running {name}");
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, e.to_string()),
        };
        out.push(Check { name, passed, detail });
    }
    Ok(out)
}

pub fn render(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!("{:<24} {} {}\n", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} passed, {failed} failed\n", checks.len() - failed));
    s
}
