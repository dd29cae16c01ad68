use ael_core::equilibrium::{no_ne_certificate, solve_fixed_point};
use ael_core::exchange::{optimal_gamma_degenerate, optimal_gamma_from_curve, revenue_curve};
use ael_core::model::{analytic_stats, FeeScheme, PairStats, Strategy};
use ael_core::payoff::PayoffContext;
use ael_core::simulator::estimate_stats;

use crate::config::{RunConfig, StrategySource};
use crate::csv::{num, read_strategy, Table};
use crate::error::CliError;

pub fn load_strategy(cfg: &RunConfig) -> Result<Strategy, CliError> {
    let s = match &cfg.strategy {
        StrategySource::Constant(d) => Strategy::constant(&cfg.market, cfg.solver.grid_n, *d)?,
        StrategySource::File(path) => read_strategy(path)?,
    };
    let (lo, hi) = s.domain();
    let tol = 1e-12 * cfg.market.sigma_plus();
    if lo > cfg.market.sigma_minus() + tol || hi < cfg.market.sigma_plus() - tol {
        return Err(CliError::Config(format!(
            "strategy covers [{lo}, {hi}] but the market needs [{}, {}]",
            cfg.market.sigma_minus(),
            cfg.market.sigma_plus()
        )));
    }
    Ok(s)
}

fn require_equilibrium_scheme(fees: FeeScheme) -> Result<(), CliError> {
    match fees {
        FeeScheme::NoFee => Err(CliError::NoEquilibrium(
            "without fees there is no Nash equilibrium: the averaged first-order condition \
             E[(1 - Phi((delta_a + delta_b)/Sigma))/2] is strictly positive for every finite strategy"
                .into(),
        )),
        FeeScheme::MidQuad { .. } => Err(CliError::NoEquilibrium(
            "a mid-price error penalty alone admits no equilibrium with finite spreads; use spread_quad or linear_demand".into(),
        )),
        FeeScheme::LinearDemand { gamma: 0.0, .. } => Err(CliError::NoEquilibrium(
            "linear demand schedules need gamma > 0 for an equilibrium to exist".into(),
        )),
        _ => Ok(()),
    }
}

fn stat_cells(s: &PairStats) -> Vec<String> {
    s.to_array().iter().map(|v| num(*v)).collect()
}

pub fn stats(cfg: &RunConfig, simulate: bool) -> Result<Table, CliError> {
    let delta = load_strategy(cfg)?;
    let analytic = analytic_stats(&delta, &cfg.market, &cfg.solver.rule()?)?;
    let mut columns: Vec<String> = PairStats::NAMES.iter().map(|n| n.to_string()).collect();
    let mut cells = stat_cells(&analytic);
    if simulate {
        eprintln!("simulating {} auctions (seed {})", cfg.sim.samples, cfg.sim.seed);
        let r = estimate_stats(&delta, &cfg.market, &cfg.sim)?;
        columns.extend(PairStats::NAMES.iter().map(|n| format!("mc_{n}")));
        columns.extend(PairStats::NAMES.iter().map(|n| format!("se_{n}")));
        cells.extend(stat_cells(&r.stats));
        cells.extend(r.std_errors.iter().map(|v| num(*v)));
    }
    let mut t = Table::new("stats", cfg, &[]).with_columns(columns);
    t.row(cells);
    Ok(t)
}

pub fn simulate(cfg: &RunConfig) -> Result<Table, CliError> {
    let delta = load_strategy(cfg)?;
    let analytic = analytic_stats(&delta, &cfg.market, &cfg.solver.rule()?)?;
    eprintln!("simulating {} auctions (seed {})", cfg.sim.samples, cfg.sim.seed);
    let r = estimate_stats(&delta, &cfg.market, &cfg.sim)?;
    let mut t = Table::new("simulate", cfg, &["statistic", "analytic", "empirical", "std_error"]);
    for (i, name) in PairStats::NAMES.iter().enumerate() {
        t.row(vec![name.to_string(), num(analytic.to_array()[i]), num(r.stats.to_array()[i]), num(r.std_errors[i])]);
    }
    Ok(t)
}

/// Returns the table and whether every γ converged.
pub fn solve_ne(cfg: &RunConfig) -> Result<(Table, bool), CliError> {
    require_equilibrium_scheme(cfg.fees)?;
    cfg.market.check_equilibrium_assumption()?;
    let gammas = cfg.gamma_list();
    let mut reports = Vec::with_capacity(gammas.len());
    for &g in &gammas {
        eprintln!("solving equilibrium at gamma={g}");
        let r = solve_fixed_point(&cfg.market, cfg.fees.with_gamma(g), &cfg.solver)?;
        eprintln!("  converged={} iterations={} residual={:e}", r.converged, r.iterations, r.residual);
        reports.push(r);
    }
    let mut columns = vec!["sigma".to_string()];
    columns.extend(gammas.iter().map(|g| format!("delta_gamma_{g}")));
    let mut t = Table::new("solve-ne", cfg, &[]).with_columns(columns);
    let grid = reports[0].strategy.grid().to_vec();
    for (i, s) in grid.iter().enumerate() {
        let mut row = vec![num(*s)];
        row.extend(reports.iter().map(|r| num(r.strategy.values()[i])));
        t.row(row);
    }
    for (g, r) in gammas.iter().zip(&reports) {
        t.note(format!(
            "gamma={g} converged={} concavity_ok={} residual={} iterations={} bound_C={} gamma_min={} no_ne_certificate={}",
            r.converged,
            r.concavity_ok,
            num(r.residual),
            r.iterations,
            num(r.bound_c),
            num(r.gamma_min),
            num(no_ne_certificate(&r.strategy, &cfg.market)?)
        ));
    }
    Ok((t, reports.iter().all(|r| r.converged)))
}

pub fn optimal_fee(cfg: &RunConfig) -> Result<(Table, bool), CliError> {
    require_equilibrium_scheme(cfg.fees)?;
    cfg.market.check_equilibrium_assumption()?;
    let gammas = cfg.gamma_list();
    eprintln!("revenue sweep over {} gamma values", gammas.len());
    let curve = revenue_curve(&gammas, &cfg.market, cfg.fees, &cfg.solver)?;
    let mut t = Table::new("optimal-fee", cfg, &["gamma", "revenue", "converged", "concavity_ok", "residual", "iterations"]);
    for p in &curve {
        t.row(vec![num(p.gamma), num(p.revenue), p.converged.to_string(), p.concavity_ok.to_string(), num(p.residual), p.iterations.to_string()]);
    }
    if cfg.market.is_degenerate() {
        let d = optimal_gamma_degenerate(cfg.market.sigma_plus(), cfg.market.rho())?;
        t.note(format!(
            "closed_form y_star={} gamma_star={} delta_star={} revenue_total={}",
            num(d.y_star),
            num(d.gamma_star),
            num(d.delta_star),
            num(d.revenue)
        ));
    } else if curve.len() >= 2 && curve.iter().any(|p| p.valid()) {
        let tol = 1e-3 * (gammas[1] - gammas[0]);
        let (g, r) = optimal_gamma_from_curve(&curve, &cfg.market, cfg.fees, &cfg.solver, tol)?;
        t.note(format!("optimum gamma={} revenue={}", num(g), num(r)));
    }
    Ok((t, curve.iter().all(|p| p.converged)))
}

pub fn payoff_curve(cfg: &RunConfig) -> Result<Table, CliError> {
    let delta = load_strategy(cfg)?;
    let grid = cfg.payoff;
    let ctx = PayoffContext::new(grid.sigma_a, &delta, &cfg.market, cfg.fees, &cfg.solver.rule()?)?;
    let mut t = Table::new("payoff-curve", cfg, &["x", "base_payoff", "payoff", "payoff_deriv", "payoff_second_deriv"]);
    for i in 0..grid.points {
        let x = grid.x_min + (grid.x_max - grid.x_min) * i as f64 / (grid.points - 1) as f64;
        t.row(vec![
            num(x),
            num(ctx.base_payoff(x)),
            num(ctx.penalized_payoff(x)),
            num(ctx.payoff_deriv(x)),
            num(ctx.payoff_second_deriv(x)),
        ]);
    }
    Ok(t)
}
