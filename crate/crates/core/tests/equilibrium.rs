use ael_core::equilibrium::*;
use ael_core::exchange::{mean_sq_delta, revenue, revenue_curve};
use ael_core::model::{FeeScheme, MarketParams, Strategy};

fn base_market() -> MarketParams {
    MarketParams::limit(0.1, 1.1, 0.0).unwrap()
}

#[test]
fn post_hoc_residual_with_doubled_rule() {
    let p = base_market();
    let cfg = SolverConfig::default();
    let fees = FeeScheme::SpreadQuad { gamma: 2.0 };
    let r = solve_fixed_point(&p, fees, &cfg).unwrap();
    assert!(r.converged && r.residual <= cfg.tol);
    let doubled = SolverConfig { quad_nodes: 2 * cfg.quad_nodes, ..cfg };
    let fresh = best_response_residual(&r.strategy, &p, fees, &doubled).unwrap();
    assert!(fresh <= 10.0 * cfg.tol, "residual {fresh:e} with the doubled rule");
}

#[test]
fn best_response_is_stable_under_grid_refinement() {
    let p = base_market();
    let cfg = SolverConfig::default();
    let fees = FeeScheme::SpreadQuad { gamma: 2.0 };
    let f = |s: f64| 0.03 + 0.02 * s * s;
    let coarse = best_response(&Strategy::from_fn(&p, 101, f).unwrap(), &p, fees, &cfg).unwrap();
    let fine = best_response(&Strategy::from_fn(&p, 201, f).unwrap(), &p, fees, &cfg).unwrap();
    for i in 0..101 {
        assert!((coarse.values()[i] - fine.values()[2 * i]).abs() <= 1e-6);
    }
}

#[test]
fn near_degenerate_market_matches_scalar_root() {
    let near = MarketParams::limit(1.1 - 1e-6, 1.1, 0.0).unwrap();
    let fees = FeeScheme::SpreadQuad { gamma: 0.1 };
    let r = solve_fixed_point(&near, fees, &SolverConfig::default()).unwrap();
    assert!(r.converged);
    let root = solve_degenerate(&MarketParams::limit(1.1, 1.1, 0.0).unwrap(), fees).unwrap();
    assert!(r.strategy.values().iter().all(|v| (v - root).abs() <= 1e-5));
}

#[test]
fn solved_strategies_are_monotone() {
    let p = base_market();
    let cfg = SolverConfig::default();
    let mut previous: Option<Strategy> = None;
    for g in [1.5, 2.0, 3.0, 5.0] {
        let r = solve_fixed_point(&p, FeeScheme::SpreadQuad { gamma: g }, &cfg).unwrap();
        assert!(r.converged && r.concavity_ok);
        let v = r.strategy.values();
        assert!(v.windows(2).all(|w| w[1] >= w[0]), "not increasing in sigma at gamma={g}");
        if let Some(prev) = &previous {
            assert!(prev.values().iter().zip(v).all(|(a, b)| b <= a), "not decreasing in gamma at {g}");
        }
        let cert = no_ne_certificate(&r.strategy, &p).unwrap();
        assert!(cert > 0.0 && cert < 0.25);
        previous = Some(r.strategy);
    }
}

#[test]
fn solved_equilibrium_has_no_profitable_deviation() {
    let p = base_market();
    let fees = FeeScheme::SpreadQuad { gamma: 2.0 };
    let r = solve_fixed_point(&p, fees, &SolverConfig::default()).unwrap();
    assert!(verify_ne(&r.strategy, &p, fees, 400).unwrap() <= 1e-6);
    assert!(verify_ne(&r.strategy, &p, FeeScheme::NoFee, 400).unwrap() > 0.0);
    assert!(verify_ne(&r.strategy, &p, FeeScheme::MidQuad { gamma: 2.0 }, 400).unwrap() > 0.0);
}

#[test]
fn linear_demand_equilibrium() {
    let p = base_market();
    let fees = FeeScheme::LinearDemand { kbar: 1.0, gamma: 1.0 };
    let r = solve_fixed_point(&p, fees, &SolverConfig::default()).unwrap();
    assert!(r.converged && r.concavity_ok);
    assert!(r.gamma_min < 1.0);
    assert!(r.strategy.max_value() <= r.bound_c);
    assert!(verify_ne(&r.strategy, &p, fees, 400).unwrap() <= 1e-6);
}

#[test]
fn heavy_penalty_below_the_analytic_threshold_is_flagged_by_concavity() {
    let p = base_market();
    let r = solve_fixed_point(&p, FeeScheme::SpreadQuad { gamma: 1e-3 }, &SolverConfig::default()).unwrap();
    assert!(!r.concavity_ok);
    let curve = revenue_curve(&[1e-3, 2.0], &p, FeeScheme::SpreadQuad { gamma: 1.0 }, &SolverConfig::default()).unwrap();
    assert!(!curve[0].valid());
    assert!(curve[1].valid() && curve[1].revenue > 0.0);
}

#[test]
fn empirical_threshold_is_reported() {
    let p = base_market();
    let grid = [1e-3, 5e-3, 0.01, 0.1, 1.5];
    let t = empirical_gamma_threshold(&p, FeeScheme::SpreadQuad { gamma: 1.0 }, &grid, &SolverConfig::default()).unwrap();
    assert!(matches!(t, Some(g) if g <= 1.5));
}

#[test]
fn revenue_is_continuous_and_decreasing_on_base_market() {
    let p = base_market();
    let cfg = SolverConfig::default();
    let a = revenue(2.0, &p, &cfg).unwrap();
    let step = |h: f64| (revenue(2.0 + h, &p, &cfg).unwrap() - a).abs();
    let (d1, d2) = (step(1e-3), step(5e-4));
    assert!(d1 < 1e-4 && d2 < 0.6 * d1);
    let grid: Vec<f64> = (0..8).map(|i| 1.5 + 0.5 * i as f64).collect();
    let curve = revenue_curve(&grid, &p, FeeScheme::SpreadQuad { gamma: 1.0 }, &cfg).unwrap();
    assert!(curve.iter().all(|c| c.valid()));
    assert!(curve.windows(2).all(|w| w[1].revenue <= w[0].revenue));
}

#[test]
fn revenue_matches_quadrature_of_solved_strategy() {
    let p = base_market();
    let cfg = SolverConfig::default();
    let r = solve_fixed_point(&p, FeeScheme::SpreadQuad { gamma: 3.0 }, &cfg).unwrap();
    let direct = 3.0 * mean_sq_delta(&r.strategy, &p, &cfg).unwrap();
    assert!((revenue(3.0, &p, &cfg).unwrap() - direct).abs() < 1e-15);
}

#[test]
fn parallel_solve_is_deterministic() {
    let p = base_market();
    let cfg = SolverConfig::default();
    let fees = FeeScheme::SpreadQuad { gamma: 2.0 };
    let a = solve_fixed_point(&p, fees, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| solve_fixed_point(&p, fees, &cfg)).unwrap();
    assert_eq!(a, b);
}
