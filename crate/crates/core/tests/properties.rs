use ael_core::equilibrium::{degenerate_foc, no_ne_certificate, solve_degenerate};
use ael_core::gaussmath::{norm_cdf, norm_sf, QuadratureRule};
use ael_core::model::{FeeScheme, MarketParams, Strategy as Delta};
use ael_core::payoff::PayoffContext;
use proptest::prelude::*;

fn market() -> impl proptest::strategy::Strategy<Value = MarketParams> {
    (0.05f64..1.0, 0.01f64..1.5, 0.0f64..1.0).prop_map(|(lo, width, t)| {
        let hi = lo + width;
        // ρ drawn inside [−0.9, σ−/σ+]
        let rho = -0.9 + t * (lo / hi + 0.9);
        MarketParams::limit(lo, hi, rho).unwrap()
    })
}

fn fees() -> impl proptest::strategy::Strategy<Value = FeeScheme> {
    prop_oneof![
        Just(FeeScheme::NoFee),
        (0.01f64..5.0).prop_map(|gamma| FeeScheme::MidQuad { gamma }),
        (0.01f64..5.0).prop_map(|gamma| FeeScheme::SpreadQuad { gamma }),
        (0.1f64..3.0, 0.0f64..5.0).prop_map(|(kbar, gamma)| FeeScheme::LinearDemand { kbar, gamma }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_finite_differences(p in market(), f in fees(), t in 0.0f64..1.0, x in -1.0f64..1.5, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let d = Delta::from_fn(&p, 21, |s| a + b * s).unwrap();
        let sa = p.sigma_minus() + t * (p.sigma_plus() - p.sigma_minus());
        let ctx = PayoffContext::new(sa, &d, &p, f, &QuadratureRule::default_rule()).unwrap();
        let h = 1e-4;
        let fd1 = (ctx.penalized_payoff(x + h) - ctx.penalized_payoff(x - h)) / (2.0 * h);
        prop_assert!((ctx.payoff_deriv(x) - fd1).abs() <= 1e-6);
        let fd2 = (ctx.payoff_deriv(x + h) - ctx.payoff_deriv(x - h)) / (2.0 * h);
        prop_assert!((ctx.payoff_second_deriv(x) - fd2).abs() <= 1e-6);
    }

    #[test]
    fn derivative_is_positive_left_of_zero(p in market(), g in 0.0f64..5.0, t in 0.0f64..1.0, x in -5.0f64..=0.0, a in 0.0f64..1.0) {
        let d = Delta::from_fn(&p, 21, |s| a * s).unwrap();
        let sa = p.sigma_minus() + t * (p.sigma_plus() - p.sigma_minus());
        let ctx = PayoffContext::new(sa, &d, &p, FeeScheme::SpreadQuad { gamma: g }, &QuadratureRule::default_rule()).unwrap();
        prop_assert!(ctx.payoff_deriv(x) > 0.0);
    }

    #[test]
    fn certificate_is_positive(p in market(), a in 0.0f64..1e3, b in 0.0f64..10.0) {
        let d = Delta::from_fn(&p, 21, |s| a * s / p.sigma_plus() + b).unwrap();
        let v = no_ne_certificate(&d, &p).unwrap();
        prop_assert!(v >= 0.0 && v <= 0.25 + 1e-14);
        if a + b < 30.0 {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn degenerate_root_solves_its_condition(sigma in 0.05f64..5.0, rho in -0.9f64..0.9, g in 0.01f64..100.0, kbar in 0.1f64..3.0) {
        let p = MarketParams::limit(sigma, sigma, rho).unwrap();
        for f in [FeeScheme::SpreadQuad { gamma: g }, FeeScheme::LinearDemand { kbar, gamma: g }] {
            let r = solve_degenerate(&p, f).unwrap();
            prop_assert!(r > 0.0);
            prop_assert!(degenerate_foc(&p, f).unwrap()(r).abs() <= 1e-12 * g.max(1.0));
        }
    }

    #[test]
    fn normal_cdf_symmetry(x in -8.0f64..8.0) {
        prop_assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() <= 1e-14);
        prop_assert!((norm_sf(x) - norm_cdf(-x)).abs() <= 1e-15);
    }
}
