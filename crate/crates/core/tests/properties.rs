use knowledge_core::funding::{researcher_with_rewards, scheme_from_choice, FundingParams, FundingScheme, RewardTech};
use knowledge_core::moonshot::{conservative_bound, moonshot_flow_benefit, NpvMode};
use knowledge_core::researcher::{opt_deepen, opt_expand, payoff};
use knowledge_core::specfun::{ctilde_prime, ctilde_prime_inv, erf, erf_inv, lambert_w0};
use knowledge_core::valuation::{benefit, value_of_knowledge};
use knowledge_core::{make_knowledge, EconomyParams, KnowledgePoint, Length};
use proptest::prelude::*;

fn knowledge_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-20.0f64..20.0, -3.0f64..3.0), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn erf_inv_inverts_erf(p in -0.999_999f64..0.999_999) {
        let x = erf_inv(p).unwrap();
        prop_assert!((erf(x) - p).abs() < 1e-14);
    }

    #[test]
    fn slope_inverse_round_trip(rho in 1e-6f64..0.999_999) {
        let back = ctilde_prime_inv(ctilde_prime(rho).unwrap()).unwrap();
        prop_assert!((back - rho).abs() < 1e-11);
    }

    #[test]
    fn lambert_defining_identity(x in -0.367_879f64..1e6) {
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1e-3));
    }

    #[test]
    fn deepening_benefit_is_symmetric_and_nonnegative(x in 0.1f64..30.0, t in 0.0f64..=1.0, q in 0.2f64..3.0) {
        let d = t * x / 2.0;
        let a = benefit(d, Length::Finite(x), q).unwrap();
        let b = benefit(x - d, Length::Finite(x), q);
        // d > X/2 is outside the canonical range
        prop_assert!(b.is_err() || (a - b.unwrap()).abs() < 1e-12 * (1.0 + a.abs()));
        prop_assert!(a >= -1e-12);
    }

    #[test]
    fn interior_discovery_never_hurts(pts in knowledge_strategy(), u in 0.0f64..1.0, q in 0.3f64..3.0) {
        let f = make_knowledge(pts.iter().map(|&(x, y)| KnowledgePoint::new(x, y)).collect());
        prop_assume!(f.is_ok());
        let f = f.unwrap();
        let x = f.left_frontier() + u * (f.right_frontier() - f.left_frontier());
        prop_assume!(f.points().iter().all(|p| p.x != x));
        let g = f.insert(KnowledgePoint::new(x, 0.0)).unwrap();
        prop_assert!(value_of_knowledge(&g, q).unwrap() >= value_of_knowledge(&f, q).unwrap() - 1e-12);
    }

    #[test]
    fn optimal_choices_beat_nearby_alternatives(eta in 0.05f64..10.0, x in 0.5f64..15.0, dr in -0.05f64..0.05, dd in -0.05f64..0.05) {
        let p = EconomyParams::new(1.0, eta).unwrap();
        let e = opt_expand(&p).unwrap();
        prop_assert!(e.d > 2.0 && e.d < 3.0);
        let alt = payoff((e.rho + dr).clamp(0.0, 0.999), (e.d + dd).max(1e-6), Length::Infinite, &p).unwrap();
        prop_assert!(e.payoff >= alt - 1e-12);
        let c = opt_deepen(x, &p).unwrap();
        let d = (c.d + dd).clamp(1e-6, x / 2.0);
        let alt = payoff((c.rho + dr).clamp(0.0, 0.999), d, Length::Finite(x), &p).unwrap();
        prop_assert!(c.payoff >= alt - 1e-12);
    }

    #[test]
    fn funding_round_trip(zeta in 0.05f64..2.0, eta in 0.5f64..1.5) {
        let fp = FundingParams::new(3.0, 16.0, 6.0, 1.0, RewardTech::PiecewiseLinear).unwrap();
        let pt = researcher_with_rewards(&FundingScheme { zeta, h: 0.0, eta }, &fp, 1.0).unwrap();
        prop_assert!(pt.d <= 6.0);
        prop_assume!(pt.d < 6.0 - 1e-9);
        let (e, z) = scheme_from_choice(pt.d, pt.rho, 6.0, 1.0).unwrap();
        prop_assert!((e - eta).abs() < 1e-6 && (z - zeta).abs() < 1e-6);
    }

    #[test]
    fn exponential_rewards_respect_grid_oracle(zeta in 0.0f64..3.0, eta in 0.3f64..2.0, s in 0.2f64..2.0) {
        let fp = FundingParams::new(0.0, 1.0, s, 1.0, RewardTech::Exponential).unwrap();
        let pt = researcher_with_rewards(&FundingScheme { zeta, h: 0.0, eta }, &fp, 1.0).unwrap();
        let mut best = 0.0f64;
        for i in 1..=300 {
            let d = 12.0 * i as f64 / 300.0;
            let b = d - d * d / 6.0 + zeta * (1.0 - (-s * d).exp());
            for j in 0..300 {
                let r = j as f64 / 300.0;
                let i = erf_inv(r).unwrap();
                best = best.max(r * b - eta * i * i * d);
            }
        }
        prop_assert!(pt.payoff >= best - 1e-9);
        prop_assert!(pt.payoff - best < 5e-2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservative_bound_is_a_lower_bound(eta in 0.02f64..3.0, delta in 0.05f64..0.99) {
        let p = EconomyParams::new(1.0, eta).unwrap();
        let exact = moonshot_flow_benefit(6.0, &p, delta, NpvMode::ConsistentFoc).unwrap();
        let bound = conservative_bound(&p, delta, NpvMode::ConsistentFoc).unwrap();
        prop_assert!(bound <= exact + 1e-12);
    }
}
