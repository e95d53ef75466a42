use std::sync::Arc;

use proptest::prelude::*;
use swl::construct::GridOperator;
use swl::czd::decompose;
use swl::grid::{norm, DyadicLattice, NormMode};
use swl::maximal::MaximalConfig;
use swl::potential::{critical_radius_field, penalty, penalty_inv};
use swl::verify::measure_operator_norm;
use swl::{CriticalRadiusField, GridFunction, GridSpec, Potential, VectorGridFunction, Weight};

const N: usize = 8;

fn spec() -> GridSpec {
    GridSpec::new(2, N, 2.0).unwrap()
}

fn rho() -> Arc<CriticalRadiusField> {
    Arc::new(critical_radius_field(&Potential::square_norm(spec(), 1.0).unwrap()))
}

fn field() -> impl Strategy<Value = GridFunction> {
    prop::collection::vec(-10.0f64..10.0, N * N).prop_map(|s| GridFunction::new(spec(), s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich(f in field(), theta in 0.0f64..4.0) {
        let m = MaximalConfig::cube(rho(), theta).apply(&f).unwrap();
        let hl = MaximalConfig::hardy_littlewood(spec()).apply(&f).unwrap();
        for i in 0..f.spec().len() {
            prop_assert!(f.get(i).abs() <= m.get(i));
            prop_assert!(m.get(i) <= hl.get(i) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn penalty_is_monotone(t in 0.0f64..50.0, dt in 0.0f64..5.0, theta in 0.0f64..20.0) {
        prop_assert!(penalty(t + dt, theta) >= penalty(t, theta));
        prop_assert!(penalty_inv(t + dt, theta) <= penalty_inv(t, theta));
        prop_assert!((penalty(t, theta) * penalty_inv(t, theta) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn maximal_decreases_in_theta(f in field(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m_lo = MaximalConfig::cube(rho(), lo).apply(&f).unwrap();
        let m_hi = MaximalConfig::cube(rho(), hi).apply(&f).unwrap();
        prop_assert!(m_hi.samples().iter().zip(m_lo.samples()).all(|(h, l)| h <= &(l * (1.0 + 1e-12))));
    }

    #[test]
    fn weak_below_strong(f in field(), p in 1.0f64..6.0, gamma in 0.0f64..2.0) {
        let w = Weight::from_fn(spec(), |x| (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-gamma)).unwrap();
        let weak = norm(&f, p, Some(&w), NormMode::Weak).unwrap();
        let strong = norm(&f, p, Some(&w), NormMode::Strong).unwrap();
        prop_assert!(weak <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn operator_norm_is_scale_invariant(f in field(), c in 0.01f64..100.0, p in 1.2f64..4.0) {
        prop_assume!(f.max_abs() > 0.0);
        let op = MaximalConfig::cube(rho(), 1.0);
        let a = measure_operator_norm(&op, p, None, std::slice::from_ref(&f)).unwrap();
        let b = measure_operator_norm(&op, p, None, &[f.scale(c)]).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn czd_split_reassembles(f in field(), g in field(), lambda in 0.5f64..8.0, theta in 0.0f64..3.0) {
        let v = VectorGridFunction::new(vec![f.clone(), g.clone()]).unwrap();
        let d = decompose(&v, 2.0, lambda, theta, &rho(), DyadicLattice::new(spec())).unwrap();
        for (k, orig) in [f, g].iter().enumerate() {
            let good = &d.good.components()[k];
            let bad = &d.bad.components()[k];
            for i in 0..orig.spec().len() {
                prop_assert_eq!(good.get(i) + bad.get(i), orig.get(i));
            }
        }
        for c in &d.cubes {
            prop_assert!(c.average > lambda);
        }
    }
}
