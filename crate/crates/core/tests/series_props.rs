use num_rational::Rational64;
use proptest::prelude::*;
use solenoid_core::series::{DivisibilityChain, PontryaginSeries, RationalMode};
use solenoid_core::Complex64;

const DENOMS: [i64; 5] = [1, 2, 3, 4, 6];

fn mode(dim: usize) -> impl Strategy<Value = RationalMode> {
    prop::collection::vec((-6i64..=6, 0usize..DENOMS.len()), dim)
        .prop_map(|v| RationalMode::new(v.into_iter().map(|(p, d)| Rational64::new(p, DENOMS[d])).collect()))
}

fn series(dim: usize, max_terms: usize) -> impl Strategy<Value = PontryaginSeries> {
    prop::collection::vec((mode(dim), -1.0f64..1.0, -1.0f64..1.0), 0..max_terms).prop_map(move |terms| {
        let mut g = PontryaginSeries::zero(dim);
        for (q, re, im) in terms {
            let c = Complex64::new(re, im);
            let prev = g.coefficient(&q);
            if prev == Complex64::new(0.0, 0.0) {
                g.add_term(q, c).unwrap();
            }
        }
        g
    })
}

fn any_series() -> impl Strategy<Value = PontryaginSeries> {
    (1usize..=3).prop_flat_map(|d| series(d, 12))
}

/// Chain (1, 2, 4, 12) resolves every level generated by `DENOMS`.
fn resolving_chain() -> DivisibilityChain {
    DivisibilityChain::new(vec![1, 2, 4, 12]).unwrap()
}

fn sorted_coefficients(g: &PontryaginSeries) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = g.terms().map(|(_, c)| (c.re.to_bits(), c.im.to_bits())).collect();
    v.sort_unstable();
    v
}

#[test]
fn level_project_examples() {
    let half = RationalMode::new(vec![Rational64::new(1, 2)]);
    let third = RationalMode::new(vec![Rational64::new(1, 3)]);
    let quarter = RationalMode::new(vec![Rational64::new(1, 4)]);
    let sixth = RationalMode::new(vec![Rational64::new(1, 6)]);
    let one = Complex64::new(1.0, 0.0);
    let g = PontryaginSeries::from_terms(1, vec![(half.clone(), one), (third.clone(), one)]).unwrap();
    let p = g.level_project(2);
    assert_eq!(p.len(), 1);
    assert_eq!(p.coefficient(&half), one);
    let h = PontryaginSeries::from_terms(1, vec![(half.clone(), one), (quarter.clone(), one), (sixth.clone(), one)]).unwrap();
    let p = h.level_project(4);
    assert_eq!(p.len(), 2);
    assert_eq!(p.coefficient(&sixth), Complex64::new(0.0, 0.0));
    assert_eq!(h.level_project(h.series_level().unwrap()), h);
}

#[test]
fn strip_norm_single_mode() {
    let g = PontryaginSeries::from_terms(1, vec![(RationalMode::integer(&[1]), Complex64::new(1.0, 0.0))]).unwrap();
    let est = g.strip_norm(0.1, 64).unwrap();
    let exact = (0.2 * std::f64::consts::PI).exp();
    assert!((est.majorant_upper - exact).abs() < 1e-12);
    assert!((est.sampled_lower - exact).abs() < 1e-6);
    assert!((exact - 1.87446).abs() < 1e-5);
    let zero = PontryaginSeries::zero(2).strip_norm(0.3, 8).unwrap();
    assert_eq!((zero.sampled_lower, zero.majorant_upper), (0.0, 0.0));
    assert!(g.strip_norm(0.0, 8).is_err());
}

#[test]
fn s_norm_examples() {
    let one = Complex64::new(1.0, 0.0);
    let g = PontryaginSeries::from_terms(1, vec![(RationalMode::integer(&[1]), one)]).unwrap();
    let chain = DivisibilityChain::new(vec![1, 2, 4]).unwrap();
    assert!((g.s_norm(&chain, 0.1).unwrap() - (0.2 * std::f64::consts::PI).exp()).abs() < 1e-12);
    assert_eq!(PontryaginSeries::zero(1).s_norm(&chain, 0.1).unwrap(), 0.0);
    let h = PontryaginSeries::from_terms(1, vec![(RationalMode::new(vec![Rational64::new(1, 2)]), one)]).unwrap();
    let two = DivisibilityChain::new(vec![1, 2]).unwrap();
    assert!((h.s_norm(&two, 0.1).unwrap() - 8.0 * h.majorant(0.1)).abs() < 1e-12);
    let third = PontryaginSeries::from_terms(1, vec![(RationalMode::new(vec![Rational64::new(1, 3)]), one)]).unwrap();
    assert!(third.s_norm(&two, 0.1).is_err());
}

#[test]
fn homothety_examples() {
    let one = Complex64::new(1.0, 0.0);
    let g = PontryaginSeries::from_terms(1, vec![(RationalMode::integer(&[1]), one)]).unwrap();
    assert_eq!(g.homothety_conjugate(Rational64::from_integer(1)).unwrap(), g);
    let h = g.homothety_conjugate(Rational64::new(1, 2)).unwrap();
    assert_eq!(h.coefficient(&RationalMode::new(vec![Rational64::new(1, 2)])), one);
    assert!(g.homothety_conjugate(Rational64::from_integer(0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: Some(Box::new(proptest::test_runner::FileFailurePersistence::Off)), ..ProptestConfig::default() })]

    #[test]
    fn level_project_idempotent_and_monotone(g in any_series(), a in 0usize..4, b in 0usize..4) {
        let chain = resolving_chain();
        let (l, lp) = (chain.entries()[a.min(b)], chain.entries()[a.max(b)]);
        let once = g.level_project(l);
        prop_assert_eq!(once.level_project(l), once.clone());
        prop_assert_eq!(g.level_project(lp).level_project(l), once);
    }

    #[test]
    fn majorant_below_s_norm(g in any_series(), rho in 0.01f64..0.5) {
        let s = g.s_norm(&resolving_chain(), rho).unwrap();
        prop_assert!(g.majorant(rho) <= s * (1.0 + 1e-12));
    }

    #[test]
    fn sampled_below_majorant(g in (1usize..=2).prop_flat_map(|d| series(d, 10)), rho in 0.01f64..0.3) {
        let est = g.strip_norm(rho, 16).unwrap();
        prop_assert!(est.sampled_lower <= est.majorant_upper);
    }

    #[test]
    fn majorant_subadditive((g1, g2) in (1usize..=3).prop_flat_map(|d| (series(d, 10), series(d, 10))), rho in 0.01f64..0.5) {
        let sum = g1.add(&g2).unwrap();
        let bound = g1.majorant(rho) + g2.majorant(rho);
        prop_assert!(sum.majorant(rho) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn homothety_preserves_coefficients(g in any_series(), p in 1i64..6, q in 1i64..6, neg in any::<bool>()) {
        let a = Rational64::new(if neg { -p } else { p }, q);
        let h = g.homothety_conjugate(a).unwrap();
        prop_assert_eq!(sorted_coefficients(&h), sorted_coefficients(&g));
        prop_assert_eq!(h.homothety_conjugate(a.recip()).unwrap(), g);
    }

    #[test]
    fn eval_is_linear(g1 in series(2, 8), g2 in series(2, 8), x in -2.0f64..2.0, y in -0.2f64..0.2) {
        let z = [Complex64::new(x, y), Complex64::new(0.3 * x, -y)];
        let a = Complex64::new(0.7, -1.3);
        let lhs = g1.scale(a).add(&g2).unwrap().eval(&z);
        let rhs = a * g1.eval(&z) + g2.eval(&z);
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn json_round_trip(g in any_series()) {
        let text = serde_json::to_string(&g).unwrap();
        let back: PontryaginSeries = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, g);
    }
}
