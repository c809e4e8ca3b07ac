use std::f64::consts::PI;

use num_rational::Rational64;
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;
use solenoid_core::counterexamples::{decaying_factorial_series, diophantine_counterexample, diophantine_solution_closed_form};
use solenoid_core::diophantine::{
    certify_diophantine, convergence_profile, derivative_residual, solve_cohomological, ConvergenceVerdict, FrequencyVector,
    ProfileOptions,
};
use solenoid_core::series::{DivisibilityChain, PontryaginSeries, RationalMode};
use solenoid_core::{Complex64, Error};

const DENOMS: [i64; 4] = [1, 2, 3, 6];

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..ProptestConfig::default()
    }
}

fn omega(dim: usize) -> FrequencyVector {
    let base = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    certify_diophantine(&base[..dim], 1e-3, dim as u32, 12).unwrap()
}

/// Zero-average trig polynomials with at most 40 modes.
fn series(dim: usize) -> impl Strategy<Value = PontryaginSeries> {
    let mode = prop::collection::vec((-4i64..=4, 0usize..DENOMS.len()), dim)
        .prop_map(|v| RationalMode::new(v.into_iter().map(|(p, d)| Rational64::new(p, DENOMS[d])).collect()));
    prop::collection::vec((mode, -1.0f64..1.0, -1.0f64..1.0), 0..=40).prop_map(move |terms| {
        let mut g = PontryaginSeries::zero(dim);
        for (q, re, im) in terms {
            if !q.is_zero() && g.coefficient(&q) == Complex64::new(0.0, 0.0) {
                g.add_term(q, Complex64::new(re, im)).unwrap();
            }
        }
        g
    })
}

fn dim_and_series() -> impl Strategy<Value = (usize, PontryaginSeries)> {
    (1usize..=3).prop_flat_map(|d| series(d).prop_map(move |g| (d, g)))
}

fn strip_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| Complex64::new(rng.random_range(-6.0..6.0), rng.random_range(-0.05..0.05))).collect())
        .collect()
}

fn close(a: &PontryaginSeries, b: &PontryaginSeries, tol: f64) -> bool {
    a.terms().all(|(q, c)| (c - b.coefficient(q)).norm() <= tol * (1.0 + c.norm()))
        && b.terms().all(|(q, c)| (c - a.coefficient(q)).norm() <= tol * (1.0 + c.norm()))
}

/// Exhaustive minimum of `|k1 + sqrt2 k2| |k|^2` over the half-plane of the ball.
fn brute_min_sqrt2(radius: i64) -> f64 {
    let mut best = f64::INFINITY;
    for a in -radius..=radius {
        for b in -radius..=radius {
            let n2 = a * a + b * b;
            if n2 == 0 || n2 > radius * radius {
                continue;
            }
            let v = (a as f64 + 2f64.sqrt() * b as f64).abs() * n2 as f64;
            best = best.min(v);
        }
    }
    best
}

#[test]
fn certificate_examples() {
    let w = certify_diophantine(&[1.0], 0.99, 1, 50).unwrap();
    assert_eq!(w.min_product(), 1.0);
    assert!(certify_diophantine(&[1.0], 1.0, 1, 50).is_err());

    let oracle = brute_min_sqrt2(100);
    let w = certify_diophantine(&[1.0, 2f64.sqrt()], 0.9 * oracle, 2, 100).unwrap();
    assert!((w.min_product() - oracle).abs() <= 1e-12 * oracle);

    match certify_diophantine(&[1.0, 0.5], 1e-6, 2, 3) {
        Err(Error::CertificateFailure { k, .. }) => assert_eq!(k, vec![1, -2]),
        other => panic!("expected a certificate failure, got {other:?}"),
    }
}

#[test]
fn solver_examples() {
    let w = certify_diophantine(&[2f64.sqrt()], 0.1, 1, 20).unwrap();
    let one = RationalMode::integer(&[1]);
    let g = PontryaginSeries::from_terms(1, vec![(one.clone(), Complex64::new(1.0, 0.0))]).unwrap();
    let (f, ledger) = solve_cohomological(&g, &w).unwrap();
    let expected = Complex64::new(1.0, 0.0) / (Complex64::i() * 2.0 * PI * 2f64.sqrt());
    assert!((f.coefficient(&one) - expected).norm() < 1e-15);
    assert_eq!(ledger.records.len(), 1);

    let (f0, l0) = solve_cohomological(&PontryaginSeries::zero(1), &w).unwrap();
    assert!(f0.is_empty() && l0.records.is_empty());

    let with_mean = PontryaginSeries::from_terms(1, vec![(RationalMode::zero(1), Complex64::new(1.0, 0.0))]).unwrap();
    assert!(matches!(solve_cohomological(&with_mean, &w), Err(Error::NonzeroAverage { .. })));
}

#[test]
fn counterexample_solution_matches_closed_form() {
    let w = omega(2);
    let sum: f64 = w.entries().iter().sum();
    let g = diophantine_counterexample(2, 6).unwrap();
    let (f, _) = solve_cohomological(&g, &w).unwrap();
    for (q, c) in f.terms() {
        let sign = q.entries()[0].numer().signum() as f64;
        let expected = Complex64::new(0.0, -sign / (4.0 * PI * sum));
        assert!((c - expected).norm() < 1e-14, "{q}: {c} vs {expected}");
    }
    for z in strip_points(2, 50, 3) {
        let s = z[0] + z[1];
        assert!((f.eval(&z) - diophantine_solution_closed_form(sum, 6, s)).norm() < 1e-12);
    }
}

#[test]
fn perturbed_solution_residual() {
    let w = omega(1);
    let q = RationalMode::integer(&[1]);
    let g = PontryaginSeries::from_terms(1, vec![(q.clone(), Complex64::new(0.5, 0.0))]).unwrap();
    let (mut f, _) = solve_cohomological(&g, &w).unwrap();
    assert_eq!(derivative_residual(&PontryaginSeries::zero(1), &w, &PontryaginSeries::zero(1), &strip_points(1, 10, 1)), 0.0);
    f.add_term(q, Complex64::new(1e-3, 0.0)).unwrap();
    let dense: Vec<Vec<Complex64>> = (0..512).map(|j| vec![Complex64::new(j as f64 / 512.0, 0.0)]).collect();
    let r = derivative_residual(&f, &w, &g, &dense);
    let scale = 1e-3 * 2.0 * PI * w.entries()[0].abs();
    assert!(r >= 0.5 * scale && r <= 2.0 * scale, "{r} vs {scale}");
}

#[test]
fn profile_examples() {
    let w = omega(1);
    let options = ProfileOptions::default();
    let g = PontryaginSeries::from_terms(
        1,
        vec![
            (RationalMode::integer(&[1]), Complex64::new(0.5, 0.0)),
            (RationalMode::integer(&[-1]), Complex64::new(0.5, 0.0)),
        ],
    )
    .unwrap();
    let chain = DivisibilityChain::new(vec![1, 2, 4, 8]).unwrap();
    let p = convergence_profile(&g, &w, &chain, 0.2, 0.1, &options).unwrap();
    assert!(p.levels[1..].iter().all(|r| r.increment == 0.0));
    assert_eq!(p.verdict, ConvergenceVerdict::Convergent);

    let chain = DivisibilityChain::factorial(8).unwrap();
    let g = diophantine_counterexample(1, 8).unwrap();
    let (rho, delta) = (1e-6, 5e-7);
    let p = convergence_profile(&g, &w, &chain, rho, delta, &options).unwrap();
    let amp = 1.0 / (2.0 * PI * w.entries()[0]);
    for (i, row) in p.levels.iter().enumerate() {
        let fact: f64 = (1..=i + 1).product::<usize>() as f64;
        let strip = (2.0 * PI * (rho - delta) / fact).exp();
        assert!((row.increment - amp * strip).abs() < 1e-12, "level {i}: {}", row.increment);
    }
    assert_eq!(p.verdict, ConvergenceVerdict::Divergent);

    let g = decaying_factorial_series(1, 6).unwrap();
    let chain = DivisibilityChain::factorial(6).unwrap();
    let p = convergence_profile(&g, &w, &chain, 0.2, 0.1, &options).unwrap();
    assert_eq!(p.verdict, ConvergenceVerdict::Convergent);
    assert!(p.s_norm.is_finite());
    let inc: Vec<f64> = p.levels.iter().map(|r| r.increment).collect();
    assert!(inc.windows(2).all(|v| v[1] < v[0]), "{inc:?}");
}

proptest! {
    #![proptest_config(config(50))]

    #[test]
    fn residual_below_threshold((d, g) in dim_and_series(), seed in any::<u64>()) {
        let w = omega(d);
        let (f, ledger) = solve_cohomological(&g, &w).unwrap();
        prop_assert!(ledger.records.iter().all(|r| r.divisor != 0.0));
        let r = derivative_residual(&f, &w, &g, &strip_points(d, 1000, seed));
        prop_assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn linearity(g1 in series(2), g2 in series(2), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let w = omega(2);
        let (a, b) = (Complex64::new(a, 0.3), Complex64::new(b, -0.7));
        let combo = g1.scale(a).add(&g2.scale(b)).unwrap();
        let (lhs, _) = solve_cohomological(&combo, &w).unwrap();
        let (f1, _) = solve_cohomological(&g1, &w).unwrap();
        let (f2, _) = solve_cohomological(&g2, &w).unwrap();
        let rhs = f1.scale(a).add(&f2.scale(b)).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-13));
    }

    #[test]
    fn rescale_conjugation((d, g) in dim_and_series(), l in 1i64..7) {
        let w = omega(d);
        let inv = Rational64::new(1, l);
        let (lhs, _) = solve_cohomological(&g.homothety_conjugate(inv).unwrap(), &w).unwrap();
        let (f, _) = solve_cohomological(&g, &w.rescaled_exact(inv).unwrap()).unwrap();
        let rhs = f.homothety_conjugate(inv).unwrap();
        prop_assert_eq!(lhs.len(), rhs.len());
        prop_assert!(lhs.terms().all(|(q, c)| (c - rhs.coefficient(q)).norm() <= 1e-14));
    }

    #[test]
    fn certificate_monotone_in_radius(a in 0.5f64..2.0, b in 0.5f64..2.0, k in 2u64..20, kp in 1u64..20) {
        let omega = [a, b];
        if let Ok(w) = certify_diophantine(&omega, 1e-4, 2, k) {
            let smaller = kp.min(k);
            let v = certify_diophantine(&omega, 1e-4, 2, smaller).unwrap();
            prop_assert!(v.min_product() >= w.min_product());
        }
    }
}
