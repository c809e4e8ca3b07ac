use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;
use solenoid_core::beltrami::{solve_normal, BeltramiField, GridSpec, PointFn, SolverParams};
use solenoid_core::counterexamples::{eval_mu_counterexample, mu_bound};
use solenoid_core::series::DivisibilityChain;
use solenoid_core::tower::*;

const ZERO: C = C::new(0.0, 0.0);

fn chain(v: &[u64]) -> DivisibilityChain {
    DivisibilityChain::new(v.to_vec()).unwrap()
}

/// Smooth `2 pi`-periodic cylinder coefficient supported in `|y| < 1`.
fn ripple(x: f64, y: f64) -> C {
    if y.abs() >= 1.0 {
        return ZERO;
    }
    let b = (1.0 - y * y).powi(3);
    C::new(0.2 * b * x.cos(), 0.1 * b * (2.0 * x).sin())
}

fn unit_box(size: usize) -> GridSpec {
    GridSpec::square(2.0 * 1f64.exp() * 1.02, size).unwrap()
}

#[test]
fn plane_phase_examples() {
    let mu = CylinderCoefficient::new(ripple, Period::Periodic(1.into()), 1.0, 0.3).unwrap();
    // At w = i the phase -(w/|w|)^2 is 1.
    assert!((plane_value(mu.evaluator(), 1, C::i()) - mu.eval(PI / 2.0, 0.0)).norm() < 1e-15);
    // At w = 1 it is -1.
    assert!((plane_value(mu.evaluator(), 1, C::new(1.0, 0.0)) + mu.eval(0.0, 0.0)).norm() < 1e-15);
    let spec = unit_box(32);
    assert!(cylinder_to_plane(&CylinderCoefficient::zero(), 3, spec).unwrap().is_zero());
    assert!(matches!(cylinder_to_plane(&mu, 1, spec), Ok(_)));
    let lp = CylinderCoefficient::new(ripple, Period::LimitPeriodic, 1.0, 0.3).unwrap();
    assert!(cylinder_to_plane(&lp, 1, spec).is_err());
    let p2 = CylinderCoefficient::new(|x, y| ripple(x / 2.0, y), Period::Periodic(2.into()), 1.0, 0.3).unwrap();
    assert!(cylinder_to_plane(&p2, 3, spec).is_err());
    assert!(cylinder_to_plane(&p2, 4, spec).is_ok());
}

#[test]
fn leaf_coordinates_invert_the_projection() {
    for n in [1u64, 2, 6, 24] {
        for &(x, y) in &[(0.3, 0.2), (2.0, -0.7), (-1.0, 0.0)] {
            let w = (C::i() * C::new(x, y) / n as f64).exp();
            let (u, v) = leaf_coordinates(w, n);
            assert!((u - x).abs() < 1e-12 * n as f64 && (v - y).abs() < 1e-12 * n as f64);
        }
    }
}

#[test]
fn profinite_address_compatibility() {
    let c = chain(&[1, 2, 6, 24]);
    let a = ProfiniteAddress::from_integer(c.clone(), 17);
    assert_eq!(a.residues(), &[0, 1, 5, 17]);
    assert!(ProfiniteAddress::new(c.clone(), vec![0, 1, 4, 17]).is_err());
    assert!(ProfiniteAddress::new(c.clone(), vec![0, 1, 5, 24]).is_err());
    // Level coordinates are compatible under the chain's power maps.
    let z = C::new(0.4, -0.3);
    for i in 0..3 {
        let m = (c.entries()[i + 1] / c.entries()[i]) as u32;
        let lo = a.level_coordinate(z, i);
        let hi = a.level_coordinate(z, i + 1);
        assert!((hi.powu(m) - lo).norm() < 1e-12);
    }
}

#[test]
fn pullback_modulus_on_grids() {
    let spec = unit_box(64);
    let cyl = CylinderCoefficient::new(ripple, Period::Periodic(1.into()), 1.0, 0.3).unwrap();
    let base = |n: u64| {
        let c = if n == 1 { cyl.clone() } else { cyl.periodic_restriction(n).unwrap() };
        cylinder_to_plane(&c, n, spec).unwrap()
    };
    for (n, l) in [(1u64, 2u64), (2, 4), (1, 6)] {
        let mu_n = base(n);
        let src = mu_n.source().unwrap().clone();
        let up = coefficient_pullback(&mu_n, n, l, spec).unwrap();
        let m = (l / n) as u32;
        for i in 0..spec.len() {
            let z = spec.point_at(i);
            let lhs = up.grid().data()[i].norm();
            let rhs = src(z.powu(m)).norm();
            assert!((lhs - rhs).abs() <= 1e-12, "({n},{l}) at {z}: {lhs} vs {rhs}");
        }
    }
    // m = 2 at z = i: mu(-1) times phase -1.
    let mu_1 = base(1);
    let src = mu_1.source().unwrap().clone();
    let up = coefficient_pullback(&mu_1, 1, 2, spec).unwrap();
    let v = up.source().unwrap()(C::i());
    assert!((v + src(C::new(-1.0, 0.0))).norm() < 1e-15);
    assert!(coefficient_pullback(&mu_1, 2, 5, spec).is_err());
}

/// Random coefficient bounded by `k`: a normalized combination of a few harmonics.
fn random_field(spec: GridSpec, k: f64, c: [f64; 6]) -> BeltramiField {
    let f = move |z: C| {
        let r2 = z.norm_sqr();
        if r2 >= 2.0 {
            return ZERO;
        }
        let b = (1.0 - r2 / 2.0).powi(2);
        let v = C::new(c[0], c[1]) + C::new(c[2], c[3]) * (z.re * 3.0).sin() + C::new(c[4], c[5]) * (z.im * 2.0).cos();
        v * b
    };
    let peak = (0..spec.len()).map(|i| f(spec.point_at(i)).norm()).fold(1e-12, f64::max);
    BeltramiField::from_fn(spec, move |z| f(z) * (k / peak)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 10,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        ..ProptestConfig::default()
    })]

    #[test]
    fn pullback_preserves_modulus(re in -1.0f64..1.0, im in -1.0f64..1.0, m in 1u64..7, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let a = C::new(re, im);
        let mu = |w: C| a * 0.3 * (w * 0.7).sin() / (1.0 + w.norm_sqr());
        let z = C::new(x, y);
        let lhs = pullback_value(mu, m, z).norm();
        let rhs = mu(z.powu(m as u32)).norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn leaf_phase_is_unimodular(n in 1u64..30, r in 0.05f64..5.0, t in -PI..PI) {
        let w = C::from_polar(r, t);
        let mu: CylinderFn = Arc::new(|x, y| C::new(0.2 * (x / 7.0).cos() * (-y * y).exp(), 0.1));
        let v = plane_value(&mu, n, w);
        let (x, y) = leaf_coordinates(w, n);
        let raw = mu(x, y);
        if raw.norm() >= SUPPORT_EPSILON {
            prop_assert!((v.norm() - raw.norm()).abs() <= 1e-15);
        }
    }

    #[test]
    fn relative_coefficient_bound(c1 in prop::array::uniform6(-1.0f64..1.0), c2 in prop::array::uniform6(-1.0f64..1.0), transport in any::<bool>()) {
        let k = 0.3;
        let spec = GridSpec::square(3.0, 64).unwrap();
        let hi = random_field(spec, k, c1);
        let lo = random_field(spec, k, c2);
        let delta = hi.grid().zip_map(lo.grid(), |a, b| a - b).unwrap().sup_norm();
        let f_lo = if transport { Some(solve_normal(&lo, &SolverParams::default()).unwrap()) } else { None };
        let rel = relative_coefficient(&hi, &lo, f_lo.as_ref()).unwrap();
        prop_assert!(rel.sup_norm() <= delta / (1.0 - k * k) + 1e-10, "{} vs {}", rel.sup_norm(), delta / (1.0 - k * k));
    }
}

#[test]
fn relative_coefficient_trivial_cases() {
    let spec = GridSpec::square(3.0, 32).unwrap();
    let mu = random_field(spec, 0.3, [0.2, -0.5, 0.1, 0.3, -0.7, 0.4]);
    assert!(relative_coefficient(&mu, &mu, None).unwrap().is_zero());
    let zero = BeltramiField::zero(spec);
    let id = solve_normal(&zero, &SolverParams::default()).unwrap();
    let same = relative_coefficient(&mu, &zero, Some(&id)).unwrap();
    let err = same.grid().zip_map(mu.grid(), |a, b| a - b).unwrap().sup_norm();
    assert!(err < 1e-12, "{err}");
}

#[test]
fn s_norm_examples() {
    let spec = unit_box(32);
    let zero = PeriodicBeltramiFamily::from_cylinders(chain(&[1, 2, 4]), vec![CylinderCoefficient::zero(); 3], |_| Ok(spec)).unwrap();
    assert_eq!(mu_s_norm(&zero), 0.0);
    let cyl = CylinderCoefficient::new(ripple, Period::Periodic(1.into()), 1.0, 0.3).unwrap();
    let stat = PeriodicBeltramiFamily::build_periodic_approximants(&cyl, chain(&[1, 2, 4]), |_| Ok(spec)).unwrap();
    assert!(stat.increments().iter().all(|&d| d < 1e-13), "{:?}", stat.increments());
    assert!((mu_s_norm(&stat) - stat.levels()[0].sup_norm()).abs() < 1e-12);
    let single = PeriodicBeltramiFamily::build_periodic_approximants(&cyl, chain(&[1]), |_| Ok(spec)).unwrap();
    assert_eq!(single.levels().len(), 1);
    assert_eq!(mu_s_norm(&single), single.levels()[0].sup_norm());
}

#[test]
fn factorial_counterexample_increments() {
    // Periodic approximant at level n! keeps the terms with m! <= n!.
    let c = DivisibilityChain::factorial(4).unwrap();
    let cylinders: Vec<_> = c
        .entries()
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            CylinderCoefficient::new(
                move |x, y| eval_mu_counterexample(C::new(x, y), i + 1),
                Period::Periodic((n as i64).into()),
                4.3 * n as f64,
                mu_bound(),
            )
            .unwrap()
        })
        .collect();
    let fam = PeriodicBeltramiFamily::from_cylinders(c.clone(), cylinders, |n| annulus_grid(4.3 * n as f64, n, 512)).unwrap();
    for (i, &inc) in fam.increments().iter().enumerate() {
        let n1 = c.entries()[i + 1] as f64;
        // Direct sup over a cylinder lattice of one period.
        let mut oracle = 0.0f64;
        for a in 0..2000 {
            for b in 0..400 {
                let x = 2.0 * PI * n1 * a as f64 / 2000.0;
                let y = -4.3 * n1 + 8.6 * n1 * b as f64 / 400.0;
                let z = C::new(x, y);
                oracle = oracle.max((eval_mu_counterexample(z, i + 2) - eval_mu_counterexample(z, i + 1)).norm());
            }
        }
        assert!(inc <= oracle * 1.05 && inc >= oracle * 0.75, "level {i}: {inc} vs {oracle}");
        assert!((0.05..0.2).contains(&(n1 * inc)), "level {i}: {}", n1 * inc);
    }
}

fn zero_family(c: &[u64], spec: GridSpec) -> PeriodicBeltramiFamily {
    PeriodicBeltramiFamily::from_cylinders(chain(c), vec![CylinderCoefficient::zero(); c.len()], |_| Ok(spec)).unwrap()
}

#[test]
fn zero_family_table_is_exact() {
    let fam = zero_family(&[1, 2, 6, 12], unit_box(32));
    let pts = leaf_sample_points(12, 16, -0.5, 0.5, 3);
    for j in 0..3 {
        let run = tower_solve(&fam, j, &pts, &SolverParams::default()).unwrap();
        let e = (12 / run.l) as u32;
        for row in &run.table {
            for (v, w) in row.iter().zip(&pts) {
                assert!((v - w.powu(e)).norm() <= 1e-12 * (1.0 + v.norm()));
            }
        }
        // Entries at levels n | m agree through the power map.
        let levels = run.levels();
        for a in 0..levels.len() {
            for b in a + 1..levels.len() {
                if levels[b] % levels[a] == 0 {
                    for (x, y) in run.table[a].iter().zip(&run.table[b]) {
                        assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
                    }
                }
            }
        }
    }
    assert!(tower_solve(&fam, 4, &pts, &SolverParams::default()).is_err());
    assert!(tower_solve(&fam, 0, &[], &SolverParams::default()).is_err());
}

#[test]
fn commuting_identity_converges_with_the_grid() {
    let params = SolverParams::default();
    let cyl = BumpProfile::default().scaled_term(0.3, 1).unwrap();
    let mut errors = Vec::new();
    for size in [128usize, 256] {
        let spec = unit_box(size);
        let mu1 = cylinder_to_plane(&cyl, 1, spec).unwrap();
        let f = solve_normal(&mu1, &params).unwrap();
        let mut row = Vec::new();
        for m in [2u64, 3] {
            let up = coefficient_pullback(&mu1, 1, m, spec).unwrap();
            let g = solve_normal(&up, &params).unwrap();
            let e = leaf_sample_points(m, 64, -0.5, 0.5, 5)
                .into_iter()
                .map(|w| (g.eval(w).powu(m as u32) - f.eval(w.powu(m as u32))).norm())
                .fold(0.0, f64::max);
            row.push(e);
        }
        errors.push(row);
    }
    for m in 0..2 {
        assert!(errors[1][m] < 1e-2, "{errors:?}");
        assert!(errors[0][m] / errors[1][m] > 3.0, "{errors:?}");
    }
}

#[test]
fn stationary_family_is_cauchy() {
    let spec = unit_box(128);
    let cyl = CylinderCoefficient::new(ripple, Period::Periodic(1.into()), 1.0, 0.3).unwrap();
    let fam = PeriodicBeltramiFamily::build_periodic_approximants(&cyl, chain(&[1, 2, 4]), |_| Ok(spec)).unwrap();
    let run = tower_solve(&fam, 0, &leaf_sample_points(4, 64, -0.5, 0.5, 3), &SolverParams::default()).unwrap();
    let rep = cauchy_diagnostics(&run, &fam, &CauchyOptions::default()).unwrap();
    assert!(rep.stationary_family);
    assert!(rep.a_prime_ml.iter().all(|&c| c == 0.0));
    assert!(rep.growth.iter().all(|&g| (g - rep.growth[0]).abs() < 0.02), "{:?}", rep.growth);
    assert_eq!(rep.verdict, CauchyVerdict::Cauchy);
}

#[test]
fn two_level_constant_is_stable_under_refinement() {
    let c = chain(&[1, 2]);
    let fam = bump_increment_family(c, &[0.02], BumpProfile::default(), 256).unwrap();
    let params = SolverParams::default();
    let fit = |xc: usize, yc: usize| {
        let run = tower_solve(&fam, 0, &leaf_sample_points(2, xc, -0.5, 0.5, yc), &params).unwrap();
        cauchy_diagnostics(&run, &fam, &CauchyOptions::default()).unwrap().a_prime_ml[0]
    };
    let coarse = fit(64, 3);
    let fine = fit(256, 9);
    assert!(coarse > 0.0 && (fine / coarse - 1.0).abs() < 0.05, "{coarse} {fine}");
}

#[test]
fn geometric_and_constant_families() {
    let c = chain(&[1, 2, 4, 8]);
    let pts = leaf_sample_points(8, 128, -0.5, 0.5, 5);
    let params = SolverParams::default();
    let weights = |geometric: bool| -> Vec<f64> {
        (0..3).map(|i| 0.1 * if geometric { 0.5f64.powi(i as i32) } else { 1.0 } / c.entries()[i + 1] as f64).collect()
    };
    let geo = bump_increment_family(c.clone(), &weights(true), BumpProfile::default(), 128).unwrap();
    let s_terms = geo.s_norm_terms();
    for (i, t) in s_terms.iter().skip(1).enumerate() {
        assert!((t - 0.1 * 0.5f64.powi(i as i32)).abs() < 2e-3, "{s_terms:?}");
    }
    let run = tower_solve(&geo, 0, &pts, &params).unwrap();
    let rep = cauchy_diagnostics(&run, &geo, &CauchyOptions::default()).unwrap();
    assert!(rep.monotone, "{:?}", run.diffs);
    assert_eq!(rep.verdict, CauchyVerdict::Cauchy);
    let flat = bump_increment_family(c.clone(), &weights(false), BumpProfile::default(), 128).unwrap();
    let run = tower_solve(&flat, 0, &pts, &params).unwrap();
    let rep = cauchy_diagnostics(&run, &flat, &CauchyOptions::default()).unwrap();
    assert_eq!(rep.verdict, CauchyVerdict::NotCauchy, "{:?}", run.diffs);
}

#[test]
fn affine_examples() {
    let fam = zero_family(&[1, 2, 4], unit_box(32));
    let run = tower_solve(&fam, 0, &[C::new(1.0, 0.0)], &SolverParams::default()).unwrap();
    let rep = affine_renormalize_run(&run, 1e-9).unwrap();
    for (a, b) in rep.a.iter().zip(&rep.b) {
        assert!((a - 1.0).norm() < 1e-12 && b.norm() < 1e-12);
    }
    // Post-composing every leaf map with 2z + 3.
    let moved: Vec<[C; 2]> = run.anchors.iter().map(|v| [v[0] * 2.0 + 3.0, v[1] * 2.0 + 3.0]).collect();
    let rep = affine_renormalize(&moved, 1e-9).unwrap();
    assert!(rep.a.iter().all(|a| (a - 2.0).norm() < 1e-12));
    assert!(rep.b.iter().all(|b| (b - 3.0).norm() < 1e-12));
    assert!((rep.limit_a - 2.0).norm() < 1e-12 && rep.stabilized);
    // A geometric sequence converging at rate 1/2 is extrapolated exactly.
    let seq: Vec<[C; 2]> = (0..5).map(|i| [C::new(0.5f64.powi(i), 0.0), C::new(1.0 + 0.5f64.powi(i), 0.0)]).collect();
    let rep = affine_renormalize(&seq, 1e-1).unwrap();
    assert!(rep.limit_b.norm() < 1e-12, "{}", rep.limit_b);
    assert!((rep.limit_a - 1.0).norm() < 1e-12);
    assert!(rep.steps.windows(2).all(|w| (w[1] / w[0] - 0.5).abs() < 1e-12));
}

fn far_field(z: C) -> C {
    // Smooth, bounded by 0.3, not compactly supported.
    let r2 = z.norm_sqr();
    C::new(0.3 * r2 / (1.0 + r2), 0.0) * (C::new(0.0, (z.re * 0.5).sin()).exp())
}

#[test]
fn split_examples() {
    let params = SolverParams::default();
    let inside: PointFn = Arc::new(|z: C| if z.norm() < 0.5 { C::new(0.2 * (1.0 - 4.0 * z.norm_sqr()), 0.0) } else { ZERO });
    let sol = split_solve(inside, 0.3, SplitCutoff::new(2.0, 0.5).unwrap(), 64, &params).unwrap();
    assert!(sol.split.nu1().is_zero());
    assert!((sol.outer.eval(C::new(0.4, 0.9)) - C::new(0.4, 0.9)).norm() < 1e-12);
    let outside: PointFn = Arc::new(|z: C| if z.norm() > 3.5 { C::new(0.0, 0.25) } else { ZERO });
    let sol = split_solve(outside, 0.3, SplitCutoff::new(2.0, 0.5).unwrap(), 64, &params).unwrap();
    assert_eq!(sol.inner.h().sup_norm(), 0.0);
    let bad: PointFn = Arc::new(|_| ZERO);
    assert!(mobius_support_split(bad, 1.0, SplitCutoff::sharp(2.0).unwrap(), 16).is_err());
}

#[test]
fn split_composite_residual() {
    let mu: PointFn = Arc::new(far_field);
    let sol = split_solve(mu, 0.3, SplitCutoff::new(1.5, 0.5).unwrap(), 512, &SolverParams::default()).unwrap();
    let check = GridSpec::square(4.0, 256).unwrap();
    let rep = sol.residual(check).unwrap();
    assert!(rep.max_residual < 5e-2, "{}", rep.max_residual);
    // The composite fixes 0 up to interpolation on the inner grid.
    let dx = sol.inner.spec().dx();
    assert!(sol.eval(ZERO).norm() <= 0.3 * dx, "{} vs {}", sol.eval(ZERO).norm(), 0.3 * dx);
}
