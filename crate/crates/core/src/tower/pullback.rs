use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::beltrami::{BeltramiField, ComplexGrid, GridSpec, NormalSolutionField, PointFn};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `mu(z^m) (zbar/z)^(m-1)`, 0 at the origin.
pub fn pullback_value(mu_at: impl Fn(Complex64) -> Complex64, m: u64, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return ZERO;
    }
    let phase = z.conj() / z;
    mu_at(z.powu(m as u32)) * phase.powu((m - 1) as u32)
}

/// `mu_n^(up L)` sampled on `spec`, keeping an analytic source when `mu_n` has one.
pub fn coefficient_pullback(mu_n: &BeltramiField, n: u64, l: u64, spec: GridSpec) -> Result<BeltramiField> {
    if n == 0 || l % n != 0 {
        return Err(Error::InvalidArgument(format!("target level {l} is not a multiple of {n}")));
    }
    let m = l / n;
    if u32::try_from(m).is_err() {
        return Err(Error::Overflow("pullback exponent"));
    }
    let source: PointFn = match mu_n.source() {
        Some(f) => {
            let f = f.clone();
            Arc::new(move |z| pullback_value(|w| f(w), m, z))
        }
        None => {
            let base = mu_n.clone();
            Arc::new(move |z| pullback_value(|w| base.eval(w), m, z))
        }
    };
    let g = source.clone();
    let grid = ComplexGrid::from_fn(spec, move |z| g(z));
    Ok(BeltramiField::with_bound(grid, mu_n.k())?.with_source(source))
}

/// `(hi - lo) / (1 - hi conj(lo))` at one point.
pub fn relative_value(hi: Complex64, lo: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) - hi * lo.conj();
    if den.norm() < 1e-9 {
        return Err(Error::DenominatorNearZero(den.norm()));
    }
    Ok((hi - lo) / den)
}

/// Coefficient `nu` of `f_hi o f_lo^-1`: the pointwise relative coefficient `R` moved
/// forward along `f_lo`, `nu(f_lo(z)) = R(z) f_z / conj(f_z)`. Resampled on the grid
/// of `mu_hi`; `R` is interpolated bilinearly between nodes.
pub fn relative_coefficient(
    mu_hi: &BeltramiField,
    mu_lo: &BeltramiField,
    f_lo: Option<&NormalSolutionField>,
) -> Result<BeltramiField> {
    mu_hi.grid().check_same(mu_lo.grid())?;
    let spec = *mu_hi.spec();
    let rel: Vec<Complex64> = mu_hi
        .grid()
        .data()
        .par_iter()
        .zip(mu_lo.grid().data())
        .map(|(&a, &b)| relative_value(a, b))
        .collect::<Result<_>>()?;
    let rel = ComplexGrid::from_data(spec, rel)?;
    let bound = rel.sup_norm();
    let f = match f_lo {
        None => return BeltramiField::with_bound(rel, bound),
        Some(f) => f,
    };
    let data = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let w = spec.point_at(i);
            let z = f.invert(w);
            if !spec.contains(z) {
                return ZERO;
            }
            let r = rel.interpolate(z);
            if r == ZERO {
                return ZERO;
            }
            let (fz, _) = f.derivatives(z);
            r * fz / fz.conj()
        })
        .collect();
    BeltramiField::with_bound(ComplexGrid::from_data(spec, data)?, bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pullback_examples() {
        let mu = |w: Complex64| w * 0.1;
        let z = Complex64::new(0.3, -0.7);
        assert_eq!(pullback_value(mu, 1, z), mu(z));
        let v = pullback_value(mu, 2, Complex64::i());
        assert!((v - (-mu(Complex64::new(-1.0, 0.0)))).norm() < 1e-15);
        assert_eq!(pullback_value(mu, 3, ZERO), ZERO);
    }

    #[test]
    fn pullback_rejects_non_multiple() {
        let spec = GridSpec::square(1.0, 8).unwrap();
        assert!(coefficient_pullback(&BeltramiField::zero(spec), 2, 3, spec).is_err());
    }

    #[test]
    fn relative_trivial_cases() {
        let spec = GridSpec::square(2.0, 16).unwrap();
        let mu = BeltramiField::from_fn(spec, |z| if z.norm() < 0.5 { z * 0.3 } else { ZERO }).unwrap();
        let same = relative_coefficient(&mu, &mu, None).unwrap();
        assert!(same.is_zero());
        let id = relative_coefficient(&mu, &BeltramiField::zero(spec), None).unwrap();
        assert_eq!(id.grid(), mu.grid());
        assert!(matches!(relative_value(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)), Err(Error::DenominatorNearZero(_))));
    }
}
