//! Sobolev norms with the multiplier `(1 + |ξ|²)^s`, the homogeneous
//! seminorm `‖Λ^s f‖`, and grid `L∞` norms.

use std::sync::Arc;

use num_complex::Complex64;

use super::{Grid, SpectralScalar, SpectralVector};
use crate::error::{MhdError, Result};

fn check_order(s: f64) -> Result<()> {
    if s < 0.0 || s.is_nan() {
        Err(MhdError::NegativeOrder(s))
    } else {
        Ok(())
    }
}

pub fn weighted_sq(weights: &[f64], c: &[Complex64]) -> f64 {
    weights.iter().zip(c).map(|(w, z)| w * z.norm_sqr()).sum()
}

pub fn weighted_inner(weights: &[f64], f: &[Complex64], g: &[Complex64]) -> f64 {
    weights
        .iter()
        .zip(f.iter().zip(g))
        .map(|(w, (a, b))| w * (a.re * b.re + a.im * b.im))
        .sum()
}

/// `‖f‖_{H^s}`.
pub fn sobolev_norm(f: &SpectralScalar, s: f64) -> Result<f64> {
    check_order(s)?;
    let w = f.grid().sobolev_weights(s);
    Ok(weighted_sq(&w, f.coeffs()).sqrt())
}

/// `⟨f, g⟩_{H^s}`, real part of `Σ_k (1+|ξ|²)^s f̂_k conj(ĝ_k)`.
pub fn hs_inner(f: &SpectralScalar, g: &SpectralScalar, s: f64) -> Result<f64> {
    check_order(s)?;
    let w = f.grid().sobolev_weights(s);
    Ok(weighted_inner(&w, f.coeffs(), g.coeffs()))
}

pub fn sobolev_norm_vec(u: &SpectralVector, s: f64) -> Result<f64> {
    check_order(s)?;
    let w = u.grid().sobolev_weights(s);
    Ok(u.comps.iter().map(|c| weighted_sq(&w, c.coeffs())).sum::<f64>().sqrt())
}

pub fn hs_inner_vec(u: &SpectralVector, v: &SpectralVector, s: f64) -> Result<f64> {
    check_order(s)?;
    let w = u.grid().sobolev_weights(s);
    Ok(u.comps
        .iter()
        .zip(&v.comps)
        .map(|(a, b)| weighted_inner(&w, a.coeffs(), b.coeffs()))
        .sum())
}

/// Homogeneous seminorm `‖Λ^s f‖_{L²}` with `Λ = √(-Δ)`.
pub fn homogeneous_seminorm(f: &SpectralScalar, s: f64) -> Result<f64> {
    check_order(s)?;
    let xi = f.grid().xi_squared();
    Ok(xi
        .iter()
        .zip(f.coeffs())
        .filter(|(x, _)| **x > 0.0 || s == 0.0)
        .map(|(x, c)| if s == 0.0 { c.norm_sqr() } else { x.powf(s) * c.norm_sqr() })
        .sum::<f64>()
        .sqrt())
}

/// Maximum absolute value over the collocation points.
pub fn linf_norm(f: &SpectralScalar) -> f64 {
    f.to_grid().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Maximum over collocation points of the pointwise Euclidean magnitude.
pub fn linf_norm_vec(u: &SpectralVector) -> f64 {
    let g = u.to_grid();
    (0..g[0].len())
        .map(|i| (g[0][i] * g[0][i] + g[1][i] * g[1][i] + g[2][i] * g[2][i]).sqrt())
        .fold(0.0, f64::max)
}

/// `L∞` norm evaluated on a grid refined by `factor` (zero-padded spectrum).
pub fn linf_norm_oversampled(f: &SpectralScalar, factor: usize) -> f64 {
    if factor <= 1 {
        return linf_norm(f);
    }
    let coarse = f.grid();
    let fine = Grid::new(coarse.points_per_axis() * factor);
    linf_norm(&embed(f, &fine))
}

/// Copy the coefficients of `f` into a finer grid. The coarse Nyquist modes
/// are split between `±N/2` so the embedded field stays real.
pub fn embed(f: &SpectralScalar, fine: &Arc<Grid>) -> SpectralScalar {
    let coarse = f.grid();
    let half = (coarse.points_per_axis() / 2) as i64;
    let mut out = SpectralScalar::zeros(fine);
    for (idx, &c) in f.coeffs().iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let k = coarse.wavevector(idx);
        let nyq: Vec<usize> = (0..3).filter(|&ax| k[ax] == half).collect();
        let share = 0.5f64.powi(nyq.len() as i32);
        for mask in 0..(1usize << nyq.len()) {
            let mut kk = k;
            for (b, &ax) in nyq.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    kk[ax] = -half;
                }
            }
            out.coeffs_mut()[fine.index_of(kk)] += c * share;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TWO_PI;
    use crate::testing::random_field;

    fn cos_x1(grid: &Arc<Grid>) -> SpectralScalar {
        SpectralScalar::single_mode(grid, [1, 0, 0], Complex64::new(0.5, 0.0))
    }

    #[test]
    fn cosine_norms() {
        let g = Grid::new(8);
        let f = cos_x1(&g);
        assert!((sobolev_norm(&f, 0.0).unwrap().powi(2) - 0.5).abs() < 1e-15);
        let h1 = (1.0 + TWO_PI * TWO_PI) / 2.0;
        assert!((sobolev_norm(&f, 1.0).unwrap().powi(2) - h1).abs() < 1e-13 * h1);
        assert!((linf_norm(&f) - 1.0).abs() < 1e-15);
        assert!((homogeneous_seminorm(&f, 1.0).unwrap().powi(2) - TWO_PI * TWO_PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_order_rejected() {
        let g = Grid::new(4);
        let f = SpectralScalar::zeros(&g);
        assert!(matches!(sobolev_norm(&f, -0.5), Err(MhdError::NegativeOrder(_))));
        assert!(matches!(hs_inner(&f, &f, -1.0), Err(MhdError::NegativeOrder(_))));
    }

    #[test]
    fn h2_matches_brute_force_sum() {
        let g = Grid::new(8);
        let f = random_field(&g, 3, 9);
        let mut brute = 0.0;
        for k0 in -3i64..=4 {
            for k1 in -3i64..=4 {
                for k2 in -3i64..=4 {
                    let c = f.coeff([k0, k1, k2]);
                    let xi2 = TWO_PI * TWO_PI * (k0 * k0 + k1 * k1 + k2 * k2) as f64;
                    brute += (1.0 + xi2).powi(2) * c.norm_sqr();
                }
            }
        }
        let got = sobolev_norm(&f, 2.0).unwrap().powi(2);
        assert!((got - brute).abs() <= 1e-12 * brute);
    }

    #[test]
    fn oversampled_linf_bounds_grid_linf() {
        let g = Grid::new(8);
        let f = random_field(&g, 3, 10);
        let coarse = linf_norm(&f);
        let fine = linf_norm_oversampled(&f, 2);
        assert!(fine >= coarse - 1e-14);
        // embedding preserves the L² norm
        let e = embed(&f, &Grid::new(16));
        let a = sobolev_norm(&f, 0.0).unwrap();
        assert!((sobolev_norm(&e, 0.0).unwrap() - a).abs() < 1e-14 * a);
    }

    proptest::proptest! {
        #[test]
        fn inner_product_is_squared_norm(seed in 0u64..500, s in 0.0f64..6.0) {
            let g = Grid::new(8);
            let f = random_field(&g, 3, seed);
            let n = sobolev_norm(&f, s).unwrap();
            let ip = hs_inner(&f, &f, s).unwrap();
            proptest::prop_assert!((ip - n * n).abs() <= 1e-12 * n * n);
        }

        #[test]
        fn norm_monotone_in_order(seed in 0u64..500, s in 0.0f64..5.0, ds in 0.0f64..2.0) {
            let g = Grid::new(8);
            let f = random_field(&g, 3, seed);
            proptest::prop_assert!(sobolev_norm(&f, s).unwrap() <= sobolev_norm(&f, s + ds).unwrap() * (1.0 + 1e-14));
        }
    }
}
