//! Lattice certification of the non-resonance condition `|n·k| ≥ c/|k|^r`
//! and the band-limited Poincaré constant it induces.
//!
//! Only the finite ball `0 < |k| ≤ K` (Euclidean norm) is scanned, so the
//! reported constant is `c(K)`, an upper bound for the global constant.

use crate::error::{MhdError, Result};
use crate::spectral::{Grid, TWO_PI};

/// Background magnetic field together with its lattice certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundField {
    pub n: [f64; 3],
    pub r: f64,
    pub lattice_radius: i64,
    /// `min_{0<|k|≤K} |n·k|·|k|^r`
    pub c_empirical: f64,
    pub resonant_k: [i64; 3],
}

fn dot(n: [f64; 3], k: [i64; 3]) -> f64 {
    n[0] * k[0] as f64 + n[1] * k[1] as f64 + n[2] * k[2] as f64
}

fn norm_sq(k: [i64; 3]) -> i64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

/// Tie-break between lattice points with equal `c`: smaller `|k|`, then larger
/// `(|k₁|,|k₂|,|k₃|)` lexicographically, then first nonzero entry positive.
fn preferred(k: [i64; 3], than: [i64; 3]) -> bool {
    let (a, b) = (norm_sq(k), norm_sq(than));
    if a != b {
        return a < b;
    }
    let abs = |v: [i64; 3]| [v[0].abs(), v[1].abs(), v[2].abs()];
    if abs(k) != abs(than) {
        return abs(k) > abs(than);
    }
    k > than
}

/// Exhaustive scan of `0 < |k| ≤ K` for the smallest `|n·k|·|k|^r`.
pub fn certify(n: [f64; 3], r: f64, lattice_radius: i64) -> Result<BackgroundField> {
    if r.is_nan() || r <= 2.0 {
        return Err(MhdError::InvalidExponent(r));
    }
    if n.iter().all(|&c| c == 0.0) {
        return Err(MhdError::ZeroVector);
    }
    if lattice_radius < 1 {
        return Err(MhdError::InvalidLatticeRadius(lattice_radius));
    }
    let kk = lattice_radius;
    let mut best: Option<(f64, [i64; 3])> = None;
    for k0 in -kk..=kk {
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                let k = [k0, k1, k2];
                let m2 = norm_sq(k);
                if m2 == 0 || m2 > kk * kk {
                    continue;
                }
                let c = dot(n, k).abs() * (m2 as f64).sqrt().powf(r);
                best = match best {
                    Some((bc, bk)) if c > bc || (c == bc && !preferred(k, bk)) => Some((bc, bk)),
                    _ => Some((c, k)),
                };
            }
        }
    }
    let (c_empirical, resonant_k) = best.expect("lattice ball with K ≥ 1 is nonempty");
    Ok(BackgroundField {
        n,
        r,
        lattice_radius,
        c_empirical,
        resonant_k,
    })
}

/// Per-mode ratio `(1+|ξ|²)^{s/2} / (|n·ξ| (1+|ξ|²)^{(s+r)/2})`.
fn mode_ratio(n: [f64; 3], r: f64, s: f64, k: [i64; 3]) -> f64 {
    let xi2 = TWO_PI * TWO_PI * norm_sq(k) as f64;
    let w = 1.0 + xi2;
    let n_xi = TWO_PI * dot(n, k).abs();
    w.powf(s / 2.0) / (n_xi * w.powf((s + r) / 2.0))
}

impl BackgroundField {
    /// Smallest `C` with `‖f‖_{H^s} ≤ C‖n·∇f‖_{H^{s+r}}` for every mean-zero
    /// `f` supported on the certified ball.
    pub fn poincare_constant(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(MhdError::NegativeOrder(s));
        }
        if self.c_empirical == 0.0 {
            return Err(MhdError::NotDiophantine {
                resonant_k: self.resonant_k,
            });
        }
        let kk = self.lattice_radius;
        let mut c: f64 = 0.0;
        for k0 in -kk..=kk {
            for k1 in -kk..=kk {
                for k2 in -kk..=kk {
                    let k = [k0, k1, k2];
                    let m2 = norm_sq(k);
                    if m2 == 0 || m2 > kk * kk {
                        continue;
                    }
                    c = c.max(mode_ratio(self.n, self.r, s, k));
                }
            }
        }
        Ok(c)
    }

    /// The same constant taken over the dealiased modes of `grid`.
    pub fn poincare_constant_on_grid(&self, grid: &Grid, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(MhdError::NegativeOrder(s));
        }
        let mut c: f64 = 0.0;
        for idx in 1..grid.len() {
            if !grid.in_band(idx) {
                continue;
            }
            let k = grid.wavevector(idx);
            if dot(self.n, k) == 0.0 {
                return Err(MhdError::NotDiophantine { resonant_k: k });
            }
            c = c.max(mode_ratio(self.n, self.r, s, k));
        }
        Ok(c)
    }

    /// Lattice radius that covers every dealiased mode of an `n`-point grid.
    pub fn covering_radius(points_per_axis: usize) -> i64 {
        let keep = ((points_per_axis - 1) / 3) as f64;
        (3.0f64.sqrt() * keep).ceil() as i64
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::spectral::{sobolev_norm, SpectralScalar};
    use crate::testing::random_field_with;
    use num_complex::Complex64;
    use rand::SeedableRng;

    const DEFAULT_N: [f64; 3] = [1.0, std::f64::consts::SQRT_2, 1.7320508075688772];

    // Independent oracle: plain scan of the whole cube, no tie-breaking.
    fn brute_min(n: [f64; 3], r: f64, kk: i64) -> f64 {
        let mut m = f64::INFINITY;
        for a in -kk..=kk {
            for b in -kk..=kk {
                for c in -kk..=kk {
                    let len2 = (a * a + b * b + c * c) as f64;
                    if len2 == 0.0 || len2 > (kk * kk) as f64 {
                        continue;
                    }
                    let v = (n[0] * a as f64 + n[1] * b as f64 + n[2] * c as f64).abs() * len2.powf(r / 2.0);
                    m = m.min(v);
                }
            }
        }
        m
    }

    #[test]
    fn axis_vector_is_resonant() {
        let bg = certify([1.0, 0.0, 0.0], 3.0, 4).unwrap();
        assert_eq!(bg.c_empirical, 0.0);
        assert_eq!(bg.resonant_k, [0, 1, 0]);
    }

    #[test]
    fn rational_vector_is_resonant() {
        let bg = certify([1.0, 1.0, 1.0], 3.0, 2).unwrap();
        assert_eq!(bg.c_empirical, 0.0);
        assert_eq!(bg.resonant_k, [1, -1, 0]);
    }

    #[test]
    fn irrational_vector_matches_brute_force() {
        let bg = certify(DEFAULT_N, 3.0, 8).unwrap();
        let oracle = brute_min(DEFAULT_N, 3.0, 8);
        assert!(bg.c_empirical > 0.0);
        assert!((bg.c_empirical - oracle).abs() <= 1e-12 * oracle);
        let k = bg.resonant_k;
        let again = dot(DEFAULT_N, k).abs() * (norm_sq(k) as f64).powf(1.5);
        assert!((again - bg.c_empirical).abs() <= 1e-14 * again);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(certify(DEFAULT_N, 2.0, 4), Err(MhdError::InvalidExponent(_))));
        assert!(matches!(certify([0.0; 3], 3.0, 4), Err(MhdError::ZeroVector)));
        assert!(matches!(certify(DEFAULT_N, 3.0, 0), Err(MhdError::InvalidLatticeRadius(0))));
        let bg = certify([1.0, 0.0, 0.0], 3.0, 3).unwrap();
        assert!(matches!(bg.poincare_constant(3.0), Err(MhdError::NotDiophantine { .. })));
    }

    #[test]
    fn single_mode_constant_is_its_ratio() {
        let bg = certify(DEFAULT_N, 3.0, 1).unwrap();
        // K = 1 ball holds ±e₁, ±e₂, ±e₃; the largest ratio is at e₁ (smallest n·k).
        let expect = mode_ratio(DEFAULT_N, 3.0, 2.0, [1, 0, 0]);
        assert!((bg.poincare_constant(2.0).unwrap() - expect).abs() < 1e-15 * expect);
    }

    #[test]
    fn poincare_inequality_holds_for_random_fields() {
        let bg = certify(DEFAULT_N, 3.0, 8).unwrap();
        let s = 3.0;
        let c = bg.poincare_constant(s).unwrap();
        let grid = Grid::new(18);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let f = random_field_with(&grid, &mut rng, |k| {
                let m2 = norm_sq(k);
                m2 > 0 && m2 <= 64
            });
            let lhs = sobolev_norm(&f, s).unwrap();
            let rhs = sobolev_norm(&f.directional_derivative(bg.n), s + bg.r).unwrap();
            assert!(lhs <= c * rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn equality_at_maximising_mode() {
        let bg = certify(DEFAULT_N, 3.0, 3).unwrap();
        let s = 1.5;
        let c = bg.poincare_constant(s).unwrap();
        let grid: Arc<Grid> = Grid::new(8);
        let mut best = ([0i64; 3], 0.0);
        for idx in 1..grid.len() {
            let k = grid.wavevector(idx);
            if norm_sq(k) > 9 {
                continue;
            }
            let r = mode_ratio(bg.n, bg.r, s, k);
            if r > best.1 {
                best = (k, r);
            }
        }
        let f = SpectralScalar::single_mode(&grid, best.0, Complex64::new(0.3, -0.2));
        let lhs = sobolev_norm(&f, s).unwrap();
        let rhs = sobolev_norm(&f.directional_derivative(bg.n), s + bg.r).unwrap();
        assert!((lhs - c * rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn covering_radius_spans_dealiased_cube() {
        assert_eq!(BackgroundField::covering_radius(32), 18);
        assert_eq!(BackgroundField::covering_radius(16), 9);
    }

    proptest::proptest! {
        #[test]
        fn monotone_in_radius(a in -3.0f64..3.0, b in -3.0f64..3.0, kk in 1i64..6) {
            let n = [1.0, a, b];
            let c1 = certify(n, 2.5, kk).unwrap().c_empirical;
            let c2 = certify(n, 2.5, kk + 1).unwrap().c_empirical;
            proptest::prop_assert!(c2 <= c1);
        }

        #[test]
        fn homogeneous_in_scaling(a in -3.0f64..3.0, b in -3.0f64..3.0, lambda in 0.1f64..10.0) {
            let n = [1.0, a, b];
            let c1 = certify(n, 3.0, 4).unwrap().c_empirical;
            let c2 = certify([lambda * n[0], lambda * n[1], lambda * n[2]], 3.0, 4).unwrap().c_empirical;
            // Rounding in n·k is relative to |n||k|, not to the (possibly tiny) minimum.
            let scale = lambda * (1.0 + a * a + b * b).sqrt() * 4f64.powi(4);
            proptest::prop_assert!((c2 - lambda * c1).abs() <= 1e-13 * scale);
        }
    }
}
