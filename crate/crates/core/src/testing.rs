//! Seeded random band-limited fields, shared by unit and integration tests.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::State;
use crate::spectral::{Grid, SpectralScalar, SpectralVector};

/// `true` for exactly one of each `±k` pair (and for `k = 0`).
pub fn is_canonical(k: [i64; 3]) -> bool {
    for c in k {
        if c != 0 {
            return c > 0;
        }
    }
    true
}

/// Real field with uniform random coefficients on `max |k_i| ≤ band`.
pub fn random_field(grid: &Arc<Grid>, band: i64, seed: u64) -> SpectralScalar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field_with(grid, &mut rng, |k| k.iter().all(|c| c.abs() <= band))
}

/// Real field with random coefficients on the modes accepted by `support`.
pub fn random_field_with(
    grid: &Arc<Grid>,
    rng: &mut impl Rng,
    support: impl Fn([i64; 3]) -> bool,
) -> SpectralScalar {
    let half = (grid.points_per_axis() / 2) as i64;
    let mut f = SpectralScalar::zeros(grid);
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        if !is_canonical(k) || !support(k) || k.iter().any(|c| c.abs() == half) {
            continue;
        }
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        let c = f.coeffs_mut();
        if k == [0, 0, 0] {
            c[idx] = Complex64::new(re, 0.0);
        } else {
            c[idx] = Complex64::new(re, im);
            c[grid.conjugate_index(idx)] = Complex64::new(re, -im);
        }
    }
    f
}

pub fn random_vector(grid: &Arc<Grid>, band: i64, seed: u64) -> SpectralVector {
    SpectralVector::new([
        random_field(grid, band, seed.wrapping_mul(3)),
        random_field(grid, band, seed.wrapping_mul(3).wrapping_add(1)),
        random_field(grid, band, seed.wrapping_mul(3).wrapping_add(2)),
    ])
}

/// Admissible state: zero-mean `a` and `B`, solenoidal `B`, every component
/// scaled so its largest coefficient is `amplitude`.
pub fn random_state(grid: &Arc<Grid>, band: i64, amplitude: f64, seed: u64) -> State {
    let normalise = |mut f: SpectralScalar, zero_mean: bool| {
        if zero_mean {
            f.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        }
        let m = f.max_coeff();
        f.scale(amplitude / m)
    };
    let a = normalise(random_field(grid, band, seed), true);
    let u = random_vector(grid, band, seed.wrapping_add(101));
    let u = SpectralVector::new(u.comps.map(|c| normalise(c, false)));
    let b = random_vector(grid, band, seed.wrapping_add(202));
    let b = SpectralVector::new(b.comps.map(|c| normalise(c, true))).leray_p();
    State { t: 0.0, a, u, b }
}
