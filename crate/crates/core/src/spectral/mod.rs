//! Field algebra on the unit torus `[0,1)³`.
//!
//! Fields are stored as Fourier coefficients `f̂_k` with
//! `f(x) = Σ_k f̂_k exp(2πi k·x)`, so the mean of `f` is `f̂_0` and the wave
//! vector of index `k` is `ξ_k = 2πk`.

mod fft;
mod field;
mod norms;

use std::sync::{Arc, Mutex};

use num_complex::Complex64;

pub use fft::{Fft3, Pruning};
pub use field::{SpectralScalar, SpectralVector};
pub use norms::{
    embed, homogeneous_seminorm, hs_inner, hs_inner_vec, linf_norm, linf_norm_oversampled, linf_norm_vec, sobolev_norm,
    sobolev_norm_vec, weighted_inner, weighted_sq,
};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Collocation grid with `n` points per axis and its transform plan.
#[derive(Debug)]
pub struct Grid {
    n: usize,
    fft: Fft3,
    wavenumber: Vec<i64>,
    derivative_factor: Vec<f64>,
    keep: usize,
    xi_sq: Vec<f64>,
    weights: Mutex<Vec<(u64, Arc<Vec<f64>>)>>,
}

impl Grid {
    /// Build a grid with `n` (even, ≥ 2) points per axis.
    pub fn new(n: usize) -> Arc<Self> {
        assert!(n >= 2 && n % 2 == 0, "grid size must be even and at least 2, got {n}");
        let wavenumber: Vec<i64> = (0..n)
            .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        // Odd derivatives of the Nyquist mode are not representable as real
        // fields; they are set to zero.
        let derivative_factor = wavenumber
            .iter()
            .map(|&k| if k.unsigned_abs() as usize == n / 2 { 0.0 } else { TWO_PI * k as f64 })
            .collect();
        let mut xi_sq = Vec::with_capacity(n * n * n);
        for &k0 in &wavenumber {
            for &k1 in &wavenumber {
                for &k2 in &wavenumber {
                    xi_sq.push(TWO_PI * TWO_PI * (k0 * k0 + k1 * k1 + k2 * k2) as f64);
                }
            }
        }
        Arc::new(Self {
            n,
            fft: Fft3::new(n),
            wavenumber,
            derivative_factor,
            keep: (n - 1) / 3,
            xi_sq,
            weights: Mutex::new(Vec::new()),
        })
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest `|k_i|` retained by [`dealias`](SpectralScalar::dealias):
    /// modes with any `|k_i| > N/3` are removed.
    pub fn dealias_cutoff(&self) -> usize {
        self.keep
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    /// Storage index of integer wave vector `k`, wrapping modulo `n`.
    pub fn index_of(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |k: i64| k.rem_euclid(n) as usize;
        self.index(w(k[0]), w(k[1]), w(k[2]))
    }

    /// Integer wave vector at storage index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.wavenumber[idx / (n * n)],
            self.wavenumber[(idx / n) % n],
            self.wavenumber[idx % n],
        ]
    }

    /// Index of `-k` for the mode stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let neg = |i: usize| (n - i) % n;
        self.index(neg(idx / (n * n)), neg((idx / n) % n), neg(idx % n))
    }

    /// Derivative multiplier `ξ` (Nyquist components zeroed) at storage index.
    #[inline]
    pub fn derivative_vector(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [
            self.derivative_factor[idx / (n * n)],
            self.derivative_factor[(idx / n) % n],
            self.derivative_factor[idx % n],
        ]
    }

    /// `|ξ_k|² = 4π²|k|²` per storage index.
    pub fn xi_squared(&self) -> &[f64] {
        &self.xi_sq
    }

    pub fn in_band(&self, idx: usize) -> bool {
        self.wavevector(idx)
            .iter()
            .all(|k| k.unsigned_abs() as usize <= self.keep)
    }

    /// Multiplier table `(1 + |ξ|²)^s`, cached per order.
    pub fn sobolev_weights(&self, s: f64) -> Arc<Vec<f64>> {
        let key = s.to_bits();
        let mut cache = self.weights.lock().expect("weight cache poisoned");
        if let Some((_, w)) = cache.iter().find(|(k, _)| *k == key) {
            return Arc::clone(w);
        }
        let w: Arc<Vec<f64>> = Arc::new(if s == 0.0 {
            vec![1.0; self.len()]
        } else {
            self.xi_sq.iter().map(|x| (1.0 + x).powf(s)).collect()
        });
        cache.push((key, Arc::clone(&w)));
        w
    }

    /// Grid coordinate of collocation index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    /// Inverse transform of two Hermitian spectra at once. The real part of
    /// `out` holds the first field and the imaginary part the second.
    pub fn to_grid_pair(
        &self,
        first: &[Complex64],
        second: Option<&[Complex64]>,
        out: &mut [Complex64],
        scratch: &mut [Complex64],
        pruning: Pruning,
    ) {
        let i = Complex64::new(0.0, 1.0);
        match second {
            Some(g) => {
                for ((o, f), g) in out.iter_mut().zip(first).zip(g) {
                    *o = f + i * g;
                }
            }
            None => out.copy_from_slice(first),
        }
        self.fft.inverse(out, scratch, pruning);
    }

    /// Forward transform of two real grid fields packed as `re + i·im` in
    /// `data`. On return `first` and `second` hold the two spectra.
    pub fn from_grid_pair(
        &self,
        data: &mut [Complex64],
        first: &mut [Complex64],
        second: Option<&mut [Complex64]>,
        scratch: &mut [Complex64],
        pruning: Pruning,
    ) {
        self.fft.forward(data, scratch, pruning);
        let scale = 1.0 / self.len() as f64;
        match second {
            Some(second) => {
                for idx in 0..self.len() {
                    let z = data[idx];
                    let zc = data[self.conjugate_index(idx)].conj();
                    first[idx] = (z + zc) * (0.5 * scale);
                    let d = (z - zc) * (0.5 * scale);
                    // (z - conj z_-k) / 2i
                    second[idx] = Complex64::new(d.im, -d.re);
                }
            }
            None => {
                for idx in 0..self.len() {
                    let z = data[idx];
                    let zc = data[self.conjugate_index(idx)].conj();
                    first[idx] = (z + zc) * (0.5 * scale);
                }
            }
        }
    }
}
