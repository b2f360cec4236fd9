//! Cubic 3D complex FFT built from rustfft line transforms.
//!
//! Data layout is row-major `(i0, i1, i2)` with `i2` contiguous. The forward
//! transform carries no normalisation; callers scale by `1/N³`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

/// Which lines of the transform are known to be zero on input (inverse
/// direction) or are discarded on output (forward direction). Modes with
/// `|k_i| > keep` along an axis are treated as zero/unneeded.
#[derive(Clone, Copy, Debug)]
pub enum Pruning {
    None,
    Band(usize),
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft(n, FftDirection::Forward),
            inverse: planner.plan_fft(n, FftDirection::Inverse),
        }
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn in_band(&self, i: usize, keep: usize) -> bool {
        let k = if i <= self.n / 2 { i } else { self.n - i };
        k <= keep
    }

    /// Scratch buffer large enough for any call on this plan.
    pub fn scratch(&self) -> Vec<Complex64> {
        let inner = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); self.len() + inner]
    }

    pub fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64], pruning: Pruning) {
        self.transform(data, scratch, &self.forward, pruning, false);
    }

    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64], pruning: Pruning) {
        self.transform(data, scratch, &self.inverse, pruning, true);
    }

    // Inverse with band pruning: the spectrum vanishes outside the band, so the
    // early passes only touch lines whose fixed indices are in band. Forward
    // with pruning skips lines whose output is discarded by the caller.
    fn transform(
        &self,
        data: &mut [Complex64],
        scratch: &mut [Complex64],
        plan: &Arc<dyn Fft<f64>>,
        pruning: Pruning,
        inverse: bool,
    ) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let keep = match pruning {
            Pruning::None => n,
            Pruning::Band(k) => k,
        };
        let band: Vec<bool> = (0..n).map(|i| self.in_band(i, keep)).collect();
        let all = vec![true; n];
        let (line_buf, fft_scratch) = scratch.split_at_mut(self.len());
        let fft_scratch = &mut fft_scratch[..plan.get_inplace_scratch_len()];

        // Masks over the fixed indices (i0, i1), (i0, i2) and (i1, i2) of
        // the lines transformed along axes 2, 1 and 0.
        // Both directions need the same lines.
        let (m2, m1, m0) = ((&band, &band), (&band, &all), (&all, &all));
        let passes: [usize; 3] = if inverse { [2, 1, 0] } else { [0, 1, 2] };
        for axis in passes {
            match axis {
                2 => {
                    for (i0, row) in data.chunks_exact_mut(n * n).enumerate() {
                        if !m2.0[i0] {
                            continue;
                        }
                        for (i1, line) in row.chunks_exact_mut(n).enumerate() {
                            if m2.1[i1] {
                                plan.process_with_scratch(line, fft_scratch);
                            }
                        }
                    }
                }
                1 => {
                    // Each slab i0 is an n×n matrix (i1, i2); transform its columns.
                    for (i0, slab) in data.chunks_exact_mut(n * n).enumerate() {
                        if !m1.0[i0] {
                            continue;
                        }
                        transpose_lines(slab, n, n, &mut line_buf[..n * n], plan, fft_scratch);
                    }
                }
                _ => {
                    // For fixed i1, the rows i0 ↦ data[i0, i1, ·] are an n×n
                    // matrix with row stride n².
                    for i1 in 0..n {
                        if !m0.0[i1] {
                            continue;
                        }
                        transpose_lines(&mut data[i1 * n..], n * n, n, &mut line_buf[..n * n], plan, fft_scratch);
                    }
                }
            }
        }
    }
}

/// Transforms the columns of the `n×n` matrix whose row `r` starts at
/// `data[r·row_stride]`.
fn transpose_lines(
    data: &mut [Complex64],
    row_stride: usize,
    n: usize,
    buf: &mut [Complex64],
    plan: &Arc<dyn Fft<f64>>,
    fft_scratch: &mut [Complex64],
) {
    for r in 0..n {
        let row = &data[r * row_stride..r * row_stride + n];
        for (c, v) in row.iter().enumerate() {
            buf[c * n + r] = *v;
        }
    }
    plan.process_with_scratch(buf, fft_scratch);
    for r in 0..n {
        let row = &mut data[r * row_stride..r * row_stride + n];
        for (c, v) in row.iter_mut().enumerate() {
            *v = buf[c * n + r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(n: usize, data: &[Complex64], sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * n];
        let w = |j: usize, k: usize| {
            let ang = sign * 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
            Complex64::new(ang.cos(), ang.sin())
        };
        for k0 in 0..n {
            for k1 in 0..n {
                for k2 in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j0 in 0..n {
                        for j1 in 0..n {
                            for j2 in 0..n {
                                acc += data[(j0 * n + j1) * n + j2] * w(j0, k0) * w(j1, k1) * w(j2, k2);
                            }
                        }
                    }
                    out[(k0 * n + k1) * n + k2] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 6;
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let fft = Fft3::new(n);
        let mut scratch = fft.scratch();
        let mut fwd = data.clone();
        fft.forward(&mut fwd, &mut scratch, Pruning::None);
        let expect = naive_dft(n, &data, -1.0);
        for (a, b) in fwd.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-10);
        }
        let mut inv = data.clone();
        fft.inverse(&mut inv, &mut scratch, Pruning::None);
        let expect = naive_dft(n, &data, 1.0);
        for (a, b) in inv.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn pruned_inverse_matches_full_for_band_limited_input() {
        let n = 12;
        let keep = 3;
        let fft = Fft3::new(n);
        let mut scratch = fft.scratch();
        let band = |i: usize| (if i <= n / 2 { i } else { n - i }) <= keep;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n * n];
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    if band(i0) && band(i1) && band(i2) {
                        let x = (i0 * 131 + i1 * 17 + i2 * 7) as f64;
                        data[(i0 * n + i1) * n + i2] = Complex64::new(x.sin(), (0.3 * x).cos());
                    }
                }
            }
        }
        let mut full = data.clone();
        fft.inverse(&mut full, &mut scratch, Pruning::None);
        let mut pruned = data.clone();
        fft.inverse(&mut pruned, &mut scratch, Pruning::Band(keep));
        for (a, b) in full.iter().zip(&pruned) {
            assert!((a - b).norm() < 1e-12);
        }

        // forward pruning: in-band outputs agree
        let mut f_full = full.clone();
        fft.forward(&mut f_full, &mut scratch, Pruning::None);
        let mut f_pruned = full.clone();
        fft.forward(&mut f_pruned, &mut scratch, Pruning::Band(keep));
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    if band(i0) && band(i1) && band(i2) {
                        let idx = (i0 * n + i1) * n + i2;
                        assert!((f_full[idx] - f_pruned[idx]).norm() < 1e-10);
                    }
                }
            }
        }
    }
}
