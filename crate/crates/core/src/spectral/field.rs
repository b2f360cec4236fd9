use std::sync::Arc;

use num_complex::Complex64;

use super::{Grid, Pruning};
use crate::error::{MhdError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Real scalar field on the torus, stored by its Fourier coefficients.
#[derive(Clone, Debug)]
pub struct SpectralScalar {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficient count does not match grid");
        Self {
            grid: Arc::clone(grid),
            coeffs,
        }
    }

    /// Field with a single real cosine/sine pair: `amp·exp(2πik·x) + c.c.`
    pub fn single_mode(grid: &Arc<Grid>, k: [i64; 3], amp: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        if k == [0, 0, 0] {
            f.coeffs[0] = Complex64::new(amp.re, 0.0);
            return f;
        }
        let idx = grid.index_of(k);
        let neg = grid.index_of([-k[0], -k[1], -k[2]]);
        f.coeffs[idx] += amp;
        f.coeffs[neg] += amp.conj();
        f
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        self.coeffs[self.grid.index_of(k)]
    }

    /// Spatial mean (unit volume), i.e. the `k = 0` coefficient.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Values at the `N³` collocation points `x = i/N`, row-major.
    pub fn to_grid(&self) -> Vec<f64> {
        let mut buf = vec![ZERO; self.grid.len()];
        let mut scratch = self.grid.fft().scratch();
        self.grid
            .to_grid_pair(&self.coeffs, None, &mut buf, &mut scratch, Pruning::None);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Coefficients of a real grid function.
    pub fn from_grid(grid: &Arc<Grid>, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = grid.fft().scratch();
        let mut out = vec![ZERO; grid.len()];
        grid.from_grid_pair(&mut buf, &mut out, None, &mut scratch, Pruning::None);
        Self::from_coeffs(grid, out)
    }

    fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        Self {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    /// `∂f/∂x_axis` with `axis ∈ {0, 1, 2}`.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        self.map_modes(|i, c| I * self.grid.derivative_vector(i)[axis] * c)
    }

    pub fn gradient(&self) -> SpectralVector {
        SpectralVector::new([self.derivative(0), self.derivative(1), self.derivative(2)])
    }

    pub fn laplacian(&self) -> Self {
        let xi = self.grid.xi_squared();
        self.map_modes(|i, c| -xi[i] * c)
    }

    /// Solves `Δg = f` for mean-zero `g`. Requires `|f̂_0| ≤ 1e-10·‖f‖_{L²}`.
    pub fn inverse_laplacian(&self) -> Result<Self> {
        let mean = self.coeffs[0].norm();
        let norm = super::sobolev_norm(self, 0.0).unwrap_or(0.0);
        if mean > 1e-10 * norm {
            return Err(MhdError::MeanNotZero {
                mean: self.coeffs[0].re,
                norm,
            });
        }
        let xi = self.grid.xi_squared();
        Ok(self.map_modes(|i, c| if i == 0 { ZERO } else { -c / xi[i] }))
    }

    /// Multiplication by `i(n·ξ_k)` on every mode.
    pub fn directional_derivative(&self, n: [f64; 3]) -> Self {
        self.map_modes(|i, c| {
            let xi = self.grid.derivative_vector(i);
            I * (n[0] * xi[0] + n[1] * xi[1] + n[2] * xi[2]) * c
        })
    }

    /// Removes every mode with some `|k_i| > N/3`.
    pub fn dealias(&self) -> Self {
        self.map_modes(|i, c| if self.grid.in_band(i) { c } else { ZERO })
    }

    pub fn dealias_in_place(&mut self) {
        for i in 0..self.coeffs.len() {
            if !self.grid.in_band(i) {
                self.coeffs[i] = ZERO;
            }
        }
    }

    /// Pseudo-spectral product, dealiased.
    pub fn product(&self, other: &Self) -> Self {
        let a = self.to_grid();
        let b = other.to_grid();
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_grid(&self.grid, &p).dealias()
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_modes(|_, c| c * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.map_modes(|i, c| c + other.coeffs[i])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.map_modes(|i, c| c - other.coeffs[i])
    }

    /// `self += s·other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * s;
        }
    }

    /// Largest violation of `f̂(-k) = conj f̂(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.conjugate_index(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Three scalar components on one grid.
#[derive(Clone, Debug)]
pub struct SpectralVector {
    pub comps: [SpectralScalar; 3],
}

impl SpectralVector {
    pub fn new(comps: [SpectralScalar; 3]) -> Self {
        assert!(
            Arc::ptr_eq(comps[0].grid(), comps[1].grid()) && Arc::ptr_eq(comps[0].grid(), comps[2].grid()),
            "vector components must share one grid"
        );
        Self { comps }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::new([
            SpectralScalar::zeros(grid),
            SpectralScalar::zeros(grid),
            SpectralScalar::zeros(grid),
        ])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    fn map(&self, f: impl Fn(&SpectralScalar) -> SpectralScalar) -> Self {
        Self::new([f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])])
    }

    pub fn divergence(&self) -> SpectralScalar {
        let grid = self.grid();
        let coeffs = (0..grid.len())
            .map(|i| {
                let xi = grid.derivative_vector(i);
                I * (xi[0] * self.comps[0].coeffs[i]
                    + xi[1] * self.comps[1].coeffs[i]
                    + xi[2] * self.comps[2].coeffs[i])
            })
            .collect();
        SpectralScalar::from_coeffs(grid, coeffs)
    }

    pub fn curl(&self) -> Self {
        let d = |c: usize, ax: usize| self.comps[c].derivative(ax);
        Self::new([
            d(2, 1).sub(&d(1, 2)),
            d(0, 2).sub(&d(2, 0)),
            d(1, 0).sub(&d(0, 1)),
        ])
    }

    pub fn laplacian(&self) -> Self {
        self.map(SpectralScalar::laplacian)
    }

    /// Gradient part `Q u = ∇Δ⁻¹ div u`; the `k = 0` mode belongs to `P`.
    pub fn leray_q(&self) -> Self {
        let grid = self.grid();
        let mut out = Self::zeros(grid);
        for i in 1..grid.len() {
            let xi = grid.derivative_vector(i);
            let xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            if xi2 == 0.0 {
                continue;
            }
            let dot = xi[0] * self.comps[0].coeffs[i]
                + xi[1] * self.comps[1].coeffs[i]
                + xi[2] * self.comps[2].coeffs[i];
            for ax in 0..3 {
                out.comps[ax].coeffs[i] = dot * (xi[ax] / xi2);
            }
        }
        out
    }

    /// Divergence-free part `P u = u - Q u`.
    pub fn leray_p(&self) -> Self {
        self.sub(&self.leray_q())
    }

    pub fn directional_derivative(&self, n: [f64; 3]) -> Self {
        self.map(|c| c.directional_derivative(n))
    }

    pub fn dealias(&self) -> Self {
        self.map(SpectralScalar::dealias)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new([
            self.comps[0].add(&other.comps[0]),
            self.comps[1].add(&other.comps[1]),
            self.comps[2].add(&other.comps[2]),
        ])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new([
            self.comps[0].sub(&other.comps[0]),
            self.comps[1].sub(&other.comps[1]),
            self.comps[2].sub(&other.comps[2]),
        ])
    }

    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            c.axpy(s, o);
        }
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.comps[0].mean(), self.comps[1].mean(), self.comps[2].mean()]
    }

    pub fn to_grid(&self) -> [Vec<f64>; 3] {
        [self.comps[0].to_grid(), self.comps[1].to_grid(), self.comps[2].to_grid()]
    }

    pub fn max_coeff(&self) -> f64 {
        self.comps.iter().map(SpectralScalar::max_coeff).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sobolev_norm, sobolev_norm_vec, TWO_PI};
    use crate::testing::{random_field, random_vector};

    fn cos_x1(grid: &Arc<Grid>) -> SpectralScalar {
        SpectralScalar::single_mode(grid, [1, 0, 0], Complex64::new(0.5, 0.0))
    }

    fn sin_axis(grid: &Arc<Grid>, axis: usize) -> SpectralScalar {
        let mut k = [0; 3];
        k[axis] = 1;
        // sin(2πx) = (e^{iθ} - e^{-iθ}) / 2i
        SpectralScalar::single_mode(grid, k, Complex64::new(0.0, -0.5))
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    #[test]
    fn constant_mode_is_constant_on_grid() {
        let g = Grid::new(8);
        let f = SpectralScalar::single_mode(&g, [0, 0, 0], Complex64::new(1.0, 0.0));
        assert!(f.to_grid().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn cosine_round_trip() {
        let g = Grid::new(16);
        let f = cos_x1(&g);
        let vals = f.to_grid();
        for i0 in 0..16 {
            let expect = (TWO_PI * g.coordinate(i0)).cos();
            assert!((vals[g.index(i0, 3, 5)] - expect).abs() < 1e-14);
        }
        let back = SpectralScalar::from_grid(&g, &vals);
        assert!(rel_err(back.coeffs(), f.coeffs()) <= 1e-12);
    }

    #[test]
    fn parseval_on_random_field() {
        let g = Grid::new(16);
        let f = random_field(&g, 7, 5);
        let vals = f.to_grid();
        let grid_ms: f64 = vals.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        let coeff_sum: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        assert!((grid_ms - coeff_sum).abs() <= 1e-12 * coeff_sum);
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::new(8);
        let d = sin_axis(&g, 0).derivative(0);
        let expect = SpectralScalar::single_mode(&g, [1, 0, 0], Complex64::new(TWO_PI * 0.5, 0.0));
        assert!(rel_err(d.coeffs(), expect.coeffs()) < 1e-15);
        let c = SpectralScalar::single_mode(&g, [0, 0, 0], Complex64::new(3.0, 0.0));
        assert_eq!(c.derivative(2).max_coeff(), 0.0);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = Grid::new(8);
        let u = sin_axis(&g, 1).gradient();
        assert_eq!(u.curl().max_coeff(), 0.0);
        let f = random_field(&g, 3, 11);
        assert!(f.gradient().curl().max_coeff() <= 1e-13 * f.max_coeff());
        let v = random_vector(&g, 3, 12);
        assert!(v.curl().divergence().max_coeff() <= 1e-13 * v.max_coeff() * 100.0);
    }

    #[test]
    fn inverse_laplacian_of_cosine() {
        let g = Grid::new(8);
        let f = cos_x1(&g);
        let inv = f.inverse_laplacian().unwrap();
        let expect = f.scale(-1.0 / (TWO_PI * TWO_PI));
        assert!(rel_err(inv.coeffs(), expect.coeffs()) < 1e-15);
        let z = SpectralScalar::zeros(&g).inverse_laplacian().unwrap();
        assert_eq!(z.max_coeff(), 0.0);
    }

    #[test]
    fn inverse_laplacian_rejects_mean() {
        let g = Grid::new(8);
        let f = cos_x1(&g).add(&SpectralScalar::single_mode(&g, [0, 0, 0], Complex64::new(0.1, 0.0)));
        assert!(matches!(f.inverse_laplacian(), Err(MhdError::MeanNotZero { .. })));
    }

    #[test]
    fn laplacian_inverts_inverse_laplacian() {
        let g = Grid::new(16);
        let mut f = random_field(&g, 6, 4);
        f.coeffs_mut()[0] = ZERO;
        let back = f.inverse_laplacian().unwrap().laplacian();
        assert!(rel_err(back.coeffs(), f.coeffs()) <= 1e-12);
    }

    #[test]
    fn leray_projectors_on_simple_fields() {
        let g = Grid::new(8);
        let cos = cos_x1(&g);
        let grad = SpectralVector::new([cos.clone(), SpectralScalar::zeros(&g), SpectralScalar::zeros(&g)]);
        assert!(grad.leray_p().max_coeff() < 1e-16);
        assert!(rel_err(grad.leray_q().comps[0].coeffs(), cos.coeffs()) < 1e-15);

        let shear = SpectralVector::new([SpectralScalar::zeros(&g), cos.clone(), SpectralScalar::zeros(&g)]);
        assert!(rel_err(shear.leray_p().comps[1].coeffs(), cos.coeffs()) < 1e-15);
        assert!(shear.leray_q().max_coeff() < 1e-16);
    }

    #[test]
    fn leray_split_properties() {
        let g = Grid::new(16);
        let u = random_vector(&g, 6, 21);
        let p = u.leray_p();
        let q = u.leray_q();
        let sum = p.add(&q).sub(&u);
        let un = sobolev_norm_vec(&u, 0.0).unwrap();
        assert!(sobolev_norm_vec(&sum, 0.0).unwrap() <= 1e-12 * un);
        assert!(p.divergence().max_coeff() <= 1e-13 * un);
        assert!(q.curl().max_coeff() <= 1e-13 * un * TWO_PI * 10.0);
        let pp = p.leray_p().sub(&p);
        assert!(sobolev_norm_vec(&pp, 0.0).unwrap() <= 1e-13 * un);
    }

    #[test]
    fn directional_derivative_matches_component_sum() {
        let g = Grid::new(8);
        let f = sin_axis(&g, 0);
        let d = f.directional_derivative([1.0, 0.0, 0.0]);
        assert!(rel_err(d.coeffs(), f.derivative(0).coeffs()) < 1e-15);
        // n ⟂ ξ
        assert_eq!(f.directional_derivative([0.0, 2.0, -1.0]).max_coeff(), 0.0);

        let n = [0.3, -1.7, 2.2];
        let r = random_field(&g, 3, 8);
        let sum = r
            .derivative(0)
            .scale(n[0])
            .add(&r.derivative(1).scale(n[1]))
            .add(&r.derivative(2).scale(n[2]));
        assert!(rel_err(r.directional_derivative(n).coeffs(), sum.coeffs()) <= 1e-12);
    }

    #[test]
    fn dealias_rules() {
        let g = Grid::new(8);
        let f = random_field(&g, 2, 2);
        assert!(rel_err(f.dealias().coeffs(), f.coeffs()) == 0.0);
        let nyq = SpectralScalar::single_mode(&g, [4, 0, 0], Complex64::new(1.0, 0.0));
        assert_eq!(nyq.dealias().max_coeff(), 0.0);
    }

    #[test]
    fn dealiased_product_is_exact_convolution() {
        let g = Grid::new(8);
        let f = random_field(&g, 2, 31);
        let h = random_field(&g, 2, 32);
        let prod = f.product(&h);
        // direct convolution over integer wave vectors
        let mut expect = vec![ZERO; g.len()];
        for i in 0..g.len() {
            for j in 0..g.len() {
                let (ki, kj) = (g.wavevector(i), g.wavevector(j));
                let k = [ki[0] + kj[0], ki[1] + kj[1], ki[2] + kj[2]];
                if k.iter().all(|c| c.abs() <= 2) {
                    expect[g.index_of(k)] += f.coeffs()[i] * h.coeffs()[j];
                }
            }
        }
        assert!(rel_err(prod.coeffs(), &expect) < 1e-13);
    }

    #[test]
    fn operations_preserve_hermitian_symmetry() {
        let g = Grid::new(8);
        let f = random_field(&g, 3, 40);
        let u = random_vector(&g, 3, 41);
        let scale = f.max_coeff().max(u.max_coeff()) * 1e-13;
        assert!(f.derivative(1).hermitian_defect() <= scale * 100.0);
        assert!(f.laplacian().hermitian_defect() <= scale * 1e3);
        assert!(u.leray_p().comps[2].hermitian_defect() <= scale);
        assert!(f.product(&f).hermitian_defect() <= scale);
        assert!(sobolev_norm(&f, 0.0).unwrap() > 0.0);
    }
}
