//! Pseudo-spectral right-hand side of the perturbed system.
//!
//! With `ρ = 1 + a`, `L u = μΔu + (λ+μ)∇div u` and `J = ∇×B`:
//!
//! ```text
//! ∂t a = −div u − div(a u)
//! ∂t u = L u − I(a) L u + (1/ρ)[−P'(ρ)∇a + J×(n + B)] − u·∇u
//! ∂t B = n·∇u − n div u + ∇×(u×B)
//! ```
//!
//! `J×(n+B)` equals `n·∇B + B·∇B − ∇(n·B) − ∇(|B|²/2)` pointwise, and
//! `∇×(u×B) = B·∇u − B div u − u·∇B` for solenoidal `B`. Every product is
//! formed on the grid and truncated to the dealiased band, so the state
//! never leaves the band.

use std::sync::Arc;

use num_complex::Complex64;

use super::{Params, Pressure, State, Tendency};
use crate::error::{MhdError, Result};
use crate::spectral::{Grid, Pruning, SpectralScalar, SpectralVector};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Grid extrema gathered while evaluating the right-hand side.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GridStats {
    pub min_density: f64,
    pub max_speed: f64,
    /// `max |n + B|`
    pub max_field: f64,
    /// `max P'(ρ)`, the squared sound speed
    pub max_sound_sq: f64,
}

impl GridStats {
    /// Upper bound on the fast magnetosonic speed plus advection.
    pub fn max_signal_speed(&self) -> f64 {
        (self.max_sound_sq
            + self.max_field * self.max_field / self.min_density.max(f64::MIN_POSITIVE))
        .sqrt()
            + self.max_speed
    }
}

#[derive(Clone, Copy, Debug)]
struct Mode {
    idx: usize,
    conj: usize,
    xi: [f64; 3],
    xi_sq: f64,
}

/// Reusable evaluator owning the transform workspace.
pub struct RhsEvaluator {
    grid: Arc<Grid>,
    params: Params,
    modes: Vec<Mode>,
    phys: Vec<Vec<Complex64>>,
    prod: Vec<Vec<Complex64>>,
    spec: Vec<Vec<Complex64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for RhsEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RhsEvaluator").field("params", &self.params).finish()
    }
}

impl RhsEvaluator {
    pub fn new(grid: &Arc<Grid>, params: Params) -> Self {
        let len = grid.len();
        let modes = (0..len)
            .filter(|&i| grid.in_band(i))
            .map(|idx| {
                let xi = grid.derivative_vector(idx);
                Mode {
                    idx,
                    conj: grid.conjugate_index(idx),
                    xi,
                    xi_sq: grid.xi_squared()[idx],
                }
            })
            .collect();
        Self {
            grid: Arc::clone(grid),
            params,
            modes,
            phys: vec![vec![ZERO; len]; 10],
            prod: vec![vec![ZERO; len]; 5],
            spec: vec![vec![ZERO; len]; 10],
            scratch: grid.fft().scratch(),
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Indices of the dealiased band.
    pub fn band_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.modes.iter().map(|m| m.idx)
    }

    /// Full tendency of `state`.
    pub fn rhs(&mut self, state: &State) -> Result<Tendency> {
        let grid = Arc::clone(&self.grid);
        let mut out = Tendency {
            a: SpectralScalar::zeros(&grid),
            u: SpectralVector::zeros(&grid),
            b: SpectralVector::zeros(&grid),
        };
        self.eval_into(state, &mut out, true)?;
        Ok(out)
    }

    /// `L u = μΔu + (λ+μ)∇div u`, per mode.
    pub fn viscous(&self, u: &SpectralVector) -> SpectralVector {
        let mut out = SpectralVector::zeros(&self.grid);
        let (mu, lm) = (self.params.viscosities.mu, self.params.viscosities.lambda + self.params.viscosities.mu);
        for m in &self.modes {
            let uh = [
                u.comps[0].coeffs()[m.idx],
                u.comps[1].coeffs()[m.idx],
                u.comps[2].coeffs()[m.idx],
            ];
            let dot = m.xi[0] * uh[0] + m.xi[1] * uh[1] + m.xi[2] * uh[2];
            for ax in 0..3 {
                out.comps[ax].coeffs_mut()[m.idx] = -mu * m.xi_sq * uh[ax] - lm * m.xi[ax] * dot;
            }
        }
        out
    }

    /// Writes the tendency into the dealiased band of `out`; coefficients
    /// outside the band are left untouched. With `include_viscous = false`
    /// the constant-coefficient term `L u` is left out of `out.u`.
    pub fn eval_into(&mut self, state: &State, out: &mut Tendency, include_viscous: bool) -> Result<GridStats> {
        let grid = Arc::clone(&self.grid);
        let keep = Pruning::Band(grid.dealias_cutoff());
        let n = self.params.n;
        let mu = self.params.viscosities.mu;
        let lm = self.params.viscosities.lambda + mu;
        let gamma = self.params.pressure.gamma_ad;

        let a = state.a.coeffs();
        let u = [state.u.comps[0].coeffs(), state.u.comps[1].coeffs(), state.u.comps[2].coeffs()];
        let b = [state.b.comps[0].coeffs(), state.b.comps[1].coeffs(), state.b.comps[2].coeffs()];

        // Spectral inputs for the grid pass, packed two per complex buffer:
        // (u1,u2) (u3,a) (B1,B2) (B3,∂1a) (∂2a,∂3a) (L1,L2) (L3,J1) (J2,J3) (ω1,ω2) (ω3,-)
        for buf in self.phys.iter_mut() {
            buf.fill(ZERO);
        }
        for m in &self.modes {
            let i = m.idx;
            let xi = m.xi;
            let uh = [u[0][i], u[1][i], u[2][i]];
            let bh = [b[0][i], b[1][i], b[2][i]];
            let ah = a[i];
            let grad_a = [I * xi[0] * ah, I * xi[1] * ah, I * xi[2] * ah];
            let dot = xi[0] * uh[0] + xi[1] * uh[1] + xi[2] * uh[2];
            let lu = [
                -mu * m.xi_sq * uh[0] - lm * xi[0] * dot,
                -mu * m.xi_sq * uh[1] - lm * xi[1] * dot,
                -mu * m.xi_sq * uh[2] - lm * xi[2] * dot,
            ];
            let curl = |v: [Complex64; 3]| {
                [
                    I * (xi[1] * v[2] - xi[2] * v[1]),
                    I * (xi[2] * v[0] - xi[0] * v[2]),
                    I * (xi[0] * v[1] - xi[1] * v[0]),
                ]
            };
            let j = curl(bh);
            let w = curl(uh);
            let pack = |f: Complex64, g: Complex64| f + I * g;
            self.phys[0][i] = pack(uh[0], uh[1]);
            self.phys[1][i] = pack(uh[2], ah);
            self.phys[2][i] = pack(bh[0], bh[1]);
            self.phys[3][i] = pack(bh[2], grad_a[0]);
            self.phys[4][i] = pack(grad_a[1], grad_a[2]);
            self.phys[5][i] = pack(lu[0], lu[1]);
            self.phys[6][i] = pack(lu[2], j[0]);
            self.phys[7][i] = pack(j[1], j[2]);
            self.phys[8][i] = pack(w[0], w[1]);
            self.phys[9][i] = w[2];
        }
        for buf in self.phys.iter_mut() {
            grid.fft().inverse(buf, &mut self.scratch, keep);
        }

        let mut stats = GridStats {
            min_density: f64::INFINITY,
            ..GridStats::default()
        };
        let len = grid.len();
        let p: [&[Complex64]; 10] = std::array::from_fn(|k| &self.phys[k][..len]);
        let [q0, q1, q2, q3, q4] = &mut self.prod[..] else {
            unreachable!("five product buffers")
        };
        let (q0, q1, q2, q3, q4) = (&mut q0[..len], &mut q1[..len], &mut q2[..len], &mut q3[..len], &mut q4[..len]);
        for x in 0..len {
            let (u1, u2) = (p[0][x].re, p[0][x].im);
            let (u3, av) = (p[1][x].re, p[1][x].im);
            let (b1, b2) = (p[2][x].re, p[2][x].im);
            let (b3, ga1) = (p[3][x].re, p[3][x].im);
            let (ga2, ga3) = (p[4][x].re, p[4][x].im);
            let (l1, l2) = (p[5][x].re, p[5][x].im);
            let (l3, j1) = (p[6][x].re, p[6][x].im);
            let (j2, j3) = (p[7][x].re, p[7][x].im);
            let (w1, w2) = (p[8][x].re, p[8][x].im);
            let w3 = p[9][x].re;

            let rho = 1.0 + av;
            stats.min_density = stats.min_density.min(rho);
            let inv = 1.0 / rho;
            let ia = av * inv;
            let dp = if gamma == 2.0 { rho } else { self.params.pressure.dpressure(rho) };
            stats.max_sound_sq = stats.max_sound_sq.max(dp);
            stats.max_speed = stats.max_speed.max((u1 * u1 + u2 * u2 + u3 * u3).sqrt());
            let (t1, t2, t3) = (n[0] + b1, n[1] + b2, n[2] + b3);
            stats.max_field = stats.max_field.max((t1 * t1 + t2 * t2 + t3 * t3).sqrt());

            // F = −P'(ρ)∇a + J×(n+B)
            let f1 = -dp * ga1 + (j2 * t3 - j3 * t2);
            let f2 = -dp * ga2 + (j3 * t1 - j1 * t3);
            let f3 = -dp * ga3 + (j1 * t2 - j2 * t1);
            // m = −I(a) L u + F/ρ + u×ω
            let m1 = -ia * l1 + inv * f1 + (u2 * w3 - u3 * w2);
            let m2 = -ia * l2 + inv * f2 + (u3 * w1 - u1 * w3);
            let m3 = -ia * l3 + inv * f3 + (u1 * w2 - u2 * w1);
            let q = 0.5 * (u1 * u1 + u2 * u2 + u3 * u3);
            let (ub1, ub2, ub3) = (u2 * b3 - u3 * b2, u3 * b1 - u1 * b3, u1 * b2 - u2 * b1);
            q0[x] = Complex64::new(m1, m2);
            q1[x] = Complex64::new(m3, q);
            q2[x] = Complex64::new(av * u1, av * u2);
            q3[x] = Complex64::new(av * u3, ub1);
            q4[x] = Complex64::new(ub2, ub3);
        }
        if stats.min_density < self.params.vacuum_threshold() {
            return Err(MhdError::VacuumApproach {
                t: state.t,
                min_density: stats.min_density,
                threshold: self.params.vacuum_threshold(),
            });
        }

        // Forward transforms and unpacking of the five product pairs.
        for k in 0..5 {
            grid.fft().forward(&mut self.prod[k], &mut self.scratch, keep);
        }
        let scale = 1.0 / grid.len() as f64;
        for m in &self.modes {
            for k in 0..5 {
                let z = self.prod[k][m.idx];
                let zc = self.prod[k][m.conj].conj();
                let s = (z + zc) * (0.5 * scale);
                let d = (z - zc) * (0.5 * scale);
                self.spec[2 * k][m.idx] = s;
                self.spec[2 * k + 1][m.idx] = Complex64::new(d.im, -d.re);
            }
        }

        let sp = &self.spec;
        let [oa, ou0, ou1, ou2, ob0, ob1, ob2] = out.components_mut_raw();
        for m in &self.modes {
            let i = m.idx;
            let xi = m.xi;
            let uh = [u[0][i], u[1][i], u[2][i]];
            let dot = xi[0] * uh[0] + xi[1] * uh[1] + xi[2] * uh[2];
            let div_u = I * dot;
            let (mh, qh) = ([sp[0][i], sp[1][i], sp[2][i]], sp[3][i]);
            let au = [sp[4][i], sp[5][i], sp[6][i]];
            let ub = [sp[7][i], sp[8][i], sp[9][i]];

            oa[i] = -div_u - I * (xi[0] * au[0] + xi[1] * au[1] + xi[2] * au[2]);

            let mut du = [mh[0] - I * xi[0] * qh, mh[1] - I * xi[1] * qh, mh[2] - I * xi[2] * qh];
            if include_viscous {
                for ax in 0..3 {
                    du[ax] += -mu * m.xi_sq * uh[ax] - lm * xi[ax] * dot;
                }
            }
            ou0[i] = du[0];
            ou1[i] = du[1];
            ou2[i] = du[2];

            let n_xi = n[0] * xi[0] + n[1] * xi[1] + n[2] * xi[2];
            let curl_ub = [
                I * (xi[1] * ub[2] - xi[2] * ub[1]),
                I * (xi[2] * ub[0] - xi[0] * ub[2]),
                I * (xi[0] * ub[1] - xi[1] * ub[0]),
            ];
            ob0[i] = I * n_xi * uh[0] - n[0] * div_u + curl_ub[0];
            ob1[i] = I * n_xi * uh[1] - n[1] * div_u + curl_ub[1];
            ob2[i] = I * n_xi * uh[2] - n[2] * div_u + curl_ub[2];
        }
        Ok(stats)
    }
}

impl Tendency {
    pub(crate) fn components_mut_raw(&mut self) -> [&mut [Complex64]; 7] {
        let [u0, u1, u2] = &mut self.u.comps;
        let [b0, b1, b2] = &mut self.b.comps;
        [
            self.a.coeffs_mut(),
            u0.coeffs_mut(),
            u1.coeffs_mut(),
            u2.coeffs_mut(),
            b0.coeffs_mut(),
            b1.coeffs_mut(),
            b2.coeffs_mut(),
        ]
    }
}
