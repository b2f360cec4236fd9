//! Energy-method functionals evaluated on single states, and trajectory
//! audits built from their time series.

mod audit;
mod csv_io;

use std::sync::Arc;

use num_complex::Complex64;

pub use audit::{
    basic_energy_residual, decay_fit, hidden_dissipation_audit, DecayFit, EnergyResidual, HiddenDissipation,
};
pub use csv_io::{format_value, read_csv, write_csv, CsvRowWriter, CsvTable};

use crate::error::Result;
use crate::model::{derived_quantities, Params, Pressure, State};
use crate::spectral::{hs_inner_vec, weighted_sq, Grid, Pruning, SpectralVector};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Settings shared by every record of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    /// Diophantine exponent `r`.
    pub r: f64,
    /// Weight `γ` of the Lyapunov functional.
    pub gamma: f64,
    /// Sobolev orders reported as `norm_h{s}`.
    pub norm_orders: Vec<f64>,
    /// Constant of `‖B‖_{H³} ≤ C‖n·∇B‖_{H^{r+3}}` on the grid band.
    pub poincare_h3: f64,
}

impl DiagnosticsConfig {
    /// `{0, 3, r+4, ceil(4r+7)}`
    pub fn default_orders(r: f64) -> Vec<f64> {
        vec![0.0, 3.0, r + 4.0, (4.0 * r + 7.0).ceil()]
    }

    pub fn new(r: f64) -> Self {
        Self {
            r,
            gamma: 32.0,
            norm_orders: Self::default_orders(r),
            poincare_h3: f64::NAN,
        }
    }
}

/// Quantities carried by the integrator rather than read off a state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepContext {
    pub step: u64,
    /// `∫₀ᵗ D_basic`
    pub cum_dissipation: f64,
    /// `∫₀ᵗ ‖n·∇B‖²_{H^{r+3}}`
    pub cum_nb2: f64,
    /// `‖div B‖_{L²}` before the last projection.
    pub divb_pre: f64,
}

/// One row of the diagnostics table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    /// `‖(a, u, B)‖_{H^s}` for each configured order.
    pub norms: Vec<f64>,
    pub e_basic: f64,
    pub d_basic: f64,
    pub y_inf: f64,
    /// `‖n·∇B‖_{H^{r+3}}`
    pub nb_hr3: f64,
    pub cross_term: f64,
    pub d_hr4: f64,
    pub grad_g_hr4: f64,
    pub lyap_e: f64,
    pub lyap_d: f64,
    /// `E − ‖(d,u,B,G)‖²_{H^{r+4}}`
    pub lyap_margin: f64,
    /// `‖u‖²_{H^{r+5}}`
    pub u_hr5_sq: f64,
    pub b_l2: f64,
    pub grad_b_l2: f64,
    pub b_h3: f64,
    /// `‖B‖_{H³} / (C‖n·∇B‖_{H^{r+3}})`, at most 1 when the inequality holds.
    pub poincare_ratio: f64,
    /// `∫ρ − 1`
    pub rho_mean_drift: f64,
    /// `∫ρu`
    pub momentum: [f64; 3],
    /// `∫B`
    pub b_mean: [f64; 3],
    pub divb_pre: f64,
    pub divb_post: f64,
    pub cum_dissipation: f64,
    pub cum_nb2: f64,
}

fn order_label(s: f64) -> String {
    format!("norm_h{s}")
}

impl DiagnosticsRecord {
    /// Column names, in the order of [`DiagnosticsRecord::values`].
    pub fn header(orders: &[f64]) -> Vec<String> {
        let mut h = vec!["t".to_string(), "step".to_string()];
        h.extend(orders.iter().map(|&s| order_label(s)));
        for name in [
            "e_basic",
            "d_basic",
            "y_inf",
            "nb_hr3",
            "cross_term",
            "d_hr4",
            "grad_g_hr4",
            "lyap_e",
            "lyap_d",
            "lyap_margin",
            "u_hr5_sq",
            "b_l2",
            "grad_b_l2",
            "b_h3",
            "poincare_ratio",
            "rho_mean_drift",
            "momentum_1",
            "momentum_2",
            "momentum_3",
            "b_mean_1",
            "b_mean_2",
            "b_mean_3",
            "divb_pre",
            "divb_post",
            "cum_dissipation",
            "cum_nb2",
        ] {
            h.push(name.to_string());
        }
        h
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.t, self.step as f64];
        v.extend(&self.norms);
        v.extend([
            self.e_basic,
            self.d_basic,
            self.y_inf,
            self.nb_hr3,
            self.cross_term,
            self.d_hr4,
            self.grad_g_hr4,
            self.lyap_e,
            self.lyap_d,
            self.lyap_margin,
            self.u_hr5_sq,
            self.b_l2,
            self.grad_b_l2,
            self.b_h3,
            self.poincare_ratio,
            self.rho_mean_drift,
        ]);
        v.extend(self.momentum);
        v.extend(self.b_mean);
        v.extend([self.divb_pre, self.divb_post, self.cum_dissipation, self.cum_nb2]);
        v
    }
}

/// `μ‖∇u‖² + (λ+μ)‖div u‖²`
pub fn dissipation_basic(state: &State, params: &Params) -> f64 {
    let grid = state.grid();
    let mu = params.viscosities.mu;
    let lm = params.viscosities.lambda + mu;
    let xi2 = grid.xi_squared();
    let u = [state.u.comps[0].coeffs(), state.u.comps[1].coeffs(), state.u.comps[2].coeffs()];
    let mut grad = 0.0;
    let mut div = 0.0;
    for idx in 0..grid.len() {
        if u[0][idx] == ZERO && u[1][idx] == ZERO && u[2][idx] == ZERO {
            continue;
        }
        let xi = grid.derivative_vector(idx);
        grad += xi2[idx] * (u[0][idx].norm_sqr() + u[1][idx].norm_sqr() + u[2][idx].norm_sqr());
        div += (xi[0] * u[0][idx] + xi[1] * u[1][idx] + xi[2] * u[2][idx]).norm_sqr();
    }
    mu * grad + lm * div
}

/// `‖n·∇B‖²_{H^s}`
pub fn directional_norm_sq(b: &SpectralVector, n: [f64; 3], s: f64) -> f64 {
    let grid = b.grid();
    let w = grid.sobolev_weights(s);
    let mut sum = 0.0;
    for idx in 0..grid.len() {
        let m = b.comps[0].coeffs()[idx].norm_sqr() + b.comps[1].coeffs()[idx].norm_sqr() + b.comps[2].coeffs()[idx].norm_sqr();
        if m == 0.0 {
            continue;
        }
        let xi = grid.derivative_vector(idx);
        let nx = n[0] * xi[0] + n[1] * xi[1] + n[2] * xi[2];
        sum += w[idx] * nx * nx * m;
    }
    sum
}

/// `Σᵢ ‖∂ᵢ v‖²_{H^s}` for a vector field.
fn gradient_norm_sq(v: &SpectralVector, s: f64) -> f64 {
    let grid = v.grid();
    let w = grid.sobolev_weights(s);
    let xi2 = grid.xi_squared();
    let ws: Vec<f64> = w.iter().zip(xi2).map(|(a, b)| a * b).collect();
    v.comps.iter().map(|c| weighted_sq(&ws, c.coeffs())).sum()
}

/// `∫ρu = û₀ + Σ_k Re(â_k conj(û_k))`, exact for band-limited fields.
pub fn momentum(state: &State) -> [f64; 3] {
    std::array::from_fn(|ax| {
        let u = state.u.comps[ax].coeffs();
        let cross: f64 = state.a.coeffs().iter().zip(u).map(|(a, b)| (a * b.conj()).re).sum();
        u[0].re + cross
    })
}

/// Grid-side quantities: `Y∞` and the basic energy.
struct GridPass {
    y_inf: f64,
    e_basic: f64,
}

/// Evaluates [`DiagnosticsRecord`]s, owning the transform workspace.
pub struct Diagnostics {
    grid: Arc<Grid>,
    params: Params,
    cfg: DiagnosticsConfig,
    bufs: Vec<Vec<Complex64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Diagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diagnostics").field("cfg", &self.cfg).finish()
    }
}

impl Diagnostics {
    pub fn new(grid: &Arc<Grid>, params: Params, cfg: DiagnosticsConfig) -> Self {
        Self {
            grid: Arc::clone(grid),
            params,
            cfg,
            bufs: vec![vec![ZERO; grid.len()]; 14],
            scratch: grid.fft().scratch(),
        }
    }

    pub fn config(&self) -> &DiagnosticsConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    fn grid_pass(&mut self, state: &State) -> Result<GridPass> {
        let grid = Arc::clone(&self.grid);
        // Fields in pairs: a u1 u2 u3 B1 B2 B3, then ∂ⱼa, ∂ⱼuᵢ, ∂ⱼBᵢ.
        let mut fields: Vec<Vec<Complex64>> = Vec::with_capacity(26);
        for c in state.components() {
            fields.push(c.coeffs().to_vec());
        }
        for c in state.components() {
            for ax in 0..3 {
                fields.push(c.derivative(ax).into_coeffs());
            }
        }
        let pruning = Pruning::Band(grid.dealias_cutoff());
        for (pair, buf) in fields.chunks(2).zip(self.bufs.iter_mut()) {
            grid.to_grid_pair(&pair[0], Some(&pair[1]), buf, &mut self.scratch, pruning);
        }
        let value = |bufs: &[Vec<Complex64>], field: usize, x: usize| {
            let z = bufs[field / 2][x];
            if field % 2 == 0 {
                z.re
            } else {
                z.im
            }
        };
        let (mut grad_max, mut ab_max, mut a_max, mut b_max, mut db_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut energy = 0.0;
        for x in 0..grid.len() {
            let a = value(&self.bufs, 0, x);
            let u2: f64 = (1..4).map(|f| value(&self.bufs, f, x).powi(2)).sum();
            let b2: f64 = (4..7).map(|f| value(&self.bufs, f, x).powi(2)).sum();
            let ga2: f64 = (7..10).map(|f| value(&self.bufs, f, x).powi(2)).sum();
            let gu2: f64 = (10..19).map(|f| value(&self.bufs, f, x).powi(2)).sum();
            let gb2: f64 = (19..28).map(|f| value(&self.bufs, f, x).powi(2)).sum();
            grad_max = grad_max.max(ga2 + gu2 + gb2);
            ab_max = ab_max.max(a * a + b2);
            a_max = a_max.max(a * a);
            b_max = b_max.max(b2);
            db_max = db_max.max(gb2);
            let rho = 1.0 + a;
            energy += 2.0 * self.params.pressure.potential_energy(rho)? + rho * u2 + b2;
        }
        // Squared magnitudes were tracked, so the squared norms are direct.
        let y_inf = grad_max.sqrt() + grad_max + ab_max + a_max * b_max + b_max * db_max;
        Ok(GridPass {
            y_inf,
            e_basic: 0.5 * energy / grid.len() as f64,
        })
    }

    /// All functionals of `state`; `ctx` supplies integrator bookkeeping.
    pub fn record(&mut self, state: &State, ctx: &StepContext) -> Result<DiagnosticsRecord> {
        let r = self.cfg.r;
        let n = self.params.n;
        let gamma = self.cfg.gamma;
        let visc = self.params.viscosities;
        let mu = visc.mu;
        let lm = visc.lambda + mu;
        let nu = visc.nu();

        let norms = self
            .cfg
            .norm_orders
            .iter()
            .map(|&s| state.sobolev_norm(s))
            .collect::<Result<Vec<f64>>>()?;
        let pass = self.grid_pass(state)?;
        let dq = derived_quantities(state, &self.params)?;
        let nb = state.b.directional_derivative(n);
        let nb_hr3_sq = directional_norm_sq(&state.b, n, r + 3.0);
        let cross_term = hs_inner_vec(&dq.pu, &nb, r + 3.0)?;

        let s4 = r + 4.0;
        let w4 = self.grid.sobolev_weights(s4);
        let sq = |c: &[Complex64]| weighted_sq(&w4, c);
        let vec_sq = |v: &SpectralVector| v.comps.iter().map(|c| sq(c.coeffs())).sum::<f64>();
        let a_sq = sq(state.a.coeffs());
        let d_sq = sq(dq.d.coeffs());
        let combined = d_sq + vec_sq(&state.u) + vec_sq(&state.b) + vec_sq(&dq.g);
        let grad_u_sq = gradient_norm_sq(&state.u, s4);
        let div_u_sq = sq(state.u.divergence().coeffs());
        let grad_g_sq = gradient_norm_sq(&dq.g, s4);
        let lyap_e = gamma * (a_sq + combined) - cross_term;
        let lyap_d = gamma * (d_sq / nu + mu * grad_u_sq + lm * div_u_sq + nu * grad_g_sq) + nb_hr3_sq;

        let w5 = self.grid.sobolev_weights(r + 5.0);
        let u_hr5_sq = state.u.comps.iter().map(|c| weighted_sq(&w5, c.coeffs())).sum();
        let w0 = self.grid.sobolev_weights(0.0);
        let b_l2 = state.b.comps.iter().map(|c| weighted_sq(&w0, c.coeffs())).sum::<f64>().sqrt();
        let grad_b_l2 = gradient_norm_sq(&state.b, 0.0).sqrt();
        let w3 = self.grid.sobolev_weights(3.0);
        let b_h3 = state.b.comps.iter().map(|c| weighted_sq(&w3, c.coeffs())).sum::<f64>().sqrt();
        let nb_hr3 = nb_hr3_sq.sqrt();
        let poincare_ratio = if b_h3 == 0.0 { 0.0 } else { b_h3 / (self.cfg.poincare_h3 * nb_hr3) };
        let divb = state.b.divergence();

        Ok(DiagnosticsRecord {
            t: state.t,
            step: ctx.step,
            norms,
            e_basic: pass.e_basic,
            d_basic: dissipation_basic(state, &self.params),
            y_inf: pass.y_inf,
            nb_hr3,
            cross_term,
            d_hr4: d_sq.sqrt(),
            grad_g_hr4: grad_g_sq.sqrt(),
            lyap_e,
            lyap_d,
            lyap_margin: lyap_e - combined,
            u_hr5_sq,
            b_l2,
            grad_b_l2,
            b_h3,
            poincare_ratio,
            rho_mean_drift: state.a.mean(),
            momentum: momentum(state),
            b_mean: state.b.mean(),
            divb_pre: ctx.divb_pre,
            divb_post: crate::spectral::sobolev_norm(&divb, 0.0)?,
            cum_dissipation: ctx.cum_dissipation,
            cum_nb2: ctx.cum_nb2,
        })
    }
}
