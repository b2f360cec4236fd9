//! Time stepping with solenoidal projection of `B` after each step.
//!
//! Three schemes share one interface:
//! * `rk4_explicit`: classical four-stage Runge–Kutta on the full tendency;
//! * `imex_cn`: Crank–Nicolson on `μΔu + (λ+μ)∇div u` with a Heun predictor
//!   for the remaining terms (second order);
//! * `rk4_if`: integrating-factor (Lawson) RK4, exact on the viscous operator.
//!
//! Time integrals of `D_basic` and `‖n·∇B‖²_{H^{r+3}}` are advanced with the
//! same stage weights as the state, so they carry the scheme's order.

mod initial;
mod snapshot;

use std::sync::Arc;

use num_complex::Complex64;

pub use initial::{make_initial, InitialSpec, Preset};
pub use snapshot::{read_snapshot, snapshot_path, write_snapshot, Snapshot, SnapshotMeta, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use crate::diagnostics::{directional_norm_sq, dissipation_basic, Diagnostics, DiagnosticsRecord, StepContext};
use crate::error::{MhdError, Result};
use crate::model::{GridStats, Params, RhsEvaluator, State, Tendency};
use crate::spectral::{Grid, SpectralVector};

/// Largest `|z|` with `z` on the negative real axis inside the RK4 stability region.
pub const RK4_REAL_STABILITY: f64 = 2.785;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    Rk4Explicit,
    ImexCn,
    #[default]
    Rk4If,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rk4Explicit => "rk4_explicit",
            Scheme::ImexCn => "imex_cn",
            Scheme::Rk4If => "rk4_if",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rk4_explicit" | "rk4" => Ok(Scheme::Rk4Explicit),
            "imex_cn" => Ok(Scheme::ImexCn),
            "rk4_if" => Ok(Scheme::Rk4If),
            other => Err(format!("unknown scheme '{other}' (expected rk4_explicit, imex_cn or rk4_if)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub cfl_advective: f64,
    pub cfl_viscous: f64,
    pub t_end: f64,
    pub project_b_every: u64,
    /// Steps between snapshots; every snapshot also gets a diagnostics record.
    pub snapshot_every: u64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            dt: 1e-3,
            cfl_advective: 0.4,
            cfl_viscous: 0.4,
            t_end: 1.0,
            project_b_every: 1,
            snapshot_every: 250,
        }
    }
}

impl StepperConfig {
    /// Steps needed to reach `t_end`; the last one may be shorter.
    pub fn step_count(&self) -> u64 {
        if self.t_end <= 0.0 {
            return 0;
        }
        let n = self.t_end / self.dt;
        let r = n.round();
        if (n - r).abs() <= 1e-9 * n.max(1.0) {
            r as u64
        } else {
            n.ceil() as u64
        }
    }

    /// Time after `step` steps, exact at both ends.
    pub fn time_at(&self, step: u64) -> f64 {
        if step >= self.step_count() {
            self.t_end.max(0.0)
        } else {
            step as f64 * self.dt
        }
    }
}

/// Time-step limits for a grid and state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityLimits {
    /// `cfl_viscous·Δx²/max(μ, ν)`
    pub viscous_cfl: f64,
    /// `2.785 / (max(μ, ν)·max|ξ|²)` over the dealiased band.
    pub viscous_spectral: f64,
    /// `cfl_advective·Δx / (signal speed)`
    pub advective: f64,
}

impl StabilityLimits {
    pub fn compute(grid: &Grid, params: &Params, cfg: &StepperConfig, stats: &GridStats) -> Self {
        let dx = 1.0 / grid.points_per_axis() as f64;
        let vmax = params.viscosities.mu.max(params.viscosities.nu());
        let xi_max = (0..grid.len())
            .filter(|&i| grid.in_band(i))
            .map(|i| grid.xi_squared()[i])
            .fold(0.0, f64::max);
        Self {
            viscous_cfl: cfg.cfl_viscous * dx * dx / vmax,
            viscous_spectral: RK4_REAL_STABILITY / (vmax * xi_max),
            advective: cfg.cfl_advective * dx / stats.max_signal_speed(),
        }
    }

    /// Largest admissible step for `scheme`.
    pub fn max_dt(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Rk4Explicit => self.advective.min(self.viscous_cfl).min(self.viscous_spectral),
            Scheme::ImexCn | Scheme::Rk4If => self.advective,
        }
    }
}

/// Per-mode factors of the viscous operator on the `P` and `Q` parts.
#[derive(Clone, Debug)]
struct ModeFactors {
    p: Vec<f64>,
    q: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Mode {
    idx: usize,
    xi: [f64; 3],
    xi_sq: f64,
}

/// Result of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub stats: GridStats,
    /// `‖div B‖_{L²}` before projection.
    pub divb_pre: f64,
    /// Means of `a` and `B` removed after the step.
    pub mean_drift: f64,
}

/// Stage buffers reused across steps.
#[derive(Debug)]
struct Workspace {
    k: [Tendency; 4],
    s: State,
}

/// Single-step integrator with its workspace and running integrals.
///
/// States are assumed to vanish outside the dealiased band; only in-band
/// coefficients are advanced.
#[derive(Debug)]
pub struct Stepper {
    ev: RhsEvaluator,
    cfg: StepperConfig,
    r: f64,
    modes: Vec<Mode>,
    band: Vec<usize>,
    factors: Option<(f64, [ModeFactors; 2])>,
    ws: Workspace,
    ctx: StepContext,
}

impl Stepper {
    /// `r` fixes the order `r + 3` of the accumulated `‖n·∇B‖²`.
    pub fn new(grid: &Arc<Grid>, params: Params, cfg: StepperConfig, r: f64) -> Result<Self> {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(MhdError::InvalidParameter(format!("dt must be positive, got {}", cfg.dt)));
        }
        if cfg.project_b_every == 0 || cfg.snapshot_every == 0 {
            return Err(MhdError::InvalidParameter(
                "project_b_every and snapshot_every must be at least 1".into(),
            ));
        }
        let modes: Vec<Mode> = (0..grid.len())
            .filter(|&i| grid.in_band(i))
            .map(|idx| Mode {
                idx,
                xi: grid.derivative_vector(idx),
                xi_sq: grid.xi_squared()[idx],
            })
            .collect();
        let band = modes.iter().map(|m| m.idx).collect();
        let stepper = Self {
            ev: RhsEvaluator::new(grid, params),
            cfg,
            r,
            modes,
            band,
            factors: None,
            ws: Workspace {
                k: std::array::from_fn(|_| zero_tendency(grid)),
                s: State::zeros(grid),
            },
            ctx: StepContext::default(),
        };
        if cfg.scheme == Scheme::Rk4Explicit {
            let lim = StabilityLimits::compute(grid, &params, &cfg, &GridStats {
                min_density: 1.0,
                max_speed: 0.0,
                max_field: 0.0,
                max_sound_sq: 0.0,
            });
            if cfg.dt > lim.viscous_cfl {
                return Err(MhdError::StabilityViolation {
                    dt: cfg.dt,
                    limit: lim.viscous_cfl,
                    kind: "viscous CFL",
                });
            }
            if cfg.dt > lim.viscous_spectral {
                return Err(MhdError::StabilityViolation {
                    dt: cfg.dt,
                    limit: lim.viscous_spectral,
                    kind: "viscous spectral-radius",
                });
            }
        }
        Ok(stepper)
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params {
        self.ev.params()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.ev.grid()
    }

    pub fn context(&self) -> &StepContext {
        &self.ctx
    }

    /// Restarts the running integrals, e.g. from a snapshot.
    pub fn set_context(&mut self, ctx: StepContext) {
        self.ctx = ctx;
    }

    /// Grid extrema of `state`, as seen by the stability check.
    pub fn grid_stats(&mut self, state: &State) -> Result<GridStats> {
        self.ev.eval_into(state, &mut self.ws.k[0], true)
    }

    fn factors(&mut self, h: f64) {
        let stale = self.factors.as_ref().map_or(true, |(fh, _)| *fh != h);
        if !stale {
            return;
        }
        let mu = self.ev.params().viscosities.mu;
        let nu = self.ev.params().viscosities.nu();
        let make = |f: &dyn Fn(f64) -> f64| ModeFactors {
            p: self.modes.iter().map(|m| f(-mu * m.xi_sq)).collect(),
            q: self.modes.iter().map(|m| f(-nu * m.xi_sq)).collect(),
        };
        let pair = match self.cfg.scheme {
            Scheme::Rk4If => [make(&|l| (0.5 * h * l).exp()), make(&|l| (h * l).exp())],
            // (1 + hλ/2)/(1 − hλ/2) and 1/(1 − hλ/2)
            Scheme::ImexCn => [
                make(&|l| (1.0 + 0.5 * h * l) / (1.0 - 0.5 * h * l)),
                make(&|l| 1.0 / (1.0 - 0.5 * h * l)),
            ],
            Scheme::Rk4Explicit => [make(&|_| 1.0), make(&|_| 1.0)],
        };
        self.factors = Some((h, pair));
    }

    /// Advances `state` by `h`, projects `B` when due and removes the means
    /// of `a` and `B`.
    pub fn step(&mut self, state: &mut State, h: f64) -> Result<StepReport> {
        let t0 = state.t;
        self.factors(h);
        let (stats, dq, dn) = match self.cfg.scheme {
            Scheme::Rk4Explicit => self.step_rk4(state, h)?,
            Scheme::Rk4If => self.step_lawson(state, h)?,
            Scheme::ImexCn => self.step_imex(state, h)?,
        };
        state.t = t0 + h;
        self.ctx.step += 1;
        self.ctx.cum_dissipation += dq;
        self.ctx.cum_nb2 += dn;

        let mut drift = state.a.mean().abs();
        for c in &state.b.comps {
            drift = drift.max(c.mean().abs());
        }
        state.a.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        for c in state.b.comps.iter_mut() {
            c.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        }
        let project = self.ctx.step % self.cfg.project_b_every == 0;
        let divb_pre = divergence_and_project(&self.modes, &mut state.b, project);
        self.ctx.divb_pre = divb_pre;
        Ok(StepReport {
            stats,
            divb_pre,
            mean_drift: drift,
        })
    }

    fn integrands(ev: &RhsEvaluator, r: f64, s: &State) -> (f64, f64) {
        let p = ev.params();
        (dissipation_basic(s, p), directional_norm_sq(&s.b, p.n, r + 3.0))
    }

    fn step_rk4(&mut self, y: &mut State, h: f64) -> Result<(GridStats, f64, f64)> {
        let Self { ev, ws, band, r, .. } = self;
        let [k1, k2, k3, k4] = &mut ws.k;
        let s = &mut ws.s;
        let stats = ev.eval_into(y, k1, true)?;
        let lim = StabilityLimits::compute(ev.grid(), ev.params(), &self.cfg, &stats);
        check_advective(&lim, h)?;
        let w1 = Self::integrands(ev, *r, y);
        combine(band, s, y, &[(0.5 * h, &*k1)]);
        s.t = y.t + 0.5 * h;
        ev.eval_into(s, k2, true)?;
        let w2 = Self::integrands(ev, *r, s);
        combine(band, s, y, &[(0.5 * h, &*k2)]);
        s.t = y.t + 0.5 * h;
        ev.eval_into(s, k3, true)?;
        let w3 = Self::integrands(ev, *r, s);
        combine(band, s, y, &[(h, &*k3)]);
        s.t = y.t + h;
        ev.eval_into(s, k4, true)?;
        let w4 = Self::integrands(ev, *r, s);
        accumulate(band, y, &[(h / 6.0, &*k1), (h / 3.0, &*k2), (h / 3.0, &*k3), (h / 6.0, &*k4)]);
        Ok((
            stats,
            h * (w1.0 + 2.0 * w2.0 + 2.0 * w3.0 + w4.0) / 6.0,
            h * (w1.1 + 2.0 * w2.1 + 2.0 * w3.1 + w4.1) / 6.0,
        ))
    }

    fn step_lawson(&mut self, y: &mut State, h: f64) -> Result<(GridStats, f64, f64)> {
        let Self {
            ev,
            ws,
            band,
            r,
            modes,
            factors,
            cfg,
            ..
        } = self;
        let [half, full] = &factors.as_ref().expect("factors are set before stepping").1;
        let [k1, k2, k3, k4] = &mut ws.k;
        let s = &mut ws.s;
        let stats = ev.eval_into(y, k1, false)?;
        check_advective(&StabilityLimits::compute(ev.grid(), ev.params(), cfg, &stats), h)?;
        let w1 = Self::integrands(ev, *r, y);

        // y₂ = E½(y + h/2 k₁)
        combine(band, s, y, &[(0.5 * h, &*k1)]);
        apply(modes, half, &mut s.u);
        s.t = y.t + 0.5 * h;
        ev.eval_into(s, k2, false)?;
        let w2 = Self::integrands(ev, *r, s);

        // y₃ = E½ y + h/2 k₂
        combine(band, s, y, &[]);
        apply(modes, half, &mut s.u);
        accumulate(band, s, &[(0.5 * h, &*k2)]);
        s.t = y.t + 0.5 * h;
        ev.eval_into(s, k3, false)?;
        let w3 = Self::integrands(ev, *r, s);

        // y₄ = E y + h E½ k₃, keeping E½k₂ and E½k₃ for the update
        apply(modes, half, &mut k2.u);
        apply(modes, half, &mut k3.u);
        combine(band, s, y, &[]);
        apply(modes, full, &mut s.u);
        accumulate(band, s, &[(h, &*k3)]);
        s.t = y.t + h;
        ev.eval_into(s, k4, false)?;
        let w4 = Self::integrands(ev, *r, s);

        // y' = E(y + h/6 k₁) + h/3 E½(k₂ + k₃) + h/6 k₄
        accumulate(band, y, &[(h / 6.0, &*k1)]);
        apply(modes, full, &mut y.u);
        accumulate(band, y, &[(h / 3.0, &*k2), (h / 3.0, &*k3), (h / 6.0, &*k4)]);
        Ok((
            stats,
            h * (w1.0 + 2.0 * w2.0 + 2.0 * w3.0 + w4.0) / 6.0,
            h * (w1.1 + 2.0 * w2.1 + 2.0 * w3.1 + w4.1) / 6.0,
        ))
    }

    fn step_imex(&mut self, y: &mut State, h: f64) -> Result<(GridStats, f64, f64)> {
        let Self {
            ev,
            ws,
            band,
            r,
            modes,
            factors,
            cfg,
            ..
        } = self;
        let [plus, inv] = &factors.as_ref().expect("factors are set before stepping").1;
        let [k1, k2, ..] = &mut ws.k;
        let s = &mut ws.s;
        let stats = ev.eval_into(y, k1, false)?;
        check_advective(&StabilityLimits::compute(ev.grid(), ev.params(), cfg, &stats), h)?;
        let w1 = Self::integrands(ev, *r, y);

        // Predictor: (1 − hL/2) y* = (1 + hL/2) y + h N(y)
        apply(modes, inv, &mut k1.u);
        combine(band, s, y, &[]);
        apply(modes, plus, &mut s.u);
        accumulate(band, s, &[(h, &*k1)]);
        s.t = y.t + h;
        ev.eval_into(s, k2, false)?;
        let w2 = Self::integrands(ev, *r, s);

        // Corrector: (1 − hL/2) y' = (1 + hL/2) y + h/2 (N(y) + N(y*))
        apply(modes, inv, &mut k2.u);
        apply(modes, plus, &mut y.u);
        accumulate(band, y, &[(0.5 * h, &*k1), (0.5 * h, &*k2)]);
        Ok((stats, 0.5 * h * (w1.0 + w2.0), 0.5 * h * (w1.1 + w2.1)))
    }
}

fn check_advective(lim: &StabilityLimits, h: f64) -> Result<()> {
    if h > lim.advective * (1.0 + 1e-12) {
        return Err(MhdError::StabilityViolation {
            dt: h,
            limit: lim.advective,
            kind: "advective CFL",
        });
    }
    Ok(())
}

/// Multiplies `u` mode by mode with `f.p` on its solenoidal part and `f.q`
/// on its gradient part.
fn apply(modes: &[Mode], f: &ModeFactors, u: &mut SpectralVector) {
    let [u0, u1, u2] = &mut u.comps;
    let (c0, c1, c2) = (u0.coeffs_mut(), u1.coeffs_mut(), u2.coeffs_mut());
    for (j, m) in modes.iter().enumerate() {
        let i = m.idx;
        if m.xi_sq == 0.0 {
            continue;
        }
        let v = [c0[i], c1[i], c2[i]];
        let dot: Complex64 = (m.xi[0] * v[0] + m.xi[1] * v[1] + m.xi[2] * v[2]) / m.xi_sq;
        let q = [dot * m.xi[0], dot * m.xi[1], dot * m.xi[2]];
        c0[i] = f.p[j] * (v[0] - q[0]) + f.q[j] * q[0];
        c1[i] = f.p[j] * (v[1] - q[1]) + f.q[j] * q[1];
        c2[i] = f.p[j] * (v[2] - q[2]) + f.q[j] * q[2];
    }
}

/// `‖div B‖_{L²}`, followed by `B ← P B` when `project` is set.
fn divergence_and_project(modes: &[Mode], b: &mut SpectralVector, project: bool) -> f64 {
    let [b0, b1, b2] = &mut b.comps;
    let (c0, c1, c2) = (b0.coeffs_mut(), b1.coeffs_mut(), b2.coeffs_mut());
    let mut sq = 0.0;
    for m in modes {
        let i = m.idx;
        if m.xi_sq == 0.0 {
            continue;
        }
        let dot = m.xi[0] * c0[i] + m.xi[1] * c1[i] + m.xi[2] * c2[i];
        sq += dot.norm_sqr();
        if project {
            let d = dot / m.xi_sq;
            c0[i] -= d * m.xi[0];
            c1[i] -= d * m.xi[1];
            c2[i] -= d * m.xi[2];
        }
    }
    sq.sqrt()
}

/// `dst = src + Σ cᵢ kᵢ` on the band, with `dst.t = src.t`.
fn combine(band: &[usize], dst: &mut State, src: &State, terms: &[(f64, &Tendency)]) {
    dst.t = src.t;
    for (j, (d, s)) in dst.components_mut().into_iter().zip(src.components()).enumerate() {
        let (d, s) = (d.coeffs_mut(), s.coeffs());
        for &i in band {
            d[i] = s[i];
        }
        for (c, k) in terms {
            let k = k.components()[j].coeffs();
            for &i in band {
                d[i] += *c * k[i];
            }
        }
    }
}

/// `y += Σ cᵢ kᵢ` on the band.
fn accumulate(band: &[usize], y: &mut State, terms: &[(f64, &Tendency)]) {
    for (j, d) in y.components_mut().into_iter().enumerate() {
        let d = d.coeffs_mut();
        for (c, k) in terms {
            let k = k.components()[j].coeffs();
            for &i in band {
                d[i] += *c * k[i];
            }
        }
    }
}

fn zero_tendency(grid: &Arc<Grid>) -> Tendency {
    Tendency {
        a: crate::spectral::SpectralScalar::zeros(grid),
        u: SpectralVector::zeros(grid),
        b: SpectralVector::zeros(grid),
    }
}

/// Records and snapshot times of one run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshot_steps: Vec<u64>,
}

/// Extremes over a run of the conserved quantities and constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservationSummary {
    pub max_rho_drift: f64,
    pub max_momentum: f64,
    pub max_b_mean: f64,
    pub max_divb_pre: f64,
    pub max_divb_post: f64,
}

impl ConservationSummary {
    pub fn from_records(records: &[DiagnosticsRecord]) -> Self {
        let mut s = Self::default();
        for r in records {
            s.max_rho_drift = s.max_rho_drift.max(r.rho_mean_drift.abs());
            s.max_momentum = s.max_momentum.max(r.momentum.iter().fold(0.0, |m, v| m.max(v.abs())));
            s.max_b_mean = s.max_b_mean.max(r.b_mean.iter().fold(0.0, |m, v| m.max(v.abs())));
            s.max_divb_pre = s.max_divb_pre.max(r.divb_pre);
            s.max_divb_post = s.max_divb_post.max(r.divb_post);
        }
        s
    }
}

/// Integrates to `t_end`. Every `snapshot_every` steps, and at both ends,
/// the state goes to `on_snapshot` and its diagnostics record to `on_record`.
pub fn run(
    initial: State,
    stepper: &mut Stepper,
    diagnostics: &mut Diagnostics,
    on_record: &mut dyn FnMut(&DiagnosticsRecord) -> Result<()>,
    on_snapshot: &mut dyn FnMut(&State, &StepContext) -> Result<()>,
) -> Result<(State, Trajectory)> {
    initial.check_invariants()?;
    let cfg = *stepper.config();
    let total = cfg.step_count();
    let mut state = initial;
    for c in state.components_mut() {
        c.dealias_in_place();
    }
    let mut traj = Trajectory::default();
    let mut emit = |state: &State, ctx: &StepContext, traj: &mut Trajectory| -> Result<()> {
        let rec = diagnostics.record(state, ctx)?;
        on_record(&rec)?;
        traj.records.push(rec);
        on_snapshot(state, ctx)?;
        traj.snapshot_steps.push(ctx.step);
        Ok(())
    };
    let ctx0 = *stepper.context();
    emit(&state, &ctx0, &mut traj)?;
    for i in 0..total {
        let h = cfg.time_at(i + 1) - cfg.time_at(i);
        let (t, step) = (state.t, stepper.context().step + 1);
        stepper.step(&mut state, h).map_err(|e| MhdError::StepFailed {
            step,
            t,
            source: Box::new(e),
        })?;
        state.t = cfg.time_at(i + 1);
        let ctx = *stepper.context();
        if ctx.step % cfg.snapshot_every == 0 || i + 1 == total {
            emit(&state, &ctx, &mut traj)?;
        }
    }
    Ok((state, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::DiagnosticsConfig;
    use crate::model::{PressureLaw, Viscosities};
    use crate::testing::random_state;

    const DEFAULT_N: [f64; 3] = [1.0, std::f64::consts::SQRT_2, 1.7320508075688772];

    fn params(n: [f64; 3]) -> Params {
        Params {
            n,
            pressure: PressureLaw::default(),
            viscosities: Viscosities::new(0.1, 0.0).unwrap(),
            c0: 0.5,
        }
    }

    fn integrate(s0: &State, p: Params, scheme: Scheme, t_end: f64, steps: u64) -> State {
        let cfg = StepperConfig {
            scheme,
            dt: t_end / steps as f64,
            t_end,
            ..Default::default()
        };
        let mut st = Stepper::new(s0.grid(), p, cfg, 3.0).unwrap();
        let mut s = s0.clone();
        for i in 0..cfg.step_count() {
            let h = cfg.time_at(i + 1) - cfg.time_at(i);
            st.step(&mut s, h).unwrap();
        }
        s
    }

    fn distance(x: &State, y: &State) -> f64 {
        x.components()
            .iter()
            .zip(y.components())
            .map(|(c, d)| c.sub(d).max_coeff())
            .fold(0.0, f64::max)
    }

    #[test]
    fn viscous_shear_matches_heat_kernel() {
        let grid = Grid::new(16);
        let p = params([0.0; 3]);
        let spec = InitialSpec {
            preset: Preset::Shear,
            epsilon: 1e-2,
            seed: 0,
            band: 1,
        };
        let s0 = make_initial(&spec, &grid, &p).unwrap();
        let decay = (-4.0 * std::f64::consts::PI.powi(2) * 0.1 * 0.5f64).exp();
        for scheme in [Scheme::Rk4Explicit, Scheme::Rk4If] {
            let s = integrate(&s0, p, scheme, 0.5, 500);
            let amp = s.u.comps[1].coeffs()[grid.index_of([1, 0, 0])].im * -2.0;
            assert!((amp / (1e-2 * decay) - 1.0).abs() < 1e-6, "{scheme:?}: {amp}");
            // Only transform roundoff leaks into a and B.
            assert!(s.a.max_coeff() < 1e-18);
            assert!(s.b.comps.iter().map(|c| c.max_coeff()).fold(0.0, f64::max) < 1e-18);
        }
        // The integrating factor is exact on this mode.
        let s = integrate(&s0, p, Scheme::Rk4If, 0.5, 25);
        let amp = s.u.comps[1].coeffs()[grid.index_of([1, 0, 0])].im * -2.0;
        assert!((amp / (1e-2 * decay) - 1.0).abs() < 1e-13);
    }

    fn order_ratio(scheme: Scheme) -> f64 {
        let grid = Grid::new(16);
        let p = params(DEFAULT_N);
        let mut s0 = random_state(&grid, 2, 0.004, 11);
        s0.b = s0.b.leray_p();
        let t = 0.05;
        let reference = integrate(&s0, p, scheme, t, 320);
        let coarse = distance(&integrate(&s0, p, scheme, t, 20), &reference);
        let fine = distance(&integrate(&s0, p, scheme, t, 40), &reference);
        coarse / fine
    }

    #[test]
    fn rk4_is_fourth_order() {
        let r = order_ratio(Scheme::Rk4Explicit);
        assert!((13.0..19.0).contains(&r), "ratio {r}");
        let r = order_ratio(Scheme::Rk4If);
        assert!((13.0..19.0).contains(&r), "ratio {r}");
    }

    #[test]
    fn imex_is_second_order() {
        let r = order_ratio(Scheme::ImexCn);
        assert!((3.4..4.6).contains(&r), "ratio {r}");
    }

    #[test]
    fn steady_state_stays_put() {
        let grid = Grid::new(8);
        let p = params(DEFAULT_N);
        for scheme in [Scheme::Rk4Explicit, Scheme::ImexCn, Scheme::Rk4If] {
            let s = integrate(&State::zeros(&grid), p, scheme, 0.05, 10);
            assert_eq!(distance(&s, &State::zeros(&grid)), 0.0);
        }
    }

    #[test]
    fn explicit_scheme_rejects_large_steps() {
        let grid = Grid::new(16);
        let cfg = StepperConfig {
            scheme: Scheme::Rk4Explicit,
            dt: 1e-2,
            ..Default::default()
        };
        let err = Stepper::new(&grid, params(DEFAULT_N), cfg, 3.0).unwrap_err();
        assert!(matches!(err, MhdError::StabilityViolation { .. }));
        // The implicit treatment of viscosity lifts the bound; advection still applies.
        let cfg = StepperConfig {
            scheme: Scheme::Rk4If,
            dt: 1.0,
            ..Default::default()
        };
        let mut st = Stepper::new(&grid, params(DEFAULT_N), cfg, 3.0).unwrap();
        let mut s = random_state(&grid, 1, 0.001, 1);
        assert!(matches!(st.step(&mut s, 1.0), Err(MhdError::StabilityViolation { .. })));
    }

    #[test]
    fn step_count_lands_on_t_end() {
        let cfg = StepperConfig {
            dt: 0.1,
            t_end: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.step_count(), 10);
        assert_eq!(cfg.time_at(10), 1.0);
        let cfg = StepperConfig {
            dt: 0.3,
            t_end: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.step_count(), 4);
        assert!((cfg.time_at(4) - cfg.time_at(3) - 0.1).abs() < 1e-15);
        let cfg = StepperConfig {
            t_end: 0.0,
            ..Default::default()
        };
        assert_eq!(cfg.step_count(), 0);
    }

    fn short_run(t_end: f64, snapshot_every: u64) -> Trajectory {
        let grid = Grid::new(8);
        let p = params(DEFAULT_N);
        let spec = InitialSpec {
            preset: Preset::Random,
            epsilon: 1e-2,
            seed: 5,
            band: 1,
        };
        let s0 = make_initial(&spec, &grid, &p).unwrap();
        let cfg = StepperConfig {
            dt: 0.01,
            t_end,
            snapshot_every,
            ..Default::default()
        };
        let mut st = Stepper::new(&grid, p, cfg, 3.0).unwrap();
        let mut diag = Diagnostics::new(&grid, p, DiagnosticsConfig::new(3.0));
        let mut rows = 0;
        let (_, traj) = run(s0, &mut st, &mut diag, &mut |_| Ok(rows += 1), &mut |_, _| Ok(())).unwrap();
        assert_eq!(rows, traj.records.len());
        traj
    }

    #[test]
    fn zero_horizon_gives_one_record() {
        let traj = short_run(0.0, 10);
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.snapshot_steps, vec![0]);
    }

    #[test]
    fn records_follow_the_snapshot_cadence() {
        let traj = short_run(0.25, 10);
        assert_eq!(traj.snapshot_steps, vec![0, 10, 20, 25]);
        let steps: Vec<u64> = traj.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, traj.snapshot_steps);
        assert_eq!(traj.records.last().unwrap().t, 0.25);
        let c = ConservationSummary::from_records(&traj.records);
        assert!(c.max_rho_drift == 0.0 && c.max_b_mean == 0.0);
        assert!(c.max_momentum < 1e-15, "{c:?}");
        assert!(c.max_divb_post < 1e-15);
        // ∫D grows and E_basic decays.
        let r = &traj.records;
        assert!(r.windows(2).all(|w| w[1].cum_dissipation > w[0].cum_dissipation));
        assert!(r.last().unwrap().e_basic < r[0].e_basic);
    }
}
