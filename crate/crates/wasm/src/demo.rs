//! Plain-Rust side of the demo, testable off the browser.

use std::sync::Arc;

use torus_mhd::diagnostics::{Diagnostics, DiagnosticsConfig};
use torus_mhd::diophantine::{certify, BackgroundField};
use torus_mhd::integrate::{make_initial, InitialSpec, Preset, Scheme, StabilityLimits, Stepper, StepperConfig};
use torus_mhd::model::{Params, PressureLaw, State, Viscosities};
use torus_mhd::spectral::Grid;

pub const R: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub c_empirical: f64,
    pub resonant_k: [i64; 3],
    /// `None` when `n` is resonant on the scanned ball.
    pub poincare_h3: Option<f64>,
}

pub fn certificate(n: [f64; 3], r: f64, lattice_radius: i64) -> Result<Certificate, String> {
    if lattice_radius > 40 {
        return Err("lattice radius above 40 is too slow for the browser".into());
    }
    let bg = certify(n, r, lattice_radius).map_err(|e| e.to_string())?;
    let poincare_h3 = if bg.c_empirical > 0.0 {
        Some(bg.poincare_constant(3.0).map_err(|e| e.to_string())?)
    } else {
        None
    };
    Ok(Certificate {
        c_empirical: bg.c_empirical,
        resonant_k: bg.resonant_k,
        poincare_h3,
    })
}

/// `(t, ‖(a,u,B)‖_{H³}, ‖B‖_{L²}, E)`
pub type Sample = [f64; 4];

pub struct Run {
    grid: Arc<Grid>,
    stepper: Stepper,
    diagnostics: Diagnostics,
    state: State,
    dt: f64,
}

impl Run {
    pub fn new(points: usize, n: [f64; 3], epsilon: f64, seed: u64, preset: &str) -> Result<Self, String> {
        if !(8..=24).contains(&points) || points % 2 != 0 {
            return Err(format!("grid size must be even and in 8..=24, got {points}"));
        }
        let preset: Preset = preset.parse()?;
        let grid = Grid::new(points);
        let params = Params {
            n,
            pressure: PressureLaw::default(),
            viscosities: Viscosities::new(0.1, 0.0).map_err(|e| e.to_string())?,
            c0: 0.5,
        };
        let spec = InitialSpec {
            preset,
            epsilon,
            seed,
            band: 1,
        };
        let state = make_initial(&spec, &grid, &params).map_err(|e| e.to_string())?;
        let mut cfg = StepperConfig {
            scheme: Scheme::Rk4If,
            dt: 1e-12,
            t_end: f64::INFINITY,
            ..StepperConfig::default()
        };
        let mut probe = Stepper::new(&grid, params, cfg, R).map_err(|e| e.to_string())?;
        let stats = probe.grid_stats(&state).map_err(|e| e.to_string())?;
        let dt = 0.5 * StabilityLimits::compute(&grid, &params, &cfg, &stats).max_dt(cfg.scheme);
        cfg.dt = dt;
        let stepper = Stepper::new(&grid, params, cfg, R).map_err(|e| e.to_string())?;
        let poincare_h3 = certify(n, R, BackgroundField::covering_radius(points))
            .and_then(|bg| bg.poincare_constant_on_grid(&grid, 3.0))
            .unwrap_or(f64::NAN);
        let diagnostics = Diagnostics::new(&grid, params, DiagnosticsConfig {
            norm_orders: vec![3.0],
            poincare_h3,
            ..DiagnosticsConfig::new(R)
        });
        Ok(Self {
            grid,
            stepper,
            diagnostics,
            state,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> usize {
        self.grid.points_per_axis()
    }

    pub fn advance(&mut self, steps: u32) -> Result<(), String> {
        for _ in 0..steps {
            self.stepper.step(&mut self.state, self.dt).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn sample(&mut self) -> Result<Sample, String> {
        let rec = self
            .diagnostics
            .record(&self.state, self.stepper.context())
            .map_err(|e| e.to_string())?;
        Ok([rec.t, rec.norms[0], rec.b_l2, rec.lyap_e])
    }

    /// Grid values of one field on the plane `x₁ = plane/N`, row-major in `(x₂, x₃)`.
    pub fn slice(&self, field: &str, plane: usize) -> Result<Vec<f64>, String> {
        let n = self.points();
        if plane >= n {
            return Err(format!("plane must be below {n}"));
        }
        let values: Vec<f64> = match field {
            "a" => self.state.a.to_grid(),
            "u1" | "u2" | "u3" => self.state.u.comps[component(field)].to_grid(),
            "b1" | "b2" | "b3" => self.state.b.comps[component(field)].to_grid(),
            "|u|" | "|B|" => {
                let v = if field == "|u|" { &self.state.u } else { &self.state.b };
                let [x, y, z] = v.to_grid();
                x.iter().zip(&y).zip(&z).map(|((x, y), z)| (x * x + y * y + z * z).sqrt()).collect()
            }
            other => return Err(format!("unknown field '{other}'")),
        };
        Ok((0..n * n).map(|j| values[self.grid.index(plane, j / n, j % n)]).collect())
    }
}

fn component(field: &str) -> usize {
    (field.as_bytes()[1] - b'1') as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: [f64; 3] = [1.0, std::f64::consts::SQRT_2, 1.7320508075688772];

    #[test]
    fn rational_direction_is_resonant() {
        let c = certificate([1.0, 1.0, 1.0], 3.0, 6).unwrap();
        assert_eq!(c.c_empirical, 0.0);
        assert!(c.poincare_h3.is_none());
        assert!(certificate(N, 3.0, 6).unwrap().c_empirical > 0.0);
        assert!(certificate(N, 1.0, 6).is_err());
    }

    #[test]
    fn small_run_decays() {
        let mut run = Run::new(8, N, 1e-2, 1, "random").unwrap();
        let first = run.sample().unwrap();
        run.advance(40).unwrap();
        let later = run.sample().unwrap();
        assert!(later[0] > first[0]);
        assert!(later[1] < first[1]);
        assert_eq!(run.slice("|B|", 3).unwrap().len(), 64);
        assert!(run.slice("c", 0).is_err());
        assert!(Run::new(9, N, 1e-2, 1, "random").is_err());
    }

    #[test]
    fn slice_follows_the_plane() {
        let run = Run::new(8, [0.0; 3], 0.5, 0, "shear").unwrap();
        // u₂ = ε sin 2πx₁ is constant on each plane.
        let s = run.slice("u2", 2).unwrap();
        assert!(s.iter().all(|v| (v - 0.5).abs() < 1e-14));
    }
}
