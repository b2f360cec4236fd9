use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::momentum;
use crate::error::{MhdError, Result};
use crate::model::{Params, State};
use crate::spectral::{Grid, SpectralScalar, SpectralVector};
use crate::testing::{is_canonical, random_field_with};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preset {
    /// Random fields on `max|kᵢ| ≤ band`, scaled to `‖(a,u,B)‖_{H³} = ε`.
    #[default]
    Random,
    /// `u = ε(0, sin 2πx₁, 0)`, everything else zero.
    Shear,
    /// `B = ε e cos 2πx₁` with `e ⟂ e₁` and `e ⟂ n` when possible.
    Alfven,
    /// `B` on the modes with `n·k = 0`, directed along `k × n`; `a = u = 0`.
    Resonant,
    /// The steady state `a = u = B = 0`.
    Steady,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Random => "random",
            Preset::Shear => "shear",
            Preset::Alfven => "alfven",
            Preset::Resonant => "resonant",
            Preset::Steady => "steady",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(Preset::Random),
            "shear" => Ok(Preset::Shear),
            "alfven" => Ok(Preset::Alfven),
            "resonant" => Ok(Preset::Resonant),
            "steady" => Ok(Preset::Steady),
            other => Err(format!(
                "unknown preset '{other}' (expected random, shear, alfven, resonant or steady)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialSpec {
    pub preset: Preset,
    pub epsilon: f64,
    pub seed: u64,
    /// Largest `|kᵢ|` of the random and resonant presets.
    pub band: i64,
}

fn h3_norm(a: &SpectralScalar, u: &SpectralVector, b: &SpectralVector) -> f64 {
    let s = State {
        t: 0.0,
        a: a.clone(),
        u: u.clone(),
        b: b.clone(),
    };
    s.sobolev_norm(3.0).expect("order 3 is valid")
}

fn scale_all(s: &mut State, f: f64) {
    for c in s.components_mut() {
        *c = c.scale(f);
    }
}

/// Builds the initial perturbation for `spec`.
pub fn make_initial(spec: &InitialSpec, grid: &Arc<Grid>, params: &Params) -> Result<State> {
    if !(spec.epsilon >= 0.0 && spec.epsilon.is_finite()) {
        return Err(MhdError::InvalidParameter(format!("epsilon must be nonnegative, got {}", spec.epsilon)));
    }
    if spec.band < 1 || spec.band as usize > grid.dealias_cutoff() {
        return Err(MhdError::InvalidParameter(format!(
            "initial band must lie in 1..={}, got {}",
            grid.dealias_cutoff(),
            spec.band
        )));
    }
    let mut s = State::zeros(grid);
    let eps = spec.epsilon;
    match spec.preset {
        Preset::Steady => {}
        Preset::Shear => {
            s.u.comps[1] = SpectralScalar::single_mode(grid, [1, 0, 0], Complex64::new(0.0, -0.5 * eps));
        }
        Preset::Alfven => {
            let n = params.n;
            // e ∝ e₁ × n, falling back to e₂ when n ∥ e₁.
            let mut e = [0.0, -n[2], n[1]];
            let len = (e[1] * e[1] + e[2] * e[2]).sqrt();
            if len < 1e-12 {
                e = [0.0, 1.0, 0.0];
            } else {
                e = [0.0, e[1] / len, e[2] / len];
            }
            for ax in 0..3 {
                s.b.comps[ax] = SpectralScalar::single_mode(grid, [1, 0, 0], Complex64::new(0.5 * eps * e[ax], 0.0));
            }
        }
        Preset::Random => random_preset(&mut s, spec, grid)?,
        Preset::Resonant => resonant_preset(&mut s, spec, grid, params)?,
    }
    s.check_invariants()?;
    Ok(s)
}

fn random_preset(s: &mut State, spec: &InitialSpec, grid: &Arc<Grid>) -> Result<()> {
    let band = spec.band;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nonzero = |k: [i64; 3]| k != [0, 0, 0] && k.iter().all(|c| c.abs() <= band);
    let a = random_field_with(grid, &mut rng, nonzero);
    let u = SpectralVector::new(std::array::from_fn(|_| random_field_with(grid, &mut rng, nonzero)));
    let b = SpectralVector::new(std::array::from_fn(|_| random_field_with(grid, &mut rng, nonzero))).leray_p();
    let norm = h3_norm(&a, &u, &b);
    if spec.epsilon == 0.0 || norm == 0.0 {
        return Ok(());
    }
    s.a = a;
    s.u = u;
    s.b = b;
    scale_all(s, spec.epsilon / norm);

    // ∫ρu = 0: subtract (∫ρu)/ρ pointwise, truncate to the band, rescale.
    for _ in 0..50 {
        let m = momentum(s);
        let rho: Vec<f64> = s.a.to_grid().iter().map(|a| 1.0 + a).collect();
        for (ax, &mx) in m.iter().enumerate() {
            let corr: Vec<f64> = rho.iter().map(|r| mx / r).collect();
            let corr = SpectralScalar::from_grid(grid, &corr).dealias();
            s.u.comps[ax] = s.u.comps[ax].sub(&corr);
        }
        let f = spec.epsilon / s.sobolev_norm(3.0)?;
        scale_all(s, f);
        let m = momentum(s);
        if (f - 1.0).abs() < 1e-15 && m.iter().all(|v| v.abs() < 1e-17) {
            break;
        }
    }
    Ok(())
}

fn resonant_preset(s: &mut State, spec: &InitialSpec, grid: &Arc<Grid>, params: &Params) -> Result<()> {
    let n = params.n;
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut found = false;
    let mut b = SpectralVector::zeros(grid);
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        if k == [0, 0, 0] || !is_canonical(k) || k.iter().any(|c| c.abs() > spec.band) {
            continue;
        }
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        let kn = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
        if (n[0] * kf[0] + n[1] * kf[1] + n[2] * kf[2]).abs() > 1e-12 * nn * kn {
            continue;
        }
        let e = [
            kf[1] * n[2] - kf[2] * n[1],
            kf[2] * n[0] - kf[0] * n[2],
            kf[0] * n[1] - kf[1] * n[0],
        ];
        let el = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        use rand::Rng;
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let conj = grid.conjugate_index(idx);
        for ax in 0..3 {
            let v = c * (e[ax] / el);
            b.comps[ax].coeffs_mut()[idx] = v;
            b.comps[ax].coeffs_mut()[conj] = v.conj();
        }
        found = true;
    }
    if !found {
        return Err(MhdError::InvalidParameter(
            "resonant preset needs modes with n·k = 0 inside the initial band (rational n)".into(),
        ));
    }
    let norm = h3_norm(&s.a, &s.u, &b);
    s.b = b.scale(spec.epsilon / norm);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PressureLaw, Viscosities};

    fn params(n: [f64; 3]) -> Params {
        Params {
            n,
            pressure: PressureLaw::default(),
            viscosities: Viscosities::new(0.1, 0.0).unwrap(),
            c0: 0.5,
        }
    }

    const DEFAULT_N: [f64; 3] = [1.0, std::f64::consts::SQRT_2, 1.7320508075688772];

    #[test]
    fn random_preset_satisfies_constraints() {
        let grid = Grid::new(16);
        for band in [1, 2] {
            let spec = InitialSpec {
                preset: Preset::Random,
                epsilon: 1e-2,
                seed: 7,
                band,
            };
            let s = make_initial(&spec, &grid, &params(DEFAULT_N)).unwrap();
            assert!(s.constraint_defect() < 1e-10);
            assert!((s.sobolev_norm(3.0).unwrap() - 1e-2).abs() < 1e-15);
            for m in momentum(&s) {
                assert!(m.abs() < 1e-16, "momentum {m:e}");
            }
        }
    }

    #[test]
    fn zero_amplitude_is_steady() {
        let grid = Grid::new(8);
        let spec = InitialSpec {
            preset: Preset::Random,
            epsilon: 0.0,
            seed: 1,
            band: 1,
        };
        let s = make_initial(&spec, &grid, &params(DEFAULT_N)).unwrap();
        assert_eq!(s.sobolev_norm(0.0).unwrap(), 0.0);
    }

    #[test]
    fn same_seed_same_state() {
        let grid = Grid::new(8);
        let spec = InitialSpec {
            preset: Preset::Random,
            epsilon: 1e-2,
            seed: 3,
            band: 1,
        };
        let p = params(DEFAULT_N);
        let x = make_initial(&spec, &grid, &p).unwrap();
        let y = make_initial(&spec, &grid, &p).unwrap();
        for (c, d) in x.components().iter().zip(y.components()) {
            assert_eq!(c.coeffs(), d.coeffs());
        }
    }

    #[test]
    fn resonant_preset_is_invisible_to_n() {
        let grid = Grid::new(16);
        let p = params([1.0, 0.0, 0.0]);
        let spec = InitialSpec {
            preset: Preset::Resonant,
            epsilon: 1e-2,
            seed: 2,
            band: 2,
        };
        let s = make_initial(&spec, &grid, &p).unwrap();
        for idx in 0..grid.len() {
            if s.b.comps.iter().any(|c| c.coeffs()[idx].norm() > 0.0) {
                assert_eq!(grid.wavevector(idx)[0], 0);
            }
        }
        assert_eq!(s.b.directional_derivative(p.n).max_coeff(), 0.0);
        assert_eq!(s.b.comps[0].max_coeff(), 0.0);
        assert!(s.constraint_defect() < 1e-12);
        assert!((s.sobolev_norm(3.0).unwrap() - 1e-2).abs() < 1e-15);
        // Irrational directions have no resonant modes to excite.
        assert!(make_initial(&spec, &grid, &params(DEFAULT_N)).is_err());
    }

    #[test]
    fn shear_preset_is_a_sine() {
        let grid = Grid::new(8);
        let spec = InitialSpec {
            preset: Preset::Shear,
            epsilon: 0.3,
            seed: 0,
            band: 1,
        };
        let s = make_initial(&spec, &grid, &params([0.0; 3])).unwrap();
        let v = s.u.comps[1].to_grid();
        for i0 in 0..8 {
            let x = grid.coordinate(i0);
            let expect = 0.3 * (crate::spectral::TWO_PI * x).sin();
            assert!((v[grid.index(i0, 3, 5)] - expect).abs() < 1e-15);
        }
    }
}
