//! Perturbation equations around the steady state `(ρ, u, B) = (1, 0, n)`.
//!
//! The unknowns are `a = ρ − 1`, the velocity `u` and the magnetic
//! perturbation `B` (total field `n + B`).

mod pressure;
mod rhs;
mod terms;

use std::sync::Arc;

pub use pressure::{adaptive_simpson, potential_energy_density, Pressure, PressureLaw};
pub use rhs::{GridStats, RhsEvaluator};
pub use terms::{derived_quantities, f_terms, linear_rhs, DerivedQuantities, FTerms, SignConvention};

use crate::error::{MhdError, Result};
use crate::spectral::{Grid, SpectralScalar, SpectralVector};

/// Shear and bulk viscosities, with `μ > 0` and `ν = λ + 2μ > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viscosities {
    pub mu: f64,
    pub lambda: f64,
}

impl Viscosities {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(MhdError::InvalidParameter(format!("shear viscosity must be positive, got {mu}")));
        }
        if !(lambda + 2.0 * mu > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "need λ + 2μ > 0, got λ = {lambda}, μ = {mu}"
            )));
        }
        Ok(Self { mu, lambda })
    }

    /// `ν = λ + 2μ`
    pub fn nu(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }
}

/// Physical parameters of one simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub n: [f64; 3],
    pub pressure: PressureLaw,
    pub viscosities: Viscosities,
    /// Density band: `1 + a` must stay above `c0 / 2`.
    pub c0: f64,
}

impl Params {
    pub fn vacuum_threshold(&self) -> f64 {
        0.5 * self.c0
    }
}

/// Perturbation `(a, u, B)` at time `t`.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub a: SpectralScalar,
    pub u: SpectralVector,
    pub b: SpectralVector,
}

/// Time derivatives of `(a, u, B)`.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub a: SpectralScalar,
    pub u: SpectralVector,
    pub b: SpectralVector,
}

impl State {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            t: 0.0,
            a: SpectralScalar::zeros(grid),
            u: SpectralVector::zeros(grid),
            b: SpectralVector::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.a.grid()
    }

    /// The seven scalar components `a, u₁..u₃, B₁..B₃`.
    pub fn components(&self) -> [&SpectralScalar; 7] {
        [
            &self.a,
            &self.u.comps[0],
            &self.u.comps[1],
            &self.u.comps[2],
            &self.b.comps[0],
            &self.b.comps[1],
            &self.b.comps[2],
        ]
    }

    pub fn components_mut(&mut self) -> [&mut SpectralScalar; 7] {
        let [u0, u1, u2] = &mut self.u.comps;
        let [b0, b1, b2] = &mut self.b.comps;
        [&mut self.a, u0, u1, u2, b0, b1, b2]
    }

    /// Largest deviation from the structural constraints: zero means of `a`
    /// and `B`, and `div B = 0` (max coefficient).
    pub fn constraint_defect(&self) -> f64 {
        let means = self.a.mean().abs().max(
            self.b
                .mean()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs())),
        );
        means.max(self.b.divergence().max_coeff())
    }

    /// Checks mean-zero `a`, `B` and solenoidal `B` to `1e-10`.
    pub fn check_invariants(&self) -> Result<()> {
        let defect = self.constraint_defect();
        if defect > 1e-10 {
            return Err(MhdError::InvalidParameter(format!(
                "state violates zero-mean / solenoidal constraints by {defect:e}"
            )));
        }
        Ok(())
    }

    /// `‖(a, u, B)‖_{H^s}` as the root of the summed squares.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(MhdError::NegativeOrder(s));
        }
        let w = self.grid().sobolev_weights(s);
        Ok(self
            .components()
            .iter()
            .map(|c| crate::spectral::weighted_sq(&w, c.coeffs()))
            .sum::<f64>()
            .sqrt())
    }
}

impl Tendency {
    pub fn components(&self) -> [&SpectralScalar; 7] {
        [
            &self.a,
            &self.u.comps[0],
            &self.u.comps[1],
            &self.u.comps[2],
            &self.b.comps[0],
            &self.b.comps[1],
            &self.b.comps[2],
        ]
    }
}
