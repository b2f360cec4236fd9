//! Nonlinear remainders of the reformulated system and the combined
//! quantities `d = a + n·B`, `G = Qu − ν⁻¹Δ⁻¹∇d`.

use std::sync::Arc;

use super::{Params, Pressure, State, Tendency};
use crate::error::{MhdError, Result};
use crate::spectral::{Grid, SpectralScalar, SpectralVector};

/// Sign choice for the magnetic-pressure and `k(a)∇a` terms in `f₂`, `f₄`.
///
/// `Literal` reproduces the published formulas term by term:
/// `+∇(|B|²/2) + k(a)∇a`, and `+∇(|B|²/2)` inside the `I(a)` group of `f₄`.
/// `Consistent` uses the signs that follow from the momentum equation, so
/// that `f₂`, `f₄` are exactly the remainders of the linearised system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    #[default]
    Literal,
    Consistent,
}

impl std::str::FromStr for SignConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "literal" => Ok(Self::Literal),
            "consistent" => Ok(Self::Consistent),
            other => Err(format!("unknown sign convention '{other}' (expected literal or consistent)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FTerms {
    pub f1: SpectralScalar,
    pub f2: SpectralVector,
    pub f3: SpectralVector,
    pub f4: SpectralVector,
}

#[derive(Clone, Debug)]
pub struct DerivedQuantities {
    pub d: SpectralScalar,
    pub g: SpectralVector,
    pub pu: SpectralVector,
    pub qu: SpectralVector,
    /// Largest coefficient of `div Qu − div G − d/ν`.
    pub identity_residual: f64,
}

fn grid_vec(v: &SpectralVector) -> [Vec<f64>; 3] {
    v.to_grid()
}

/// `∂_j v_i` on the grid, indexed `[i][j]`.
fn grid_jacobian(v: &SpectralVector) -> [[Vec<f64>; 3]; 3] {
    let row = |c: &SpectralScalar| c.gradient().to_grid();
    [row(&v.comps[0]), row(&v.comps[1]), row(&v.comps[2])]
}

fn to_spectral(grid: &Arc<Grid>, values: &[f64]) -> SpectralScalar {
    SpectralScalar::from_grid(grid, values).dealias()
}

fn to_spectral_vec(grid: &Arc<Grid>, values: &[Vec<f64>; 3]) -> SpectralVector {
    SpectralVector::new([
        to_spectral(grid, &values[0]),
        to_spectral(grid, &values[1]),
        to_spectral(grid, &values[2]),
    ])
}

/// `f₁ … f₄` evaluated pseudo-spectrally, each dealiased.
pub fn f_terms(state: &State, params: &Params, convention: SignConvention) -> Result<FTerms> {
    let grid = state.grid();
    let len = grid.len();
    let n = params.n;
    let mu = params.viscosities.mu;
    let lm = params.viscosities.lambda + mu;

    let a = state.a.to_grid();
    let min_rho = a.iter().fold(f64::INFINITY, |m, &v| m.min(1.0 + v));
    if min_rho < params.vacuum_threshold() {
        return Err(MhdError::VacuumApproach {
            t: state.t,
            min_density: min_rho,
            threshold: params.vacuum_threshold(),
        });
    }
    let ga = state.a.gradient().to_grid();
    let u = grid_vec(&state.u);
    let b = grid_vec(&state.b);
    let du = grid_jacobian(&state.u);
    let db = grid_jacobian(&state.b);
    let div_u = state.u.divergence().to_grid();
    let lu_spec = {
        let div = state.u.divergence();
        let mut l = state.u.laplacian().scale(mu);
        l.axpy(lm, &div.gradient());
        l
    };
    let lu = lu_spec.to_grid();

    let ia: Vec<f64> = a.iter().map(|&v| v / (1.0 + v)).collect();
    let grad_i = to_spectral(grid, &ia).gradient().to_grid();
    let ka: Vec<f64> = a.iter().map(|&v| params.pressure.k(v)).collect();

    let sign = match convention {
        SignConvention::Literal => 1.0,
        SignConvention::Consistent => -1.0,
    };

    let mut f1 = vec![0.0; len];
    let mut f2: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    let mut f3: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    let mut f4: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    for x in 0..len {
        f1[x] = -(u[0][x] * ga[0][x] + u[1][x] * ga[1][x] + u[2][x] * ga[2][x]) - a[x] * div_u[x];
        for i in 0..3 {
            let mut adv = 0.0;
            let mut b_grad_b = 0.0;
            let mut grad_b2 = 0.0;
            let mut n_grad_b = 0.0;
            let mut grad_nb = 0.0;
            let mut b_grad_u = 0.0;
            let mut u_grad_b = 0.0;
            let mut gi_grad_u = 0.0;
            for j in 0..3 {
                adv += u[j][x] * du[i][j][x];
                b_grad_b += b[j][x] * db[i][j][x];
                grad_b2 += b[j][x] * db[j][i][x];
                n_grad_b += n[j] * db[i][j][x];
                grad_nb += n[j] * db[j][i][x];
                b_grad_u += b[j][x] * du[i][j][x];
                u_grad_b += u[j][x] * db[i][j][x];
                gi_grad_u += grad_i[j][x] * du[i][j][x];
            }
            let common = -adv + b_grad_b + sign * grad_b2 + sign * ka[x] * ga[i][x];
            let group2 = n_grad_b + b_grad_b - grad_nb - grad_b2;
            let group4 = n_grad_b + b_grad_b - grad_nb + sign * grad_b2;
            f2[i][x] = common + mu * gi_grad_u + lm * grad_i[i][x] * div_u[x] - ia[x] * group2;
            f4[i][x] = common - ia[x] * lu[i][x] - ia[x] * group4;
            f3[i][x] = -u_grad_b + b_grad_u - b[i][x] * div_u[x];
        }
    }
    Ok(FTerms {
        f1: to_spectral(grid, &f1),
        f2: to_spectral_vec(grid, &f2),
        f3: to_spectral_vec(grid, &f3),
        f4: to_spectral_vec(grid, &f4),
    })
}

/// Linear part of the perturbed system:
/// `(−div u, Lu − ∇a + n·∇B − ∇(n·B), n·∇u − n div u)`.
pub fn linear_rhs(state: &State, params: &Params) -> Tendency {
    let n = params.n;
    let mu = params.viscosities.mu;
    let lm = params.viscosities.lambda + mu;
    let div_u = state.u.divergence();
    let mut du = state.u.laplacian().scale(mu);
    du.axpy(lm, &div_u.gradient());
    du.axpy(-1.0, &state.a.gradient());
    du.axpy(1.0, &state.b.directional_derivative(n));
    du.axpy(-1.0, &dot_n(&state.b, n).gradient());
    let mut db = state.u.directional_derivative(n);
    for (ax, c) in db.comps.iter_mut().enumerate() {
        c.axpy(-n[ax], &div_u);
    }
    Tendency {
        a: div_u.scale(-1.0),
        u: du,
        b: db,
    }
}

fn dot_n(v: &SpectralVector, n: [f64; 3]) -> SpectralScalar {
    let mut out = v.comps[0].scale(n[0]);
    out.axpy(n[1], &v.comps[1]);
    out.axpy(n[2], &v.comps[2]);
    out
}

/// `d`, `G`, `Pu`, `Qu` for a state with mean-zero `a` and `B`.
pub fn derived_quantities(state: &State, params: &Params) -> Result<DerivedQuantities> {
    let nu = params.viscosities.nu();
    let d = state.a.add(&dot_n(&state.b, params.n));
    let qu = state.u.leray_q();
    let pu = state.u.leray_p();
    let mut g = qu.clone();
    g.axpy(-1.0 / nu, &d.inverse_laplacian()?.gradient());
    let residual = qu.divergence().sub(&g.divergence()).sub(&d.scale(1.0 / nu));
    Ok(DerivedQuantities {
        identity_residual: residual.max_coeff(),
        d,
        g,
        pu,
        qu,
    })
}
