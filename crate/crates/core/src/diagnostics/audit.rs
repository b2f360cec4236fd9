use super::DiagnosticsRecord;
use crate::error::{MhdError, Result};

/// Discrete basic energy balance over consecutive records.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyResidual {
    /// `(t_mid, R)` with `R = (ΔE_basic + Δ∫D_basic)/Δt` per interval.
    pub series: Vec<(f64, f64)>,
    pub max_abs: f64,
    /// `max |R| / max D_basic`, zero when both vanish.
    pub normalized: f64,
}

/// `R = ΔE_basic/Δt + (1/Δt)∫D_basic` on every interval between records.
pub fn basic_energy_residual(records: &[DiagnosticsRecord]) -> Result<EnergyResidual> {
    if records.len() < 2 {
        return Err(MhdError::InsufficientSamples {
            needed: 2,
            got: records.len(),
        });
    }
    let series: Vec<(f64, f64)> = records
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            let r = (w[1].e_basic - w[0].e_basic + w[1].cum_dissipation - w[0].cum_dissipation) / dt;
            (0.5 * (w[0].t + w[1].t), r)
        })
        .collect();
    let max_abs = series.iter().fold(0.0f64, |m, &(_, r)| m.max(r.abs()));
    let max_d = records.iter().fold(0.0f64, |m, r| m.max(r.d_basic));
    let normalized = if max_abs == 0.0 { 0.0 } else { max_abs / max_d };
    Ok(EnergyResidual {
        series,
        max_abs,
        normalized,
    })
}

/// Least-squares fit `y ≈ C(1+t)^{−α}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of `ln y`.
    pub residual: f64,
    pub samples: usize,
}

/// Fits `ln y = ln C − α ln(1+t)` over samples with `t ∈ [t0, t1]`.
pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(usize, f64, f64)> = series
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| *t >= window.0 && *t <= window.1)
        .map(|(i, &(t, y))| (i, t, y))
        .collect();
    if pts.len() < 10 {
        return Err(MhdError::InsufficientSamples {
            needed: 10,
            got: pts.len(),
        });
    }
    if let Some(&(index, _, value)) = pts.iter().find(|p| !(p.2 > 0.0)) {
        return Err(MhdError::NonpositiveValues { index, value });
    }
    let m = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.1.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.2.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if sxx == 0.0 {
        return Err(MhdError::InvalidParameter("decay fit window holds a single time".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(DecayFit {
        alpha: -slope,
        prefactor: intercept.exp(),
        residual,
        samples: pts.len(),
    })
}

/// Time-integrability audit of `‖n·∇B‖²_{H^{r+3}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenDissipation {
    /// `max LHS⁺/RHS`; `None` when no sample has a positive right side.
    pub c_hat: Option<f64>,
    /// `∫‖n·∇B‖²_{H^{r+3}} dt` over the window.
    pub cumulative: f64,
    /// Share of the cumulative integral gathered in the final 20% of the window.
    pub final_fraction: f64,
    pub plateau: bool,
    /// `(t, LHS, RHS)` at interior records.
    pub series: Vec<(f64, f64, f64)>,
}

/// `LHS = ‖n·∇B‖²_{H^{r+3}} − dX/dt` against `RHS = ‖u‖²_{H^{r+5}}`, with
/// centred differences for `dX/dt`.
pub fn hidden_dissipation_audit(records: &[DiagnosticsRecord]) -> Result<HiddenDissipation> {
    if records.len() < 3 {
        return Err(MhdError::InsufficientSamples {
            needed: 3,
            got: records.len(),
        });
    }
    let series: Vec<(f64, f64, f64)> = records
        .windows(3)
        .map(|w| {
            let dx = (w[2].cross_term - w[0].cross_term) / (w[2].t - w[0].t);
            (w[1].t, w[1].nb_hr3 * w[1].nb_hr3 - dx, w[1].u_hr5_sq)
        })
        .collect();
    let mut c_hat: Option<f64> = None;
    for &(_, lhs, rhs) in &series {
        if rhs > 0.0 {
            let c = lhs.max(0.0) / rhs;
            c_hat = Some(c_hat.map_or(c, |m| m.max(c)));
        }
    }
    let first = &records[0];
    let last = &records[records.len() - 1];
    let cumulative = last.cum_nb2 - first.cum_nb2;
    let cut = last.t - 0.2 * (last.t - first.t);
    let at_cut = records
        .iter()
        .find(|r| r.t >= cut)
        .map_or(last.cum_nb2, |r| r.cum_nb2);
    let final_fraction = if cumulative > 0.0 { (last.cum_nb2 - at_cut) / cumulative } else { 0.0 };
    Ok(HiddenDissipation {
        c_hat,
        cumulative,
        final_fraction,
        plateau: final_fraction < 0.05,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..200).map(|i| i as f64 * 0.25).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn power_law_exponents_are_recovered() {
        let fit = decay_fit(&synthetic(|t| (1.0 + t).powf(-1.5)), (5.0, 50.0)).unwrap();
        assert!((fit.alpha - 1.5).abs() < 1e-10);
        let fit = decay_fit(&synthetic(|t| 3.0 * (1.0 + t).powi(-3)), (5.0, 50.0)).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-10);
        assert!((fit.prefactor - 3.0).abs() < 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_series() {
        let short = synthetic(|t| 1.0 / (1.0 + t));
        assert!(matches!(
            decay_fit(&short, (0.0, 2.0)),
            Err(MhdError::InsufficientSamples { needed: 10, got: 9 })
        ));
        let mut bad = short.clone();
        bad[30].1 = 0.0;
        assert!(matches!(
            decay_fit(&bad, (5.0, 50.0)),
            Err(MhdError::NonpositiveValues { index: 30, .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn exponent_ignores_rescaling(alpha in 0.1f64..5.0, scale in 1e-6f64..1e6) {
            let base = synthetic(|t| (1.0 + t).powf(-alpha) * (1.0 + 0.1 * (t).sin()));
            let scaled: Vec<_> = base.iter().map(|&(t, y)| (t, scale * y)).collect();
            let a = decay_fit(&base, (5.0, 50.0)).unwrap().alpha;
            let b = decay_fit(&scaled, (5.0, 50.0)).unwrap().alpha;
            proptest::prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
