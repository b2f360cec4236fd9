use crate::error::{MhdError, Result};

/// Barotropic pressure law normalised so that `P'(1) = 1`.
pub trait Pressure {
    fn pressure(&self, rho: f64) -> f64;
    fn dpressure(&self, rho: f64) -> f64;

    /// `k(a) = P'(1+a)/(1+a) − 1`
    fn k(&self, a: f64) -> f64 {
        self.dpressure(1.0 + a) / (1.0 + a) - 1.0
    }

    /// Potential energy density `g(ρ) = ρ ∫₁^ρ (P(τ) − P(1))/τ² dτ`.
    fn potential_energy(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(MhdError::NonpositiveDensity(rho));
        }
        let p1 = self.pressure(1.0);
        let integral = adaptive_simpson(&|tau: f64| (self.pressure(tau) - p1) / (tau * tau), 1.0, rho, 1e-12);
        Ok(rho * integral)
    }
}

/// `P(ρ) = ρ^γ/γ`, so `P'(ρ) = ρ^{γ−1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureLaw {
    pub gamma_ad: f64,
}

impl PressureLaw {
    pub fn new(gamma_ad: f64) -> Result<Self> {
        if !(gamma_ad > 1.0) {
            return Err(MhdError::InvalidParameter(format!(
                "adiabatic exponent must exceed 1, got {gamma_ad}"
            )));
        }
        Ok(Self { gamma_ad })
    }
}

impl Default for PressureLaw {
    fn default() -> Self {
        Self { gamma_ad: 2.0 }
    }
}

impl Pressure for PressureLaw {
    fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma_ad) / self.gamma_ad
    }

    fn dpressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma_ad - 1.0)
    }

    fn k(&self, a: f64) -> f64 {
        // (1+a)^{γ−2} − 1
        ((self.gamma_ad - 2.0) * a.ln_1p()).exp_m1()
    }

    // Closed form: g = (ρ/γ)[(ρ^{γ−1} − 1)/(γ−1) + 1/ρ − 1].
    fn potential_energy(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(MhdError::NonpositiveDensity(rho));
        }
        let g = self.gamma_ad;
        let a = rho - 1.0;
        if g == 2.0 {
            return Ok(0.5 * a * a);
        }
        let pow_term = ((g - 1.0) * a.ln_1p()).exp_m1() / (g - 1.0);
        Ok(rho / g * (pow_term - a / rho))
    }
}

/// Pointwise `g(ρ)` over grid values.
pub fn potential_energy_density(law: &impl Pressure, rho: &[f64]) -> Result<Vec<f64>> {
    rho.iter().map(|&r| law.potential_energy(r)).collect()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` (either orientation).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadrature(PressureLaw);

    impl Pressure for Quadrature {
        fn pressure(&self, rho: f64) -> f64 {
            self.0.pressure(rho)
        }
        fn dpressure(&self, rho: f64) -> f64 {
            self.0.dpressure(rho)
        }
    }

    #[test]
    fn normalised_at_unit_density() {
        for g in [1.4, 2.0, 3.0] {
            let law = PressureLaw::new(g).unwrap();
            assert_eq!(law.dpressure(1.0), 1.0);
            assert_eq!(law.k(0.0), 0.0);
            assert_eq!(law.potential_energy(1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn gamma_two_closed_form() {
        let law = PressureLaw::new(2.0).unwrap();
        assert!((law.potential_energy(1.1).unwrap() - 0.005).abs() < 1e-15);
        let q = Quadrature(law);
        assert!((q.potential_energy(1.1).unwrap() - 0.005).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for g in [1.2, 1.4, 5.0 / 3.0, 2.5, 3.0] {
            let law = PressureLaw::new(g).unwrap();
            let q = Quadrature(law);
            for rho in [0.3, 0.7, 0.95, 1.0, 1.02, 1.5, 2.4] {
                let a = law.potential_energy(rho).unwrap();
                let b = q.potential_energy(rho).unwrap();
                assert!((a - b).abs() < 1e-10, "γ={g} ρ={rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quadratic_near_unit_density() {
        let law = PressureLaw::new(1.4).unwrap();
        for a in [1e-2, -1e-2, 1e-3] {
            let g = law.potential_energy(1.0 + a).unwrap();
            // g ≈ P'(1)/2 · a² = a²/2
            assert!((g / (a * a) - 0.5).abs() < 2.0 * a.abs());
        }
    }

    #[test]
    fn k_matches_definition() {
        let law = PressureLaw::new(1.4).unwrap();
        for a in [-0.3, 0.0, 0.2] {
            let direct = law.dpressure(1.0 + a) / (1.0 + a) - 1.0;
            assert!((law.k(a) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(PressureLaw::new(1.0).is_err());
        let law = PressureLaw::default();
        assert!(matches!(law.potential_energy(0.0), Err(MhdError::NonpositiveDensity(_))));
        assert!(potential_energy_density(&law, &[1.0, -0.1]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn nonnegative_and_strictly_increasing(g in 1.05f64..4.0, rho in 0.1f64..4.0) {
            let law = PressureLaw::new(g).unwrap();
            proptest::prop_assert!(law.potential_energy(rho).unwrap() >= 0.0);
            proptest::prop_assert!(law.pressure(rho * 1.01) > law.pressure(rho));
        }
    }
}
