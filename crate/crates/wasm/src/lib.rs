//! wasm-bindgen surface of the browser demo in `www/`.

mod demo;

use wasm_bindgen::prelude::*;

pub use demo::{certificate, Certificate, Run};

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Lattice certificate of `n`, as `[c, k₁, k₂, k₃, C]` with `C = NaN` when `c = 0`.
#[wasm_bindgen]
pub fn certify(n1: f64, n2: f64, n3: f64, r: f64, lattice_radius: i32) -> Result<Vec<f64>, JsError> {
    let c = certificate([n1, n2, n3], r, lattice_radius as i64).map_err(js)?;
    let k = c.resonant_k;
    Ok(vec![c.c_empirical, k[0] as f64, k[1] as f64, k[2] as f64, c.poincare_h3.unwrap_or(f64::NAN)])
}

#[wasm_bindgen]
pub struct Simulation {
    run: Run,
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(points: usize, n1: f64, n2: f64, n3: f64, epsilon: f64, seed: u32, preset: &str) -> Result<Simulation, JsError> {
        let run = Run::new(points, [n1, n2, n3], epsilon, seed as u64, preset).map_err(js)?;
        Ok(Simulation { run })
    }

    pub fn dt(&self) -> f64 {
        self.run.dt()
    }

    pub fn points(&self) -> usize {
        self.run.points()
    }

    /// Takes `steps` steps and returns `[t, ‖·‖_{H³}, ‖B‖_{L²}, E]`.
    pub fn advance(&mut self, steps: u32) -> Result<Vec<f64>, JsError> {
        self.run.advance(steps).map_err(js)?;
        self.sample()
    }

    pub fn sample(&mut self) -> Result<Vec<f64>, JsError> {
        Ok(self.run.sample().map_err(js)?.to_vec())
    }

    pub fn slice(&self, field: &str, plane: usize) -> Result<Vec<f64>, JsError> {
        self.run.slice(field, plane).map_err(js)
    }
}
