//! Browser bindings: spectral flow, a single adiabatic run and a mean-field
//! sweep, each returning JSON for the page in `www/`.

use dioph_core::adiabatic::{evolve, spectral_flow, EvolveOptions};
use dioph_core::hamiltonian::SymmetryBreak;
use dioph_core::hubbard::{sweep_transition, MeanFieldOptions};
use dioph_core::verdict::{decide, identify, DEFAULT_THRESHOLD};
use dioph_core::{FockSpace, Polynomial, ProblemInstance, Schedule, ScheduleShape};
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a single call responsive in the browser.
const MAX_DIMENSION: usize = 1024;

fn shape(smooth: bool) -> ScheduleShape {
    if smooth { ScheduleShape::Smoothstep } else { ScheduleShape::Linear }
}

fn instance(equation: &str, cutoff: usize, epsilon: f64) -> Result<ProblemInstance, String> {
    let p = Polynomial::parse(equation).map_err(|e| e.to_string())?;
    let k = p.num_vars();
    if k == 0 {
        return Err("the equation has no unknowns".into());
    }
    let space = FockSpace::uniform(k, cutoff).map_err(|e| e.to_string())?;
    if space.dim() > MAX_DIMENSION {
        return Err(format!("{} basis states exceed the demo limit of {MAX_DIMENSION}", space.dim()));
    }
    let inst = ProblemInstance::new(p, space).map_err(|e| e.to_string())?;
    let inst = if epsilon.is_nan() {
        inst.with_default_symmetry_break()
    } else {
        let sb = SymmetryBreak { epsilon, weights: dioph_core::hamiltonian::default_weights(k) };
        inst.with_symmetry_break(sb)
    };
    inst.map_err(|e| e.to_string())
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Lowest `levels` eigenvalues of H(s). A NaN `epsilon` picks the default.
pub fn flow(equation: &str, cutoff: usize, epsilon: f64, grid_points: usize, levels: usize, smooth: bool) -> Result<String, String> {
    let inst = instance(equation, cutoff, epsilon)?;
    let schedule = Schedule::new(1.0, shape(smooth)).map_err(|e| e.to_string())?;
    let f = spectral_flow(&inst, &schedule, grid_points, levels).map_err(|e| e.to_string())?;
    json(&f)
}

#[derive(Serialize)]
struct Outcome {
    occupations: Vec<usize>,
    probability: f64,
}

#[derive(Serialize)]
struct RunSummary {
    status: String,
    top_outcome: Vec<usize>,
    top_probability: f64,
    steps: usize,
    norm_drift: f64,
    distribution: Vec<Outcome>,
}

/// Final measurement distribution of one run and its verdict.
pub fn run(equation: &str, cutoff: usize, epsilon: f64, total_time: f64, smooth: bool) -> Result<String, String> {
    let inst = instance(equation, cutoff, epsilon)?;
    let schedule = Schedule::new(total_time, shape(smooth)).map_err(|e| e.to_string())?;
    let result = evolve(&inst, &schedule, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let ident = identify(&result.final_state, DEFAULT_THRESHOLD);
    let verdict = decide(&inst, &ident, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let status = serde_json::to_value(&verdict.status).map_err(|e| e.to_string())?;
    let distribution = result
        .final_state
        .probabilities()
        .into_iter()
        .enumerate()
        .map(|(i, probability)| Outcome { occupations: inst.space.occupations(i), probability })
        .collect();
    json(&RunSummary {
        status: status["status"].as_str().unwrap_or_default().to_string(),
        top_outcome: ident.top_outcome,
        top_probability: ident.top_probability,
        steps: result.steps,
        norm_drift: result.norm_drift,
        distribution,
    })
}

/// Mean-field |α| on a geometric U/J grid from `ratio_min` to `ratio_max`.
pub fn sweep(filling: usize, coordination: usize, ratio_min: f64, ratio_max: f64, points: usize) -> Result<String, String> {
    if !(ratio_min > 0.0 && ratio_max > ratio_min) || points < 2 {
        return Err("need 0 < min < max and at least two points".into());
    }
    let step = (ratio_max / ratio_min).ln() / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| ratio_min * (step * i as f64).exp()).collect();
    let table = sweep_transition(filling, coordination, &grid, Complex64::new(1.0, 0.0), &MeanFieldOptions::default())
        .map_err(|e| e.to_string())?;
    json(&table)
}

#[wasm_bindgen(js_name = spectralFlow)]
pub fn spectral_flow_js(equation: &str, cutoff: usize, epsilon: f64, grid_points: usize, levels: usize, smooth: bool) -> Result<String, JsValue> {
    flow(equation, cutoff, epsilon, grid_points, levels, smooth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = adiabaticRun)]
pub fn adiabatic_run_js(equation: &str, cutoff: usize, epsilon: f64, total_time: f64, smooth: bool) -> Result<String, JsValue> {
    run(equation, cutoff, epsilon, total_time, smooth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = meanFieldSweep)]
pub fn mean_field_sweep_js(filling: usize, coordination: usize, ratio_min: f64, ratio_max: f64, points: usize) -> Result<String, JsValue> {
    sweep(filling, coordination, ratio_min, ratio_max, points).map_err(|e| JsValue::from_str(&e))
}
