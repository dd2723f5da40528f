//! wasm-bindgen bindings for the browser demo.
//!
//! Thin JSON-in/JSON-out wrappers around the core solvers so the static page
//! needs no generated TypeScript glue beyond the wasm-bindgen loader.

use phase_filter::filter_design::{optimal_filter, FilterProblem};
use phase_filter::fock::FockVector;
use phase_filter::optimal_state::optimal_state;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct StateOut {
    dim: usize,
    lambda: f64,
    mu: f64,
    coeffs: Vec<f64>,
}

#[derive(Serialize)]
struct TradeoffPoint {
    p: f64,
    mu: f64,
    threshold: usize,
}

#[derive(Serialize)]
struct FilterOut {
    threshold: usize,
    lambda: f64,
    achieved_prob: f64,
    mu_in: f64,
    mu_out: f64,
    f: Vec<f64>,
    input_coeffs: Vec<f64>,
    output_coeffs: Vec<f64>,
    theta: Vec<f64>,
    density_in: Vec<f64>,
    density_out: Vec<f64>,
}

fn to_js<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Optimal phase-encoding state in the (n+1)-dimensional Fock space.
#[wasm_bindgen]
pub fn optimal_state_json(n: usize) -> Result<String, JsValue> {
    let sol = optimal_state(n).map_err(err)?;
    to_js(&StateOut {
        dim: n,
        lambda: sol.lambda,
        mu: sol.mu,
        coeffs: sol.state.coeffs().to_vec(),
    })
}

/// μ-versus-P trade-off curve for a coherent state, on a log-spaced P grid
/// from 1 down to just above the feasibility floor.
#[wasm_bindgen]
pub fn tradeoff_json(alpha: f64, points: usize, n_max: usize) -> Result<String, JsValue> {
    if points < 2 {
        return Err(JsValue::from_str("need at least 2 grid points"));
    }
    let state = FockVector::coherent(alpha, 1e-12).map_err(err)?;
    let n_cap = n_max.max(1).min(state.trunc_dim() - 1);
    let probe = FilterProblem::new(state.clone(), 0.5).map_err(err)?;
    let floor = phase_filter::filter_design::feasibility_floor(&probe, n_cap);
    let p_min = (floor * 1.05).max(1e-4).min(1.0);
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let frac = i as f64 / (points - 1) as f64;
        let p = (frac * p_min.ln()).exp();
        let problem = FilterProblem::new(state.clone(), p).map_err(err)?;
        let sol = optimal_filter(&problem, n_cap).map_err(err)?;
        rows.push(TradeoffPoint { p, mu: sol.mu_out, threshold: sol.threshold });
    }
    to_js(&rows)
}

/// Optimal filter for a coherent state at a target success probability,
/// including the canonical phase densities before and after filtering.
#[wasm_bindgen]
pub fn filter_json(alpha: f64, prob: f64, n_max: usize, density_points: usize) -> Result<String, JsValue> {
    let state = FockVector::coherent(alpha, 1e-12).map_err(err)?;
    let problem = FilterProblem::new(state.clone(), prob).map_err(err)?;
    let sol = optimal_filter(&problem, n_max.max(1)).map_err(err)?;
    let (filtered, achieved) = state.apply_filter(&sol.filter).map_err(err)?;
    let dim = state.trunc_dim();
    let f: Vec<f64> = (0..dim).map(|k| sol.filter.transmission(k)).collect();
    let pts = density_points.max(16);
    let mut theta = Vec::with_capacity(pts);
    let mut density_in = Vec::with_capacity(pts);
    let mut density_out = Vec::with_capacity(pts);
    for i in 0..pts {
        let th = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / (pts - 1) as f64;
        theta.push(th);
        density_in.push(state.canonical_density(th));
        density_out.push(filtered.canonical_density(th));
    }
    to_js(&FilterOut {
        threshold: sol.threshold,
        lambda: sol.lambda,
        achieved_prob: achieved,
        mu_in: state.mu(),
        mu_out: sol.mu_out,
        f,
        input_coeffs: state.coeffs().to_vec(),
        output_coeffs: filtered.coeffs().to_vec(),
        theta,
        density_in,
        density_out,
    })
}
