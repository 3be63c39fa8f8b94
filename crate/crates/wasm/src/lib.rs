//! Browser bindings for the interactive demo in `www/`.
//!
//! Each export takes plain numbers or a TOML config and returns a JSON
//! string; failures come back as `{"error": "..."}` so the page can show
//! them inline.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use symlab_core::morse::{morse_index, vs_perp_basis, QuadraticForm, DEFAULT_DEGENERACY_TOL};
use symlab_core::runner::{execute, parse_config, Command};
use symlab_core::TrigPoly;

const PLOT_POINTS: usize = 256;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn curve(u: &TrigPoly) -> Result<Value, String> {
    let g = u.to_samples(PLOT_POINTS).map_err(|e| e.to_string())?;
    Ok(json!({ "t": g.times().collect::<Vec<_>>(), "u": g.samples() }))
}

fn decode(v: &Value) -> Result<TrigPoly, String> {
    serde_json::from_value(v.clone()).map_err(|e| e.to_string())
}

pub fn solve_json(config_toml: &str) -> Result<Value, String> {
    let config = parse_config(config_toml).map_err(|e| e.to_string())?;
    let out = execute(Command::Solve, &config).map_err(|e| e.to_string())?;
    let report = &out.record["report"];
    Ok(json!({
        "summary": out.summary,
        "curve": curve(&decode(&report["solution"])?)?,
        "kappa": report["certificate"]["kappa"],
        "step_ratios": report["step_ratios"],
        "iterations": report["iterations"],
        "residual_h1": report["residual_h1"],
        "derivative_range": out.record["derivative_range"],
    }))
}

/// Form `Q(h) = ∫ h'² − ∫ (c + amp·cos(k t)) h²` on `V_s⊥`, truncated at `order`.
pub fn morse_json(c: f64, amp: f64, k: usize, s: usize, order: usize) -> Result<Value, String> {
    if order == 0 || order > 96 {
        return Err("J must be between 1 and 96".into());
    }
    let mut w = TrigPoly::zeros(k);
    if k == 0 {
        w.set_mode(0, c + amp, 0.0);
    } else {
        w.set_mode(0, c, 0.0);
        w.set_mode(k, amp, 0.0);
    }
    let form = QuadraticForm::new(w, s, order).map_err(|e| e.to_string())?;
    let rep = morse_index(&form, DEFAULT_DEGENERACY_TOL);
    let basis: Vec<String> = vs_perp_basis(s, order)
        .iter()
        .map(ToString::to_string)
        .collect();
    Ok(json!({
        "index": rep.index,
        "eigenvalues": rep.eigenvalues,
        "relative_margin": rep.relative_margin,
        "degenerate": rep.degenerate,
        "basis_dim": basis.len(),
        "basis": basis,
    }))
}

pub fn break_search_json(config_toml: &str) -> Result<Value, String> {
    let config = parse_config(config_toml).map_err(|e| e.to_string())?;
    let out = execute(Command::BreakSearch, &config).map_err(|e| e.to_string())?;
    let run = &out.record["run"];
    let solutions = run["search"]["solutions"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    let mut classes = Vec::new();
    for class in run["search"]["classes"]
        .as_array()
        .cloned()
        .unwrap_or_default()
    {
        let rep = class["representative"].as_u64().unwrap_or(0) as usize;
        let u = decode(&solutions[rep]["solution"])?;
        classes.push(json!({
            "id": class["id"],
            "members": class["members"],
            "relative_defect": class["relative_defect"],
            "asymmetric": class["asymmetric"],
            "curve": curve(&u)?,
        }));
    }
    Ok(json!({
        "summary": out.summary,
        "m0": run["m0"],
        "m1": run["m1"],
        "broke_symmetry": run["broke_symmetry"],
        "fhat": curve(&decode(&run["fhat"])?)?,
        "u_star": curve(&decode(&run["u_star"])?)?,
        "classes": classes,
    }))
}

/// Solves the configured problem; returns the solution curve and contraction data.
#[wasm_bindgen]
pub fn solve(config_toml: &str) -> String {
    respond(solve_json(config_toml))
}

/// Morse index and spectrum of the form with potential `c + amp·cos(kt)`.
#[wasm_bindgen]
pub fn morse(c: f64, amp: f64, k: usize, s: usize, order: usize) -> String {
    respond(morse_json(c, amp, k, s, order))
}

/// Runs the symmetry-breaking search; returns `f̂`, `u*` and one curve per orbit class.
#[wasm_bindgen]
pub fn break_search(config_toml: &str) -> String {
    respond(break_search_json(config_toml))
}
