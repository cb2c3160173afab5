//! WebAssembly bindings behind the static demo page in `www/`.
//!
//! Each exported function has a plain Rust twin returning `Result<_, String>`
//! so the logic is testable without a JavaScript host.

use binlogit::cli::{render_existence, render_fit};
use binlogit::{
    conditional_loglik, detect_panel_separation, detect_pooled_separation, existence_rate, fit,
    fixtures, DetectOptions, FitOptions, PanelDataset, SimConfig,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Caps the work a single page interaction can request.
pub const MAX_SIM_WORK: usize = 2_000_000;

fn parse(csv: &str) -> Result<PanelDataset, String> {
    PanelDataset::from_csv_str(csv).map_err(|e| e.to_string())
}

/// Panel check, pooled check and (when the estimate exists) the fit, as a
/// JSON object with a `text` field holding the command-line rendering.
pub fn check(csv: &str, tol: f64) -> Result<String, String> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err("tolerance must be a positive number".into());
    }
    let data = parse(csv)?;
    let opts = DetectOptions::default().with_tol(tol);
    let mut text = String::new();
    let mut out = json!({ "panel": null, "pooled": null, "fit": null, "panel_error": null });

    match detect_panel_separation(&data, &opts) {
        Ok(r) => {
            text.push_str(&render_existence(&r));
            if r.exists() {
                let f = fit(&data, &FitOptions { detect: opts, ..FitOptions::default() })
                    .map_err(|e| e.to_string())?;
                text.push('\n');
                text.push_str(&render_fit(&f));
                out["fit"] = serde_json::to_value(&f).map_err(|e| e.to_string())?;
            }
            out["panel"] = serde_json::to_value(&r).map_err(|e| e.to_string())?;
        }
        Err(e) => {
            text.push_str(&format!("panel check: {e}\n"));
            out["panel_error"] = Value::from(e.to_string());
        }
    }
    let pooled = detect_pooled_separation(&data, &opts).map_err(|e| e.to_string())?;
    text.push('\n');
    text.push_str(&render_existence(&pooled));
    out["pooled"] = serde_json::to_value(&pooled).map_err(|e| e.to_string())?;
    out["text"] = Value::from(text);
    Ok(out.to_string())
}

/// `log L(β)` on `points` evenly spaced values of a scalar `β` in `[lo, hi]`.
pub fn loglik_profile(csv: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let data = parse(csv)?;
    if data.dim() != 1 {
        return Err(format!("profile needs one covariate, found {}", data.dim()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 2 {
        return Err("need finite lo < hi and at least two points".into());
    }
    (0..points)
        .map(|k| {
            let b = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            conditional_loglik(&data, &[b]).map_err(|e| e.to_string())
        })
        .collect()
}

/// Simulated existence fractions for each `n` in `ns`: the conditional
/// estimator's fractions first, then the pooled ones.
pub fn existence_curve(
    ns: &[u32],
    periods: usize,
    beta0: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let work: usize = ns.iter().map(|&n| n as usize * periods * reps).sum();
    if work > MAX_SIM_WORK {
        return Err(format!("requested {work} simulated observations, limit is {MAX_SIM_WORK}"));
    }
    let mut panel = Vec::with_capacity(ns.len());
    let mut pooled = Vec::with_capacity(ns.len());
    for &n in ns {
        let config = SimConfig {
            replications: reps,
            seed,
            ..SimConfig::new(n as usize, periods, 1, beta0)
        };
        let r = existence_rate(&config, &DetectOptions::default()).map_err(|e| e.to_string())?;
        panel.push(r.panel_existence);
        pooled.push(r.pooled_existence);
    }
    panel.extend(pooled);
    Ok(panel)
}

#[wasm_bindgen(js_name = thresholdCsv)]
pub fn threshold_csv() -> String {
    fixtures::THRESHOLD_CSV.to_owned()
}

#[wasm_bindgen(js_name = checkCsv)]
pub fn check_js(csv: &str, tol: f64) -> Result<String, JsError> {
    check(csv, tol).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = loglikProfile)]
pub fn loglik_profile_js(csv: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsError> {
    loglik_profile(csv, lo, hi, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = existenceCurve)]
pub fn existence_curve_js(
    ns: Vec<u32>,
    periods: usize,
    beta0: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    existence_curve(&ns, periods, beta0, reps, seed).map_err(|e| JsError::new(&e))
}
