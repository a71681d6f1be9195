//! Browser bindings: weight profiles, complexity curves and sampling masks.
//!
//! Every entry point returns a JSON string; the plain-Rust versions are
//! exported as well so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use vdcs::analysis::complexity_curves;
use vdcs::experiments::PriorSpec;
use vdcs::sampling::{Scheme, SchemeWeights};
use vdcs::weights::{optimized_bernoulli_weights, with_replacement_weights};
use vdcs::{CoherenceVector, RngStream};

/// Largest signal the page will compute on.
pub const MAX_N: usize = 1 << 14;

/// `haar` (1-D DFT against Haar, `n` a multiple of 8), `haar2d` (square
/// image with `n` pixels) or `power-law` with the given exponent.
pub fn prior_alpha(prior: &str, n: usize, exponent: f64) -> Result<CoherenceVector, String> {
    if n == 0 || n > MAX_N {
        return Err(format!("n must be in 1..={MAX_N}"));
    }
    let spec = match prior {
        "haar" => PriorSpec::Haar { levels: 3 },
        "haar2d" => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(format!("haar2d needs a square n, got {n}"));
            }
            PriorSpec::Haar2d { rows: side, cols: side, levels: 3 }
        }
        "power-law" => PriorSpec::PowerLaw { exponent },
        other => return Err(format!("unknown prior {other:?}")),
    };
    spec.coherence(n).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Profile {
    alpha: Vec<f64>,
    bernoulli: Vec<f64>,
    with_replacement: Vec<f64>,
    l_sq: f64,
    norm_sq: f64,
    unsaturated: usize,
    saturated: usize,
}

/// Coherences, optimized Bernoulli weights `w°` and with-replacement
/// probabilities scaled to `m` expected draws.
pub fn profile_json(prior: &str, n: usize, exponent: f64, m: usize) -> Result<String, String> {
    let alpha = prior_alpha(prior, n, exponent)?;
    let w = optimized_bernoulli_weights(&alpha, m).map_err(|e| e.to_string())?;
    let p = with_replacement_weights(&alpha);
    let saturated = w.values().iter().filter(|&&x| x >= 1.0).count();
    let out = Profile {
        alpha: alpha.values().to_vec(),
        bernoulli: w.values().to_vec(),
        with_replacement: p.iter().map(|x| x * m as f64).collect(),
        l_sq: w.l_sq(),
        norm_sq: alpha.norm_sq(),
        unsaturated: w.unsaturated(),
        saturated,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curves {
    m: Vec<usize>,
    l_sq: Vec<f64>,
    norm_sq: f64,
    lambda: Vec<f64>,
    m_star_bernoulli: Vec<Option<usize>>,
    m_star_wr: Vec<u64>,
}

/// `L^2(alpha, m)` for every `m` against `||alpha||^2`, and the sample
/// counts each implies for the given `lambdas`.
pub fn curves_json(prior: &str, n: usize, exponent: f64, lambdas: &[f64]) -> Result<String, String> {
    let alpha = prior_alpha(prior, n, exponent)?;
    let grid: Vec<usize> = (1..=alpha.positive_count()).collect();
    let c = complexity_curves(&alpha, &grid, lambdas).map_err(|e| e.to_string())?;
    let out = Curves {
        m: grid,
        l_sq: c.by_m.iter().map(|r| r.l_sq).collect(),
        norm_sq: alpha.norm_sq(),
        lambda: lambdas.to_vec(),
        m_star_bernoulli: c.by_lambda.iter().map(|r| r.m_star_bernoulli).collect(),
        m_star_wr: c.by_lambda.iter().map(|r| r.m_star_wr).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Mask {
    scheme: &'static str,
    /// Number of times each row was selected.
    counts: Vec<u32>,
    rows: usize,
    distinct: usize,
}

/// One sampling plan drawn with `scheme`, as a per-row count vector.
pub fn mask_json(prior: &str, n: usize, exponent: f64, m: usize, scheme: &str, seed: u64) -> Result<String, String> {
    let alpha = prior_alpha(prior, n, exponent)?;
    let scheme = Scheme::parse(scheme).map_err(|e| e.to_string())?;
    let sw = SchemeWeights::new(&alpha, m).map_err(|e| e.to_string())?;
    let plan = sw.draw(scheme, RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
    let mut counts = vec![0; n];
    for (&i, &c) in plan.indices.iter().zip(&plan.multiplicities) {
        counts[i] = c;
    }
    let out = Mask { scheme: scheme.tag(), counts, rows: plan.rows(), distinct: plan.distinct() };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn weights_profile(prior: &str, n: usize, exponent: f64, m: usize) -> Result<String, JsError> {
    profile_json(prior, n, exponent, m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn complexity(prior: &str, n: usize, exponent: f64, lambdas: Vec<f64>) -> Result<String, JsError> {
    curves_json(prior, n, exponent, &lambdas).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sampling_mask(prior: &str, n: usize, exponent: f64, m: usize, scheme: &str, seed: u64) -> Result<String, JsError> {
    mask_json(prior, n, exponent, m, scheme, seed).map_err(|e| JsError::new(&e))
}
