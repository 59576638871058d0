//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the `*_json` functions hold the logic
//! so it can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tetrakey_core::distribution::JointDistribution;
use tetrakey_core::letters::pair_counts;
use tetrakey_core::quantum::trace_distance;
use tetrakey_core::rng::{streams, RngStream};
use tetrakey_core::security::{self, bit_error, hybrid_efficiency, iteration_efficiency, linear_grid, SEPARABLE_NOISE};
use tetrakey_core::session::{acceptance_from_counts, AcceptancePolicy};
use tetrakey_core::sifting::{run_sifting, SiftingConfig};
use tetrakey_core::source::{noisy_singlet, sample_pairs, twirl};
use tetrakey_core::tetra::reconstruct_state;
use tetrakey_core::LetterSequence;

/// Largest record the page may request; keeps the tab responsive.
pub const MAX_PAIRS: usize = 2_000_000;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn records(epsilon: f64, pairs: usize, seed: u64) -> Result<(LetterSequence, LetterSequence), String> {
    if pairs == 0 || pairs > MAX_PAIRS {
        return Err(format!("pairs must be between 1 and {MAX_PAIRS}"));
    }
    let (a, b) = sample_pairs(epsilon, pairs, &mut RngStream::new(seed, streams::SOURCE)).map_err(|e| e.to_string())?;
    let t = twirl(&a, &b, &mut RngStream::new(seed, streams::TWIRL)).map_err(|e| e.to_string())?;
    Ok((t.alice, t.bob))
}

#[derive(Serialize)]
struct Curves {
    rows: Vec<security::CurveRow>,
    ck_threshold: f64,
    holevo_threshold_tetra: f64,
}

pub fn curves_json(points: usize) -> Result<String, String> {
    if !(2..=5000).contains(&points) {
        return Err("points must be between 2 and 5000".into());
    }
    let rows = security::curve_rows(&linear_grid(0.0, SEPARABLE_NOISE, points)).map_err(|e| e.to_string())?;
    let holevo = security::holevo_threshold(tetrakey_core::PomKind::Tetra).map_err(|e| e.to_string())?;
    to_json(&Curves { rows, ck_threshold: security::ck_threshold_exact(), holevo_threshold_tetra: holevo.threshold })
}

#[derive(Serialize)]
struct RoundSummary {
    round: usize,
    bits: usize,
    error_rate: Option<f64>,
    predicted_error_rate: Option<f64>,
}

#[derive(Serialize)]
struct Simulation {
    efficiency: f64,
    ideal_efficiency: f64,
    total_bits: usize,
    bit_errors: usize,
    rounds: Vec<RoundSummary>,
    key_preview: String,
}

pub fn simulate_json(epsilon: f64, pairs: usize, rounds: usize, final_pairing: bool, seed: u64) -> Result<String, String> {
    let cfg = SiftingConfig::new(rounds, final_pairing).map_err(|e| e.to_string())?;
    if rounds > 12 {
        return Err("at most 12 rounds".into());
    }
    let (a, b) = records(epsilon, pairs, seed)?;
    let out = run_sifting(&a, &b, cfg, seed).map_err(|e| e.to_string())?;
    let acc = out.accounting;
    let rounds_out = acc
        .rounds
        .iter()
        .map(|r| RoundSummary {
            round: r.tally.round,
            bits: r.tally.bits,
            error_rate: r.error_rate,
            predicted_error_rate: (r.iteration_bits > 0).then(|| bit_error(epsilon, r.tally.round as u32).ok()).flatten(),
        })
        .collect();
    let preview: String = out.alice_key.iter().take(64).map(|b| if b.value { '1' } else { '0' }).collect();
    to_json(&Simulation {
        efficiency: acc.efficiency,
        ideal_efficiency: if final_pairing { hybrid_efficiency(rounds as u32) } else { iteration_efficiency(rounds as u32) },
        total_bits: acc.total_bits,
        bit_errors: acc.bit_errors,
        rounds: rounds_out,
        key_preview: preview,
    })
}

#[derive(Serialize)]
struct Tomography {
    frequencies: Vec<f64>,
    epsilon_hat: f64,
    distance: f64,
    distance_bound: f64,
    verdict: String,
    min_eigenvalue: f64,
    distance_to_source: f64,
}

pub fn tomography_json(epsilon: f64, pairs: usize, epsilon_max: f64, seed: u64) -> Result<String, String> {
    let (a, b) = records(epsilon, pairs, seed)?;
    let counts = pair_counts(&a, &b).map_err(|e| e.to_string())?;
    let policy = AcceptancePolicy { epsilon_max, ..AcceptancePolicy::default() };
    let acc = acceptance_from_counts(&counts, &policy).map_err(|e| e.to_string())?;
    let freqs = JointDistribution::from_counts(4, 4, &counts).map_err(|e| e.to_string())?;
    let rec = reconstruct_state(&freqs).map_err(|e| e.to_string())?;
    let source = noisy_singlet(epsilon).map_err(|e| e.to_string())?;
    let distance_to_source = trace_distance(&rec.estimate, source.operator()).map_err(|e| e.to_string())?;
    to_json(&Tomography {
        frequencies: acc.frequencies.clone(),
        epsilon_hat: acc.epsilon_hat,
        distance: acc.distance,
        distance_bound: acc.distance_bound,
        verdict: serde_json::to_value(acc.verdict).map_err(|e| e.to_string())?.as_str().unwrap_or_default().to_string(),
        min_eigenvalue: rec.min_eigenvalue,
        distance_to_source,
    })
}

/// Information curves on `points` noise levels in `[0, 2/3]`.
#[wasm_bindgen]
pub fn curves(points: usize) -> Result<String, JsError> {
    curves_json(points).map_err(|e| JsError::new(&e))
}

/// Sample, twirl and sift a record; returns accounting and error rates.
#[wasm_bindgen]
pub fn simulate(epsilon: f64, pairs: usize, rounds: usize, final_pairing: bool, seed: u64) -> Result<String, JsError> {
    simulate_json(epsilon, pairs, rounds, final_pairing, seed).map_err(|e| JsError::new(&e))
}

/// Treat the whole record as a tomography sample.
#[wasm_bindgen]
pub fn tomography(epsilon: f64, pairs: usize, epsilon_max: f64, seed: u64) -> Result<String, JsError> {
    tomography_json(epsilon, pairs, epsilon_max, seed).map_err(|e| JsError::new(&e))
}
