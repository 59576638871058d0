use serde_json::Value;
use tetrakey_web::{curves_json, simulate_json, tomography_json};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn curves_start_at_the_ideal_values() {
    let v = parse(&curves_json(61).unwrap());
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 61);
    assert!((rows[0]["iab_tetra"].as_f64().unwrap() - (4.0f64 / 3.0).log2()).abs() < 1e-12);
    assert!((rows[0]["iab_six"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((v["ck_threshold"].as_f64().unwrap() - 0.23629).abs() < 1e-5);
    assert!((v["holevo_threshold_tetra"].as_f64().unwrap() - 0.1265).abs() < 5e-4);
    assert!(curves_json(1).is_err());
}

#[test]
fn simulation_matches_the_ideal_yield() {
    let v = parse(&simulate_json(0.0, 60_000, 2, true, 3).unwrap());
    assert!((v["efficiency"].as_f64().unwrap() - v["ideal_efficiency"].as_f64().unwrap()).abs() < 0.01);
    assert_eq!(v["bit_errors"], 0);
    assert_eq!(v["key_preview"].as_str().unwrap().len(), 64);
    assert_eq!(simulate_json(0.1, 20_000, 2, false, 3).unwrap(), simulate_json(0.1, 20_000, 2, false, 3).unwrap());
}

#[test]
fn simulation_rejects_bad_input() {
    assert!(simulate_json(1.2, 1000, 1, false, 1).is_err());
    assert!(simulate_json(0.1, 0, 1, false, 1).is_err());
    assert!(simulate_json(0.1, 1000, 0, false, 1).is_err());
}

#[test]
fn tomography_verdicts() {
    let ok = parse(&tomography_json(0.1, 50_000, 0.3, 2).unwrap());
    assert_eq!(ok["verdict"], "accept");
    assert_eq!(ok["frequencies"].as_array().unwrap().len(), 16);
    let bad = parse(&tomography_json(0.5, 50_000, 0.3, 2).unwrap());
    assert_eq!(bad["verdict"], "reject");
}
