use tetrakey_core::rng::{streams, RngStream};
use tetrakey_core::security::{bit_error, hybrid_efficiency, iteration_efficiency};
use tetrakey_core::sifting::{run_renes, run_sifting, BitOrigin, SiftingConfig};
use tetrakey_core::source::{sample_pairs, SamplingPlan};
use tetrakey_core::LetterSequence;

fn records(eps: f64, n: usize, seed: u64) -> (LetterSequence, LetterSequence) {
    sample_pairs(eps, n, &mut RngStream::new(seed, streams::SOURCE)).unwrap()
}

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn efficiency_tracks_the_asymptotic_yield() {
    let (a, b) = records(0.0, 200_000, 1);
    for rounds in 1..=4 {
        let eff = run_sifting(&a, &b, SiftingConfig::new(rounds, false).unwrap(), 1).unwrap().accounting.efficiency;
        assert!((eff - iteration_efficiency(rounds as u32)).abs() < 0.006, "n={rounds} {eff}");
        let eff = run_sifting(&a, &b, SiftingConfig::new(rounds, true).unwrap(), 1).unwrap().accounting.efficiency;
        assert!((eff - hybrid_efficiency(rounds as u32)).abs() < 0.006, "n={rounds}+pairing {eff}");
    }
}

#[test]
fn step_two_a_and_final_pairing_rates_without_noise() {
    let (a, b) = records(0.0, 200_000, 2);
    let out = run_sifting(&a, &b, SiftingConfig::new(1, true).unwrap(), 2).unwrap();
    let t = &out.accounting.rounds[0].tally;
    let distinct = t.distinct as f64 / t.pairs as f64;
    assert!((distinct - 2.0 / 3.0).abs() < 4.0 * sigma(2.0 / 3.0, t.pairs), "{distinct}");
    let success = t.final_pair_successes as f64 / t.same as f64;
    assert!((success - 1.0 / 3.0).abs() < 4.0 * sigma(1.0 / 3.0, t.same), "{success}");
    assert_eq!(out.alice_key, out.bob_key);
}

#[test]
fn plain_renes_pairing_statistics() {
    let eps = 0.2;
    let n = 300_000;
    let (a, b) = records(eps, n, 3);
    let out = run_renes(&a, &b, 3).unwrap();
    let success = out.successes as f64 / out.attempts as f64;
    // Bob's letter is Alice's with probability ε/4, otherwise the partner
    // with probability 1/3.
    let p_same = eps / 4.0;
    let expected = p_same + (1.0 - p_same) / 3.0;
    assert!((success - expected).abs() < 4.0 * sigma(expected, out.attempts));
    let errors = out.alice_key.iter().zip(&out.bob_key).filter(|(x, y)| x != y).count();
    let q = errors as f64 / out.successes as f64;
    let q_expected = 3.0 * eps / (4.0 + 2.0 * eps);
    assert!((q - q_expected).abs() < 4.0 * sigma(q_expected, out.successes), "{q} vs {q_expected}");
}

#[test]
fn final_pairing_error_matches_second_round_rate() {
    let eps = 0.2;
    let (a, b) = records(eps, 1_000_000, 4);
    let out = run_sifting(&a, &b, SiftingConfig::new(1, true).unwrap(), 4).unwrap();
    let fp: Vec<_> = out.alice_key.iter().zip(&out.bob_key).filter(|(x, _)| x.origin == BitOrigin::FinalPairing).collect();
    let errors = fp.iter().filter(|(x, y)| x.value != y.value).count();
    let q = errors as f64 / fp.len() as f64;
    let expected = bit_error(eps, 2).unwrap();
    assert!((q - expected).abs() < 4.0 * sigma(expected, fp.len()), "{q} vs {expected}");
}

#[test]
fn parallel_sampling_matches_sequential() {
    let plan = SamplingPlan::new(77, 10_000).unwrap();
    assert_eq!(plan.sample_sequential(0.3, 55_555).unwrap(), plan.sample_parallel(0.3, 55_555).unwrap());
}
