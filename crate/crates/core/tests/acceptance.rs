//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;

use rand::Rng;
use tetrakey_core::letters::LetterSequence;
use tetrakey_core::quantum::{c, CMatrix, DensityOperator};
use tetrakey_core::rng::{streams, RngStream};
use tetrakey_core::security::{
    bit_error, ck_threshold, ck_threshold_exact, eve_noise, first_round_message_attack, holevo_threshold, linear_grid, message_attack_threshold,
    mutual_info_born, mutual_info_six, mutual_info_tetra, secondary_noise, MessageAttackKind, SEPARABLE_NOISE,
};
use tetrakey_core::session::{acceptance_from_counts, run_loopback, run_tcp_loopback, AcceptancePolicy, SessionConfig, SessionStatus, Verdict};
use tetrakey_core::sifting::{residual_statistics, run_sifting, SiftingConfig};
use tetrakey_core::source::{conditioned_ancilla, noisy_joint_distribution, noisy_singlet, purification, sample_pairs, twirl, ANCILLA_QUBITS};
use tetrakey_core::tetra::{joint_distribution, reconstruct_state, six_state_pom, tetra_pom};
use tetrakey_core::{Letter, PomKind};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn all(checks: Vec<Check>) -> (bool, String) {
    let pass = checks.iter().all(|c| c.pass);
    let detail = checks.iter().map(|c| c.detail.as_str()).collect::<Vec<_>>().join("; ");
    (pass, detail)
}

/// Mutual information straight from a row-major table, without the library.
fn oracle_mutual_information(p: &[f64], rows: usize, cols: usize) -> f64 {
    let pr: Vec<f64> = (0..rows).map(|i| (0..cols).map(|j| p[i * cols + j]).sum()).collect();
    let pc: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| p[i * cols + j]).sum()).collect();
    let mut total = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let x = p[i * cols + j];
            if x > 0.0 {
                total += x * (x / (pr[i] * pc[j])).log2();
            }
        }
    }
    total
}

fn criterion_1() -> (bool, String) {
    let tetra = mutual_info_born(PomKind::Tetra, 0.0).unwrap();
    let six = mutual_info_born(PomKind::Six, 0.0).unwrap();
    all(vec![
        check((tetra - 0.415037).abs() < 1e-6 && (tetra - (4.0f64 / 3.0).log2()).abs() < 1e-9, format!("tetra {tetra:.10}")),
        check((six - 1.0 / 3.0).abs() < 1e-9, format!("six-state {six:.10}")),
    ])
}

fn criterion_2() -> (bool, String) {
    let grid = linear_grid(0.0, 0.98, 50);
    let mut worst_tetra: f64 = 0.0;
    let mut worst_six: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for &e in &grid {
        let table = noisy_joint_distribution(e).unwrap();
        let numeric = tetrakey_core::distribution::shannon_mutual_information(&table);
        worst_tetra = worst_tetra.max((mutual_info_tetra(e) - numeric).abs());
        worst_oracle = worst_oracle.max((mutual_info_tetra(e) - oracle_mutual_information(table.entries(), 4, 4)).abs());
        let six = joint_distribution(&noisy_singlet(e).unwrap(), &six_state_pom(), &six_state_pom()).unwrap();
        worst_six = worst_six.max((mutual_info_six(e) - oracle_mutual_information(six.entries(), 6, 6)).abs());
    }
    all(vec![
        check(worst_tetra < 1e-9, format!("tetra max |Δ| {worst_tetra:.2e}")),
        check(worst_oracle < 1e-9, format!("tetra vs direct sum {worst_oracle:.2e}")),
        check(worst_six < 1e-9, format!("six-state max |Δ| {worst_six:.2e}")),
    ])
}

fn random_state(rng: &mut RngStream) -> DensityOperator {
    let g = CMatrix::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m.map(|z| z / tr)).unwrap()
}

fn criterion_3() -> (bool, String) {
    let mut rng = RngStream::new(2024, 0);
    let pom = tetra_pom();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_state(&mut rng);
        let p = joint_distribution(&rho, &pom, &pom).unwrap();
        let back = reconstruct_state(&p).unwrap().into_density().unwrap();
        worst = worst.max(back.trace_distance(&rho).unwrap());
    }
    all(vec![check(worst < 1e-10, format!("100 random states, max trace distance {worst:.2e}"))])
}

fn criterion_4() -> (bool, String) {
    let mut checks = Vec::new();
    for eps in [0.0, 0.1, 0.25, 0.5] {
        let reduced = purification(eps).unwrap().density().partial_trace(&[0, 1]).unwrap();
        let d = reduced.trace_distance(&noisy_singlet(eps).unwrap()).unwrap();
        checks.push(check(d < 1e-12, format!("ε={eps} tr_E distance {d:.1e}")));
        if eps > 0.0 {
            for letter in Letter::ALL {
                let (p, rho) = conditioned_ancilla(eps, letter).unwrap();
                let ev = rho.eigenvalues();
                let ok = (p - 0.25).abs() < 1e-12
                    && (ev[0] - (1.0 - eps / 2.0)).abs() < 1e-10
                    && (ev[1] - eps / 2.0).abs() < 1e-10
                    && ev[2].abs() < 1e-10
                    && ev[3].abs() < 1e-10;
                if !ok {
                    checks.push(check(false, format!("ε={eps} letter {letter} spectrum {ev:?}")));
                }
            }
            checks.push(check(true, format!("ε={eps} conditioned ancillas rank 2 on qubits {ANCILLA_QUBITS:?}")));
        }
    }
    all(checks)
}

fn criterion_5() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for e in linear_grid(0.0, SEPARABLE_NOISE, 101) {
        let eta = eve_noise(e).unwrap();
        worst = worst.max(((1.0 - 1.5 * e).powi(2) + (1.0 - eta).powi(2) - 1.0).abs());
    }
    let ck = ck_threshold().unwrap().threshold;
    all(vec![
        check(worst < 1e-12, format!("circle identity max residual {worst:.1e}")),
        check(
            (ck - 1.0 / (2.5 + 3f64.sqrt())).abs() < 1e-6 && (ck - ck_threshold_exact()).abs() < 1e-6 && (ck - 0.2363).abs() < 5e-5,
            format!("CK threshold {ck:.7} vs 1/(5/2+√3) = {:.7}", 1.0 / (2.5 + 3f64.sqrt())),
        ),
    ])
}

fn criterion_6() -> (bool, String) {
    let t = holevo_threshold(PomKind::Tetra).unwrap().threshold;
    let s = holevo_threshold(PomKind::Six).unwrap().threshold;
    all(vec![
        check((t - 0.1265).abs() < 5e-4, format!("tetra {t:.6}")),
        check((s - 0.1086).abs() < 5e-4, format!("six-state {s:.6}")),
    ])
}

fn records(eps: f64, n: usize, seed: u64) -> (LetterSequence, LetterSequence) {
    let (a, b) = sample_pairs(eps, n, &mut RngStream::new(seed, streams::SOURCE)).unwrap();
    let t = twirl(&a, &b, &mut RngStream::new(seed, streams::TWIRL)).unwrap();
    (t.alice, t.bob)
}

fn criterion_7() -> (bool, String) {
    let (a, b) = records(0.0, 100_000, 7);
    let mut checks = Vec::new();
    for (rounds, fp, expected) in [(1, false, 0.333), (2, false, 0.389), (3, false, 0.398), (2, true, 0.39815)] {
        let out = run_sifting(&a, &b, SiftingConfig::new(rounds, fp).unwrap(), 7).unwrap();
        let eff = out.accounting.efficiency;
        let same = out.alice_key == out.bob_key;
        let label = if fp { format!("n={rounds}+pairing") } else { format!("n={rounds}") };
        checks.push(check((eff - expected).abs() < 0.01 && same, format!("{label} {eff:.4} keys identical {same}")));
    }
    all(checks)
}

fn within_sigmas(observed: f64, expected: f64, n: usize, k: f64) -> bool {
    (observed - expected).abs() <= k * (expected * (1.0 - expected) / n as f64).sqrt()
}

fn criterion_8() -> (bool, String) {
    let mut checks = Vec::new();
    let (a, b) = records(0.25, 1_000_000, 11);
    let out = run_sifting(&a, &b, SiftingConfig::new(2, false).unwrap(), 11).unwrap();
    for r in &out.accounting.rounds {
        let bits = r.iteration_bits;
        let expected = bit_error(0.25, r.tally.round as u32).unwrap();
        let observed = r.error_rate.unwrap_or(f64::NAN);
        checks.push(check(within_sigmas(observed, expected, bits, 4.0), format!("round {} error {observed:.5} vs {expected:.5} ({bits} bits)", r.tally.round)));
    }
    for (eps, seed) in [(0.2, 21), (0.3, 22)] {
        let (a, b) = records(eps, 1_000_000, seed);
        let out = run_sifting(&a, &b, SiftingConfig::new(1, false).unwrap(), seed).unwrap();
        let est = residual_statistics(&out.residuals).unwrap()[0];
        let expected = secondary_noise(eps).unwrap();
        let f = expected / 4.0;
        let sigma = 4.0 * (f * (1.0 - f) / est.samples as f64).sqrt();
        checks.push(check(
            (est.epsilon_hat - expected).abs() <= 4.0 * sigma,
            format!("ε={eps} residual ε̂ {:.5} vs {expected:.5}", est.epsilon_hat),
        ));
    }
    all(checks)
}

fn criterion_9() -> (bool, String) {
    let mut checks = Vec::new();
    let rank = first_round_message_attack(0.2, MessageAttackKind::Iteration).unwrap().announcement_rank;
    checks.push(check(rank == 9, format!("rank {rank}")));
    for kind in MessageAttackKind::ALL {
        let r = message_attack_threshold(kind).unwrap();
        let reference = kind.reference_threshold();
        checks.push(check((r.threshold - reference).abs() <= 0.01, format!("{} {:.4} vs {reference}", kind.name(), r.threshold)));
    }
    all(checks)
}

fn session_config(seed: u64, max_eps: f64) -> SessionConfig {
    let mut cfg = SessionConfig::new("acceptance", SiftingConfig::new(2, false).unwrap(), 1000, seed);
    cfg.policy.epsilon_max = max_eps;
    cfg
}

fn criterion_10() -> (bool, String) {
    let mut checks = Vec::new();
    let (a, b) = sample_pairs(0.0, 10_000, &mut RngStream::new(5, streams::SOURCE)).unwrap();
    let (ca, cb) = (session_config(100, 0.3), session_config(200, 0.3));
    let mem = run_loopback(&a, &b, &ca, &cb).into_results().unwrap();
    let tcp = run_tcp_loopback(&a, &b, &ca, &cb).unwrap().into_results().unwrap();
    let identical = mem.0.key == tcp.0.key
        && mem.1.key == tcp.1.key
        && mem.0.transcript == tcp.0.transcript
        && mem.1.transcript == tcp.1.transcript
        && mem.0.transcript == mem.1.transcript
        && mem.0.key_bits() == mem.1.key_bits()
        && !mem.0.key.is_empty();
    checks.push(check(identical, format!("loopback and socket sessions agree ({} key bits)", mem.0.key.len())));

    let trials = 200;
    let policy = AcceptancePolicy { epsilon_max: 0.3, ..AcceptancePolicy::default() };
    let mut rejected = 0;
    for t in 0..trials {
        let (a, b) = sample_pairs(0.5, 10_000, &mut RngStream::new(1000 + t, streams::SOURCE)).unwrap();
        let counts = tetrakey_core::letters::pair_counts(&a, &b).unwrap();
        if acceptance_from_counts(&counts, &policy).unwrap().verdict == Verdict::Reject {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / trials as f64;
    checks.push(check(rate >= 0.99, format!("ε=0.5 rejected in {rejected}/{trials} trials at M=10⁴")));

    let (a, b) = sample_pairs(0.5, 20_000, &mut RngStream::new(6, streams::SOURCE)).unwrap();
    let mut c1 = session_config(1, 0.3);
    c1.tomography = 10_000;
    let mut c2 = session_config(2, 0.3);
    c2.tomography = 10_000;
    let (ra, rb) = run_loopback(&a, &b, &c1, &c2).into_results().unwrap();
    let stopped = ra.status == SessionStatus::Rejected && rb.status == SessionStatus::Rejected && ra.key.is_empty() && rb.key.is_empty();
    checks.push(check(stopped, format!("ε=0.5 session stops after tomography (ε̂ {:.3})", ra.acceptance.epsilon_hat)));
    all(checks)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> (bool, String)); 10] = [
        ("ideal mutual information", criterion_1),
        ("closed form vs Born rule", criterion_2),
        ("reconstruction round trip", criterion_3),
        ("purification and conditioned ancillas", criterion_4),
        ("noise duality and CK threshold", criterion_5),
        ("Holevo one-way thresholds", criterion_6),
        ("sifting efficiency", criterion_7),
        ("noise propagation", criterion_8),
        ("first-round message attack", criterion_9),
        ("sessions", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = run();
        println!("{} criterion {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failures += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
