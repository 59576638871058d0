use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{SocketAddr, TcpListener};
use std::path::Path;

use serde::Serialize;
use tetrakey_core::distribution::JointDistribution;
use tetrakey_core::letters::pair_counts;
use tetrakey_core::quantum::trace_distance;
use tetrakey_core::rng::{streams, RngStream};
use tetrakey_core::security::{
    self, bit_error, ck_threshold, holevo_threshold, hybrid_efficiency, iteration_efficiency, linear_grid, message_attack_threshold,
    MessageAttackKind, ThresholdReport, SEPARABLE_NOISE,
};
use tetrakey_core::session::{
    self, acceptance_from_counts, run_loopback, run_session, run_tcp_loopback, write_transcript, AcceptancePolicy, Role, SessionConfig,
    SessionResult, SessionStatus, SourceAcceptance, TcpTransport,
};
use tetrakey_core::sifting::{run_sifting, KeyAccounting, SiftingConfig};
use tetrakey_core::source::{twirl, NoiseModel, SamplingPlan};
use tetrakey_core::tetra::reconstruct_state;
use tetrakey_core::{Error, LetterSequence, PomKind};

use crate::output::{write_csv, write_json};
use crate::{CurvesArgs, Format, PolicyArgs, RoleArg, SessionArgs, SiftArgs, SimulateArgs, SourceArgs, ThresholdsArgs, TomographyArgs};

const CHUNK: usize = 1 << 16;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    /// A solver did not converge or the source was rejected.
    Check(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Check(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoiseOutOfRange(_) | Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            Error::NoSignChange { .. } | Error::Aborted { .. } => Failure::Check(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn sifting_config(s: &SiftArgs) -> Result<SiftingConfig, Failure> {
    Ok(SiftingConfig::new(s.rounds as usize, s.final_pairing)?)
}

fn records(src: &SourceArgs, seed: u64) -> Result<(LetterSequence, LetterSequence), Failure> {
    NoiseModel::new(src.epsilon)?;
    let plan = SamplingPlan::new(seed, CHUNK)?;
    let (a, b) = plan.sample_parallel(src.epsilon, src.pairs as usize)?;
    let t = twirl(&a, &b, &mut RngStream::new(seed, streams::TWIRL))?;
    Ok((t.alice, t.bob))
}

#[derive(Serialize)]
struct RoundRow {
    round: String,
    letters_in: usize,
    pairs: usize,
    distinct: usize,
    same: usize,
    final_pair_successes: usize,
    bits: usize,
    consumed: usize,
    bit_errors: usize,
    error_rate: Option<f64>,
    predicted_error_rate: Option<f64>,
    efficiency: Option<f64>,
    ideal_efficiency: Option<f64>,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    epsilon: f64,
    pairs: u64,
    rounds: u64,
    final_pairing: bool,
    seed: u64,
    efficiency: f64,
    ideal_efficiency: f64,
    accounting: &'a KeyAccounting,
    predicted_error_rates: Vec<Option<f64>>,
    keys_identical: bool,
}

/// Expected error over a round's bits: iteration bits at the round's rate,
/// final-pairing bits at the next round's rate.
fn predicted_error(eps: f64, round: usize, iteration_bits: usize, final_bits: usize) -> Option<f64> {
    let total = iteration_bits + final_bits;
    if total == 0 {
        return None;
    }
    let q = bit_error(eps, round as u32).ok()?;
    let q_next = bit_error(eps, round as u32 + 1).ok()?;
    Some((iteration_bits as f64 * q + final_bits as f64 * q_next) / total as f64)
}

pub fn simulate(a: &SimulateArgs) -> Outcome {
    let cfg = sifting_config(&a.sift)?;
    let (alice, bob) = records(&a.source, a.source.seed)?;
    let out = run_sifting(&alice, &bob, cfg, a.source.seed)?;
    let acc = &out.accounting;
    let ideal_efficiency = if cfg.final_pairing { hybrid_efficiency(a.sift.rounds as u32) } else { iteration_efficiency(a.sift.rounds as u32) };
    let eps = a.source.epsilon;
    let predicted: Vec<Option<f64>> =
        acc.rounds.iter().map(|r| predicted_error(eps, r.tally.round, r.iteration_bits, r.final_pairing_bits)).collect();
    let mut w = stdout();
    match a.format {
        Format::Json => write_json(
            &mut w,
            "tetrakey.simulate.v1",
            &SimulateReport {
                epsilon: eps,
                pairs: a.source.pairs,
                rounds: a.sift.rounds,
                final_pairing: a.sift.final_pairing,
                seed: a.source.seed,
                efficiency: acc.efficiency,
                ideal_efficiency,
                accounting: acc,
                predicted_error_rates: predicted,
                keys_identical: out.alice_key == out.bob_key,
            },
        )?,
        Format::Csv => {
            let mut rows: Vec<RoundRow> = acc
                .rounds
                .iter()
                .zip(&predicted)
                .map(|(r, p)| RoundRow {
                    round: r.tally.round.to_string(),
                    letters_in: r.tally.letters_in,
                    pairs: r.tally.pairs,
                    distinct: r.tally.distinct,
                    same: r.tally.same,
                    final_pair_successes: r.tally.final_pair_successes,
                    bits: r.tally.bits,
                    consumed: r.consumed,
                    bit_errors: r.bit_errors,
                    error_rate: r.error_rate,
                    predicted_error_rate: *p,
                    efficiency: None,
                    ideal_efficiency: None,
                })
                .collect();
            rows.push(RoundRow {
                round: "total".into(),
                letters_in: acc.letters,
                pairs: acc.rounds.iter().map(|r| r.tally.pairs).sum(),
                distinct: acc.rounds.iter().map(|r| r.tally.distinct).sum(),
                same: acc.rounds.iter().map(|r| r.tally.same).sum(),
                final_pair_successes: acc.rounds.iter().map(|r| r.tally.final_pair_successes).sum(),
                bits: acc.total_bits,
                consumed: acc.letters_consumed,
                bit_errors: acc.bit_errors,
                error_rate: Some(acc.error_rate),
                predicted_error_rate: None,
                efficiency: Some(acc.efficiency),
                ideal_efficiency: Some(ideal_efficiency),
            });
            write_csv(&mut w, "tetrakey.simulate.v1", &rows)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn curves(a: &CurvesArgs) -> Outcome {
    let grid = match &a.grid {
        Some(g) => g.clone(),
        None => linear_grid(a.from, a.to.unwrap_or(SEPARABLE_NOISE), a.points as usize),
    };
    if grid.iter().any(|&e| !(0.0..=SEPARABLE_NOISE + 1e-12).contains(&e)) {
        return Err(Failure::Usage("grid points must lie in [0, 2/3]".into()));
    }
    let grid: Vec<f64> = grid.into_iter().map(|e| e.min(SEPARABLE_NOISE)).collect();
    let rows = security::curve_rows(&grid)?;
    let mut w = stdout();
    match a.format {
        Format::Csv => write_csv(&mut w, "tetrakey.curves.v1", &rows)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Curves<'a> {
                rows: &'a [security::CurveRow],
            }
            write_json(&mut w, "tetrakey.curves.v1", &Curves { rows: &rows })?
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ThresholdRow {
    quantity: String,
    computed: Option<f64>,
    reference: f64,
    delta: Option<f64>,
    error: Option<String>,
}

pub fn thresholds(a: &ThresholdsArgs) -> Outcome {
    let mut jobs: Vec<(String, f64, Box<dyn Fn() -> tetrakey_core::Result<ThresholdReport>>)> = vec![
        ("ck".into(), 0.2363, Box::new(ck_threshold)),
        ("holevo_one_way_tetra".into(), 0.1265, Box::new(|| holevo_threshold(PomKind::Tetra))),
        ("holevo_one_way_six".into(), 0.1086, Box::new(|| holevo_threshold(PomKind::Six))),
    ];
    for kind in MessageAttackKind::ALL {
        jobs.push((format!("message_attack_{}", kind.name()), kind.reference_threshold(), Box::new(move || message_attack_threshold(kind))));
    }
    let rows: Vec<ThresholdRow> = jobs
        .iter()
        .map(|(name, reference, job)| match job() {
            Ok(r) => ThresholdRow { quantity: name.clone(), computed: Some(r.threshold), reference: *reference, delta: Some(r.threshold - reference), error: None },
            Err(e) => ThresholdRow { quantity: name.clone(), computed: None, reference: *reference, delta: None, error: Some(e.to_string()) },
        })
        .collect();
    let missing = rows.iter().filter(|r| r.computed.is_none()).count();
    let mut w = stdout();
    match a.format {
        Format::Csv => {
            write_csv(&mut w, "tetrakey.thresholds.v1", &rows)?;
            if a.reference_table {
                writeln!(w)?;
                let table: Vec<_> = security::table_one_reference().into_iter().map(ReferenceRow::from).collect();
                write_csv(&mut w, "tetrakey.reference_thresholds.v1", &table)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                rows: Vec<ThresholdRow>,
                #[serde(skip_serializing_if = "Option::is_none")]
                reference_table: Option<Vec<ReferenceRow>>,
            }
            let reference_table = a.reference_table.then(|| security::table_one_reference().into_iter().map(ReferenceRow::from).collect());
            write_json(&mut w, "tetrakey.thresholds.v1", &Report { rows, reference_table })?;
        }
    }
    w.flush()?;
    if missing > 0 {
        return Err(Failure::Check(format!("{missing} threshold(s) could not be computed")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ReferenceRow {
    attack: String,
    rounds: String,
    bits: String,
    value: f64,
}

impl From<security::ReferenceThreshold> for ReferenceRow {
    fn from(r: security::ReferenceThreshold) -> Self {
        let tag = |v: serde_json::Value| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
        let rounds = match r.rounds {
            security::TableRounds::Renes => "renes".to_string(),
            security::TableRounds::Rounds(n) => n.to_string(),
            security::TableRounds::Asymptotic => "asymptotic".to_string(),
        };
        Self {
            attack: tag(serde_json::to_value(r.attack).expect("enum serializes")),
            rounds,
            bits: tag(serde_json::to_value(r.bits).expect("enum serializes")),
            value: r.value,
        }
    }
}

fn policy(p: &PolicyArgs) -> Result<AcceptancePolicy, Failure> {
    let policy = AcceptancePolicy { epsilon_max: p.epsilon_max, multiplier: p.multiplier, min_sample: p.min_sample };
    policy.validate()?;
    Ok(policy)
}

#[derive(Serialize)]
struct TomographyReport {
    epsilon: f64,
    pairs: u64,
    seed: u64,
    acceptance: SourceAcceptance,
    reconstruction_min_eigenvalue: f64,
    reconstruction_positive: bool,
    distance_to_source: f64,
    distance_to_estimate: f64,
}

#[derive(Serialize)]
struct TomographyRow {
    epsilon: f64,
    pairs: u64,
    epsilon_hat: f64,
    clamped: bool,
    distance: f64,
    distance_bound: f64,
    verdict: String,
    reconstruction_min_eigenvalue: f64,
    reconstruction_positive: bool,
    distance_to_source: f64,
    distance_to_estimate: f64,
}

pub fn tomography(a: &TomographyArgs) -> Outcome {
    let policy = policy(&a.policy)?;
    let (alice, bob) = records(&a.source, a.source.seed)?;
    let counts = pair_counts(&alice, &bob)?;
    let acceptance = acceptance_from_counts(&counts, &policy)?;
    let freqs = JointDistribution::from_counts(4, 4, &counts)?;
    let rec = reconstruct_state(&freqs)?;
    let source = tetrakey_core::source::noisy_singlet(a.source.epsilon)?;
    let estimate = tetrakey_core::source::noisy_singlet(acceptance.epsilon_hat)?;
    let report = TomographyReport {
        epsilon: a.source.epsilon,
        pairs: a.source.pairs,
        seed: a.source.seed,
        reconstruction_min_eigenvalue: rec.min_eigenvalue,
        reconstruction_positive: rec.is_positive,
        distance_to_source: trace_distance(&rec.estimate, source.operator())?,
        distance_to_estimate: trace_distance(&rec.estimate, estimate.operator())?,
        acceptance,
    };
    let mut w = stdout();
    match a.format {
        Format::Json => write_json(&mut w, "tetrakey.tomography.v1", &report)?,
        Format::Csv => {
            let acc = &report.acceptance;
            let row = TomographyRow {
                epsilon: report.epsilon,
                pairs: report.pairs,
                epsilon_hat: acc.epsilon_hat,
                clamped: acc.clamped,
                distance: acc.distance,
                distance_bound: acc.distance_bound,
                verdict: format!("{:?}", acc.verdict).to_lowercase(),
                reconstruction_min_eigenvalue: report.reconstruction_min_eigenvalue,
                reconstruction_positive: report.reconstruction_positive,
                distance_to_source: report.distance_to_source,
                distance_to_estimate: report.distance_to_estimate,
            };
            write_csv(&mut w, "tetrakey.tomography.v1", &[row])?
        }
    }
    w.flush()?;
    if !report.acceptance.verdict.is_accept() {
        return Err(Failure::Check(format!("source not accepted: {:?}", report.acceptance.verdict).to_lowercase()));
    }
    Ok(())
}

fn session_config(a: &SessionArgs, seed: u64) -> Result<SessionConfig, Failure> {
    let mut cfg = SessionConfig::new(a.session_id.clone(), sifting_config(&a.sift)?, a.tomography, seed);
    cfg.policy = policy(&a.policy)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct PartyReport<'a> {
    role: Role,
    session_id: &'a str,
    status: SessionStatus,
    acceptance: &'a SourceAcceptance,
    key_bits: usize,
    key_hex: String,
}

impl<'a> From<&'a SessionResult> for PartyReport<'a> {
    fn from(r: &'a SessionResult) -> Self {
        Self { role: r.role, session_id: &r.session_id, status: r.status, acceptance: &r.acceptance, key_bits: r.key.len(), key_hex: r.key_hex() }
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()
}

/// Persist one party's transcript, key and acceptance record as requested.
fn persist(a: &SessionArgs, r: &SessionResult, suffix: Option<&str>) -> io::Result<()> {
    let with_suffix = |p: &Path| match suffix {
        Some(s) => {
            let stem = p.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
            let ext = p.extension().map(|x| format!(".{}", x.to_string_lossy())).unwrap_or_default();
            p.with_file_name(format!("{stem}.{s}{ext}"))
        }
        None => p.to_path_buf(),
    };
    if let Some(p) = &a.transcript {
        write_file(&with_suffix(p), |w| write_transcript(w, &r.transcript))?;
    }
    if let Some(p) = &a.key_out {
        write_file(&with_suffix(p), |w| writeln!(w, "{}", r.key_hex()))?;
    }
    if let Some(p) = &a.acceptance_out {
        write_file(&with_suffix(p), |w| {
            serde_json::to_writer_pretty(&mut *w, &r.acceptance).map_err(io::Error::other)?;
            writeln!(w)
        })?;
    }
    Ok(())
}

fn status_check(results: &[&SessionResult]) -> Outcome {
    if results.iter().any(|r| r.status == SessionStatus::Rejected) {
        return Err(Failure::Check("source rejected by the acceptance test".into()));
    }
    Ok(())
}

pub fn session_loopback(a: &SessionArgs, peer_seed: u64, tcp: bool) -> Outcome {
    let (alice, bob) = records(&a.source, a.source_seed)?;
    let ca = session_config(a, a.source.seed)?;
    let cb = session_config(a, peer_seed)?;
    let pair = if tcp { run_tcp_loopback(&alice, &bob, &ca, &cb)? } else { run_loopback(&alice, &bob, &ca, &cb) };
    let (ra, rb) = pair.into_results()?;
    persist(a, &ra, Some("alice"))?;
    persist(a, &rb, Some("bob"))?;

    #[derive(Serialize)]
    struct Loopback<'a> {
        alice: PartyReport<'a>,
        bob: PartyReport<'a>,
        transcripts_identical: bool,
        accounting: Option<KeyAccounting>,
    }
    let accounting = (ra.status == SessionStatus::Completed).then(|| session::session_accounting(&ra, &rb)).transpose()?;
    let mut w = stdout();
    write_json(
        &mut w,
        "tetrakey.session.v1",
        &Loopback { alice: (&ra).into(), bob: (&rb).into(), transcripts_identical: ra.transcript == rb.transcript, accounting },
    )?;
    w.flush()?;
    status_check(&[&ra, &rb])
}

fn own_half(a: &SessionArgs, role: RoleArg) -> Result<LetterSequence, Failure> {
    let (alice, bob) = records(&a.source, a.source_seed)?;
    Ok(match role {
        RoleArg::Alice => alice,
        RoleArg::Bob => bob,
    })
}

fn finish_party(a: &SessionArgs, r: SessionResult) -> Outcome {
    persist(a, &r, None)?;
    let mut w = stdout();
    write_json(&mut w, "tetrakey.session.v1", &PartyReport::from(&r))?;
    w.flush()?;
    status_check(&[&r])
}

pub fn session_listen(a: &SessionArgs, addr: SocketAddr, role: RoleArg) -> Outcome {
    let letters = own_half(a, role)?;
    let cfg = session_config(a, a.source.seed)?;
    let listener = TcpListener::bind(addr)?;
    eprintln!("listening on {}", listener.local_addr()?);
    let (stream, _) = listener.accept()?;
    let r = run_session(role.into(), &letters, TcpTransport::new(stream)?, &cfg)?;
    finish_party(a, r)
}

pub fn session_connect(a: &SessionArgs, addr: SocketAddr, role: RoleArg) -> Outcome {
    let letters = own_half(a, role)?;
    let cfg = session_config(a, a.source.seed)?;
    let r = run_session(role.into(), &letters, TcpTransport::connect(addr)?, &cfg)?;
    finish_party(a, r)
}
