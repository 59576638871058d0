//! Security quantities: mutual informations, the Alice–Eve noise map, the
//! Csiszár–Körner threshold, Holevo bounds, bit-error and noise recursions
//! of the iterative sifting, and a brute-force Holevo analysis of the
//! first-round key bits.

use serde::{Deserialize, Serialize};

use crate::distribution::shannon_mutual_information;
use crate::error::{Error, Result};
use crate::letters::Letter;
use crate::quantum::{binary_entropy, conditioned_reduction, shannon_entropy, xlog2x, CMatrix, DensityOperator, Operator, PureState};
use crate::source::{ancilla_state, conditioned_ancilla_for, noisy_singlet, purification};
use crate::tetra::{joint_distribution, tetra_pom, Pom, PomKind};

/// Upper end of the entangled range, ε = 2/3.
pub const SEPARABLE_NOISE: f64 = 2.0 / 3.0;

/// Default bisection tolerance on ε.
pub const SOLVER_TOL: f64 = 1e-10;

fn check_range(eps: f64, hi: f64) -> Result<()> {
    if !(0.0..=hi).contains(&eps) || eps.is_nan() {
        return Err(Error::NoiseOutOfRange(eps));
    }
    Ok(())
}

/// Tetrahedron mutual information, `(1−ε/4) log₂((4−ε)/3) + (ε/4) log₂ ε`.
pub fn mutual_info_tetra(eps: f64) -> f64 {
    (1.0 - eps / 4.0) * ((4.0 - eps) / 3.0).log2() + xlog2x(eps) / 4.0
}

/// Six-state mutual information, `(ε/6) log₂ ε + ((2−ε)/6) log₂(2−ε)`.
pub fn mutual_info_six(eps: f64) -> f64 {
    (xlog2x(eps) + xlog2x(2.0 - eps)) / 6.0
}

pub fn mutual_info(kind: PomKind, eps: f64) -> f64 {
    match kind {
        PomKind::Tetra => mutual_info_tetra(eps),
        PomKind::Six => mutual_info_six(eps),
    }
}

/// Mutual information of the noisy singlet measured with `kind` on both
/// sides, evaluated through the Born rule.
pub fn mutual_info_born(kind: PomKind, eps: f64) -> Result<f64> {
    let pom = Pom::for_kind(kind);
    let p = joint_distribution(&noisy_singlet(eps)?, &pom, &pom)?;
    Ok(shannon_mutual_information(&p))
}

/// Effective Alice–Eve noise level, `η = (√(1−3ε/4) − √(3ε/4))²`.
pub fn eve_noise(eps: f64) -> Result<f64> {
    check_range(eps, SEPARABLE_NOISE)?;
    Ok(((1.0 - 0.75 * eps).sqrt() - (0.75 * eps).sqrt()).powi(2))
}

/// Invert [`eve_noise`] through `(1 − 3ε/2)² + (1 − η)² = 1`.
pub fn noise_from_eve(eta: f64) -> Result<f64> {
    check_range(eta, 1.0)?;
    Ok((2.0 / 3.0) * (1.0 - (1.0 - (1.0 - eta).powi(2)).sqrt()))
}

/// `I_AE(ε)`: Alice–Eve information under the mixed-state attack.
pub fn eve_information(eps: f64) -> Result<f64> {
    Ok(mutual_info_tetra(eve_noise(eps)?))
}

/// Csiszár–Körner yield `I_AB − I_AE`.
pub fn ck_yield(eps: f64) -> Result<f64> {
    Ok(mutual_info_tetra(eps) - eve_information(eps)?)
}

/// `1/(5/2 + √3)`, where `η(ε) = ε`.
pub fn ck_threshold_exact() -> f64 {
    1.0 / (2.5 + 3.0_f64.sqrt())
}

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub quantity: String,
    pub threshold: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub iterations: usize,
    pub reference: Option<f64>,
    pub reference_source: Option<String>,
}

impl ThresholdReport {
    pub fn with_reference(mut self, value: f64, source: &str) -> Self {
        self.reference = Some(value);
        self.reference_source = Some(source.to_string());
        self
    }

    pub fn delta(&self) -> Option<f64> {
        self.reference.map(|r| self.threshold - r)
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to `|Δε| < tol`.
pub fn solve_threshold<F>(quantity: &str, mut f: F, lo: f64, hi: f64, tol: f64) -> Result<ThresholdReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 || fb == 0.0 {
        let threshold = if fa == 0.0 { a } else { b };
        return Ok(ThresholdReport {
            quantity: quantity.into(),
            threshold,
            bracket: (lo, hi),
            tolerance: tol,
            iterations: 0,
            reference: None,
            reference_source: None,
        });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }
    let mut iterations = 0;
    let mut sign_a = fa.signum();
    while b - a >= tol {
        iterations += 1;
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if fm.signum() == sign_a {
            a = mid;
            sign_a = fm.signum();
        } else {
            b = mid;
        }
    }
    Ok(ThresholdReport {
        quantity: quantity.into(),
        threshold: 0.5 * (a + b),
        bracket: (lo, hi),
        tolerance: tol,
        iterations,
        reference: None,
        reference_source: None,
    })
}

pub fn ck_threshold() -> Result<ThresholdReport> {
    Ok(solve_threshold("ck", ck_yield, 0.1, 0.4, SOLVER_TOL)?.with_reference(0.2363, "mixed-state attack, I_AB = I_AE"))
}

/// Holevo quantity of Eve's ancilla about Alice's outcome, in closed form:
/// `S(tr_AB|S⟩⟨S|) − h₂(ε/2)`. The same for both measurements.
pub fn holevo_chi(eps: f64) -> Result<f64> {
    check_range(eps, 1.0)?;
    let spectrum = [1.0 - 0.75 * eps, eps / 4.0, eps / 4.0, eps / 4.0];
    Ok(shannon_entropy(&spectrum) - binary_entropy(eps / 2.0))
}

/// The same quantity from explicitly conditioned ancilla states.
pub fn holevo_chi_explicit(kind: PomKind, eps: f64) -> Result<f64> {
    let pom = Pom::for_kind(kind);
    let mut conditional = 0.0;
    for effect in pom.effects() {
        let (p, rho) = conditioned_ancilla_for(eps, effect)?;
        conditional += p * rho.entropy()?;
    }
    Ok(ancilla_state(eps)?.entropy()? - conditional)
}

/// Root of `I_AB(ε) = χ(ε)` for the given measurement.
pub fn holevo_threshold(kind: PomKind) -> Result<ThresholdReport> {
    let reference = match kind {
        PomKind::Tetra => 0.1265,
        PomKind::Six => 0.1086,
    };
    let f = |eps: f64| Ok(mutual_info(kind, eps) - holevo_chi(eps)?);
    Ok(solve_threshold(&format!("holevo_one_way_{kind}"), f, 0.01, 0.3, SOLVER_TOL)?
        .with_reference(reference, "message attack on one-way key generation"))
}

/// Error probability of key bits from round `n`:
/// `[1 + ((4−ε)/(3ε))^(2^(n−1))]⁻¹`, 0 at ε = 0.
pub fn bit_error(eps: f64, n: u32) -> Result<f64> {
    check_range(eps, 1.0)?;
    if n == 0 {
        return Err(Error::InvalidConfig("round index starts at 1".into()));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let ratio = (4.0 - eps) / (3.0 * eps);
    Ok(1.0 / (1.0 + ratio.powf(2f64.powi(n as i32 - 1))))
}

/// Noise level of the records put aside by one round,
/// `ε² / [1 + (1−ε)²/3]`.
pub fn secondary_noise(eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::NoiseOutOfRange(eps));
    }
    Ok(eps * eps / (1.0 + (1.0 - eps).powi(2) / 3.0))
}

/// Asymptotic yield of `n` iteration rounds at zero noise.
pub fn iteration_efficiency(rounds: u32) -> f64 {
    0.4 * (1.0 - (1.0f64 / 6.0).powi(rounds as i32))
}

/// Same, with Renes pairing in the last round.
pub fn hybrid_efficiency(rounds: u32) -> f64 {
    0.4 * (1.0 - (1.0f64 / 6.0).powi(rounds as i32 + 1))
}

/// Which first-round key bits the Holevo analysis targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageAttackKind {
    /// Bits from the grouping step of round one (two letters per bit).
    Iteration,
    /// Bits from final pairing after one round (two letters per bit).
    FinalPairing,
    /// Plain Renes pairing on single letters.
    RenesL1,
}

impl MessageAttackKind {
    pub const ALL: [MessageAttackKind; 3] = [Self::Iteration, Self::FinalPairing, Self::RenesL1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Iteration => "iteration",
            Self::FinalPairing => "final_pairing",
            Self::RenesL1 => "renes_l1",
        }
    }

    pub fn reference_threshold(self) -> f64 {
        match self {
            Self::Iteration => 0.2182,
            Self::FinalPairing => 0.2422,
            Self::RenesL1 => 0.1920,
        }
    }

    fn copies(self) -> usize {
        match self {
            Self::RenesL1 => 1,
            _ => 2,
        }
    }
}

/// The public announcement Eve conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Announcement {
    /// Grouping: letters with value 0 and value 1.
    Groups { group0: [Letter; 2], group1: [Letter; 2] },
    /// Renes pair: "call `zero` 0 and `one` 1".
    Pair { zero: Letter, one: Letter },
}

impl Announcement {
    /// Groups {C,D}/{A,B} with value 0 on {A,B}, or the pair A→0, B→1.
    pub fn canonical(kind: MessageAttackKind) -> Self {
        match kind {
            MessageAttackKind::Iteration => Self::Groups { group0: [Letter::A, Letter::B], group1: [Letter::C, Letter::D] },
            _ => Self::Pair { zero: Letter::A, one: Letter::B },
        }
    }
}

/// Eve's ensemble for one key bit: unnormalized ancilla states for Alice's
/// bit 0 and 1 and the total weight of disagreeing outcomes.
#[derive(Debug, Clone)]
pub struct AttackEnsemble {
    pub bit0: Operator,
    pub bit1: Operator,
    pub error_weight: f64,
}

impl AttackEnsemble {
    fn total(&self) -> f64 {
        self.bit0.trace().re + self.bit1.trace().re
    }

    /// Prior of Alice's bit being 0.
    pub fn prior0(&self) -> f64 {
        self.bit0.trace().re / self.total()
    }

    /// Probability that Bob's bit differs from Alice's.
    pub fn error_probability(&self) -> f64 {
        self.error_weight / self.total()
    }

    /// Ancilla state given the announcement, averaged over the bit value.
    pub fn announcement_state(&self) -> Result<DensityOperator> {
        DensityOperator::normalized(&self.bit0.add(&self.bit1)?)
    }

    /// `S(ρ̄) − Σ p_x S(ρ_x)`.
    pub fn holevo(&self) -> Result<f64> {
        let p0 = self.prior0();
        let s0 = DensityOperator::normalized(&self.bit0)?.entropy()?;
        let s1 = DensityOperator::normalized(&self.bit1)?.entropy()?;
        Ok(self.announcement_state()?.entropy()? - p0 * s0 - (1.0 - p0) * s1)
    }
}

/// One outcome configuration: Alice's letter on every copy, Bob's letter on
/// each copy, Alice's bit, and whether Bob decodes the opposite bit.
struct Branch {
    alice: Letter,
    bob: Vec<Letter>,
    bit: bool,
    error: bool,
}

fn branches(kind: MessageAttackKind, ann: Announcement) -> Result<Vec<Branch>> {
    let mut out = Vec::new();
    match (kind, ann) {
        (MessageAttackKind::Iteration, Announcement::Groups { group0, group1 }) => {
            if group0.iter().any(|l| group1.contains(l)) || group0[0] == group0[1] || group1[0] == group1[1] {
                return Err(Error::InvalidConfig("groups must partition the alphabet".into()));
            }
            // Bob's two letters fill one group; which group is not public.
            for (bit, alice_group) in [(false, group0), (true, group1)] {
                for alice in alice_group {
                    for bob_group in [group0, group1] {
                        let error = bob_group.contains(&alice);
                        for bob in [vec![bob_group[0], bob_group[1]], vec![bob_group[1], bob_group[0]]] {
                            out.push(Branch { alice, bob, bit, error });
                        }
                    }
                }
            }
        }
        (MessageAttackKind::FinalPairing | MessageAttackKind::RenesL1, Announcement::Pair { zero, one }) => {
            if zero == one {
                return Err(Error::InvalidConfig("pair repeats a letter".into()));
            }
            for (bit, alice) in [(false, zero), (true, one)] {
                for bob in [zero, one] {
                    out.push(Branch { alice, bob: vec![bob; kind.copies()], bit, error: bob == alice });
                }
            }
        }
        _ => return Err(Error::InvalidConfig(format!("announcement does not fit {}", kind.name()))),
    }
    Ok(out)
}

/// `|S⟩^{⊗copies}`; copy `j` occupies qubits `4j..4j+4` ordered
/// (Alice, Bob, Eve, Eve).
fn joint_purification(eps: f64, copies: usize) -> Result<PureState> {
    let s = purification(eps)?;
    let mut state = s.clone();
    for _ in 1..copies {
        state = state.tensor(&s)?;
    }
    Ok(state)
}

/// Build Eve's conditioned ensemble by applying the effects of every
/// consistent outcome to the full multi-copy purification and tracing out
/// Alice and Bob.
pub fn attack_ensemble(eps: f64, kind: MessageAttackKind, ann: Announcement) -> Result<AttackEnsemble> {
    check_range(eps, 1.0)?;
    let copies = kind.copies();
    let state = joint_purification(eps, copies)?;
    let effects = tetra_pom().effects().to_vec();
    let eve: Vec<usize> = (0..copies).flat_map(|j| [4 * j + 2, 4 * j + 3]).collect();
    let dim = 1 << eve.len();
    let mut bits = [Operator::zeros(dim)?, Operator::zeros(dim)?];
    let mut error_weight = 0.0;
    for br in branches(kind, ann)? {
        let mut local: Vec<(usize, &CMatrix)> = Vec::with_capacity(2 * copies);
        for (j, bob) in br.bob.iter().enumerate() {
            local.push((4 * j, &effects[br.alice.index()]));
            local.push((4 * j + 1, &effects[bob.index()]));
        }
        let term = conditioned_reduction(&state, &local, &eve)?;
        if br.error {
            error_weight += term.trace().re;
        }
        let slot = &mut bits[br.bit as usize];
        *slot = slot.add(&term)?;
    }
    let [bit0, bit1] = bits;
    Ok(AttackEnsemble { bit0, bit1, error_weight })
}

/// Holevo analysis of first-round key bits at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageAttack {
    pub kind: MessageAttackKind,
    pub epsilon: f64,
    /// Eve's Holevo quantity about Alice's bit.
    pub chi: f64,
    pub error_probability: f64,
    /// `1 − h₂(q)`.
    pub bit_information: f64,
    pub prior0: f64,
    /// Rank of the announcement-conditioned ancilla state.
    pub announcement_rank: usize,
    /// Ranks of the states conditioned additionally on bit 0 and bit 1.
    pub bit_ranks: [usize; 2],
}

impl MessageAttack {
    /// Secure-yield margin `1 − h₂(q) − χ`.
    pub fn margin(&self) -> f64 {
        self.bit_information - self.chi
    }
}

pub const RANK_TOL: f64 = 1e-9;

pub fn first_round_message_attack(eps: f64, kind: MessageAttackKind) -> Result<MessageAttack> {
    let ens = attack_ensemble(eps, kind, Announcement::canonical(kind))?;
    let q = ens.error_probability();
    Ok(MessageAttack {
        kind,
        epsilon: eps,
        chi: ens.holevo()?,
        error_probability: q,
        bit_information: 1.0 - binary_entropy(q),
        prior0: ens.prior0(),
        announcement_rank: ens.bit0.add(&ens.bit1)?.rank(RANK_TOL)?,
        bit_ranks: [ens.bit0.rank(RANK_TOL)?, ens.bit1.rank(RANK_TOL)?],
    })
}

/// Noise level where `1 − h₂(q) = χ` for first-round bits.
pub fn message_attack_threshold(kind: MessageAttackKind) -> Result<ThresholdReport> {
    let f = |eps: f64| Ok(first_round_message_attack(eps, kind)?.margin());
    Ok(solve_threshold(&format!("message_attack_{}", kind.name()), f, 0.02, 0.6, 1e-8)?
        .with_reference(kind.reference_threshold(), "first-round message attack"))
}

/// One row of the one-way mutual-information figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epsilon: f64,
    pub iab_tetra: f64,
    pub iab_six: f64,
    pub iae_tetra: f64,
    pub chi: f64,
    pub delta_i: f64,
}

pub fn curve_row(eps: f64) -> Result<CurveRow> {
    check_range(eps, SEPARABLE_NOISE)?;
    let iab = mutual_info_tetra(eps);
    let iae = eve_information(eps)?;
    Ok(CurveRow {
        epsilon: eps,
        iab_tetra: iab,
        iab_six: mutual_info_six(eps),
        iae_tetra: iae,
        chi: holevo_chi(eps)?,
        delta_i: iab - iae,
    })
}

/// Evaluate [`curve_row`] on a grid; rows keep the grid order.
pub fn curve_rows(grid: &[f64]) -> Result<Vec<CurveRow>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(|&e| curve_row(e)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(|&e| curve_row(e)).collect()
    }
}

/// Named `(ε, value)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityCurve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl SecurityCurve {
    pub fn sample<F: Fn(f64) -> Result<f64>>(name: &str, grid: &[f64], f: F) -> Result<Self> {
        if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|&e| !(0.0..=SEPARABLE_NOISE).contains(&e)) {
            return Err(Error::InvalidConfig("grid must increase strictly within [0, 2/3]".into()));
        }
        let points = grid.iter().map(|&e| f(e).map(|v| (e, v))).collect::<Result<_>>()?;
        Ok(Self { name: name.into(), points })
    }

    /// Linear interpolation of the first crossing with another curve on the
    /// same grid.
    pub fn crossing(&self, other: &Self) -> Option<f64> {
        let d: Vec<(f64, f64)> = self.points.iter().zip(&other.points).map(|(a, b)| (a.0, a.1 - b.1)).collect();
        d.windows(2).find(|w| w[0].1 != 0.0 && w[0].1.signum() != w[1].1.signum()).map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            x0 - y0 * (x1 - x0) / (y1 - y0)
        })
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    RawData,
    Collective,
    Message,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableRounds {
    /// Renes pairing on single letters.
    Renes,
    Rounds(u32),
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitKind {
    Iteration,
    FinalPairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceThreshold {
    pub attack: Attack,
    pub rounds: TableRounds,
    pub bits: BitKind,
    pub value: f64,
}

/// Published noise thresholds for the three attacks on generated key bits.
pub fn table_one_reference() -> Vec<ReferenceThreshold> {
    use Attack::*;
    use BitKind::*;
    use TableRounds::*;
    let rows: [(TableRounds, [Option<f64>; 6]); 5] = [
        (Renes, [None, Some(0.2868), None, Some(0.2347), None, Some(0.1920)]),
        (Rounds(1), [Some(0.3324), Some(0.3598), Some(0.2628), Some(0.2945), Some(0.2182), Some(0.2422)]),
        (Rounds(2), [Some(0.3742), Some(0.4241), Some(0.2959), Some(0.3405), Some(0.2482), Some(0.2976)]),
        (Rounds(3), [Some(0.4143), Some(0.4745), Some(0.3401), Some(0.3649), Some(0.2997), Some(0.3340)]),
        (Asymptotic, [Some(0.5091), Some(0.5714), Some(0.3753), Some(0.3893), Some(0.3753), Some(0.3893)]),
    ];
    let columns = [
        (RawData, Iteration),
        (RawData, FinalPairing),
        (Collective, Iteration),
        (Collective, FinalPairing),
        (Message, Iteration),
        (Message, FinalPairing),
    ];
    let mut out = Vec::new();
    for (rounds, values) in rows {
        for ((attack, bits), value) in columns.iter().zip(values) {
            if let Some(value) = value {
                out.push(ReferenceThreshold { attack: *attack, rounds, bits: *bits, value });
            }
        }
    }
    out
}

pub fn reference_threshold(attack: Attack, rounds: TableRounds, bits: BitKind) -> Option<f64> {
    table_one_reference()
        .into_iter()
        .find(|r| r.attack == attack && r.rounds == rounds && r.bits == bits)
        .map(|r| r.value)
}
