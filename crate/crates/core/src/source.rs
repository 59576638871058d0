//! The noisy-singlet pair source, its purification, the ancilla states an
//! eavesdropper holding the purification is left with, and seeded sampling
//! of letter records.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::letters::{Letter, LetterSequence};
use crate::quantum::{c, conditioned_reduction, CMatrix, CVector, DensityOperator, Operator, PureState};
use crate::rng::{streams, RngStream};
use crate::tetra::tetra_pom;

/// Noise level of the source, `0 ≤ ε < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    epsilon: f64,
}

impl NoiseModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::NoiseOutOfRange(epsilon));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The two-qubit state is entangled below ε = 2/3.
    pub fn is_nonseparable(&self) -> bool {
        self.epsilon < 2.0 / 3.0
    }
}

fn check_unit_interval(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::NoiseOutOfRange(eps));
    }
    Ok(())
}

/// `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> PureState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_slice(&[c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)]).expect("normalized")
}

/// `(1 − ε)|s⟩⟨s| + ε/4`.
pub fn noisy_singlet(eps: f64) -> Result<DensityOperator> {
    check_unit_interval(eps)?;
    let s = singlet().density();
    let mixed = DensityOperator::maximally_mixed(4)?;
    let m = s.matrix() * c(1.0 - eps, 0.0) + mixed.matrix() * c(eps, 0.0);
    DensityOperator::new(m)
}

/// Closed-form tetrahedron statistics of the noisy singlet:
/// `ε/16` on the diagonal, `(4 − ε)/48` off it.
pub fn noisy_joint_distribution(eps: f64) -> Result<JointDistribution> {
    check_unit_interval(eps)?;
    let entries = (0..16)
        .map(|i| if i / 4 == i % 4 { eps / 16.0 } else { (4.0 - eps) / 48.0 })
        .collect();
    JointDistribution::new(4, 4, entries)
}

/// `|S⟩ = √(1−ε)|s₁₂ s₃₄⟩ + i√ε |s₁₃ s₂₄⟩` on four qubits ordered
/// (Alice, Bob, Eve, Eve).
pub fn purification(eps: f64) -> Result<PureState> {
    check_unit_interval(eps)?;
    let s = singlet();
    let s = s.amplitudes();
    let (wa, wb) = ((1.0 - eps).sqrt(), eps.sqrt());
    let mut amps = CVector::zeros(16);
    for idx in 0..16 {
        let bit = |q: usize| (idx >> (3 - q)) & 1;
        let pairing_ab = s[bit(0) * 2 + bit(1)] * s[bit(2) * 2 + bit(3)];
        let pairing_ae = s[bit(0) * 2 + bit(2)] * s[bit(1) * 2 + bit(3)];
        amps[idx] = pairing_ab * c(wa, 0.0) + pairing_ae * c(0.0, wb);
    }
    PureState::new(amps)
}

/// Qubits of a purification copy held by the eavesdropper.
pub const ANCILLA_QUBITS: [usize; 2] = [2, 3];

/// Unnormalized ancilla state `tr_AB[(E_A ⊗ E_B ⊗ 1)|S⟩⟨S|]` for single-qubit
/// effects on Alice's and Bob's qubits.
pub fn ancilla_given(eps: f64, alice: &CMatrix, bob: &CMatrix) -> Result<Operator> {
    let s = purification(eps)?;
    conditioned_reduction(&s, &[(0, alice), (1, bob)], &ANCILLA_QUBITS)
}

/// The ancilla state with nothing conditioned, `tr_AB|S⟩⟨S|`.
pub fn ancilla_state(eps: f64) -> Result<DensityOperator> {
    purification(eps)?.density().partial_trace(&ANCILLA_QUBITS)
}

/// Ancilla state conditioned on an effect on Alice's qubit alone, returned
/// as `(probability, normalized state)`.
pub fn conditioned_ancilla_for(eps: f64, effect: &CMatrix) -> Result<(f64, DensityOperator)> {
    let un = ancilla_given(eps, effect, &CMatrix::identity(2, 2))?;
    let p = un.trace().re;
    Ok((p, DensityOperator::normalized(&un)?))
}

/// Ancilla state conditioned on Alice's tetrahedron outcome.
pub fn conditioned_ancilla(eps: f64, letter: Letter) -> Result<(f64, DensityOperator)> {
    conditioned_ancilla_for(eps, &tetra_pom().effects()[letter.index()])
}

/// `N` i.i.d. letter pairs from the noisy-singlet statistics.
pub fn sample_pairs(eps: f64, n: usize, rng: &mut RngStream) -> Result<(LetterSequence, LetterSequence)> {
    let cells = WeightedIndex::new(noisy_joint_distribution(eps)?.entries().to_vec())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut alice = Vec::with_capacity(n);
    let mut bob = Vec::with_capacity(n);
    for _ in 0..n {
        let cell = cells.sample(rng);
        alice.push(Letter::ALL[cell / 4]);
        bob.push(Letter::ALL[cell % 4]);
    }
    Ok((LetterSequence(alice), LetterSequence(bob)))
}

/// A partition of a sampling job into fixed-size chunks, chunk `i` drawing
/// from stream `SOURCE_CHUNK_BASE + i`. The output does not depend on how
/// chunks are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPlan {
    pub seed: u64,
    pub chunk_len: usize,
}

impl SamplingPlan {
    pub fn new(seed: u64, chunk_len: usize) -> Result<Self> {
        if chunk_len == 0 {
            return Err(Error::InvalidConfig("chunk length must be positive".into()));
        }
        Ok(Self { seed, chunk_len })
    }

    fn chunks(&self, n: usize) -> Vec<(u64, usize)> {
        (0..n.div_ceil(self.chunk_len))
            .map(|i| (i as u64, self.chunk_len.min(n - i * self.chunk_len)))
            .collect()
    }

    fn run_chunk(&self, eps: f64, (i, len): (u64, usize)) -> Result<(LetterSequence, LetterSequence)> {
        sample_pairs(eps, len, &mut RngStream::new(self.seed, streams::SOURCE_CHUNK_BASE + i))
    }

    fn merge(parts: Vec<(LetterSequence, LetterSequence)>) -> (LetterSequence, LetterSequence) {
        let mut alice = Vec::new();
        let mut bob = Vec::new();
        for (a, b) in parts {
            alice.extend(a.0);
            bob.extend(b.0);
        }
        (LetterSequence(alice), LetterSequence(bob))
    }

    pub fn sample_sequential(&self, eps: f64, n: usize) -> Result<(LetterSequence, LetterSequence)> {
        let parts = self.chunks(n).into_iter().map(|ch| self.run_chunk(eps, ch)).collect::<Result<Vec<_>>>()?;
        Ok(Self::merge(parts))
    }

    #[cfg(feature = "parallel")]
    pub fn sample_parallel(&self, eps: f64, n: usize) -> Result<(LetterSequence, LetterSequence)> {
        use rayon::prelude::*;
        let parts = self.chunks(n).into_par_iter().map(|ch| self.run_chunk(eps, ch)).collect::<Result<Vec<_>>>()?;
        Ok(Self::merge(parts))
    }
}

/// All 24 permutations of the four letters in lexicographic order; entry 0
/// is the identity. `permutations()[i][k]` is the image of letter `k`.
pub fn permutations() -> [[u8; 4]; 24] {
    let mut out = [[0u8; 4]; 24];
    let mut i = 0;
    for a in 0..4u8 {
        for b in 0..4u8 {
            for c in 0..4u8 {
                for d in 0..4u8 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&x| !std::mem::replace(&mut seen[x as usize], true)) {
                        out[i] = p;
                        i += 1;
                    }
                }
            }
        }
    }
    out
}

/// Twirled records together with the per-position permutation log
/// (indices into [`permutations`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Twirled {
    pub alice: LetterSequence,
    pub bob: LetterSequence,
    pub permutations: Vec<u8>,
}

/// Draw one permutation index per position.
pub fn permutation_log(n: usize, rng: &mut RngStream) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..24u8)).collect()
}

/// Relabel one party's record with a permutation log. Both parties apply
/// the same log to their own records.
pub fn relabel(seq: &LetterSequence, log: &[u8]) -> Result<LetterSequence> {
    if log.len() != seq.len() || log.iter().any(|&p| p >= 24) {
        return Err(Error::InvalidConfig("permutation log does not match the records".into()));
    }
    let table = permutations();
    Ok(LetterSequence(
        seq.0.iter().zip(log).map(|(&l, &p)| Letter::ALL[table[p as usize][l.index()] as usize]).collect(),
    ))
}

/// Relabel both letters of every pair with one uniformly drawn permutation.
pub fn twirl(alice: &LetterSequence, bob: &LetterSequence, rng: &mut RngStream) -> Result<Twirled> {
    let log = permutation_log(alice.len(), rng);
    twirl_with(alice, bob, &log)
}

/// Apply a given permutation log.
pub fn twirl_with(alice: &LetterSequence, bob: &LetterSequence, log: &[u8]) -> Result<Twirled> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch { alice: alice.len(), bob: bob.len() });
    }
    Ok(Twirled { alice: relabel(alice, log)?, bob: relabel(bob, log)?, permutations: log.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::letters::pair_counts;
    use crate::quantum::binary_entropy;

    #[test]
    fn noise_model_range() {
        assert!(NoiseModel::new(1.0).is_err());
        assert!(NoiseModel::new(-0.1).is_err());
        assert!(NoiseModel::new(0.5).unwrap().is_nonseparable());
        assert!(!NoiseModel::new(2.0 / 3.0).unwrap().is_nonseparable());
    }

    #[test]
    fn noisy_singlet_endpoints_and_spectrum() {
        assert!(noisy_singlet(0.0).unwrap().trace_distance(&singlet().density()).unwrap() < 1e-15);
        let quarter = DensityOperator::maximally_mixed(4).unwrap();
        assert!(noisy_singlet(1.0).unwrap().trace_distance(&quarter).unwrap() < 1e-15);
        let ev = noisy_singlet(0.4).unwrap().eigenvalues();
        for (v, e) in ev.iter().zip([0.7, 0.1, 0.1, 0.1]) {
            assert!((v - e).abs() < 1e-12);
        }
        assert!((noisy_singlet(0.4).unwrap().entropy().unwrap() - 1.3568).abs() < 1e-3);
        assert!(noisy_singlet(1.2).is_err());
    }

    #[test]
    fn purification_reproduces_noisy_singlet() {
        for i in 0..10 {
            let eps = i as f64 / 10.0;
            let s = purification(eps).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
            let ab = s.density().partial_trace(&[0, 1]).unwrap();
            assert!(ab.trace_distance(&noisy_singlet(eps).unwrap()).unwrap() < 1e-12, "eps {eps}");
        }
    }

    #[test]
    fn zero_noise_purification_is_a_product() {
        let s = purification(0.0).unwrap();
        let prod = singlet().tensor(&singlet()).unwrap();
        assert!((s.inner(&prod).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_kets_overlap() {
        // ⟨s₁₂s₃₄|s₁₃s₂₄⟩ = ½; the relative phase i keeps |S⟩ normalized anyway.
        let ab = purification(0.0).unwrap();
        let ae = purification(1.0).unwrap();
        assert!((ab.inner(&ae) - c(0.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn conditioned_ancilla_has_rank_two() {
        for eps in [0.05, 0.2, 0.5] {
            let mut total = CMatrix::zeros(4, 4);
            for letter in Letter::ALL {
                let (p, rho) = conditioned_ancilla(eps, letter).unwrap();
                assert!((p - 0.25).abs() < 1e-12);
                let ev = rho.eigenvalues();
                assert!((ev[0] - (1.0 - eps / 2.0)).abs() < 1e-10);
                assert!((ev[1] - eps / 2.0).abs() < 1e-10);
                assert!(ev[2].abs() < 1e-10 && ev[3].abs() < 1e-10);
                assert!((rho.entropy().unwrap() - binary_entropy(eps / 2.0)).abs() < 1e-10);
                total += rho.matrix() * c(p, 0.0);
            }
            let whole = ancilla_state(eps).unwrap();
            assert!((total - whole.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_never_matches_letters() {
        let (a, b) = sample_pairs(0.0, 20_000, &mut RngStream::new(1, streams::SOURCE)).unwrap();
        assert!(a.0.iter().zip(&b.0).all(|(x, y)| x != y));
    }

    #[test]
    fn sampling_is_deterministic() {
        let x = sample_pairs(0.3, 1000, &mut RngStream::new(9, streams::SOURCE)).unwrap();
        let y = sample_pairs(0.3, 1000, &mut RngStream::new(9, streams::SOURCE)).unwrap();
        assert_eq!(x, y);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn chunked_sampling_is_schedule_independent() {
        let plan = SamplingPlan::new(11, 777).unwrap();
        assert_eq!(plan.sample_sequential(0.2, 10_000).unwrap(), plan.sample_parallel(0.2, 10_000).unwrap());
        assert_eq!(plan.sample_sequential(0.2, 10_000).unwrap().0.len(), 10_000);
    }

    #[test]
    fn permutation_table() {
        let table = permutations();
        assert_eq!(table[0], [0, 1, 2, 3]);
        let mut sorted = table.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
    }

    #[test]
    fn identity_twirl_is_a_no_op() {
        let (a, b) = sample_pairs(0.3, 100, &mut RngStream::new(2, streams::SOURCE)).unwrap();
        let t = twirl_with(&a, &b, &[0; 100]).unwrap();
        assert_eq!((t.alice, t.bob), (a, b));
    }

    #[test]
    fn twirl_preserves_coincidences() {
        let (a, b) = sample_pairs(0.3, 5000, &mut RngStream::new(3, streams::SOURCE)).unwrap();
        let t = twirl(&a, &b, &mut RngStream::new(3, streams::TWIRL)).unwrap();
        let same = |x: &LetterSequence, y: &LetterSequence| x.0.iter().zip(&y.0).filter(|(p, q)| p == q).count();
        assert_eq!(same(&a, &b), same(&t.alice, &t.bob));
        assert_eq!(t.permutations.len(), 5000);
    }

    #[test]
    fn twirl_rejects_mismatched_lengths() {
        let a: LetterSequence = "AB".parse().unwrap();
        let b: LetterSequence = "A".parse().unwrap();
        assert!(matches!(twirl(&a, &b, &mut RngStream::new(0, 0)), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn twirl_symmetrizes_a_biased_record() {
        // Every pair is (A, B) before twirling.
        let n = 1_000_000;
        let a = LetterSequence(vec![Letter::A; n]);
        let b = LetterSequence(vec![Letter::B; n]);
        let t = twirl(&a, &b, &mut RngStream::new(5, streams::TWIRL)).unwrap();
        let counts = pair_counts(&t.alice, &t.bob).unwrap();
        let p = 1.0 / 12.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (cell, &k) in counts.iter().enumerate() {
            let f = k as f64 / n as f64;
            if cell / 4 == cell % 4 {
                assert_eq!(k, 0);
            } else {
                assert!((f - p).abs() < 4.0 * sigma, "cell {cell}: {f}");
            }
        }
    }
}
