//! Source acceptance from a sacrificed tomography sample.

use serde::{Deserialize, Serialize};

use crate::distribution::{JointDistribution, SUM_TOL};
use crate::error::{Error, Result};
use crate::source::noisy_joint_distribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptancePolicy {
    /// Largest tolerated noise estimate.
    pub epsilon_max: f64,
    /// Multiplier `c` of the distance bound `c·√(16/M)`.
    pub multiplier: f64,
    /// Smallest sample that yields a verdict.
    pub min_sample: usize,
}

impl Default for AcceptancePolicy {
    fn default() -> Self {
        Self { epsilon_max: 0.3, multiplier: 4.0, min_sample: 1000 }
    }
}

impl AcceptancePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon_max) {
            return Err(Error::InvalidConfig(format!("epsilon_max {} outside [0, 1]", self.epsilon_max)));
        }
        if !(self.multiplier > 0.0) || !self.multiplier.is_finite() {
            return Err(Error::InvalidConfig(format!("multiplier {} must be positive", self.multiplier)));
        }
        Ok(())
    }

    pub fn distance_bound(&self, sample: usize) -> f64 {
        self.multiplier * (16.0 / sample as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    Insufficient,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub epsilon_hat: f64,
    /// The raw estimate left `[0, 1]`: the data do not fit the noisy-singlet
    /// family.
    pub clamped: bool,
}

/// `ε̂ = 4 Σ_k f_kk`, clamped to `[0, 1]`. `freqs` is row-major over
/// (Alice letter, Bob letter).
pub fn estimate_epsilon(freqs: &[f64]) -> Result<EpsilonEstimate> {
    if freqs.len() != 16 {
        return Err(Error::DimensionMismatch { expected: 16, got: freqs.len() });
    }
    let total: f64 = freqs.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::BadNormalization(total));
    }
    let raw = 4.0 * (0..4).map(|k| freqs[5 * k]).sum::<f64>();
    let epsilon_hat = raw.clamp(0.0, 1.0);
    Ok(EpsilonEstimate { epsilon_hat, clamped: epsilon_hat != raw })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAcceptance {
    pub sample_size: usize,
    pub frequencies: Vec<f64>,
    pub epsilon_hat: f64,
    pub clamped: bool,
    /// Total-variation distance to the noisy-singlet table at `ε̂`.
    pub distance: f64,
    pub distance_bound: f64,
    pub epsilon_max: f64,
    pub verdict: Verdict,
}

pub fn acceptance_test(freqs: &[f64], sample: usize, policy: &AcceptancePolicy) -> Result<SourceAcceptance> {
    policy.validate()?;
    let est = estimate_epsilon(freqs)?;
    let observed = JointDistribution::new(4, 4, freqs.to_vec())?;
    let distance = observed.total_variation(&noisy_joint_distribution(est.epsilon_hat)?)?;
    let bound = policy.distance_bound(sample.max(1));
    let verdict = if sample < policy.min_sample {
        Verdict::Insufficient
    } else if est.epsilon_hat <= policy.epsilon_max && distance <= bound {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok(SourceAcceptance {
        sample_size: sample,
        frequencies: freqs.to_vec(),
        epsilon_hat: est.epsilon_hat,
        clamped: est.clamped,
        distance,
        distance_bound: bound,
        epsilon_max: policy.epsilon_max,
        verdict,
    })
}

/// Same, from a 16-cell count table.
pub fn acceptance_from_counts(counts: &[u64; 16], policy: &AcceptancePolicy) -> Result<SourceAcceptance> {
    let m: u64 = counts.iter().sum();
    if m == 0 {
        return Err(Error::InsufficientData("empty tomography sample".into()));
    }
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    acceptance_test(&freqs, m as usize, policy)
}
