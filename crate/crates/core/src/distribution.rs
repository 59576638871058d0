//! Joint outcome distributions of two parties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::xlog2x;

/// Entries below this are treated as round-off and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
pub const SUM_TOL: f64 = 1e-9;

/// A `rows × cols` matrix of nonnegative probabilities summing to one.
/// Rows index the first party's outcome, columns the second's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl JointDistribution {
    /// Entries in row-major order. Values in `[-1e-12, 0)` are clamped to 0.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: entries.len() });
        }
        for e in entries.iter_mut() {
            if *e < -CLAMP_TOL || e.is_nan() {
                return Err(Error::NegativeProbability(*e));
            }
            if *e < 0.0 {
                *e = 0.0;
            }
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::BadNormalization(total));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Relative frequencies from a count table.
    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InsufficientData("empty count table".into()));
        }
        Self::new(rows, cols, counts.iter().map(|&n| n as f64 / total as f64).collect())
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        let p = 1.0 / (rows * cols) as f64;
        Self { rows, cols, entries: vec![p; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `p_k· = Σ_l p_kl`.
    pub fn row_marginals(&self) -> Vec<f64> {
        self.entries.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    /// `p_·l = Σ_k p_kl`.
    pub fn col_marginals(&self) -> Vec<f64> {
        (0..self.cols).map(|l| (0..self.rows).map(|k| self.get(k, l)).sum()).collect()
    }

    /// Probability mass on the diagonal.
    pub fn diagonal_mass(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).sum()
    }

    /// `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.entries.len(), got: other.entries.len() });
        }
        Ok(0.5 * self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// Product of the two marginals.
    pub fn independent_part(&self) -> Self {
        let (r, c) = (self.row_marginals(), self.col_marginals());
        let entries = r.iter().flat_map(|a| c.iter().map(move |b| a * b)).collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }
}

/// `Σ p_kl log₂(p_kl / (p_k· p_·l))`, zero cells dropped.
pub fn shannon_mutual_information(p: &JointDistribution) -> f64 {
    let r = p.row_marginals();
    let c = p.col_marginals();
    let mut info = 0.0;
    for k in 0..p.rows() {
        for l in 0..p.cols() {
            let pkl = p.get(k, l);
            if pkl > 0.0 {
                info += xlog2x(pkl) - pkl * (r[k] * c[l]).log2();
            }
        }
    }
    info
}
