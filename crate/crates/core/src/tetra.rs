//! The tetrahedron and six-state measurements, Born-rule joint
//! probabilities, and linear-inversion tomography.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::quantum::{c, pauli, CMatrix, DensityOperator, Operator, POSITIVITY_TOL, STRUCTURE_TOL};

/// The four unit vectors pointing from the centre of a cube to four
/// nonadjacent corners. Pairwise dot products are −1/3.
pub fn tetrahedron_vectors() -> [[f64; 3]; 4] {
    let r = 1.0 / 3.0_f64.sqrt();
    [[r, r, r], [r, -r, -r], [-r, r, -r], [-r, -r, r]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PomKind {
    Tetra,
    Six,
}

impl std::fmt::Display for PomKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PomKind::Tetra => "tetra",
            PomKind::Six => "six",
        })
    }
}

impl std::str::FromStr for PomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tetra" => Ok(PomKind::Tetra),
            "six" => Ok(PomKind::Six),
            other => Err(Error::InvalidConfig(format!("unknown measurement {other:?}"))),
        }
    }
}

/// A single-qubit probability operator measurement: positive 2×2 effects
/// summing to the identity.
#[derive(Debug, Clone)]
pub struct Pom {
    kind: PomKind,
    effects: Vec<CMatrix>,
}

impl Pom {
    pub fn new(kind: PomKind, effects: Vec<CMatrix>) -> Result<Self> {
        let mut sum = CMatrix::zeros(2, 2);
        for e in &effects {
            let op = Operator::from_matrix(e.clone())?;
            if op.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: op.dim() });
            }
            if let Some(&low) = op.eigenvalues()?.last() {
                if low < -POSITIVITY_TOL {
                    return Err(Error::NegativeEigenvalue { value: low });
                }
            }
            sum += e;
        }
        let deviation = (sum - pauli::identity()).camax();
        if deviation > STRUCTURE_TOL {
            return Err(Error::BadNormalization(1.0 + deviation));
        }
        Ok(Self { kind, effects })
    }

    /// `(1 + v·σ) w` for each Bloch vector `v`.
    fn from_bloch(kind: PomKind, vectors: &[[f64; 3]], weight: f64) -> Self {
        let sigma = pauli::PauliVector::new();
        let effects = vectors
            .iter()
            .map(|&v| (pauli::identity() + sigma.dot(v)) * c(weight, 0.0))
            .collect();
        Self::new(kind, effects).expect("Bloch-vector POMs are complete")
    }

    pub fn kind(&self) -> PomKind {
        self.kind
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn for_kind(kind: PomKind) -> Self {
        match kind {
            PomKind::Tetra => tetra_pom(),
            PomKind::Six => six_state_pom(),
        }
    }
}

/// Four half-projectors `P_k = ¼(1 + t_k·σ)`.
pub fn tetra_pom() -> Pom {
    Pom::from_bloch(PomKind::Tetra, &tetrahedron_vectors(), 0.25)
}

/// Six effects `⅙(1 ± e_i·σ)` ordered +x, −x, +y, −y, +z, −z.
pub fn six_state_pom() -> Pom {
    let axes = [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    Pom::from_bloch(PomKind::Six, &axes, 1.0 / 6.0)
}

/// `p_kl = tr[ρ (A_k ⊗ B_l)]` for a two-qubit state.
pub fn joint_distribution(rho: &DensityOperator, pom_a: &Pom, pom_b: &Pom) -> Result<JointDistribution> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let mut entries = Vec::with_capacity(pom_a.len() * pom_b.len());
    for a in pom_a.effects() {
        for b in pom_b.effects() {
            entries.push(rho.expectation(&a.kronecker(b))?.re);
        }
    }
    JointDistribution::new(pom_a.len(), pom_b.len(), entries)
}

/// Linear-inversion estimate of a two-qubit state. Positivity is not
/// enforced; frequencies from finite samples can give a slightly
/// non-positive operator.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub estimate: Operator,
    pub min_eigenvalue: f64,
    pub is_positive: bool,
}

impl Reconstruction {
    pub fn into_density(self) -> Option<DensityOperator> {
        if self.is_positive {
            DensityOperator::from_operator(self.estimate).ok()
        } else {
            None
        }
    }
}

/// `ρ = Σ_kl (6P_k − 1) p_kl (6P_l − 1)` from tetrahedron joint probabilities.
pub fn reconstruct_state(p: &JointDistribution) -> Result<Reconstruction> {
    if p.rows() != 4 || p.cols() != 4 {
        return Err(Error::DimensionMismatch { expected: 16, got: p.rows() * p.cols() });
    }
    let pom = tetra_pom();
    let duals: Vec<CMatrix> = pom.effects().iter().map(|e| e * c(6.0, 0.0) - pauli::identity()).collect();
    let mut rho = DMatrix::zeros(4, 4);
    for (k, dk) in duals.iter().enumerate() {
        for (l, dl) in duals.iter().enumerate() {
            rho += dk.kronecker(dl) * c(p.get(k, l), 0.0);
        }
    }
    let estimate = Operator::from_matrix(rho)?;
    let min_eigenvalue = estimate.eigenvalues()?.last().copied().unwrap_or(0.0);
    Ok(Reconstruction { estimate, min_eigenvalue, is_positive: min_eigenvalue >= -POSITIVITY_TOL })
}
