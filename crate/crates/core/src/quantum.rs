//! Dense complex linear algebra for states of at most eight qubits.
//!
//! Ordering convention, used everywhere in the crate: qubit `q` of an
//! `n`-qubit space is the `q`-th tensor factor counted from the left, so it
//! occupies bit `n - 1 - q` of a computational-basis index. `a.tensor(&b)`
//! therefore puts the qubits of `a` before those of `b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Structural tolerance for Hermiticity, trace and norm checks.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Slack allowed for slightly negative eigenvalues of a valid state.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Largest supported register.
pub const MAX_QUBITS: usize = 8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() || dim > (1 << MAX_QUBITS) {
        return Err(Error::NotQubitDimension(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Pauli operators.
pub mod pauli {
    use super::{c, CMatrix};

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    /// The Pauli vector operator (σx, σy, σz).
    #[derive(Debug, Clone)]
    pub struct PauliVector {
        pub x: CMatrix,
        pub y: CMatrix,
        pub z: CMatrix,
    }

    impl PauliVector {
        pub fn new() -> Self {
            Self { x: sigma_x(), y: sigma_y(), z: sigma_z() }
        }

        /// `v · σ` for a real 3-vector.
        pub fn dot(&self, v: [f64; 3]) -> CMatrix {
            &self.x * c(v[0], 0.0) + &self.y * c(v[1], 0.0) + &self.z * c(v[2], 0.0)
        }

        pub fn components(&self) -> [&CMatrix; 3] {
            [&self.x, &self.y, &self.z]
        }
    }

    impl Default for PauliVector {
        fn default() -> Self {
            Self::new()
        }
    }
}

/// A square operator on a qubit register. No positivity or trace
/// constraints; this is the carrier for effects, unnormalized conditioned
/// states and linear-inversion estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: CMatrix,
    qubits: usize,
}

impl Operator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let qubits = qubit_count(m.nrows())?;
        Ok(Self { m, qubits })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_matrix(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_matrix(CMatrix::zeros(dim, dim))
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &PureState, b: &PureState) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
        }
        Self::from_matrix(&a.amps * b.amps.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { m: &self.m * c(factor, 0.0), qubits: self.qubits }
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint(), qubits: self.qubits }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m + &other.m, qubits: self.qubits })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m - &other.m, qubits: self.qubits })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { m: &self.m * &other.m, qubits: self.qubits })
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    /// Largest entry of `|A - A†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::from_matrix(self.m.kronecker(&other.m))
    }

    /// Trace over every qubit not listed in `keep`. The kept qubits appear in
    /// ascending index order in the result.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let split = Split::new(self.qubits, keep)?;
        let dk = split.kept_dim();
        let dt = split.traced_dim();
        let mut out = CMatrix::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..dt {
                    acc += self.m[(split.index(i, t), split.index(j, t))];
                }
                out[(i, j)] = acc;
            }
        }
        Self::from_matrix(out)
    }

    /// Real eigenvalues of a Hermitian operator, in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let deviation = self.hermitian_deviation();
        if deviation > STRUCTURE_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        // Symmetrize so round-off does not leak into the solver.
        let herm = (&self.m + self.m.adjoint()) * c(0.5, 0.0);
        let mut values: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }

    /// Number of eigenvalues above `tol` after normalizing to unit trace.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        let tr = self.trace().re;
        let values = self.eigenvalues()?;
        Ok(values.iter().filter(|&&v| v / tr > tol).count())
    }
}

/// Index bookkeeping for splitting a register into kept and traced qubits.
struct Split {
    qubits: usize,
    keep: Vec<usize>,
    traced: Vec<usize>,
}

impl Split {
    fn new(qubits: usize, keep: &[usize]) -> Result<Self> {
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() || sorted.len() != keep.len() || sorted.iter().any(|&q| q >= qubits) {
            return Err(Error::InvalidSubsystems { keep: keep.to_vec(), qubits });
        }
        let traced = (0..qubits).filter(|q| !sorted.contains(q)).collect();
        Ok(Self { qubits, keep: sorted, traced })
    }

    fn kept_dim(&self) -> usize {
        1 << self.keep.len()
    }

    fn traced_dim(&self) -> usize {
        1 << self.traced.len()
    }

    fn index(&self, kept: usize, traced: usize) -> usize {
        scatter(self.qubits, &self.keep, kept) | scatter(self.qubits, &self.traced, traced)
    }
}

/// Spread the bits of `value` (most significant first) onto the listed qubits.
fn scatter(qubits: usize, positions: &[usize], value: usize) -> usize {
    let k = positions.len();
    positions.iter().enumerate().fold(0, |acc, (j, &q)| {
        let bit = (value >> (k - 1 - j)) & 1;
        acc | (bit << (qubits - 1 - q))
    })
}

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
    qubits: usize,
}

impl PureState {
    pub fn new(amps: CVector) -> Result<Self> {
        let qubits = qubit_count(amps.len())?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps, qubits })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        let mut amps = CVector::zeros(dim);
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, got: index });
        }
        amps[index] = c(1.0, 0.0);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::new(self.amps.kronecker(&other.amps))
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { op: Operator::outer(self, self).expect("same dimension") }
    }

    /// Apply single-qubit operators to the listed qubits, returning the
    /// (generally unnormalized) image vector.
    pub fn apply_local(&self, ops: &[(usize, &CMatrix)]) -> Result<CVector> {
        let n = self.qubits;
        let mut v = self.amps.clone();
        for &(q, op) in ops {
            if q >= n {
                return Err(Error::InvalidSubsystems { keep: vec![q], qubits: n });
            }
            if op.nrows() != 2 || op.ncols() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: op.nrows() });
            }
            let mask = 1 << (n - 1 - q);
            let mut next = CVector::zeros(v.len());
            for i in 0..v.len() {
                if i & mask != 0 {
                    continue;
                }
                let (a0, a1) = (v[i], v[i | mask]);
                next[i] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
                next[i | mask] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
            }
            v = next;
        }
        Ok(v)
    }
}

/// `tr_rest[(E ⊗ 1)|ψ⟩⟨ψ|]`, where `E` is a product of single-qubit operators
/// acting on qubits outside `keep`. The result is unnormalized: its trace is
/// the probability `⟨ψ|E|ψ⟩`.
pub fn conditioned_reduction(psi: &PureState, local: &[(usize, &CMatrix)], keep: &[usize]) -> Result<Operator> {
    let split = Split::new(psi.qubits(), keep)?;
    if let Some(&(q, _)) = local.iter().find(|(q, _)| split.keep.contains(q)) {
        return Err(Error::InvalidSubsystems { keep: vec![q], qubits: psi.qubits() });
    }
    let phi = psi.apply_local(local)?;
    let amps = psi.amplitudes();
    let dk = split.kept_dim();
    let dt = split.traced_dim();
    // rows: traced index, cols: kept index
    let mut phi_m = CMatrix::zeros(dt, dk);
    let mut psi_m = CMatrix::zeros(dt, dk);
    for t in 0..dt {
        for k in 0..dk {
            let idx = split.index(k, t);
            phi_m[(t, k)] = phi[idx];
            psi_m[(t, k)] = amps[idx];
        }
    }
    Operator::from_matrix(phi_m.transpose() * psi_m.conjugate())
}

/// A positive, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::from_operator(Operator::from_matrix(m)?)
    }

    pub fn from_operator(op: Operator) -> Result<Self> {
        let deviation = op.hermitian_deviation();
        if deviation > STRUCTURE_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = op.trace().re;
        if (trace - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let lowest = op.eigenvalues()?.last().copied().unwrap_or(0.0);
        if lowest < -POSITIVITY_TOL {
            return Err(Error::NegativeEigenvalue { value: lowest });
        }
        Ok(Self { op })
    }

    /// Normalize a positive operator with nonzero trace.
    pub fn normalized(op: &Operator) -> Result<Self> {
        let trace = op.trace().re;
        if trace <= 0.0 {
            return Err(Error::BadTrace { trace });
        }
        Self::from_operator(op.scaled(1.0 / trace))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let op = Operator::identity(dim)?;
        Ok(Self { op: op.scaled(1.0 / dim as f64) })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn qubits(&self) -> usize {
        self.op.qubits()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: self.op.tensor(&other.op).expect("qubit dimensions compose") }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        Ok(Self { op: self.op.partial_trace(keep)? })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.op.eigenvalues().expect("density operators are Hermitian")
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(&self.eigenvalues())
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        trace_distance(&self.op, &other.op)
    }

    /// Expectation value `tr[ρ A]`.
    pub fn expectation(&self, a: &CMatrix) -> Result<C64> {
        if a.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.nrows() });
        }
        Ok((self.matrix() * a).trace())
    }
}

/// `½ ‖a − b‖₁` for Hermitian operators.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    let diff = a.sub(b)?;
    Ok(0.5 * diff.eigenvalues()?.iter().map(|v| v.abs()).sum::<f64>())
}

/// `−Σ λ log₂ λ` over a spectrum; values in `[−1e-10, 0]` count as zero.
pub fn von_neumann_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &v in eigenvalues {
        if v < -POSITIVITY_TOL {
            return Err(Error::NegativeEigenvalue { value: v });
        }
        s -= xlog2x(v.max(0.0));
    }
    Ok(s)
}

/// `x log₂ x` with `0 log 0 = 0`.
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon entropy of a probability vector, in bits.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

/// Binary entropy `h₂(p)`.
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singlet() -> PureState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_slice(&[c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn pauli_algebra() {
        let s = pauli::PauliVector::new();
        let id = pauli::identity();
        for a in s.components() {
            assert!((a * a - &id).norm() < 1e-15);
        }
        let [x, y, z] = s.components();
        for (a, b) in [(x, y), (y, z), (z, x)] {
            assert!((a * b + b * a).norm() < 1e-15);
        }
    }

    #[test]
    fn singlet_reduces_to_maximally_mixed() {
        let rho = singlet().density();
        let half = DensityOperator::maximally_mixed(2).unwrap();
        for keep in [[0], [1]] {
            let red = rho.partial_trace(&keep).unwrap();
            assert!(red.trace_distance(&half).unwrap() < 1e-12);
        }
    }

    #[test]
    fn singlet_tensor_singlet_layout() {
        let s = singlet();
        let ss = s.tensor(&s).unwrap();
        assert_eq!(ss.dim(), 16);
        // |01⟩|01⟩ sits at binary 0101.
        assert!((ss.amplitudes()[0b0101] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((ss.amplitudes()[0b0110] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mixed_tensor_mixed() {
        let half = DensityOperator::maximally_mixed(2).unwrap();
        let quarter = DensityOperator::maximally_mixed(4).unwrap();
        assert!(half.tensor(&half).trace_distance(&quarter).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_picks_the_right_factor() {
        let zero = PureState::basis(2, 0).unwrap().density();
        let one = PureState::basis(2, 1).unwrap().density();
        let prod = zero.tensor(&one).tensor(&zero);
        assert!(prod.partial_trace(&[1]).unwrap().trace_distance(&one).unwrap() < 1e-15);
        assert!(prod.partial_trace(&[0, 2]).unwrap().trace_distance(&zero.tensor(&zero)).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_index_sets() {
        let rho = singlet().density();
        assert!(rho.partial_trace(&[]).is_err());
        assert!(rho.partial_trace(&[2]).is_err());
        assert!(rho.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn spectra_and_entropies() {
        let pure = PureState::basis(4, 2).unwrap().density();
        let ev = pure.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && ev[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(pure.entropy().unwrap().abs() < 1e-12);

        let quarter = DensityOperator::maximally_mixed(4).unwrap();
        assert!(quarter.eigenvalues().iter().all(|v| (v - 0.25).abs() < 1e-12));
        assert!((DensityOperator::maximally_mixed(2).unwrap().entropy().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_reject_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let op = Operator::from_matrix(m).unwrap();
        assert!(matches!(op.eigenvalues(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn entropy_rejects_clearly_negative_spectra() {
        assert!(von_neumann_entropy(&[1.0, -1e-11]).is_ok());
        assert!(von_neumann_entropy(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn density_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(DensityOperator::new(bad_trace), Err(Error::BadTrace { .. })));
        let negative = CMatrix::from_diagonal(&CVector::from_column_slice(&[c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(DensityOperator::new(negative), Err(Error::NegativeEigenvalue { .. })));
        assert!(matches!(Operator::zeros(3), Err(Error::NotQubitDimension(3))));
    }

    #[test]
    fn conditioned_reduction_matches_dense_route() {
        // Project qubit 0 of the singlet onto |0⟩: qubit 1 is left in |1⟩ with weight ½.
        let s = singlet();
        let p0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let red = conditioned_reduction(&s, &[(0, &p0)], &[1]).unwrap();
        assert!((red.trace().re - 0.5).abs() < 1e-15);
        assert!((red.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);

        let dense = Operator::from_matrix(p0.kronecker(&pauli::identity()) * s.density().matrix())
            .unwrap()
            .partial_trace(&[1])
            .unwrap();
        assert!((dense.matrix() - red.matrix()).norm() < 1e-15);
        assert!(conditioned_reduction(&s, &[(1, &p0)], &[1]).is_err());
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }
}
