//! Dense pure and mixed states on small qubit registers.
//!
//! Basis index convention: qubit 0 is the most significant bit, so the
//! amplitude of `|q0 q1 ... q(n-1)>` sits at `sum_q q_q * 2^(n-1-q)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest register any constructor accepts. Distillation itself only ever
/// needs five qubits; the extra one is headroom for intermediate math.
pub const MAX_QUBITS: usize = 6;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_FLOOR: f64 = -1e-9;
const ENTROPY_CLIP: f64 = 1e-12;

/// Eigenvalues of a Hermitian matrix, unordered.
///
/// nalgebra's complex QR sweep occasionally underflows to NaN on nearly
/// rank-1 inputs. When that happens, fall back to the real symmetric
/// embedding [[Re, -Im], [Im, Re]], whose spectrum is each eigenvalue twice.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
    if ev.iter().all(|x| x.is_finite()) {
        return ev;
    }
    let d = m.nrows();
    let big = DMatrix::<f64>::from_fn(2 * d, 2 * d, |i, j| {
        let z = m[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut all: Vec<f64> = big.symmetric_eigenvalues().iter().cloned().collect();
    all.sort_by(f64::total_cmp);
    all.into_iter().step_by(2).collect()
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidQubitCount(n));
    }
    if n > MAX_QUBITS {
        return Err(Error::RegisterTooLarge { n, max: MAX_QUBITS });
    }
    Ok(())
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not a power of two >= 2"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    check_qubits(n)?;
    Ok(n)
}

/// A normalized pure state of `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized to within `1e-12`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let amplitudes = CVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let mut amplitudes = CVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::NotNormalized(norm));
        }
        amplitudes.unscale_mut(norm);
        Ok(Self { n_qubits, amplitudes })
    }

    pub(crate) fn from_vector_normalizing(v: CVector) -> Result<Self> {
        Self::normalized(v.as_slice().to_vec())
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// `|0...0>`.
    pub fn zeros(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n_qubits = self.n_qubits + other.n_qubits;
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    pub fn tensor_power(&self, copies: usize) -> Result<StateVector> {
        if copies == 0 {
            return Err(Error::InvalidParameter("tensor power of zero copies".into()));
        }
        let mut out = self.clone();
        for _ in 1..copies {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// Applies a unitary given as a dense matrix. The result is renormalized
    /// to absorb roundoff.
    pub fn apply(&self, unitary: &CMatrix) -> Result<StateVector> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Self::from_vector_normalizing(unitary * &self.amplitudes)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            n_qubits: self.n_qubits,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// A Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-10), unit trace (1e-10) and positivity
    /// (eigenvalues >= -1e-9).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        let n_qubits = qubits_for_dim(matrix.nrows())?;
        let herm_err = (&matrix - matrix.adjoint()).camax();
        if herm_err > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max deviation {herm_err:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}")));
        }
        let rho = Self { n_qubits, matrix };
        let min_eig = rho.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        let n_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { n_qubits, matrix }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    /// Convex combination `sum_i w_i rho_i`; weights must be nonnegative and sum to 1.
    pub fn mixture(terms: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut matrix = CMatrix::zeros(dim, dim);
        let mut total = 0.0;
        for (w, rho) in terms {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
            }
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!("negative mixture weight {w}")));
            }
            total += w;
            matrix += rho.matrix.scale(*w);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        Ok(Self { n_qubits: first.1.n_qubits, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = hermitian_eigenvalues(&self.matrix);
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let n_qubits = self.n_qubits + other.n_qubits;
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn tensor_power(&self, copies: usize) -> Result<DensityOperator> {
        if copies == 0 {
            return Err(Error::InvalidParameter("tensor power of zero copies".into()));
        }
        let mut out = self.clone();
        for _ in 1..copies {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, unitary: &CMatrix) -> Result<DensityOperator> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        let m = unitary * &self.matrix * unitary.adjoint();
        Ok(Self::from_matrix_unchecked(hermitize(m)))
    }

    /// Reduced state on the qubits in `keep`, tracing out the rest.
    pub fn partial_trace(&self, keep: &SubsystemIndex) -> Result<DensityOperator> {
        keep.check_within(self.n_qubits)?;
        let n = self.n_qubits;
        let k = keep.len();
        if k == n {
            return Ok(self.clone());
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(*q)).collect();
        let embed = |bits: usize, qubits: &[usize]| -> usize {
            let m = qubits.len();
            qubits
                .iter()
                .enumerate()
                .filter(|(pos, _)| bits >> (m - 1 - pos) & 1 == 1)
                .map(|(_, &q)| 1usize << (n - 1 - q))
                .sum()
        };
        let kept_offsets: Vec<usize> = (0..1 << k).map(|a| embed(a, keep.qubits())).collect();
        let traced_offsets: Vec<usize> =
            (0..1 << traced.len()).map(|r| embed(r, &traced)).collect();
        let mut out = CMatrix::zeros(1 << k, 1 << k);
        for (a, &ia) in kept_offsets.iter().enumerate() {
            for (b, &ib) in kept_offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &r in &traced_offsets {
                    acc += self.matrix[(ia | r, ib | r)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self { n_qubits: k, matrix: out })
    }

    /// `<psi|rho|psi>`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re)
    }

    /// `-sum lambda ln lambda` in nats, ignoring eigenvalues below 1e-12.
    pub fn von_neumann_entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > ENTROPY_CLIP)
            .map(|l| -l * l.ln())
            .sum::<f64>()
            .max(0.0)
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Bloch vector `(Tr rho X, Tr rho Y, Tr rho Z)` of a single qubit.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.n_qubits != 1 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.dim() });
        }
        let m = &self.matrix;
        Ok([2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re])
    }

    /// Single-qubit state with the given Bloch vector (norm at most 1).
    pub fn from_bloch(r: [f64; 3]) -> Result<DensityOperator> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("Bloch vector length {len} > 1")));
        }
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 * (1.0 + r[2]), 0.0),
                C64::new(0.5 * r[0], -0.5 * r[1]),
                C64::new(0.5 * r[0], 0.5 * r[1]),
                C64::new(0.5 * (1.0 - r[2]), 0.0),
            ],
        );
        Ok(Self { n_qubits: 1, matrix: m })
    }
}

/// `(M + M^dagger) / 2`.
pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj).scale(0.5)
}

/// A strictly increasing list of qubit positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsystemIndex(Vec<usize>);

impl SubsystemIndex {
    pub fn new(qubits: Vec<usize>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidSubsystem("empty subsystem".into()));
        }
        if qubits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubsystem(format!(
                "{qubits:?} is not strictly increasing"
            )));
        }
        Ok(Self(qubits))
    }

    /// Sorts and deduplicates-checks an arbitrary list.
    pub fn from_unsorted(mut qubits: Vec<usize>) -> Result<Self> {
        qubits.sort_unstable();
        Self::new(qubits)
    }

    pub fn single(q: usize) -> Self {
        Self(vec![q])
    }

    pub fn qubits(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.binary_search(&q).is_ok()
    }

    pub fn check_within(&self, n_qubits: usize) -> Result<()> {
        match self.0.last() {
            Some(&q) if q >= n_qubits => Err(Error::InvalidSubsystem(format!(
                "qubit {q} out of range for {n_qubits} qubits"
            ))),
            _ => Ok(()),
        }
    }

    /// First shared qubit, if any.
    pub fn overlap(&self, other: &SubsystemIndex) -> Option<usize> {
        self.0.iter().copied().find(|q| other.contains(*q))
    }

    pub fn union(&self, other: &SubsystemIndex) -> SubsystemIndex {
        let mut all: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        all.sort_unstable();
        all.dedup();
        SubsystemIndex(all)
    }

    /// All subsystems of size `k` in lexicographic order.
    pub fn all_of_size(n_qubits: usize, k: usize) -> Vec<SubsystemIndex> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<SubsystemIndex>) {
            if cur.len() == k {
                out.push(SubsystemIndex(cur.clone()));
                return;
            }
            for q in start..n {
                if n - q < k - cur.len() {
                    break;
                }
                cur.push(q);
                rec(q + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if k >= 1 && k <= n_qubits {
            rec(0, n_qubits, k, &mut Vec::with_capacity(k), &mut out);
        }
        out
    }

    /// Hyphen-joined label such as `0-2-3`.
    pub fn label(&self) -> String {
        self.0.iter().map(|q| q.to_string()).collect::<Vec<_>>().join("-")
    }
}

impl std::fmt::Display for SubsystemIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}}}", self.0.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(","))
    }
}
