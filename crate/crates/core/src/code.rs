//! The five-qubit perfect code: generators, code-space projector, logical
//! basis, encoding and syndrome statistics.
//!
//! Logical frame: `|0_L> ∝ P|00000>`, `|1_L> = XXXXX |0_L>`, with
//! `X_L = XXXXX` and `Z_L = ZZZZZ`. Any other decoder differs from this frame
//! by a fixed single-qubit Clifford on the logical qubit. Every figure of merit
//! downstream is the T-fidelity, a maximum over the single-qubit Clifford
//! orbit, so it is unaffected by that choice.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::qubit::{CMatrix, DensityOperator, StateVector, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerCode {
    n_physical: usize,
    generators: Vec<PauliString>,
    logical_x: PauliString,
    logical_z: PauliString,
}

/// Rank of a set of Pauli strings over GF(2) in the symplectic representation.
pub(crate) fn symplectic_rank(paulis: &[PauliString]) -> usize {
    let n = paulis.first().map_or(0, |p| p.n_qubits());
    let mut rows: Vec<u64> = paulis
        .iter()
        .map(|p| (p.x_bits() as u64) << n | p.z_bits() as u64)
        .collect();
    let mut rank = 0;
    for bit in (0..2 * n).rev() {
        let mask = 1u64 << bit;
        if let Some(pos) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) {
            rows.swap(rank, pos);
            let pivot = rows[rank];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && *row & mask != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rank
}

impl StabilizerCode {
    /// Validates commutation, independence and the logical operator algebra.
    pub fn new(
        generators: Vec<PauliString>,
        logical_x: PauliString,
        logical_z: PauliString,
    ) -> Result<Self> {
        let n = logical_x.n_qubits();
        if generators.iter().chain([&logical_z]).any(|g| g.n_qubits() != n) {
            return Err(Error::InvalidCode("operators act on different registers".into()));
        }
        if generators.iter().chain([&logical_x, &logical_z]).any(|g| !g.is_hermitian()) {
            return Err(Error::InvalidCode("operators must be Hermitian".into()));
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b) {
                    return Err(Error::InvalidCode(format!("{a} and {b} anticommute")));
                }
            }
            if !a.commutes_with(&logical_x) || !a.commutes_with(&logical_z) {
                return Err(Error::InvalidCode(format!("{a} does not commute with the logicals")));
            }
        }
        if symplectic_rank(&generators) != generators.len() {
            return Err(Error::InvalidCode("generators are not independent".into()));
        }
        if logical_x.commutes_with(&logical_z) {
            return Err(Error::InvalidCode("logical X and Z must anticommute".into()));
        }
        Ok(Self { n_physical: n, generators, logical_x, logical_z })
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn logical_x(&self) -> &PauliString {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &PauliString {
        &self.logical_z
    }

    pub fn n_logical(&self) -> usize {
        self.n_physical - self.generators.len()
    }

    /// Elements of the stabilizer group, signed, in subset order of the generators.
    pub fn stabilizer_group(&self) -> Vec<PauliString> {
        let k = self.generators.len();
        (0..1usize << k)
            .map(|mask| {
                (0..k)
                    .filter(|i| mask >> i & 1 == 1)
                    .fold(PauliString::identity(self.n_physical), |acc, i| acc * self.generators[i])
            })
            .collect()
    }

    /// Minimum weight of a Pauli that commutes with every generator but is not
    /// itself a stabilizer (up to sign). Brute force over all `4^n` strings.
    pub fn distance(&self) -> u32 {
        let group: Vec<PauliString> = self.stabilizer_group().iter().map(|p| p.unsigned()).collect();
        let n = self.n_physical;
        (1..1usize << (2 * n))
            .map(|idx| PauliString::from_index(n, idx))
            .filter(|p| self.generators.iter().all(|g| g.commutes_with(p)))
            .filter(|p| !group.contains(p))
            .map(|p| p.weight())
            .min()
            .unwrap_or(0)
    }
}

/// Stabilizer group generated by `XZZXI, IXZZX, XIXZZ, ZXIXZ` with
/// `X_L = XXXXX`, `Z_L = ZZZZZ`.
pub fn five_qubit_code() -> StabilizerCode {
    let p = |s: &str| PauliString::parse(s).expect("static label");
    StabilizerCode::new(
        vec![p("XZZXI"), p("IXZZX"), p("XIXZZ"), p("ZXIXZ")],
        p("XXXXX"),
        p("ZZZZZ"),
    )
    .expect("the five-qubit code is valid")
}

/// Orthogonal projector onto the code space, `prod_i (I + g_i) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeProjector {
    matrix: CMatrix,
    rank: usize,
}

impl CodeProjector {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `Tr(P rho)`.
    pub fn overlap(&self, rho: &DensityOperator) -> f64 {
        (&self.matrix * rho.matrix()).trace().re
    }
}

fn half_identity_plus(g: &PauliString, sign: f64) -> CMatrix {
    let dim = 1usize << g.n_qubits();
    (CMatrix::identity(dim, dim) + g.to_matrix().scale(sign)).scale(0.5)
}

pub fn code_projector(code: &StabilizerCode) -> Result<CodeProjector> {
    let gens = code.generators();
    for (i, a) in gens.iter().enumerate() {
        if gens[i + 1..].iter().any(|b| !a.commutes_with(b)) {
            return Err(Error::InvalidCode("generators do not commute".into()));
        }
    }
    let dim = 1usize << code.n_physical();
    let matrix = gens
        .iter()
        .fold(CMatrix::identity(dim, dim), |acc, g| acc * half_identity_plus(g, 1.0));
    let rank = matrix.trace().re.round() as usize;
    Ok(CodeProjector { matrix, rank })
}

/// `(|0_L>, |1_L>)` in the frame described in the module docs.
pub fn logical_basis(code: &StabilizerCode) -> Result<(StateVector, StateVector)> {
    let projector = code_projector(code)?;
    if code.n_logical() != 1 || projector.rank() != 2 {
        return Err(Error::InvalidCode("logical basis needs a single logical qubit".into()));
    }
    let zero = StateVector::zeros(code.n_physical())?;
    let projected = projector.matrix() * zero.amplitudes();
    let norm = projected.norm();
    if norm < 1e-9 {
        return Err(Error::InvalidCode("P|0...0> vanishes".into()));
    }
    let zero_l = StateVector::normalized(projected.as_slice().to_vec())?;
    let one_l = code.logical_x().apply(&zero_l)?;
    Ok((zero_l, one_l))
}

/// `a|0> + b|1>  ->  a|0_L> + b|1_L>`.
pub fn encode(code: &StabilizerCode, psi: &StateVector) -> Result<StateVector> {
    if psi.n_qubits() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, found: psi.dim() });
    }
    let (zero_l, one_l) = logical_basis(code)?;
    let a = psi.amplitudes()[0];
    let b = psi.amplitudes()[1];
    let v = zero_l.amplitudes() * a + one_l.amplitudes() * b;
    StateVector::normalized(v.as_slice().to_vec())
}

/// A syndrome outcome: bit `k - 1 - i` is set when generator `i` measures `-1`
/// (generator 0 is the most significant bit). `0` is the trivial syndrome.
pub type Syndrome = u8;

/// Probability of each of the `2^k` syndromes.
pub fn syndrome_distribution(
    rho: &DensityOperator,
    code: &StabilizerCode,
) -> Result<BTreeMap<Syndrome, f64>> {
    let dim = 1usize << code.n_physical();
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
    }
    let gens = code.generators();
    let k = gens.len();
    let plus: Vec<CMatrix> = gens.iter().map(|g| half_identity_plus(g, 1.0)).collect();
    let minus: Vec<CMatrix> = gens.iter().map(|g| half_identity_plus(g, -1.0)).collect();
    let mut out = BTreeMap::new();
    for s in 0..1u8 << k {
        let proj = (0..k).fold(CMatrix::identity(dim, dim), |acc, i| {
            if s >> (k - 1 - i) & 1 == 1 {
                acc * &minus[i]
            } else {
                acc * &plus[i]
            }
        });
        out.insert(s, (proj * rho.matrix()).trace().re);
    }
    Ok(out)
}

/// Expectation of a Hermitian Pauli on a pure state.
pub fn pauli_expectation_pure(p: &PauliString, psi: &StateVector) -> Result<f64> {
    let applied = p.apply(psi)?;
    // `apply` renormalizes; Pauli strings are unitary so the norm is unchanged.
    let v: C64 = psi.inner(&applied)?;
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_match_the_standard_list() {
        let code = five_qubit_code();
        let labels: Vec<String> = code.generators().iter().map(|g| g.label()).collect();
        assert_eq!(labels, ["+XZZXI", "+IXZZX", "+XIXZZ", "+ZXIXZ"]);
        assert_eq!(code.n_logical(), 1);
    }

    #[test]
    fn distance_is_three() {
        assert_eq!(five_qubit_code().distance(), 3);
    }

    #[test]
    fn rejects_anticommuting_generators() {
        let p = |s: &str| PauliString::parse(s).unwrap();
        let err = StabilizerCode::new(vec![p("XI"), p("ZI")], p("IX"), p("IZ"));
        assert!(matches!(err, Err(Error::InvalidCode(_))));
    }

    #[test]
    fn rejects_dependent_generators() {
        let p = |s: &str| PauliString::parse(s).unwrap();
        let err = StabilizerCode::new(vec![p("ZZI"), p("IZZ"), p("ZIZ")], p("XXX"), p("ZII"));
        assert!(matches!(err, Err(Error::InvalidCode(_))));
    }

    #[test]
    fn projector_trace_and_zero_overlap() {
        let code = five_qubit_code();
        let p = code_projector(&code).unwrap();
        assert_eq!(p.rank(), 2);
        let zero = StateVector::zeros(5).unwrap().density();
        assert!((p.overlap(&zero) - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn logical_z_eigenvalues() {
        let code = five_qubit_code();
        let (zero_l, one_l) = logical_basis(&code).unwrap();
        assert!((pauli_expectation_pure(code.logical_z(), &zero_l).unwrap() - 1.0).abs() < 1e-12);
        assert!((pauli_expectation_pure(code.logical_z(), &one_l).unwrap() + 1.0).abs() < 1e-12);
        assert!(zero_l.inner(&one_l).unwrap().norm() < 1e-12);
    }

    #[test]
    fn encode_rejects_multi_qubit_input() {
        let code = five_qubit_code();
        assert!(encode(&code, &StateVector::zeros(2).unwrap()).is_err());
    }

    #[test]
    fn syndrome_of_maximally_mixed_is_uniform() {
        let code = five_qubit_code();
        let rho = DensityOperator::maximally_mixed(5).unwrap();
        let dist = syndrome_distribution(&rho, &code).unwrap();
        assert_eq!(dist.len(), 16);
        for p in dist.values() {
            assert!((p - 1.0 / 16.0).abs() < 1e-14);
        }
        assert!(syndrome_distribution(&DensityOperator::maximally_mixed(4).unwrap(), &code).is_err());
    }
}
