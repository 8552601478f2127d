//! Pauli strings with exact phase bookkeeping, and the Pauli-expectation
//! embedding of density operators used as the robustness LP coordinates.
//!
//! A `PauliString` stores `i^phase * P(x, z)` where `P(x, z)` is the
//! Hermitian tensor product of `I, X, Y, Z` selected by the bit pairs
//! (`x=1,z=0` is X, `x=1,z=1` is Y, `x=0,z=1` is Z). Bit `n-1-q` of the
//! masks belongs to qubit `q`, matching the basis-index convention.
//!
//! Unsigned Pauli strings are indexed lexicographically with `I < X < Y < Z`
//! per qubit and qubit 0 most significant: index = `sum_q code(q) 4^(n-1-q)`.

use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::qubit::{check_qubits, CMatrix, DensityOperator, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u32,
    z: u32,
    /// Exponent of `i`, mod 4.
    phase: u8,
}

/// `i^k`.
pub(crate) fn i_pow(k: u8) -> C64 {
    match k & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Exponent `g` with `P(x1,z1) P(x2,z2) = i^g P(x1^x2, z1^z2)` for one qubit.
fn single_qubit_product_phase(x1: u32, z1: u32, x2: u32, z2: u32) -> i32 {
    let (x1, z1, x2, z2) = (x1 as i32, z1 as i32, x2 as i32, z2 as i32);
    match (x1, z1) {
        (0, 0) => 0,
        (1, 1) => z2 - x2,
        (1, 0) => z2 * (2 * x2 - 1),
        _ => x2 * (1 - 2 * z2),
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x: 0, z: 0, phase: 0 }
    }

    /// Builds `i^phase P(x, z)` from raw masks.
    pub fn from_bits(n_qubits: usize, x: u32, z: u32, phase: u8) -> Self {
        let mask = if n_qubits >= 32 { u32::MAX } else { (1u32 << n_qubits) - 1 };
        Self { n_qubits, x: x & mask, z: z & mask, phase: phase & 3 }
    }

    /// Parses labels like `XZZXI`, `-XIZ`, `+iY`, `-iZZ`.
    pub fn parse(label: &str) -> Result<Self> {
        let (phase, body) = if let Some(rest) = label.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = label.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = label.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = label.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = label.strip_prefix('+') {
            (0, rest)
        } else {
            (0, label)
        };
        let n = body.chars().count();
        if n == 0 || n > 16 {
            return Err(Error::InvalidParameter(format!("bad Pauli label '{label}'")));
        }
        let (mut x, mut z) = (0u32, 0u32);
        for (q, ch) in body.chars().enumerate() {
            let bit = 1u32 << (n - 1 - q);
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                'Z' => z |= bit,
                _ => return Err(Error::InvalidParameter(format!("bad Pauli label '{label}'"))),
            }
        }
        Ok(Self { n_qubits: n, x, z, phase })
    }

    /// The unsigned Pauli with lexicographic `index` (see module docs).
    pub fn from_index(n_qubits: usize, index: usize) -> Self {
        let (mut x, mut z) = (0u32, 0u32);
        for q in 0..n_qubits {
            let shift = n_qubits - 1 - q;
            let code = (index >> (2 * shift)) & 3;
            let bit = 1u32 << shift;
            if code == 1 || code == 2 {
                x |= bit;
            }
            if code == 2 || code == 3 {
                z |= bit;
            }
        }
        Self { n_qubits, x, z, phase: 0 }
    }

    /// Lexicographic index of the unsigned part.
    pub fn index(&self) -> usize {
        let mut idx = 0usize;
        for q in 0..self.n_qubits {
            let shift = self.n_qubits - 1 - q;
            let xb = (self.x >> shift) & 1;
            let zb = (self.z >> shift) & 1;
            let code = match (xb, zb) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            };
            idx |= code << (2 * shift);
        }
        idx
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bits(&self) -> u32 {
        self.x
    }

    pub fn z_bits(&self) -> u32 {
        self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    /// The phase as a complex unit.
    pub fn coefficient(&self) -> C64 {
        i_pow(self.phase)
    }

    pub fn unsigned(&self) -> Self {
        Self { phase: 0, ..*self }
    }

    pub fn negate(&self) -> Self {
        Self { phase: (self.phase + 2) & 3, ..*self }
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// `+1` or `-1` for Hermitian strings.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Symplectic form: `true` when the two strings commute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Action on a computational basis index: `P|j> = coeff * |j ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, j: usize) -> (usize, C64) {
        let y_count = (self.x & self.z).count_ones() as u8;
        let z_sign = ((self.z as usize & j).count_ones() % 2) as u8 * 2;
        (j ^ self.x as usize, i_pow(self.phase + y_count + z_sign))
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let (row, coeff) = self.apply_to_basis(j);
            m[(row, j)] = coeff;
        }
        m
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits,
                found: psi.dim(),
            });
        }
        let amps = psi.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for (j, a) in amps.iter().enumerate() {
            let (row, coeff) = self.apply_to_basis(j);
            out[row] = coeff * a;
        }
        StateVector::normalized(out)
    }

    /// `Tr(rho P)`; real for Hermitian strings.
    pub fn expectation(&self, rho: &DensityOperator) -> C64 {
        let m = rho.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..m.nrows() {
            let (row, coeff) = self.apply_to_basis(j);
            acc += coeff * m[(j, row)];
        }
        acc
    }

    pub fn label(&self) -> String {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        let body: String = (0..self.n_qubits)
            .map(|q| {
                let shift = self.n_qubits - 1 - q;
                match ((self.x >> shift) & 1, (self.z >> shift) & 1) {
                    (0, 0) => 'I',
                    (1, 0) => 'X',
                    (1, 1) => 'Y',
                    _ => 'Z',
                }
            })
            .collect();
        format!("{prefix}{body}")
    }
}

impl Mul for PauliString {
    type Output = PauliString;

    fn mul(self, rhs: PauliString) -> PauliString {
        assert_eq!(self.n_qubits, rhs.n_qubits, "Pauli strings act on different registers");
        let mut g: i32 = self.phase as i32 + rhs.phase as i32;
        for q in 0..self.n_qubits {
            g += single_qubit_product_phase(
                (self.x >> q) & 1,
                (self.z >> q) & 1,
                (rhs.x >> q) & 1,
                (rhs.z >> q) & 1,
            );
        }
        PauliString {
            n_qubits: self.n_qubits,
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: g.rem_euclid(4) as u8,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `c_P = Tr(rho P)` for all `4^n` unsigned Pauli strings in lexicographic
/// order. `c_I = 1` for any density operator.
pub fn pauli_expectation_vector(rho: &DensityOperator) -> Vec<f64> {
    let n = rho.n_qubits();
    (0..1usize << (2 * n))
        .map(|idx| PauliString::from_index(n, idx).expectation(rho).re)
        .collect()
}

/// Inverse of [`pauli_expectation_vector`]: `2^-n sum_P c_P P`.
pub fn operator_from_pauli_vector(n_qubits: usize, coeffs: &[f64]) -> Result<CMatrix> {
    check_qubits(n_qubits)?;
    let len = 1usize << (2 * n_qubits);
    if coeffs.len() != len {
        return Err(Error::DimensionMismatch { expected: len, found: coeffs.len() });
    }
    let dim = 1usize << n_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for (idx, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let p = PauliString::from_index(n_qubits, idx);
        for j in 0..dim {
            let (row, coeff) = p.apply_to_basis(j);
            m[(row, j)] += coeff * c;
        }
    }
    Ok(m.unscale(dim as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(label: &str) -> CMatrix {
        PauliString::parse(label).unwrap().to_matrix()
    }

    #[test]
    fn single_qubit_matrices() {
        let x = single("X");
        let y = single("Y");
        let z = single("Z");
        let i = C64::new(0.0, 1.0);
        // Y = i X Z
        assert!((&y - (&x * &z).scale(1.0).map(|v| v * i)).camax() < 1e-15);
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(y[(1, 0)], i);
    }

    #[test]
    fn products_match_matrix_products() {
        let labels = ["I", "X", "Y", "Z"];
        for a in labels {
            for b in labels {
                let pa = PauliString::parse(a).unwrap();
                let pb = PauliString::parse(b).unwrap();
                let prod = (pa * pb).to_matrix();
                let direct = pa.to_matrix() * pb.to_matrix();
                assert!((prod - direct).camax() < 1e-15, "{a}*{b}");
            }
        }
        let a = PauliString::parse("XYZIY").unwrap();
        let b = PauliString::parse("-iZZXYX").unwrap();
        assert!(((a * b).to_matrix() - a.to_matrix() * b.to_matrix()).camax() < 1e-13);
    }

    #[test]
    fn index_round_trip_and_order() {
        assert_eq!(PauliString::parse("X").unwrap().index(), 1);
        assert_eq!(PauliString::parse("Y").unwrap().index(), 2);
        assert_eq!(PauliString::parse("ZI").unwrap().index(), 12);
        for idx in 0..256 {
            assert_eq!(PauliString::from_index(4, idx).index(), idx);
        }
    }

    #[test]
    fn commutation() {
        let x = PauliString::parse("XI").unwrap();
        let z = PauliString::parse("ZI").unwrap();
        let zz = PauliString::parse("ZZ").unwrap();
        let xx = PauliString::parse("XX").unwrap();
        assert!(!x.commutes_with(&z));
        assert!(xx.commutes_with(&zz));
    }

    #[test]
    fn zero_state_expectations() {
        let rho = StateVector::zeros(1).unwrap().density();
        assert_eq!(pauli_expectation_vector(&rho), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn maximally_mixed_two_qubits() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let c = pauli_expectation_vector(&rho);
        assert_eq!(c.len(), 16);
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn labels() {
        assert_eq!(PauliString::parse("-XYZ").unwrap().label(), "-XYZ");
        assert!(PauliString::parse("XQ").is_err());
        assert!(PauliString::parse("").is_err());
    }
}
