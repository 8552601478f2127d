//! Single-qubit Clifford group and the T-type magic states.

use std::sync::OnceLock;

use crate::qubit::{CMatrix, DensityOperator, StateVector, C64};

/// `theta_T = arccos(1/sqrt 3) / 2`.
pub fn theta_t() -> f64 {
    0.5 * (1.0 / 3f64.sqrt()).acos()
}

/// `|T0> = cos(theta_T)|0> + e^{i pi/4} sin(theta_T)|1>`, Bloch vector `(1,1,1)/sqrt 3`.
pub fn t0() -> StateVector {
    let th = theta_t();
    let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    StateVector::new(vec![C64::new(th.cos(), 0.0), phase * th.sin()]).expect("unit norm")
}

/// `|T1>`, orthogonal to `|T0>`, Bloch vector `-(1,1,1)/sqrt 3`.
pub fn t1() -> StateVector {
    let th = theta_t();
    let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    StateVector::new(vec![C64::new(-th.sin(), 0.0), phase * th.cos()]).expect("unit norm")
}

/// `(1 - eps)|T0><T0| + eps|T1><T1|`.
pub fn noisy_t(epsilon: f64) -> DensityOperator {
    let a = t0().density();
    let b = t1().density();
    DensityOperator::mixture(&[(1.0 - epsilon, &a), (epsilon, &b)])
        .expect("epsilon in [0, 1]")
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)])
}

pub fn phase_gate() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
    )
}

/// Fixes the global phase so the first entry of largest magnitude is real positive.
fn canonical_phase(u: &CMatrix) -> CMatrix {
    let pivot = u
        .iter()
        .find(|z| z.norm() > 1e-9)
        .copied()
        .expect("unitary has a nonzero entry");
    let ph = pivot / pivot.norm();
    u.map(|z| z / ph)
}

fn same_up_to_phase(a: &CMatrix, b: &CMatrix) -> bool {
    (canonical_phase(a) - canonical_phase(b)).camax() < 1e-9
}

/// The 24 single-qubit Cliffords (one representative per global phase),
/// generated by closing `{H, S}` under multiplication. The identity is first;
/// the order is deterministic.
pub fn single_qubit_clifford_group() -> &'static [CMatrix] {
    static GROUP: OnceLock<Vec<CMatrix>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let gens = [hadamard(), phase_gate()];
        let mut group = vec![CMatrix::identity(2, 2)];
        let mut frontier = group.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for u in &frontier {
                for g in &gens {
                    let v = canonical_phase(&(g * u));
                    if !group.iter().any(|w| same_up_to_phase(w, &v)) {
                        group.push(v.clone());
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        group
    })
}

/// The eight T-type states `U|T0>` with Bloch vectors `(+-1,+-1,+-1)/sqrt 3`,
/// one per sign pattern, ordered by sign pattern `(sx, sy, sz)` with `+` first.
pub fn t_type_states() -> Vec<StateVector> {
    let t = t0();
    let mut found: Vec<([i8; 3], StateVector)> = Vec::new();
    for u in single_qubit_clifford_group() {
        let psi = t.apply(u).expect("2x2 unitary");
        let r = psi.density().bloch_vector().expect("single qubit");
        let signs = r.map(|v| if v >= 0.0 { 1i8 } else { -1i8 });
        if !found.iter().any(|(s, _)| *s == signs) {
            found.push((signs, psi));
        }
    }
    found.sort_by_key(|(s, _)| s.map(|v| -v));
    found.into_iter().map(|(_, s)| s).collect()
}
