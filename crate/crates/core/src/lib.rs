//! Magic state distillation with the five-qubit code on entangled and
//! imperfect inputs, with robustness-of-magic analysis.

pub mod clifford;
pub mod code;
pub mod dictionary;
pub mod distill;
pub mod error;
pub mod interior;
pub mod magic;
pub mod pauli;
pub mod qubit;
pub mod simplex;
pub mod states;

pub use clifford::{noisy_t, single_qubit_clifford_group, t0, t1, t_type_states, theta_t};
pub use code::{code_projector, encode, five_qubit_code, logical_basis, syndrome_distribution, StabilizerCode};
pub use dictionary::{enumerate_stabilizer_states, stabilizer_state_count, StabilizerDictionary};
pub use distill::{BkEngine, CurvePoint, DistillationTrace, RoundResult, SweepRow, Verdict};
pub use error::{Error, Result};
pub use magic::{magic_profile, nonlocal_magic, rom, t_fidelity, Dictionaries, MagicProfile, RomResult};
pub use pauli::PauliString;
pub use qubit::{CMatrix, CVector, DensityOperator, StateVector, SubsystemIndex, C64};
pub use states::{InputState, SqueezeProtocol, StateFamily};
