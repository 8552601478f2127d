//! One Bravyi-Kitaev round as a linear map, iteration to a verdict, cost
//! accounting and the distillation threshold.
//!
//! A round projects five qubits onto the code space of the five-qubit code
//! and decodes: `out_ij = <i_L| rho |j_L> / p` with `p = Tr(P rho)`. For pure
//! inputs this is `lambda |psi_out> = M |psi_in>` with `M = sum_i |i><i_L|`
//! and `|lambda|^2 = p`.
//!
//! Round 1 consumes the given five-qubit input. Every later round consumes
//! five copies of the previous output after the free Clifford that rotates
//! its nearest T-type state onto `|T0>`. The cost to reach the target after
//! `K` rounds is `prod_{k=1..K} 5 / p_k` input qubits per output qubit.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::noisy_t;
use crate::code::{code_projector, five_qubit_code, logical_basis, CodeProjector, StabilizerCode};
use crate::error::{Error, Result};
use crate::magic::{aligning_clifford, t_fidelity};
use crate::qubit::{hermitize, CMatrix, DensityOperator, StateVector};
use crate::states::{StateFamily, BLOCK_QUBITS};

/// Success probabilities at or below this are treated as zero.
pub const ZERO_SUCCESS: f64 = 1e-12;
/// Cost reported for inputs that never reach the target.
pub const UNDISTILLABLE_COST: f64 = -1.0;
pub const DEFAULT_MAX_ROUNDS: usize = 15;

#[derive(Clone, Debug)]
pub struct RoundResult {
    pub success_probability: f64,
    /// `None` when the success probability vanished.
    pub output: Option<DensityOperator>,
    pub output_t_fidelity: Option<f64>,
}

impl RoundResult {
    pub fn is_zero_success(&self) -> bool {
        self.output.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub success_probability: f64,
    pub output_t_fidelity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Distilled,
    Undistillable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillationTrace {
    pub rounds: Vec<RoundRecord>,
    pub verdict: Verdict,
    pub rounds_used: usize,
    /// `prod 5 / p_k` when distilled, `-1` otherwise.
    pub cost: f64,
}

impl DistillationTrace {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.output_t_fidelity)
    }

    pub fn is_distilled(&self) -> bool {
        self.verdict == Verdict::Distilled
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub input_fidelity: f64,
    pub output_fidelity: f64,
    pub success_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha_sq: f64,
    /// Round-1 success probability.
    pub success_probability: f64,
    /// T-fidelity after each executed round (stops early only on zero success).
    pub round_fidelities: Vec<f64>,
    /// Success probability of each executed round.
    pub round_success: Vec<f64>,
    /// First round whose output reached the target, if any.
    pub first_round_at_target: Option<usize>,
}

impl SweepRow {
    pub fn round1_fidelity(&self) -> Option<f64> {
        self.round_fidelities.first().copied()
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.round_fidelities.last().copied()
    }
}

/// Precomputed projector and logical basis of the five-qubit code. Immutable
/// and freely shared between threads.
#[derive(Clone, Debug)]
pub struct BkEngine {
    code: StabilizerCode,
    projector: CodeProjector,
    /// `M`, `2 x 32`, rows `<0_L|` and `<1_L|`.
    decoder: CMatrix,
    logical: (StateVector, StateVector),
}

impl Default for BkEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl BkEngine {
    pub fn new() -> Self {
        let code = five_qubit_code();
        let projector = code_projector(&code).expect("valid code");
        let logical = logical_basis(&code).expect("single logical qubit");
        let decoder = CMatrix::from_rows(&[
            logical.0.amplitudes().adjoint(),
            logical.1.amplitudes().adjoint(),
        ]);
        Self { code, projector, decoder, logical }
    }

    /// Process-wide instance.
    pub fn shared() -> &'static BkEngine {
        static ENGINE: OnceLock<BkEngine> = OnceLock::new();
        ENGINE.get_or_init(BkEngine::new)
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn projector(&self) -> &CodeProjector {
        &self.projector
    }

    pub fn logical_basis(&self) -> (&StateVector, &StateVector) {
        (&self.logical.0, &self.logical.1)
    }

    /// The decoding map `M`.
    pub fn decoder(&self) -> &CMatrix {
        &self.decoder
    }

    /// Unnormalized output `M rho M^dagger`; its trace is the success probability.
    pub fn unnormalized_output(&self, rho: &DensityOperator) -> Result<CMatrix> {
        let dim = 1usize << BLOCK_QUBITS;
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rho.dim() });
        }
        Ok(&self.decoder * rho.matrix() * self.decoder.adjoint())
    }

    pub fn bk_round(&self, rho: &DensityOperator) -> Result<RoundResult> {
        let out = self.unnormalized_output(rho)?;
        let p = out.trace().re;
        if p <= ZERO_SUCCESS {
            return Ok(RoundResult { success_probability: p.max(0.0), output: None, output_t_fidelity: None });
        }
        let output = DensityOperator::from_matrix_unchecked(hermitize(out.unscale(p)));
        let f = t_fidelity(&output)?;
        Ok(RoundResult { success_probability: p.min(1.0), output: Some(output), output_t_fidelity: Some(f) })
    }

    /// `lambda` and `|psi_out>` for a pure input; `None` output on zero success.
    pub fn pure_round(&self, psi: &StateVector) -> Result<(f64, Option<StateVector>)> {
        if psi.dim() != 1 << BLOCK_QUBITS {
            return Err(Error::DimensionMismatch { expected: 1 << BLOCK_QUBITS, found: psi.dim() });
        }
        let v = &self.decoder * psi.amplitudes();
        let lambda = v.norm();
        if lambda * lambda <= ZERO_SUCCESS {
            return Ok((lambda, None));
        }
        Ok((lambda, Some(StateVector::normalized(v.as_slice().to_vec())?)))
    }

    /// Five copies of `output` after rotating its nearest T-type state onto `|T0>`.
    pub fn next_round_input(&self, output: &DensityOperator) -> Result<DensityOperator> {
        let aligned = output.conjugate(aligning_clifford(output)?)?;
        aligned.tensor_power(BLOCK_QUBITS)
    }

    /// Runs up to `max_rounds` rounds, stopping early once `stop(fidelity)`
    /// holds or a round has zero success.
    fn run_rounds(
        &self,
        first_input: &DensityOperator,
        max_rounds: usize,
        mut stop: impl FnMut(f64) -> bool,
    ) -> Result<(Vec<RoundRecord>, bool)> {
        let mut records = Vec::with_capacity(max_rounds);
        let mut input = first_input.clone();
        for round in 0..max_rounds {
            let result = self.bk_round(&input)?;
            let (Some(output), Some(f)) = (result.output, result.output_t_fidelity) else {
                return Ok((records, true));
            };
            records.push(RoundRecord { success_probability: result.success_probability, output_t_fidelity: f });
            if stop(f) {
                break;
            }
            if round + 1 < max_rounds {
                input = self.next_round_input(&output)?;
            }
        }
        Ok((records, false))
    }

    pub fn iterate(
        &self,
        first_input: &DensityOperator,
        target_fidelity: f64,
        max_rounds: usize,
    ) -> Result<DistillationTrace> {
        if !(target_fidelity > 0.5 && target_fidelity <= 1.0) {
            return Err(Error::InvalidParameter(format!("target fidelity {target_fidelity} outside (0.5, 1]")));
        }
        if max_rounds == 0 {
            return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
        }
        let (rounds, zero_success) = self.run_rounds(first_input, max_rounds, |f| f >= target_fidelity)?;
        let reached = !zero_success && rounds.last().is_some_and(|r| r.output_t_fidelity >= target_fidelity);
        let (verdict, cost) = if reached {
            let cost = rounds.iter().map(|r| BLOCK_QUBITS as f64 / r.success_probability).product();
            (Verdict::Distilled, cost)
        } else {
            (Verdict::Undistillable, UNDISTILLABLE_COST)
        };
        Ok(DistillationTrace { rounds_used: rounds.len(), rounds, verdict, cost })
    }

    /// One round on `rho_in(eps)^{x5}` per grid point.
    pub fn output_fidelity_curve(&self, epsilon_grid: &[f64]) -> Result<Vec<CurvePoint>> {
        epsilon_grid
            .iter()
            .map(|&eps| {
                if !(0.0..=0.5).contains(&eps) {
                    return Err(Error::InvalidParameter(format!("epsilon = {eps} outside [0, 0.5]")));
                }
                let single = noisy_t(eps);
                let round = self.bk_round(&single.tensor_power(BLOCK_QUBITS)?)?;
                Ok(CurvePoint {
                    epsilon: eps,
                    input_fidelity: t_fidelity(&single)?,
                    output_fidelity: round.output_t_fidelity.unwrap_or(f64::NAN),
                    success_probability: round.success_probability,
                })
            })
            .collect()
    }

    /// `F_out(eps) - (1 - eps)` for the noisy-T product family.
    pub fn threshold_gap(&self, eps: f64) -> Result<f64> {
        let point = self.output_fidelity_curve(&[eps])?[0];
        Ok(point.output_fidelity - (1.0 - eps))
    }

    /// Crossing `eps*` of the output and input fidelities, by bisection on
    /// `[0.05, 0.25]` to `1e-5`.
    pub fn threshold(&self) -> Result<f64> {
        let (mut lo, mut hi) = (0.05, 0.25);
        let g_lo = self.threshold_gap(lo)?;
        let g_hi = self.threshold_gap(hi)?;
        if g_lo.signum() == g_hi.signum() {
            return Err(Error::NoSignChange { lo, hi });
        }
        while hi - lo > 1e-5 {
            let mid = 0.5 * (lo + hi);
            if self.threshold_gap(mid)?.signum() == g_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Runs `rounds` rounds for each `alpha^2` of an alpha-parametrized family.
    pub fn distillability_sweep(
        &self,
        family: &StateFamily,
        alpha_sq_grid: &[f64],
        target_fidelity: f64,
        rounds: usize,
    ) -> Result<Vec<SweepRow>> {
        alpha_sq_grid
            .par_iter()
            .map(|&a2| {
                let input = family.with_alpha_squared(a2)?.build()?.density();
                let (records, _) = self.run_rounds(&input, rounds, |_| false)?;
                Ok(SweepRow {
                    alpha_sq: a2,
                    success_probability: records.first().map_or(0.0, |r| r.success_probability),
                    round_fidelities: records.iter().map(|r| r.output_t_fidelity).collect(),
                    round_success: records.iter().map(|r| r.success_probability).collect(),
                    first_round_at_target: records
                        .iter()
                        .position(|r| r.output_t_fidelity >= target_fidelity)
                        .map(|i| i + 1),
                })
            })
            .collect()
    }
}
