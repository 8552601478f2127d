//! Input-state families for the distillation experiments.
//!
//! Seeded constructors draw from ChaCha20 (`rand_chacha::ChaCha20Rng`)
//! seeded with `seed_from_u64(seed)`. Independent streams for parallel
//! workers or samples use the same seed with `set_stream(stream)`, see
//! [`stream_rng`]; sample `i` of a study always reads stream `i`.

use std::f64::consts::FRAC_PI_4;
use std::sync::OnceLock;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::clifford::{noisy_t, t0, t1, theta_t};
use crate::code::{encode, five_qubit_code};
use crate::distill::BkEngine;
use crate::error::{Error, Result};
use crate::qubit::{check_qubits, CMatrix, CVector, DensityOperator, StateVector, C64};

/// Qubits consumed by one distillation round.
pub const BLOCK_QUBITS: usize = 5;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok((1.0 - alpha * alpha).max(0.0).sqrt())
}

fn default_phi() -> f64 {
    FRAC_PI_4
}

/// `alpha|0...0> + e^{i phi} beta|1...1>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGhzSpec {
    pub n: usize,
    pub alpha: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
}

impl PhaseGhzSpec {
    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha * self.alpha).max(0.0).sqrt()
    }
}

pub fn phase_ghz(spec: &PhaseGhzSpec) -> Result<StateVector> {
    check_qubits(spec.n)?;
    let beta = check_alpha(spec.alpha)?;
    let dim = 1usize << spec.n;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[0] += C64::new(spec.alpha, 0.0);
    amps[dim - 1] += C64::from_polar(beta, spec.phi);
    StateVector::normalized(amps)
}

/// `alpha|T0>^n + e^{i phi} beta|T1>^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhzTSpec {
    pub n: usize,
    pub alpha: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
}

pub fn ghz_t(spec: &GhzTSpec) -> Result<StateVector> {
    check_qubits(spec.n)?;
    let beta = check_alpha(spec.alpha)?;
    let a = t0().tensor_power(spec.n)?;
    let b = t1().tensor_power(spec.n)?;
    let v = a.amplitudes() * C64::new(spec.alpha, 0.0) + b.amplitudes() * C64::from_polar(beta, spec.phi);
    StateVector::normalized(v.as_slice().to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockFamily {
    PhaseGhz,
    GhzT,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeBlock {
    pub family: BlockFamily,
    pub size: usize,
    pub alpha: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
}

/// Blocks laid out left to right in qubit order, followed by `zero_pad`
/// qubits in `|0>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpec {
    pub blocks: Vec<CompositeBlock>,
    #[serde(default)]
    pub zero_pad: usize,
}

impl CompositeSpec {
    /// Same family for every block, uniform `alpha` and `phi`.
    pub fn uniform(family: BlockFamily, sizes: &[usize], zero_pad: usize, alpha: f64, phi: f64) -> Self {
        Self {
            blocks: sizes.iter().map(|&size| CompositeBlock { family, size, alpha, phi }).collect(),
            zero_pad,
        }
    }
}

pub fn composite(spec: &CompositeSpec) -> Result<StateVector> {
    let total: usize = spec.blocks.iter().map(|b| b.size).sum::<usize>() + spec.zero_pad;
    if total != BLOCK_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "composite blocks and padding cover {total} qubits, expected {BLOCK_QUBITS}"
        )));
    }
    let mut state: Option<StateVector> = None;
    let mut push = |s: StateVector| -> Result<()> {
        state = Some(match state.take() {
            None => s,
            Some(acc) => acc.tensor(&s)?,
        });
        Ok(())
    };
    for b in &spec.blocks {
        let s = match b.family {
            BlockFamily::PhaseGhz => phase_ghz(&PhaseGhzSpec { n: b.size, alpha: b.alpha, phi: b.phi })?,
            BlockFamily::GhzT => ghz_t(&GhzTSpec { n: b.size, alpha: b.alpha, phi: b.phi })?,
        };
        push(s)?;
    }
    if spec.zero_pad > 0 {
        push(StateVector::zeros(spec.zero_pad)?)?;
    }
    Ok(state.expect("total size is five"))
}

/// Product of `cos(theta_i)|0> + sin(theta_i)|1>` with
/// `theta_i ~ U[theta_bar - theta_max, theta_bar + theta_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisalignedSpinSpec {
    pub theta_bar: f64,
    pub theta_max: f64,
    pub seed: u64,
}

fn uniform_around(rng: &mut impl Rng, center: f64, half_width: f64) -> f64 {
    if half_width == 0.0 {
        center
    } else {
        rng.random_range(center - half_width..=center + half_width)
    }
}

pub fn misaligned_product_with(spec: &MisalignedSpinSpec, rng: &mut impl Rng) -> Result<StateVector> {
    if spec.theta_max < 0.0 {
        return Err(Error::InvalidParameter("theta_max must be nonnegative".into()));
    }
    let mut state: Option<StateVector> = None;
    for _ in 0..BLOCK_QUBITS {
        let th = uniform_around(rng, spec.theta_bar, spec.theta_max);
        let q = StateVector::normalized(vec![C64::new(th.cos(), 0.0), C64::new(th.sin(), 0.0)])?;
        state = Some(match state {
            None => q,
            Some(acc) => acc.tensor(&q)?,
        });
    }
    Ok(state.expect("five qubits"))
}

pub fn misaligned_product(spec: &MisalignedSpinSpec) -> Result<StateVector> {
    misaligned_product_with(spec, &mut stream_rng(spec.seed, 0))
}

/// Product of `p_i|tau0_i><tau0_i| + (1 - p_i)|tau1_i><tau1_i|` with
/// `|tau0_i> = cos(b_i)|0> + e^{i phi} sin(b_i)|1>`,
/// `|tau1_i> = -sin(b_i)|0> + e^{i phi} cos(b_i)|1>`,
/// `b_i ~ U[beta_bar +- beta_max]` and `p_i ~ U[p_bar +- p_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNearTSpec {
    pub beta_bar: f64,
    pub beta_max: f64,
    pub p_bar: f64,
    pub p_max: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
    pub seed: u64,
}

impl MixedNearTSpec {
    /// Centred on `|T0>` with `p_bar = 1 - p_max`, so `p_i` ranges over
    /// `[1 - 2 p_max, 1]`.
    pub fn near_t(beta_max: f64, p_max: f64, seed: u64) -> Self {
        Self { beta_bar: theta_t(), beta_max, p_bar: 1.0 - p_max, p_max, phi: FRAC_PI_4, seed }
    }
}

pub fn mixed_near_t_with(spec: &MixedNearTSpec, rng: &mut impl Rng) -> Result<DensityOperator> {
    let (lo, hi) = (spec.p_bar - spec.p_max, spec.p_bar + spec.p_max);
    if spec.p_max < 0.0 || spec.beta_max < 0.0 || lo < -1e-12 || hi > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "probability interval [{lo}, {hi}] escapes [0, 1]"
        )));
    }
    let phase = C64::from_polar(1.0, spec.phi);
    let mut state: Option<DensityOperator> = None;
    for _ in 0..BLOCK_QUBITS {
        let b = uniform_around(rng, spec.beta_bar, spec.beta_max);
        let p = uniform_around(rng, spec.p_bar, spec.p_max).clamp(0.0, 1.0);
        let tau0 = StateVector::new(vec![C64::new(b.cos(), 0.0), phase * b.sin()])?;
        let tau1 = StateVector::new(vec![C64::new(-b.sin(), 0.0), phase * b.cos()])?;
        let q = DensityOperator::mixture(&[(p, &tau0.density()), (1.0 - p, &tau1.density())])?;
        state = Some(match state {
            None => q,
            Some(acc) => acc.tensor(&q)?,
        });
    }
    Ok(state.expect("five qubits"))
}

pub fn mixed_near_t(spec: &MixedNearTSpec) -> Result<DensityOperator> {
    mixed_near_t_with(spec, &mut stream_rng(spec.seed, 0))
}

/// Collective spin operators `S_a = 1/2 sum_i sigma_a^i` on five qubits and
/// the Dicke basis of the maximal-spin (`S = 5/2`) subspace.
#[derive(Clone, Debug)]
pub struct CollectiveSpinOps {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
    /// `dicke[k] = |5/2, 5/2 - k>`: uniform superposition of weight-`k` strings.
    pub dicke: Vec<StateVector>,
    /// Rank-6 projector onto the symmetric subspace.
    pub symmetric_projector: CMatrix,
    /// `32 x 6` isometry whose columns are the Dicke states.
    dicke_isometry: CMatrix,
}

fn collective(label: char) -> CMatrix {
    let mut total = CMatrix::zeros(1 << BLOCK_QUBITS, 1 << BLOCK_QUBITS);
    for q in 0..BLOCK_QUBITS {
        let s: String = (0..BLOCK_QUBITS).map(|i| if i == q { label } else { 'I' }).collect();
        total += crate::pauli::PauliString::parse(&s).expect("static label").to_matrix();
    }
    total.scale(0.5)
}

pub fn collective_spin_ops() -> &'static CollectiveSpinOps {
    static OPS: OnceLock<CollectiveSpinOps> = OnceLock::new();
    OPS.get_or_init(|| {
        let dim = 1usize << BLOCK_QUBITS;
        let (sx, sy, sz) = (collective('X'), collective('Y'), collective('Z'));
        let i = C64::new(0.0, 1.0);
        let s_plus = &sx + sy.map(|v| v * i);
        let s_minus = &sx - sy.map(|v| v * i);
        let dicke: Vec<StateVector> = (0..=BLOCK_QUBITS)
            .map(|k| {
                let amps = (0..dim)
                    .map(|idx| {
                        if (idx as u32).count_ones() as usize == k {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                StateVector::normalized(amps).expect("nonempty weight class")
            })
            .collect();
        let cols: Vec<CVector> = dicke.iter().map(|d| d.amplitudes().clone()).collect();
        let dicke_isometry = CMatrix::from_columns(&cols);
        let symmetric_projector = &dicke_isometry * dicke_isometry.adjoint();
        CollectiveSpinOps { sx, sy, sz, s_plus, s_minus, dicke, symmetric_projector, dicke_isometry }
    })
}

impl CollectiveSpinOps {
    /// `S^2 = Sx^2 + Sy^2 + Sz^2`.
    pub fn total_spin_squared(&self) -> CMatrix {
        &self.sx * &self.sx + &self.sy * &self.sy + &self.sz * &self.sz
    }

    /// `P exp(-i t H) P + (I - P)` for a Hermitian `H` that preserves the
    /// symmetric subspace. The exponential is taken by diagonalizing the
    /// `6 x 6` restriction.
    pub fn symmetric_block_unitary(&self, hamiltonian: &CMatrix, t: f64) -> CMatrix {
        let d = &self.dicke_isometry;
        let block = d.adjoint() * hamiltonian * d;
        let block = crate::qubit::hermitize(block);
        let eig = SymmetricEigen::new(block);
        let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -t * l)));
        let u_block = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let dim = d.nrows();
        d * u_block * d.adjoint() + (CMatrix::identity(dim, dim) - &self.symmetric_projector)
    }

    /// `(S+^2 - S-^2) / (2i)`.
    pub fn countertwisting_hamiltonian(&self) -> CMatrix {
        let diff = &self.s_plus * &self.s_plus - &self.s_minus * &self.s_minus;
        diff.map(|v| v / C64::new(0.0, 2.0))
    }
}

/// One-axis twisting `exp(-i t Sz^2)` on the symmetric subspace, identity on
/// its complement.
pub fn one_axis_twist(t: f64) -> CMatrix {
    let ops = collective_spin_ops();
    ops.symmetric_block_unitary(&(&ops.sz * &ops.sz), t)
}

/// Two-axis countertwisting `exp(-i t (S+^2 - S-^2)/(2i))` on the symmetric
/// subspace, identity on its complement.
pub fn two_axis_countertwist(t: f64) -> CMatrix {
    let ops = collective_spin_ops();
    ops.symmetric_block_unitary(&ops.countertwisting_hamiltonian(), t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeProtocol {
    OneAxis,
    TwoAxis,
}

impl SqueezeProtocol {
    pub fn unitary(self, t: f64) -> CMatrix {
        match self {
            Self::OneAxis => one_axis_twist(t),
            Self::TwoAxis => two_axis_countertwist(t),
        }
    }
}

/// Haar-random pure state: normalized i.i.d. complex Gaussian amplitudes.
pub fn haar_random_pure_with(n: usize, rng: &mut impl Rng) -> Result<StateVector> {
    check_qubits(n)?;
    let amps = (0..1usize << n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::normalized(amps)
}

pub fn haar_random_pure(n: usize, seed: u64) -> Result<StateVector> {
    haar_random_pure_with(n, &mut stream_rng(seed, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub attempts: usize,
    /// `1 / attempts`.
    pub acceptance_rate: f64,
}

/// Rejection-samples Haar states until `|lambda| = sqrt(Tr(P rho)) >
/// lambda_min` and the round-1 output T-fidelity exceeds `fidelity_min`.
pub fn sample_distillable_with(
    engine: &BkEngine,
    lambda_min: f64,
    fidelity_min: f64,
    max_attempts: usize,
    rng: &mut impl Rng,
) -> Result<(StateVector, SampleStats)> {
    if !(0.0..1.0).contains(&lambda_min) {
        return Err(Error::InvalidParameter(format!("lambda_min = {lambda_min} outside (0, 1)")));
    }
    for attempt in 1..=max_attempts {
        let psi = haar_random_pure_with(BLOCK_QUBITS, rng)?;
        let round = engine.bk_round(&psi.density())?;
        let accepted = round.success_probability.sqrt() > lambda_min
            && round.output_t_fidelity.is_some_and(|f| f > fidelity_min);
        if accepted {
            return Ok((psi, SampleStats { attempts: attempt, acceptance_rate: 1.0 / attempt as f64 }));
        }
    }
    Err(Error::SamplerExhausted(max_attempts))
}

pub fn sample_distillable(
    engine: &BkEngine,
    lambda_min: f64,
    fidelity_min: f64,
    max_attempts: usize,
    seed: u64,
) -> Result<(StateVector, SampleStats)> {
    sample_distillable_with(engine, lambda_min, fidelity_min, max_attempts, &mut stream_rng(seed, 0))
}

/// Serializable description of any input state used by the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateFamily {
    PhaseGhz(PhaseGhzSpec),
    GhzT(GhzTSpec),
    Composite(CompositeSpec),
    /// `rho_in(epsilon)^{x5}`, `rho_in = (1-eps)|T0><T0| + eps|T1><T1|`.
    NoisyProduct { epsilon: f64 },
    Misaligned(MisalignedSpinSpec),
    MixedNearT(MixedNearTSpec),
    Haar { n: usize, seed: u64 },
    /// `|T0>` encoded in the five-qubit code.
    EncodedT,
    Squeezed { base: Box<StateFamily>, protocol: SqueezeProtocol, t: f64 },
}

/// A constructed input, pure when the family is.
#[derive(Clone, Debug)]
pub enum InputState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

impl InputState {
    pub fn density(&self) -> DensityOperator {
        match self {
            Self::Pure(psi) => psi.density(),
            Self::Mixed(rho) => rho.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&StateVector> {
        match self {
            Self::Pure(psi) => Some(psi),
            Self::Mixed(_) => None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Pure(psi) => psi.n_qubits(),
            Self::Mixed(rho) => rho.n_qubits(),
        }
    }
}

impl StateFamily {
    pub fn build(&self) -> Result<InputState> {
        Ok(match self {
            Self::PhaseGhz(s) => InputState::Pure(phase_ghz(s)?),
            Self::GhzT(s) => InputState::Pure(ghz_t(s)?),
            Self::Composite(s) => InputState::Pure(composite(s)?),
            Self::NoisyProduct { epsilon } => {
                if !(0.0..=1.0).contains(epsilon) {
                    return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside [0, 1]")));
                }
                InputState::Mixed(noisy_t(*epsilon).tensor_power(BLOCK_QUBITS)?)
            }
            Self::Misaligned(s) => InputState::Pure(misaligned_product(s)?),
            Self::MixedNearT(s) => InputState::Mixed(mixed_near_t(s)?),
            Self::Haar { n, seed } => InputState::Pure(haar_random_pure(*n, *seed)?),
            Self::EncodedT => InputState::Pure(encode(&five_qubit_code(), &t0())?),
            Self::Squeezed { base, protocol, t } => {
                let u = protocol.unitary(*t);
                match base.build()? {
                    InputState::Pure(psi) => InputState::Pure(psi.apply(&u)?),
                    InputState::Mixed(rho) => InputState::Mixed(rho.conjugate(&u)?),
                }
            }
        })
    }

    /// The same family re-parametrized by `alpha^2` (`1 - epsilon` for the
    /// noisy product). Fails for families without an `alpha` knob.
    pub fn with_alpha_squared(&self, alpha_sq: f64) -> Result<StateFamily> {
        if !(0.0..=1.0).contains(&alpha_sq) {
            return Err(Error::InvalidParameter(format!("alpha^2 = {alpha_sq} outside [0, 1]")));
        }
        let alpha = alpha_sq.sqrt();
        Ok(match self {
            Self::PhaseGhz(s) => Self::PhaseGhz(PhaseGhzSpec { alpha, ..*s }),
            Self::GhzT(s) => Self::GhzT(GhzTSpec { alpha, ..*s }),
            Self::Composite(s) => Self::Composite(CompositeSpec {
                blocks: s.blocks.iter().map(|b| CompositeBlock { alpha, ..*b }).collect(),
                zero_pad: s.zero_pad,
            }),
            Self::NoisyProduct { .. } => Self::NoisyProduct { epsilon: 1.0 - alpha_sq },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "family {other:?} has no alpha parameter"
                )))
            }
        })
    }

    /// Replaces the seed of seeded families; others are returned unchanged.
    pub fn with_seed(&self, seed: u64) -> StateFamily {
        match self {
            Self::Misaligned(s) => Self::Misaligned(MisalignedSpinSpec { seed, ..*s }),
            Self::MixedNearT(s) => Self::MixedNearT(MixedNearTSpec { seed, ..*s }),
            Self::Haar { n, .. } => Self::Haar { n: *n, seed },
            Self::Squeezed { base, protocol, t } => Self::Squeezed {
                base: Box::new(base.with_seed(seed)),
                protocol: *protocol,
                t: *t,
            },
            other => other.clone(),
        }
    }
}
