//! Experiment configuration, as read from `--config` JSON or assembled from
//! CLI flags.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use msd_core::states::{MisalignedSpinSpec, MixedNearTSpec, PhaseGhzSpec, SqueezeProtocol};
use msd_core::StateFamily;
use serde::{Deserialize, Serialize};

/// Environment variable that, when set, replaces the output directory.
pub const OUTPUT_DIR_ENV: &str = "MSD_OUTPUT_DIR";

/// Largest subsystem for which a stabilizer dictionary is available.
pub const MAX_PROFILE_QUBITS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub study: Study,
    /// Required by the sampled studies (`squeeze_study`, `random_state_study`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Where stabilizer dictionaries are cached; defaults to
    /// `<output_dir>/dictionaries`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    ThresholdCurve,
    FamilySweep,
    SqueezeStudy,
    RandomStateStudy,
    RomReport,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ThresholdCurve => "threshold_curve",
            Self::FamilySweep => "family_sweep",
            Self::SqueezeStudy => "squeeze_study",
            Self::RandomStateStudy => "random_state_study",
            Self::RomReport => "rom_report",
        }
    }

    pub fn is_sampled(self) -> bool {
        matches!(self, Self::SqueezeStudy | Self::RandomStateStudy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Study {
    ThresholdCurve(ThresholdParams),
    FamilySweep(SweepParams),
    SqueezeStudy(SqueezeParams),
    RandomStateStudy(RandomParams),
    RomReport(RomParams),
}

impl Study {
    pub fn id(&self) -> ExperimentId {
        match self {
            Self::ThresholdCurve(_) => ExperimentId::ThresholdCurve,
            Self::FamilySweep(_) => ExperimentId::FamilySweep,
            Self::SqueezeStudy(_) => ExperimentId::SqueezeStudy,
            Self::RandomStateStudy(_) => ExperimentId::RandomStateStudy,
            Self::RomReport(_) => ExperimentId::RomReport,
        }
    }
}

/// `n + 1` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdParams {
    pub epsilon_grid: Vec<f64>,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        Self { epsilon_grid: linspace(0.0, 0.5, 50) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    /// Any family with an `alpha` knob: phase-GHZ, GHZ-T, composite or the
    /// noisy product.
    pub family: StateFamily,
    pub alpha_sq_grid: Vec<f64>,
    /// Rounds recorded per grid point.
    pub rounds: usize,
    pub target: f64,
    /// Round cap for the cost column.
    pub max_rounds: usize,
    /// Subsystem sizes `1..=lrom_max_k` enter the magic profile; 0 skips it.
    pub lrom_max_k: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            family: StateFamily::PhaseGhz(PhaseGhzSpec { n: 5, alpha: 1.0, phi: FRAC_PI_4 }),
            alpha_sq_grid: linspace(0.0, 1.0, 20),
            rounds: 10,
            target: 0.97,
            max_rounds: 15,
            lrom_max_k: 4,
        }
    }
}

/// Unsqueezed starting point of the squeeze study. Each sample draws its
/// own misalignments from a seed derived from the run seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Misaligned { theta_bar: f64, theta_max: f64 },
    MixedNearT { beta_bar: f64, beta_max: f64, p_bar: f64, p_max: f64, phi: f64 },
}

impl InitialState {
    pub fn family(&self, seed: u64) -> StateFamily {
        match *self {
            Self::Misaligned { theta_bar, theta_max } => {
                StateFamily::Misaligned(MisalignedSpinSpec { theta_bar, theta_max, seed })
            }
            Self::MixedNearT { beta_bar, beta_max, p_bar, p_max, phi } => {
                StateFamily::MixedNearT(MixedNearTSpec { beta_bar, beta_max, p_bar, p_max, phi, seed })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SqueezeParams {
    pub protocol: SqueezeProtocol,
    pub initial: InitialState,
    pub t_grid: Vec<f64>,
    /// Samples per grid point; the same initial states are reused at every `t`.
    pub samples: usize,
    pub target: f64,
    pub max_rounds: usize,
    /// Adds S1, lrom1, lrom2 and lrom(1:2) per sample.
    pub magic_summaries: bool,
}

impl Default for SqueezeParams {
    fn default() -> Self {
        Self {
            protocol: SqueezeProtocol::OneAxis,
            initial: InitialState::Misaligned { theta_bar: FRAC_PI_4, theta_max: 0.05 },
            t_grid: linspace(0.0, 1.0, 10),
            samples: 100,
            target: 0.97,
            max_rounds: 15,
            magic_summaries: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomParams {
    pub samples: usize,
    pub lambda_min: f64,
    /// Round-1 fidelity floor; defaults to `1 - eps*`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_min: Option<f64>,
    /// Rejection budget per accepted sample.
    pub max_attempts: usize,
    pub target: f64,
    pub max_rounds: usize,
    pub lrom_max_k: usize,
    /// Also write every accepted state's amplitudes.
    pub export_amplitudes: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            samples: 500,
            lambda_min: 0.16,
            fidelity_min: None,
            max_attempts: 1_000_000,
            target: 0.999,
            max_rounds: 15,
            lrom_max_k: 4,
            export_amplitudes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum StateSource {
    Family { spec: StateFamily },
    /// Amplitude CSV with columns `index,re,im`.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RomParams {
    pub state: StateSource,
    /// Largest subsystem profiled; defaults to `min(n, 4)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_k: Option<usize>,
    /// Report `lrom(i:j)` for every pair of distinct qubits.
    #[serde(default = "yes")]
    pub pairwise_nonlocal: bool,
}

fn yes() -> bool {
    true
}

fn check_target(target: f64) -> Result<()> {
    ensure!(target > 0.5 && target <= 1.0, "target fidelity {target} outside (0.5, 1]");
    Ok(())
}

fn check_grid(name: &str, grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    ensure!(!grid.is_empty(), "{name} is empty");
    for &x in grid {
        ensure!(x.is_finite() && (lo..=hi).contains(&x), "{name} value {x} outside [{lo}, {hi}]");
    }
    Ok(())
}

fn check_profile(k: usize) -> Result<()> {
    ensure!(k <= MAX_PROFILE_QUBITS, "subsystem size {k} exceeds the dictionary limit {MAX_PROFILE_QUBITS}");
    Ok(())
}

impl ExperimentConfig {
    pub fn new(study: Study) -> Self {
        Self { study, seed: None, output_dir: default_output_dir(), cache_dir: None }
    }

    pub fn id(&self) -> ExperimentId {
        self.study.id()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn dictionary_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("dictionaries"))
    }

    /// The seed, or an error for sampled studies that lack one.
    pub fn seed_or_default(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None if self.id().is_sampled() => bail!("{} needs --seed", self.id().as_str()),
            None => Ok(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.seed_or_default()?;
        match &self.study {
            Study::ThresholdCurve(p) => check_grid("epsilon_grid", &p.epsilon_grid, 0.0, 0.5)?,
            Study::FamilySweep(p) => {
                check_grid("alpha_sq_grid", &p.alpha_sq_grid, 0.0, 1.0)?;
                check_target(p.target)?;
                check_profile(p.lrom_max_k)?;
                ensure!(p.rounds >= 1 && p.max_rounds >= 1, "rounds must be positive");
                ensure!(
                    matches!(
                        p.family,
                        StateFamily::PhaseGhz(_)
                            | StateFamily::GhzT(_)
                            | StateFamily::Composite(_)
                            | StateFamily::NoisyProduct { .. }
                    ),
                    "family sweep needs phase_ghz, ghz_t, composite or noisy_product"
                );
            }
            Study::SqueezeStudy(p) => {
                check_grid("t_grid", &p.t_grid, f64::MIN, f64::MAX)?;
                check_target(p.target)?;
                ensure!(p.samples >= 1, "samples must be positive");
                ensure!(p.max_rounds >= 1, "max_rounds must be positive");
            }
            Study::RandomStateStudy(p) => {
                ensure!(p.samples >= 1, "samples must be positive");
                ensure!(p.lambda_min >= 0.0 && p.lambda_min < 1.0, "lambda_min outside [0, 1)");
                if let Some(f) = p.fidelity_min {
                    ensure!((0.0..=1.0).contains(&f), "fidelity_min outside [0, 1]");
                }
                check_target(p.target)?;
                check_profile(p.lrom_max_k)?;
                ensure!(p.max_attempts >= 1 && p.max_rounds >= 1, "budgets must be positive");
            }
            Study::RomReport(p) => {
                if let Some(k) = p.max_k {
                    check_profile(k)?;
                }
            }
        }
        Ok(())
    }
}
