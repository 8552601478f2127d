use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use msd_core::states::{BlockFamily, CompositeSpec, GhzTSpec, PhaseGhzSpec, SqueezeProtocol};
use msd_core::{theta_t, StateFamily};
use msd_runner::config::{
    InitialState, RandomParams, RomParams, SqueezeParams, StateSource, SweepParams, ThresholdParams,
    OUTPUT_DIR_ENV,
};
use msd_runner::{execute, ExperimentConfig, Study};

#[derive(Parser)]
#[command(name = "msd", version, about = "Magic state distillation experiments on entangled inputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; its fields take precedence over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed; mandatory for `squeeze` and `sample`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overridden by $MSD_OUTPUT_DIR).
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Stabilizer dictionary cache [default: <out>/dictionaries].
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Output fidelity versus input error and the threshold eps*.
    Threshold {
        #[command(flatten)]
        common: Common,
        /// Error grid: comma list or `start:stop:step`.
        #[arg(long, default_value = "0:0.5:0.01")]
        epsilon_grid: String,
    },
    /// Round-by-round distillation and subsystem magic across alpha^2.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "phase-ghz")]
        family: FamilyArg,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        phi: f64,
        /// Block sizes for `composite`, e.g. `2,2`.
        #[arg(long, default_value = "2,2")]
        blocks: String,
        #[arg(long, value_enum, default_value = "phase-ghz")]
        block_family: FamilyArg,
        #[arg(long, default_value_t = 1)]
        zero_pad: usize,
        #[arg(long, default_value = "0:1:0.05")]
        alpha_sq_grid: String,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 0.97)]
        target: f64,
        #[arg(long, default_value_t = 15)]
        max_rounds: usize,
        #[arg(long, default_value_t = 4)]
        lrom_max_k: usize,
    },
    /// Distillability of misaligned or noisy states after spin squeezing.
    Squeeze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "one-axis")]
        protocol: ProtocolArg,
        #[arg(long, value_enum, default_value = "misaligned")]
        initial: InitialArg,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        theta_bar: f64,
        #[arg(long, default_value_t = 0.05)]
        theta_max: f64,
        /// Mean Bloch angle of the noisy near-T start [default: the T angle].
        #[arg(long)]
        beta_bar: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        beta_max: f64,
        /// Mean purity weight [default: 1 - p_max].
        #[arg(long)]
        p_bar: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        p_max: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        phi: f64,
        #[arg(long, default_value = "0:1:0.1")]
        t_grid: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0.97)]
        target: f64,
        #[arg(long, default_value_t = 15)]
        max_rounds: usize,
        /// Skip the per-sample entropy and magic columns.
        #[arg(long)]
        no_magic: bool,
    },
    /// Haar-random states that pass one distillation round.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0.16)]
        lambda_min: f64,
        /// Round-1 fidelity floor [default: 1 - eps*].
        #[arg(long)]
        fidelity_min: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_attempts: usize,
        #[arg(long, default_value_t = 0.999)]
        target: f64,
        #[arg(long, default_value_t = 15)]
        max_rounds: usize,
        #[arg(long, default_value_t = 4)]
        lrom_max_k: usize,
        #[arg(long)]
        export_amplitudes: bool,
    },
    /// Subsystem magic profile of one state.
    Rom {
        #[command(flatten)]
        common: Common,
        /// Amplitude CSV with columns index,re,im.
        #[arg(long, conflicts_with = "family")]
        amplitudes: Option<PathBuf>,
        /// State family as JSON, e.g. '{"family":"ghz_t","n":4,"alpha":0.8}'.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        max_k: Option<usize>,
        #[arg(long)]
        no_nonlocal: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    PhaseGhz,
    GhzT,
    Product,
    Composite,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    OneAxis,
    TwoAxis,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialArg {
    Misaligned,
    MixedNearT,
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>()?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if step <= 0.0 || hi < lo {
            bail!("grid {s:?} needs start <= stop and step > 0");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + step * i as f64).collect());
    }
    s.split(',').map(|p| p.trim().parse::<f64>().with_context(|| format!("grid value {p:?}"))).collect()
}

fn family_arg(f: FamilyArg, phi: f64, blocks: &str, block_family: FamilyArg, zero_pad: usize) -> Result<StateFamily> {
    Ok(match f {
        FamilyArg::PhaseGhz => StateFamily::PhaseGhz(PhaseGhzSpec { n: 5, alpha: 1.0, phi }),
        FamilyArg::GhzT => StateFamily::GhzT(GhzTSpec { n: 5, alpha: 1.0, phi }),
        FamilyArg::Product => StateFamily::NoisyProduct { epsilon: 0.0 },
        FamilyArg::Composite => {
            let sizes: Vec<usize> =
                blocks.split(',').map(|b| b.trim().parse::<usize>()).collect::<Result<_, _>>()?;
            let bf = match block_family {
                FamilyArg::PhaseGhz => BlockFamily::PhaseGhz,
                FamilyArg::GhzT => BlockFamily::GhzT,
                _ => bail!("composite blocks are phase-ghz or ghz-t"),
            };
            StateFamily::Composite(CompositeSpec::uniform(bf, &sizes, zero_pad, 1.0, phi))
        }
    })
}

fn study_from_flags(cmd: &Command) -> Result<Study> {
    Ok(match cmd {
        Command::Threshold { epsilon_grid, .. } => {
            Study::ThresholdCurve(ThresholdParams { epsilon_grid: parse_grid(epsilon_grid)? })
        }
        Command::Sweep {
            family, phi, blocks, block_family, zero_pad, alpha_sq_grid, rounds, target, max_rounds, lrom_max_k, ..
        } => Study::FamilySweep(SweepParams {
            family: family_arg(*family, *phi, blocks, *block_family, *zero_pad)?,
            alpha_sq_grid: parse_grid(alpha_sq_grid)?,
            rounds: *rounds,
            target: *target,
            max_rounds: *max_rounds,
            lrom_max_k: *lrom_max_k,
        }),
        Command::Squeeze {
            protocol, initial, theta_bar, theta_max, beta_bar, beta_max, p_bar, p_max, phi, t_grid, samples,
            target, max_rounds, no_magic, ..
        } => Study::SqueezeStudy(SqueezeParams {
            protocol: match protocol {
                ProtocolArg::OneAxis => SqueezeProtocol::OneAxis,
                ProtocolArg::TwoAxis => SqueezeProtocol::TwoAxis,
            },
            initial: match initial {
                InitialArg::Misaligned => InitialState::Misaligned { theta_bar: *theta_bar, theta_max: *theta_max },
                InitialArg::MixedNearT => InitialState::MixedNearT {
                    beta_bar: beta_bar.unwrap_or_else(theta_t),
                    beta_max: *beta_max,
                    p_bar: p_bar.unwrap_or(1.0 - p_max),
                    p_max: *p_max,
                    phi: *phi,
                },
            },
            t_grid: parse_grid(t_grid)?,
            samples: *samples,
            target: *target,
            max_rounds: *max_rounds,
            magic_summaries: !no_magic,
        }),
        Command::Sample {
            samples, lambda_min, fidelity_min, max_attempts, target, max_rounds, lrom_max_k, export_amplitudes, ..
        } => Study::RandomStateStudy(RandomParams {
            samples: *samples,
            lambda_min: *lambda_min,
            fidelity_min: *fidelity_min,
            max_attempts: *max_attempts,
            target: *target,
            max_rounds: *max_rounds,
            lrom_max_k: *lrom_max_k,
            export_amplitudes: *export_amplitudes,
        }),
        Command::Rom { amplitudes, family, max_k, no_nonlocal, .. } => {
            let state = match (amplitudes, family) {
                (Some(path), None) => StateSource::File { path: path.clone() },
                (None, Some(json)) => StateSource::Family {
                    spec: serde_json::from_str(json).context("parsing --family")?,
                },
                _ => bail!("rom needs exactly one of --amplitudes or --family"),
            };
            Study::RomReport(RomParams { state, max_k: *max_k, pairwise_nonlocal: !no_nonlocal })
        }
    })
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Threshold { common, .. }
        | Command::Sweep { common, .. }
        | Command::Squeeze { common, .. }
        | Command::Sample { common, .. }
        | Command::Rom { common, .. } => common,
    }
}

fn resolve(cmd: &Command) -> Result<ExperimentConfig> {
    let c = common(cmd);
    let mut cfg = match &c.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::from_json_file(path)?;
            let want = study_id(cmd);
            if cfg.id().as_str() != want {
                bail!("config is a {} experiment, not {want}", cfg.id().as_str());
            }
            // Flags still fill in whatever the file leaves unset.
            let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if raw.get("output_dir").is_none() {
                cfg.output_dir = c.out.clone();
            }
            if cfg.cache_dir.is_none() {
                cfg.cache_dir = c.cache_dir.clone();
            }
            cfg
        }
        None => {
            let mut cfg = ExperimentConfig::new(study_from_flags(cmd)?);
            cfg.output_dir = c.out.clone();
            cfg.cache_dir = c.cache_dir.clone();
            cfg
        }
    };
    if cfg.seed.is_none() {
        cfg.seed = c.seed;
    }
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn study_id(cmd: &Command) -> &'static str {
    match cmd {
        Command::Threshold { .. } => "threshold_curve",
        Command::Sweep { .. } => "family_sweep",
        Command::Squeeze { .. } => "squeeze_study",
        Command::Sample { .. } => "random_state_study",
        Command::Rom { .. } => "rom_report",
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = resolve(&cli.command)?;
    let report = execute(&cfg)?;
    println!("{} -> {}", report.manifest.experiment, report.output_dir.display());
    for t in &report.manifest.tables {
        println!("  {} ({} rows)", t.file, t.rows);
    }
    for (k, v) in &report.manifest.results {
        println!("  {k} = {v}");
    }
    Ok(())
}
