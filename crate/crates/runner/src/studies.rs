//! The five experiments. Each returns typed results; `to_output` turns them
//! into CSV tables plus scalar manifest entries.
//!
//! Work items run on the rayon pool, but every random draw is keyed by
//! `(seed, sample index)` and results are collected in index order, so the
//! thread count never changes the output.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use msd_core::magic::{magic_profile, nonlocal_magic, rom_of, MagicProfile};
use msd_core::states::{sample_distillable_with, stream_rng, InputState};
use msd_core::{
    BkEngine, CurvePoint, DensityOperator, Dictionaries, StateFamily, StateVector, SubsystemIndex, SweepRow,
};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::amplitudes;
use crate::config::{RandomParams, RomParams, SqueezeParams, StateSource, SweepParams, ThresholdParams};
use crate::table::{fmt_f64, fmt_opt, Table};

/// Tables plus scalar results destined for the manifest.
#[derive(Clone, Debug, Default)]
pub struct StudyOutput {
    pub tables: Vec<Table>,
    pub results: BTreeMap<String, serde_json::Value>,
}

/// Seed of the `index`-th sample of a run.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream_rng(seed, index).random::<u64>()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Mean cost over distilled entries only, and the undistillable fraction.
/// The `-1` sentinel never enters the mean.
pub fn cost_aggregate(costs: &[f64]) -> (Option<f64>, f64) {
    let good: Vec<f64> = costs.iter().copied().filter(|&c| c > 0.0).collect();
    let frac_bad = if costs.is_empty() { 0.0 } else { 1.0 - good.len() as f64 / costs.len() as f64 };
    (mean(good), frac_bad)
}

fn profile_columns(max_k: usize) -> Vec<String> {
    (1..=max_k).flat_map(|k| [format!("lrom{k}_mean"), format!("lrom{k}_max")]).collect()
}

fn profile_cells(profile: Option<&MagicProfile>, max_k: usize) -> Vec<String> {
    (1..=max_k)
        .flat_map(|k| {
            let agg = profile.and_then(|p| p.aggregate(k));
            [fmt_opt(agg.map(|a| a.mean)), fmt_opt(agg.map(|a| a.max))]
        })
        .collect()
}

// ---------------------------------------------------------------- threshold

#[derive(Clone, Debug)]
pub struct ThresholdOutput {
    pub points: Vec<CurvePoint>,
    pub epsilon_star: f64,
}

pub fn run_threshold_curve(p: &ThresholdParams, engine: &BkEngine) -> Result<ThresholdOutput> {
    Ok(ThresholdOutput { points: engine.output_fidelity_curve(&p.epsilon_grid)?, epsilon_star: engine.threshold()? })
}

impl ThresholdOutput {
    pub fn to_output(&self) -> StudyOutput {
        let mut t = Table::new(
            "threshold_curve",
            &["epsilon", "input_fidelity", "output_fidelity", "success_probability"],
        );
        for pt in &self.points {
            t.push(vec![
                fmt_f64(pt.epsilon),
                fmt_f64(pt.input_fidelity),
                fmt_f64(pt.output_fidelity),
                fmt_f64(pt.success_probability),
            ]);
        }
        let p_max = self.points.iter().map(|p| p.success_probability).fold(f64::NEG_INFINITY, f64::max);
        let mut results = BTreeMap::new();
        results.insert("epsilon_star".into(), json!(self.epsilon_star));
        results.insert("max_success_probability".into(), json!(p_max));
        StudyOutput { tables: vec![t], results }
    }
}

// ---------------------------------------------------------------- family sweep

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub row: SweepRow,
    /// `prod 5/p_k` to reach the target, or -1.
    pub cost: f64,
    pub rounds_used: usize,
    pub profile: Option<MagicProfile>,
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub points: Vec<SweepPoint>,
    pub rounds: usize,
    pub lrom_max_k: usize,
}

pub fn run_family_sweep(p: &SweepParams, engine: &BkEngine, dicts: &Dictionaries) -> Result<SweepOutput> {
    let rows = engine.distillability_sweep(&p.family, &p.alpha_sq_grid, p.target, p.rounds)?;
    let points = rows
        .into_par_iter()
        .map(|row| {
            let rho = p.family.with_alpha_squared(row.alpha_sq)?.build()?.density();
            let trace = engine.iterate(&rho, p.target, p.max_rounds)?;
            let profile = if p.lrom_max_k > 0 {
                Some(magic_profile(&rho, p.lrom_max_k.min(rho.n_qubits()), dicts)?)
            } else {
                None
            };
            Ok(SweepPoint { row, cost: trace.cost, rounds_used: trace.rounds_used, profile })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput { points, rounds: p.rounds, lrom_max_k: p.lrom_max_k })
}

impl SweepOutput {
    pub fn to_output(&self) -> StudyOutput {
        let mut header: Vec<String> =
            ["alpha_sq", "success_probability", "first_round_at_target", "cost", "rounds_used"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        header.extend((1..=self.rounds).map(|r| format!("fidelity_round{r}")));
        header.extend((1..=self.rounds).map(|r| format!("success_round{r}")));
        header.extend(profile_columns(self.lrom_max_k));
        let mut main = Table::with_header("family_sweep", header);
        let mut prof = Table::new("family_sweep_profile", &["alpha_sq", "subsystem", "k", "lrom"]);
        for pt in &self.points {
            let r = &pt.row;
            let mut cells = vec![
                fmt_f64(r.alpha_sq),
                fmt_f64(r.success_probability),
                r.first_round_at_target.map(|x| x.to_string()).unwrap_or_default(),
                fmt_f64(pt.cost),
                pt.rounds_used.to_string(),
            ];
            cells.extend((0..self.rounds).map(|i| fmt_opt(r.round_fidelities.get(i).copied())));
            cells.extend((0..self.rounds).map(|i| fmt_opt(r.round_success.get(i).copied())));
            cells.extend(profile_cells(pt.profile.as_ref(), self.lrom_max_k));
            main.push(cells);
            for m in pt.profile.iter().flat_map(|p| &p.rows) {
                prof.push(vec![fmt_f64(r.alpha_sq), label(&m.subsystem), m.k.to_string(), fmt_f64(m.lrom)]);
            }
        }
        let costs: Vec<f64> = self.points.iter().map(|p| p.cost).collect();
        let (mean_cost, undistillable) = cost_aggregate(&costs);
        let mut results = BTreeMap::new();
        results.insert("mean_cost_distillable".into(), json!(mean_cost));
        results.insert("undistillable_fraction".into(), json!(undistillable));
        let mut tables = vec![main];
        if self.lrom_max_k > 0 {
            tables.push(prof);
        }
        StudyOutput { tables, results }
    }
}

fn label(qubits: &[usize]) -> String {
    qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join("-")
}

// ---------------------------------------------------------------- squeezing

/// Entanglement and magic of qubit 0 and the pair (0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalSummary {
    pub s1: f64,
    pub lrom1: f64,
    pub lrom2: f64,
    /// `lrom(0,1) - lrom(0) - lrom(1)`.
    pub nonlocal12: f64,
}

fn local_summary(rho: &DensityOperator, dicts: &Dictionaries) -> Result<LocalSummary> {
    let (a, b) = (SubsystemIndex::single(0), SubsystemIndex::single(1));
    let r0 = rho.partial_trace(&a)?;
    let lrom1 = rom_of(&r0, dicts)?.lrom;
    let lrom2 = rom_of(&rho.partial_trace(&a.union(&b))?, dicts)?.lrom;
    Ok(LocalSummary {
        s1: r0.von_neumann_entropy(),
        lrom1,
        lrom2,
        nonlocal12: nonlocal_magic(rho, &a, &b, dicts)?,
    })
}

#[derive(Clone, Debug)]
pub struct SqueezeSample {
    pub t: f64,
    pub sample: usize,
    pub seed: u64,
    pub success_probability: f64,
    pub final_fidelity: Option<f64>,
    pub rounds_used: usize,
    pub cost: f64,
    pub summary: Option<LocalSummary>,
}

impl SqueezeSample {
    pub fn distillable(&self) -> bool {
        self.cost > 0.0
    }
}

#[derive(Clone, Debug)]
pub struct SqueezeOutput {
    pub t_grid: Vec<f64>,
    /// Ordered by grid index, then sample index.
    pub samples: Vec<SqueezeSample>,
}

pub fn run_squeeze_study(
    p: &SqueezeParams,
    seed: u64,
    engine: &BkEngine,
    dicts: &Dictionaries,
) -> Result<SqueezeOutput> {
    let seeds: Vec<u64> = (0..p.samples as u64).map(|i| derive_seed(seed, i)).collect();
    let initial: Vec<InputState> = seeds.iter().map(|&s| p.initial.family(s).build()).collect::<Result<_, _>>()?;
    let unitaries: Vec<_> = p.t_grid.iter().map(|&t| p.protocol.unitary(t)).collect();
    let jobs: Vec<(usize, usize)> =
        (0..p.t_grid.len()).flat_map(|ti| (0..p.samples).map(move |si| (ti, si))).collect();
    let samples = jobs
        .into_par_iter()
        .map(|(ti, si)| {
            let u = &unitaries[ti];
            let rho = match &initial[si] {
                InputState::Pure(psi) => psi.apply(u)?.density(),
                InputState::Mixed(rho) => rho.conjugate(u)?,
            };
            let trace = engine.iterate(&rho, p.target, p.max_rounds)?;
            let summary = if p.magic_summaries { Some(local_summary(&rho, dicts)?) } else { None };
            Ok(SqueezeSample {
                t: p.t_grid[ti],
                sample: si,
                seed: seeds[si],
                success_probability: trace.rounds.first().map_or(0.0, |r| r.success_probability),
                final_fidelity: trace.final_fidelity(),
                rounds_used: trace.rounds_used,
                cost: trace.cost,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SqueezeOutput { t_grid: p.t_grid.clone(), samples })
}

#[derive(Clone, Debug)]
pub struct SqueezeSummary {
    pub t: f64,
    pub samples: usize,
    pub distillable_fraction: f64,
    pub mean_cost_distillable: Option<f64>,
}

impl SqueezeOutput {
    /// Samples at the `ti`-th grid point.
    pub fn at(&self, ti: usize) -> impl Iterator<Item = &SqueezeSample> {
        let per_t = self.samples.len() / self.t_grid.len();
        self.samples[ti * per_t..(ti + 1) * per_t].iter()
    }

    pub fn summaries(&self) -> Vec<SqueezeSummary> {
        (0..self.t_grid.len())
            .map(|ti| {
                let costs: Vec<f64> = self.at(ti).map(|s| s.cost).collect();
                let (mean_cost, bad) = cost_aggregate(&costs);
                SqueezeSummary {
                    t: self.t_grid[ti],
                    samples: costs.len(),
                    distillable_fraction: 1.0 - bad,
                    mean_cost_distillable: mean_cost,
                }
            })
            .collect()
    }

    pub fn to_output(&self) -> StudyOutput {
        let mut st = Table::new(
            "squeeze_samples",
            &[
                "t", "sample", "seed", "distillable", "cost", "rounds_used", "success_probability",
                "final_fidelity", "s1", "lrom1", "lrom2", "nonlocal_lrom_1_2",
            ],
        );
        for s in &self.samples {
            let m = s.summary;
            st.push(vec![
                fmt_f64(s.t),
                s.sample.to_string(),
                s.seed.to_string(),
                (s.distillable() as u8).to_string(),
                fmt_f64(s.cost),
                s.rounds_used.to_string(),
                fmt_f64(s.success_probability),
                fmt_opt(s.final_fidelity),
                fmt_opt(m.map(|m| m.s1)),
                fmt_opt(m.map(|m| m.lrom1)),
                fmt_opt(m.map(|m| m.lrom2)),
                fmt_opt(m.map(|m| m.nonlocal12)),
            ]);
        }
        let mut sum = Table::new(
            "squeeze_summary",
            &[
                "t", "samples", "distillable_fraction", "undistillable_fraction", "mean_cost_distillable",
                "mean_s1", "mean_lrom1", "mean_lrom2", "mean_nonlocal_lrom_1_2",
            ],
        );
        for (ti, s) in self.summaries().iter().enumerate() {
            let ms: Vec<LocalSummary> = self.at(ti).filter_map(|x| x.summary).collect();
            sum.push(vec![
                fmt_f64(s.t),
                s.samples.to_string(),
                fmt_f64(s.distillable_fraction),
                fmt_f64(1.0 - s.distillable_fraction),
                fmt_opt(s.mean_cost_distillable),
                fmt_opt(mean(ms.iter().map(|m| m.s1))),
                fmt_opt(mean(ms.iter().map(|m| m.lrom1))),
                fmt_opt(mean(ms.iter().map(|m| m.lrom2))),
                fmt_opt(mean(ms.iter().map(|m| m.nonlocal12))),
            ]);
        }
        let best = self.summaries().iter().map(|s| s.distillable_fraction).fold(0.0, f64::max);
        let mut results = BTreeMap::new();
        results.insert("best_distillable_fraction".into(), json!(best));
        StudyOutput { tables: vec![st, sum], results }
    }
}

// ---------------------------------------------------------------- random states

#[derive(Clone, Debug)]
pub struct RandomSample {
    /// `None` for the encoded-T reference row.
    pub index: Option<usize>,
    pub attempts: usize,
    pub lambda_abs: f64,
    pub round1_fidelity: f64,
    pub cost: f64,
    pub rounds_used: usize,
    /// Entropy of each single qubit.
    pub s1: Vec<f64>,
    /// Entropy of each pair, in `all_of_size(5, 2)` order.
    pub s2: Vec<f64>,
    pub profile: Option<MagicProfile>,
}

impl RandomSample {
    pub fn lrom_mean(&self, k: usize) -> Option<f64> {
        self.profile.as_ref().and_then(|p| p.aggregate(k)).map(|a| a.mean)
    }
}

#[derive(Clone, Debug)]
pub struct RandomOutput {
    pub reference: RandomSample,
    pub samples: Vec<RandomSample>,
    pub states: Vec<StateVector>,
    pub lambda_min: f64,
    pub fidelity_min: f64,
    pub lrom_max_k: usize,
    pub export_amplitudes: bool,
}

fn analyse_pure(
    psi: &StateVector,
    index: Option<usize>,
    attempts: usize,
    p: &RandomParams,
    engine: &BkEngine,
    dicts: &Dictionaries,
) -> Result<RandomSample> {
    let rho = psi.density();
    let (lambda, _) = engine.pure_round(psi)?;
    let trace = engine.iterate(&rho, p.target, p.max_rounds)?;
    let n = rho.n_qubits();
    let entropy = |k| -> Result<Vec<f64>> {
        SubsystemIndex::all_of_size(n, k)
            .iter()
            .map(|s| Ok(rho.partial_trace(s)?.von_neumann_entropy()))
            .collect()
    };
    let profile = if p.lrom_max_k > 0 { Some(magic_profile(&rho, p.lrom_max_k, dicts)?) } else { None };
    Ok(RandomSample {
        index,
        attempts,
        lambda_abs: lambda.abs(),
        round1_fidelity: trace.rounds.first().map_or(0.5, |r| r.output_t_fidelity),
        cost: trace.cost,
        rounds_used: trace.rounds_used,
        s1: entropy(1)?,
        s2: entropy(2)?,
        profile,
    })
}

pub fn run_random_state_study(
    p: &RandomParams,
    seed: u64,
    engine: &BkEngine,
    dicts: &Dictionaries,
) -> Result<RandomOutput> {
    let fidelity_min = match p.fidelity_min {
        Some(f) => f,
        None => 1.0 - engine.threshold()?,
    };
    let drawn = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let (psi, stats) = sample_distillable_with(engine, p.lambda_min, fidelity_min, p.max_attempts, &mut rng)
                .with_context(|| format!("sample {i}"))?;
            let row = analyse_pure(&psi, Some(i), stats.attempts, p, engine, dicts)?;
            Ok((psi, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = match StateFamily::EncodedT.build()? {
        InputState::Pure(psi) => analyse_pure(&psi, None, 1, p, engine, dicts)?,
        InputState::Mixed(_) => unreachable!("encoded T is pure"),
    };
    let (states, samples) = drawn.into_iter().unzip();
    Ok(RandomOutput {
        reference,
        samples,
        states,
        lambda_min: p.lambda_min,
        fidelity_min,
        lrom_max_k: p.lrom_max_k,
        export_amplitudes: p.export_amplitudes,
    })
}

impl RandomOutput {
    pub fn total_attempts(&self) -> usize {
        self.samples.iter().map(|s| s.attempts).sum()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.samples.len() as f64 / self.total_attempts().max(1) as f64
    }

    pub fn mean_lrom1(&self) -> Option<f64> {
        mean(self.samples.iter().filter_map(|s| s.lrom_mean(1)))
    }

    pub fn mean_s1(&self) -> f64 {
        mean(self.samples.iter().flat_map(|s| s.s1.iter().copied())).unwrap_or(0.0)
    }

    pub fn to_output(&self) -> StudyOutput {
        let n = 5;
        let pairs = SubsystemIndex::all_of_size(n, 2);
        let mut header: Vec<String> =
            ["kind", "sample", "attempts", "lambda_abs", "round1_fidelity", "cost", "rounds_used", "s1_mean", "s2_mean"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        header.extend((0..n).map(|q| format!("s1_{q}")));
        header.extend(pairs.iter().map(|s| format!("s2_{}", s.label())));
        header.extend(profile_columns(self.lrom_max_k));
        let mut main = Table::with_header("random_samples", header);
        let mut prof = Table::new("random_profile", &["kind", "sample", "subsystem", "k", "lrom"]);
        for s in std::iter::once(&self.reference).chain(&self.samples) {
            let kind = if s.index.is_some() { "random" } else { "encoded_t" };
            let idx = s.index.map(|i| i.to_string()).unwrap_or_default();
            let mut cells = vec![
                kind.to_string(),
                idx.clone(),
                s.attempts.to_string(),
                fmt_f64(s.lambda_abs),
                fmt_f64(s.round1_fidelity),
                fmt_f64(s.cost),
                s.rounds_used.to_string(),
                fmt_opt(mean(s.s1.iter().copied())),
                fmt_opt(mean(s.s2.iter().copied())),
            ];
            cells.extend(s.s1.iter().map(|&x| fmt_f64(x)));
            cells.extend(s.s2.iter().map(|&x| fmt_f64(x)));
            cells.extend(profile_cells(s.profile.as_ref(), self.lrom_max_k));
            main.push(cells);
            for m in s.profile.iter().flat_map(|p| &p.rows) {
                prof.push(vec![kind.into(), idx.clone(), label(&m.subsystem), m.k.to_string(), fmt_f64(m.lrom)]);
            }
        }
        let costs: Vec<f64> = self.samples.iter().map(|s| s.cost).collect();
        let (mean_cost, bad) = cost_aggregate(&costs);
        let mut summary = Table::new(
            "random_summary",
            &[
                "samples", "attempts", "acceptance_rate", "lambda_min", "fidelity_min", "mean_lambda_abs",
                "mean_round1_fidelity", "mean_s1", "mean_lrom1", "distillable_fraction", "undistillable_fraction",
                "mean_cost_distillable",
            ],
        );
        summary.push(vec![
            self.samples.len().to_string(),
            self.total_attempts().to_string(),
            fmt_f64(self.acceptance_rate()),
            fmt_f64(self.lambda_min),
            fmt_f64(self.fidelity_min),
            fmt_opt(mean(self.samples.iter().map(|s| s.lambda_abs))),
            fmt_opt(mean(self.samples.iter().map(|s| s.round1_fidelity))),
            fmt_f64(self.mean_s1()),
            fmt_opt(self.mean_lrom1()),
            fmt_f64(1.0 - bad),
            fmt_f64(bad),
            fmt_opt(mean_cost),
        ]);
        let mut tables = vec![main, summary];
        if self.lrom_max_k > 0 {
            tables.push(prof);
        }
        if self.export_amplitudes {
            let mut amps = Table::new("random_amplitudes", &["sample", "index", "re", "im"]);
            for (i, psi) in self.states.iter().enumerate() {
                for row in amplitudes::to_table("", psi).rows {
                    let mut cells = vec![i.to_string()];
                    cells.extend(row);
                    amps.push(cells);
                }
            }
            tables.push(amps);
        }
        let mut results = BTreeMap::new();
        results.insert("acceptance_rate".into(), json!(self.acceptance_rate()));
        results.insert("fidelity_min".into(), json!(self.fidelity_min));
        results.insert("mean_s1".into(), json!(self.mean_s1()));
        results.insert("mean_lrom1".into(), json!(self.mean_lrom1()));
        StudyOutput { tables, results }
    }
}

// ---------------------------------------------------------------- ROM report

#[derive(Clone, Debug)]
pub struct RomOutput {
    pub n_qubits: usize,
    pub profile: MagicProfile,
    /// `(i, j, lrom(i:j))`.
    pub nonlocal: Vec<(usize, usize, f64)>,
}

pub fn load_state(source: &StateSource) -> Result<DensityOperator> {
    Ok(match source {
        StateSource::Family { spec } => spec.build()?.density(),
        StateSource::File { path } => amplitudes::read(path)?.density(),
    })
}

pub fn run_rom_report(p: &RomParams, dicts: &Dictionaries) -> Result<RomOutput> {
    let rho = load_state(&p.state)?;
    let n = rho.n_qubits();
    let max_k = p.max_k.unwrap_or(n.min(crate::config::MAX_PROFILE_QUBITS)).min(n);
    let profile = magic_profile(&rho, max_k, dicts)?;
    let mut nonlocal = Vec::new();
    if p.pairwise_nonlocal && n >= 2 {
        for i in 0..n {
            for j in i + 1..n {
                let v = nonlocal_magic(&rho, &SubsystemIndex::single(i), &SubsystemIndex::single(j), dicts)?;
                nonlocal.push((i, j, v));
            }
        }
    }
    Ok(RomOutput { n_qubits: n, profile, nonlocal })
}

impl RomOutput {
    pub fn to_output(&self) -> StudyOutput {
        let mut t = Table::new("rom_report", &["kind", "subsystem", "k", "lrom", "rom"]);
        for m in &self.profile.rows {
            t.push(vec!["lrom".into(), label(&m.subsystem), m.k.to_string(), fmt_f64(m.lrom), fmt_f64(m.lrom.exp())]);
        }
        for &(i, j, v) in &self.nonlocal {
            t.push(vec!["nonlocal".into(), format!("{i}:{j}"), "2".into(), fmt_f64(v), String::new()]);
        }
        let mut results = BTreeMap::new();
        results.insert("n_qubits".into(), json!(self.n_qubits));
        StudyOutput { tables: vec![t], results }
    }
}
