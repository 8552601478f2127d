//! Config-driven experiment runner: executes a study, writes its CSV tables
//! and finally a JSON manifest describing the run.

pub mod amplitudes;
pub mod config;
pub mod manifest;
pub mod studies;
pub mod table;

use std::path::PathBuf;

use anyhow::{Context, Result};
use msd_core::dictionary::cache_path;
use msd_core::{BkEngine, Dictionaries};

pub use config::{ExperimentConfig, ExperimentId, Study};
pub use manifest::RunManifest;
pub use studies::StudyOutput;

#[derive(Clone, Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
    pub output: StudyOutput,
}

impl RunReport {
    pub fn table(&self, name: &str) -> Option<&table::Table> {
        self.output.tables.iter().find(|t| t.name == name)
    }
}

/// Runs the study without touching the filesystem beyond the dictionary cache.
pub fn run_study(cfg: &ExperimentConfig, dicts: &Dictionaries) -> Result<StudyOutput> {
    cfg.validate()?;
    let seed = cfg.seed_or_default()?;
    let engine = BkEngine::shared();
    Ok(match &cfg.study {
        Study::ThresholdCurve(p) => studies::run_threshold_curve(p, engine)?.to_output(),
        Study::FamilySweep(p) => studies::run_family_sweep(p, engine, dicts)?.to_output(),
        Study::SqueezeStudy(p) => studies::run_squeeze_study(p, seed, engine, dicts)?.to_output(),
        Study::RandomStateStudy(p) => studies::run_random_state_study(p, seed, engine, dicts)?.to_output(),
        Study::RomReport(p) => studies::run_rom_report(p, dicts)?.to_output(),
    })
}

/// Runs the study, writes every table into the output directory, then the
/// manifest.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let started = chrono::Utc::now();
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let cache_dir = cfg.dictionary_dir();
    std::fs::create_dir_all(&cache_dir).with_context(|| format!("creating {}", cache_dir.display()))?;
    let dicts = Dictionaries::with_cache_dir(&cache_dir);

    let output = run_study(cfg, &dicts)?;

    let mut tables = Vec::new();
    for t in &output.tables {
        let bytes = t.to_bytes()?;
        let file = t.file_name();
        std::fs::write(out.join(&file), &bytes).with_context(|| format!("writing {file}"))?;
        tables.push(manifest::TableEntry { file, rows: t.rows.len(), sha256: manifest::sha256_hex(&bytes) });
    }
    let dictionary_caches = dicts
        .loaded()
        .into_iter()
        .map(|n| {
            let path = cache_path(&cache_dir, n);
            Ok(manifest::CacheEntry { qubits: n, sha256: manifest::sha256_file(&path)?, path })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        schema_version: manifest::SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.id().as_str().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        dictionary_caches,
        tables,
        results: output.results.clone(),
    };
    manifest.write_atomic(&out)?;
    Ok(RunReport { output_dir: out, manifest, output })
}
