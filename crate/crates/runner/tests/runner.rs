use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::process::Command;

use msd_core::states::{GhzTSpec, PhaseGhzSpec, SqueezeProtocol};
use msd_core::{t0, StateFamily, StateVector, C64};
use msd_runner::config::*;
use msd_runner::manifest::{sha256_file, RunManifest, MANIFEST_FILE};
use msd_runner::studies::{cost_aggregate, derive_seed};
use msd_runner::table::Table;
use msd_runner::{amplitudes, execute, ExperimentConfig, RunReport, Study};

fn run_in(dir: &Path, study: Study, seed: Option<u64>) -> RunReport {
    let mut cfg = ExperimentConfig::new(study);
    cfg.seed = seed;
    cfg.output_dir = dir.to_path_buf();
    execute(&cfg).unwrap()
}

fn floats(report: &RunReport, table: &str, col: &str) -> Vec<Option<f64>> {
    report.table(table).unwrap().floats(col).unwrap()
}

fn squeeze(protocol: SqueezeProtocol, theta_bar: f64, t_grid: Vec<f64>, samples: usize) -> Study {
    Study::SqueezeStudy(SqueezeParams {
        protocol,
        initial: InitialState::Misaligned { theta_bar, theta_max: 0.05 },
        t_grid,
        samples,
        magic_summaries: false,
        ..SqueezeParams::default()
    })
}

#[test]
fn threshold_curve_examples() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), Study::ThresholdCurve(ThresholdParams::default()), None);
    let eps = r.manifest.results["epsilon_star"].as_f64().unwrap();
    assert!((eps - 0.173).abs() < 0.003, "{eps}");
    let p = floats(&r, "threshold_curve", "success_probability");
    let e = floats(&r, "threshold_curve", "epsilon");
    let f = floats(&r, "threshold_curve", "output_fidelity");
    let (imax, pmax) = p.iter().enumerate().fold((0, 0.0), |acc, (i, x)| if x.unwrap() > acc.1 { (i, x.unwrap()) } else { acc });
    assert_eq!(e[imax], Some(0.0));
    assert!((pmax - 1.0 / 6.0).abs() < 1e-11);
    assert!((f.last().unwrap().unwrap() - 0.5).abs() < 1e-11);
    assert_eq!(e.last().unwrap().unwrap(), 0.5);
}

#[test]
fn config_validation() {
    let bad = [
        Study::ThresholdCurve(ThresholdParams { epsilon_grid: vec![] }),
        Study::ThresholdCurve(ThresholdParams { epsilon_grid: vec![0.6] }),
        Study::FamilySweep(SweepParams { target: 0.4, ..SweepParams::default() }),
        Study::FamilySweep(SweepParams { lrom_max_k: 5, ..SweepParams::default() }),
        Study::FamilySweep(SweepParams { family: StateFamily::EncodedT, ..SweepParams::default() }),
        Study::RandomStateStudy(RandomParams { target: 1.2, ..RandomParams::default() }),
    ];
    for study in bad {
        assert!(ExperimentConfig::new(study.clone()).validate().is_err(), "{study:?}");
    }
    let needs_seed = ExperimentConfig::new(Study::RandomStateStudy(RandomParams::default()));
    assert!(needs_seed.validate().unwrap_err().to_string().contains("seed"));
}

#[test]
fn config_file_uses_defaults() {
    let text = r#"{"experiment":"squeeze_study","seed":7,"protocol":"two_axis","samples":3}"#;
    let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
    cfg.validate().unwrap();
    match &cfg.study {
        Study::SqueezeStudy(p) => {
            assert_eq!(p.protocol, SqueezeProtocol::TwoAxis);
            assert_eq!(p.samples, 3);
            assert_eq!(p.t_grid.len(), 11);
            assert_eq!(p.target, 0.97);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(cfg.seed, Some(7));
}

#[test]
fn product_sweep_distills_only_at_tails() {
    let dir = tempfile::tempdir().unwrap();
    let study = Study::FamilySweep(SweepParams {
        family: StateFamily::NoisyProduct { epsilon: 0.0 },
        lrom_max_k: 0,
        ..SweepParams::default()
    });
    let r = run_in(dir.path(), study, None);
    let eps = 0.1727;
    let a = floats(&r, "family_sweep", "alpha_sq");
    let cost = floats(&r, "family_sweep", "cost");
    for (a, c) in a.iter().zip(&cost) {
        let (a, c) = (a.unwrap(), c.unwrap());
        let tail = a < eps || a > 1.0 - eps;
        assert_eq!(c > 0.0, tail, "alpha^2 = {a}");
    }
    assert!(r.table("family_sweep_profile").is_none());
}

#[test]
fn phase_ghz_has_no_subsystem_magic_and_ghz_t_keeps_success_high() {
    let dir = tempfile::tempdir().unwrap();
    let grid = linspace(0.0, 1.0, 10);
    let pg = Study::FamilySweep(SweepParams {
        family: StateFamily::PhaseGhz(PhaseGhzSpec { n: 5, alpha: 1.0, phi: FRAC_PI_4 }),
        alpha_sq_grid: grid.clone(),
        ..SweepParams::default()
    });
    let r = run_in(&dir.path().join("pg"), pg, None);
    let prof = r.table("family_sweep_profile").unwrap();
    assert_eq!(prof.rows.len(), 11 * 30);
    assert!(prof.floats("lrom").unwrap().iter().all(|x| x.unwrap().abs() < 1e-6));

    let gt = Study::FamilySweep(SweepParams {
        family: StateFamily::GhzT(GhzTSpec { n: 5, alpha: 1.0, phi: FRAC_PI_4 }),
        alpha_sq_grid: grid,
        lrom_max_k: 1,
        ..SweepParams::default()
    });
    let g = run_in(&dir.path().join("gt"), gt, None);
    let pg_p = floats(&r, "family_sweep", "success_probability");
    let gt_p = floats(&g, "family_sweep", "success_probability");
    // GT never drops to the 1/16 floor of PG and the mixed product.
    for (x, y) in gt_p.iter().zip(&pg_p) {
        assert!(x.unwrap() > y.unwrap() + 0.02, "{x:?} vs {y:?}");
    }
}

#[test]
fn squeeze_examples() {
    let dir = tempfile::tempdir().unwrap();
    let grid = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let one = run_in(&dir.path().join("a"), squeeze(SqueezeProtocol::OneAxis, FRAC_PI_4, grid.clone(), 20), Some(11));
    let frac = floats(&one, "squeeze_summary", "distillable_fraction");
    assert_eq!(frac[0], Some(0.0));
    let costs = floats(&one, "squeeze_samples", "cost");
    assert!(costs[..20].iter().all(|c| c.unwrap() == -1.0));
    assert!(frac[1..].iter().any(|f| f.unwrap() > 0.5));

    let z = run_in(&dir.path().join("z"), squeeze(SqueezeProtocol::OneAxis, 0.0, vec![0.5], 20), Some(11));
    assert!(floats(&z, "squeeze_summary", "distillable_fraction")[0].unwrap() > 0.5);

    let two = run_in(&dir.path().join("b"), squeeze(SqueezeProtocol::TwoAxis, FRAC_PI_4, grid, 20), Some(11));
    assert!(floats(&two, "squeeze_summary", "distillable_fraction").iter().all(|f| f.unwrap() == 0.0));
}

#[test]
fn squeeze_magic_summaries_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let study = Study::SqueezeStudy(SqueezeParams {
        t_grid: vec![0.0, 0.3],
        samples: 4,
        ..SqueezeParams::default()
    });
    let r = run_in(dir.path(), study, Some(5));
    let s1 = floats(&r, "squeeze_samples", "s1");
    // Product input: no entanglement before squeezing, some after.
    assert!(s1[..4].iter().all(|x| x.unwrap().abs() < 1e-9));
    assert!(s1[4..].iter().all(|x| x.unwrap() > 0.01));
    let nl = floats(&r, "squeeze_samples", "nonlocal_lrom_1_2");
    assert!(nl.iter().all(|x| x.is_some()));
}

#[test]
fn random_study_reference_row_and_acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let study = Study::RandomStateStudy(RandomParams {
        samples: 8,
        lrom_max_k: 1,
        export_amplitudes: true,
        ..RandomParams::default()
    });
    let r = run_in(dir.path(), study, Some(3));
    let t = r.table("random_samples").unwrap();
    assert_eq!(t.rows.len(), 9);
    let kind = t.column("kind").unwrap();
    assert_eq!(t.rows[0][kind], "encoded_t");
    let lam = t.floats("lambda_abs").unwrap();
    let fid = t.floats("round1_fidelity").unwrap();
    assert!((lam[0].unwrap() - 1.0).abs() < 1e-9 && (fid[0].unwrap() - 1.0).abs() < 1e-9);
    let fmin = r.manifest.results["fidelity_min"].as_f64().unwrap();
    for i in 1..9 {
        assert!(lam[i].unwrap() > 0.16);
        assert!(fid[i].unwrap() > fmin);
    }
    let amps = r.table("random_amplitudes").unwrap();
    assert_eq!(amps.rows.len(), 8 * 32);
    let s = r.table("random_summary").unwrap();
    let rate = s.floats("acceptance_rate").unwrap()[0].unwrap();
    assert!(rate > 0.0 && rate <= 1.0);
}

#[test]
fn exported_amplitudes_reproduce_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let study = Study::RandomStateStudy(RandomParams { samples: 2, lrom_max_k: 0, export_amplitudes: true, ..RandomParams::default() });
    let r = run_in(dir.path(), study, Some(9));
    let amps = r.table("random_amplitudes").unwrap();
    let mut first = Table::new("s0", &amplitudes::HEADER);
    for row in amps.rows.iter().filter(|row| row[0] == "0") {
        first.push(row[1..].to_vec());
    }
    first.write_to(dir.path()).unwrap();
    let psi = amplitudes::read(&dir.path().join("s0.csv")).unwrap();
    let (lambda, _) = msd_core::BkEngine::shared().pure_round(&psi).unwrap();
    let want = floats(&r, "random_samples", "lambda_abs")[1].unwrap();
    assert!((lambda.abs() - want).abs() < 1e-10);
}

fn rom_file(dir: &Path, name: &str, psi: &StateVector) -> Study {
    amplitudes::to_table(name, psi).write_to(dir).unwrap();
    Study::RomReport(RomParams {
        state: StateSource::File { path: dir.join(format!("{name}.csv")) },
        max_k: None,
        pairwise_nonlocal: true,
    })
}

#[test]
fn rom_report_examples() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(&dir.path().join("t"), rom_file(dir.path(), "t0", &t0()), None);
    let lrom = floats(&r, "rom_report", "lrom");
    assert_eq!(lrom.len(), 1);
    assert!((lrom[0].unwrap() - 0.5493).abs() < 1e-4);

    let s = 0.5f64.sqrt();
    let bell = StateVector::new(vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]).unwrap();
    let b = run_in(&dir.path().join("b"), rom_file(dir.path(), "bell", &bell), None);
    let rows = floats(&b, "rom_report", "lrom");
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|x| x.unwrap().abs() < 1e-6));

    let gt4 = Study::RomReport(RomParams {
        state: StateSource::Family { spec: StateFamily::GhzT(GhzTSpec { n: 4, alpha: 0.8, phi: FRAC_PI_4 }) },
        max_k: None,
        pairwise_nonlocal: true,
    });
    let g = run_in(&dir.path().join("g"), gt4, None);
    let t = g.table("rom_report").unwrap();
    assert_eq!(t.rows.len(), 15 + 6);
    let lrom = t.floats("lrom").unwrap();
    let k = t.column("k").unwrap();
    // Magic grows with subsystem size.
    let by_k = |kk: &str| lrom.iter().zip(&t.rows).filter(|(_, r)| r[0] == "lrom" && r[k] == kk).map(|(x, _)| x.unwrap()).fold(0.0, f64::max);
    assert!(by_k("1") < by_k("2") && by_k("2") < by_k("3") && by_k("3") < by_k("4"));
}

#[test]
fn manifest_matches_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let study = Study::RomReport(RomParams {
        state: StateSource::Family { spec: StateFamily::GhzT(GhzTSpec { n: 3, alpha: 0.6, phi: 0.0 }) },
        max_k: None,
        pairwise_nonlocal: true,
    });
    let r = run_in(dir.path(), study, None);
    let m = RunManifest::read(dir.path()).unwrap();
    assert_eq!(m, r.manifest);
    assert_eq!(m.schema_version, 1);
    assert_eq!(m.experiment, "rom_report");
    for t in &m.tables {
        let path = dir.path().join(&t.file);
        assert_eq!(Table::read_from(&path).unwrap().rows.len(), t.rows);
        assert_eq!(sha256_file(&path).unwrap(), t.sha256);
    }
    assert_eq!(m.dictionary_caches.iter().map(|c| c.qubits).collect::<Vec<_>>(), vec![1, 2, 3]);
    for c in &m.dictionary_caches {
        assert_eq!(sha256_file(&c.path).unwrap(), c.sha256);
    }
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.iter().any(|n| n == MANIFEST_FILE));
    assert!(!names.iter().any(|n| n.to_string_lossy().ends_with(".tmp")));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let studies = [
        (Study::ThresholdCurve(ThresholdParams::default()), None),
        (squeeze(SqueezeProtocol::OneAxis, FRAC_PI_4, vec![0.0, 0.4], 6), Some(21)),
        (Study::RandomStateStudy(RandomParams { samples: 4, lrom_max_k: 2, ..RandomParams::default() }), Some(21)),
    ];
    for (i, (study, seed)) in studies.into_iter().enumerate() {
        let a = run_in(&dir.path().join(format!("{i}a")), study.clone(), seed);
        let b = run_in(&dir.path().join(format!("{i}b")), study, seed);
        for (ta, tb) in a.manifest.tables.iter().zip(&b.manifest.tables) {
            let fa = std::fs::read(a.output_dir.join(&ta.file)).unwrap();
            let fb = std::fs::read(b.output_dir.join(&tb.file)).unwrap();
            assert_eq!(fa, fb, "{}", ta.file);
        }
    }
}

#[test]
fn seeds_change_sampled_output() {
    let dir = tempfile::tempdir().unwrap();
    let s = squeeze(SqueezeProtocol::OneAxis, FRAC_PI_4, vec![0.3], 3);
    let a = run_in(&dir.path().join("a"), s.clone(), Some(1));
    let b = run_in(&dir.path().join("b"), s, Some(2));
    assert_ne!(a.table("squeeze_samples").unwrap().rows, b.table("squeeze_samples").unwrap().rows);
    assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
}

#[test]
fn sentinel_never_enters_aggregates() {
    let (mean, bad) = cost_aggregate(&[-1.0, 30.0, -1.0, 50.0]);
    assert_eq!(mean, Some(40.0));
    assert_eq!(bad, 0.5);
    assert_eq!(cost_aggregate(&[-1.0]), (None, 1.0));
}

fn msd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_msd"));
    c.env_remove(OUTPUT_DIR_ENV);
    c
}

#[test]
fn cli_requires_seed_for_sampled_studies() {
    let dir = tempfile::tempdir().unwrap();
    let out = msd().args(["sample", "--samples", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn cli_output_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = msd()
        .args(["threshold", "--epsilon-grid", "0,0.5", "--out"])
        .arg(dir.path().join("from_flag"))
        .env(OUTPUT_DIR_ENV, &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("threshold_curve.csv").exists());
    assert!(!dir.path().join("from_flag").exists());
}

#[test]
fn cli_config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let out_dir = dir.path().join("out");
    let cfg = serde_json::json!({
        "experiment": "threshold_curve",
        "epsilon_grid": [0.0, 0.1, 0.2],
        "output_dir": out_dir,
    });
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out = msd()
        .args(["threshold", "--epsilon-grid", "0:0.5:0.1", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let t = Table::read_from(&out_dir.join("threshold_curve.csv")).unwrap();
    assert_eq!(t.rows.len(), 3);

    let wrong = msd().args(["sweep", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(!wrong.status.success());
}

#[test]
fn cli_rom_from_amplitude_file() {
    let dir = tempfile::tempdir().unwrap();
    amplitudes::to_table("t0", &t0()).write_to(dir.path()).unwrap();
    let out = msd()
        .args(["rom", "--amplitudes"])
        .arg(dir.path().join("t0.csv"))
        .arg("--out")
        .arg(dir.path().join("r"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read_from(&dir.path().join("r/rom_report.csv")).unwrap();
    assert!((t.floats("lrom").unwrap()[0].unwrap() - 0.549306144334).abs() < 1e-9);
}

#[test]
fn cli_flags_fill_fields_missing_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let cfg = serde_json::json!({ "experiment": "threshold_curve", "epsilon_grid": [0.1] });
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out_dir = dir.path().join("flag_out");
    let out = msd()
        .args(["threshold", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("threshold_curve.csv").exists());
}
