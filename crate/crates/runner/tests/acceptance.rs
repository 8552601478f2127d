//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::f64::consts::{FRAC_PI_4, LN_2};
use std::time::{Duration, Instant};

use msd_core::magic::{rom_of, t_fidelity};
use msd_core::states::{ghz_t, stream_rng, GhzTSpec, PhaseGhzSpec, SqueezeProtocol};
use msd_core::{
    code_projector, encode, five_qubit_code, noisy_t, single_qubit_clifford_group, t0,
    t1, t_type_states, BkEngine, CMatrix, DensityOperator, Dictionaries, StabilizerDictionary, StateFamily,
    SubsystemIndex, Verdict, C64,
};
use msd_runner::config::*;
use msd_runner::studies::{run_family_sweep, run_random_state_study, run_squeeze_study, run_threshold_curve};
use msd_runner::{execute, ExperimentConfig, Study};
use rand::Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        // Written this way round so NaN fails the check.
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn engine() -> &'static BkEngine {
    BkEngine::shared()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn c1_threshold() -> Check {
    let start = Instant::now();
    let out = run_threshold_curve(&ThresholdParams::default(), engine()).map_err(e)?;
    let dt = start.elapsed();
    ensure!((out.epsilon_star - 0.173).abs() <= 0.003, "eps* = {}", out.epsilon_star);
    ensure!(dt < Duration::from_secs(5), "took {:.2} s", secs(dt));
    Ok(format!("eps* = {:.5} in {:.3} s", out.epsilon_star, secs(dt)))
}

fn c2_success_probability() -> Check {
    let p0 = engine().bk_round(&noisy_t(0.0).tensor_power(5).map_err(e)?).map_err(e)?.success_probability;
    ensure!((p0 - 1.0 / 6.0).abs() < 1e-9, "p(0) = {p0}");
    let grid = linspace(0.0, 0.5, 500);
    let curve = engine().output_fidelity_curve(&grid).map_err(e)?;
    let pmax = curve.iter().map(|c| c.success_probability).fold(0.0, f64::max);
    ensure!(pmax <= 1.0 / 6.0 + 1e-9, "max p = {pmax}");
    let trace = engine().iterate(&noisy_t(0.0).tensor_power(5).map_err(e)?, 0.97, 15).map_err(e)?;
    ensure!((trace.cost - 30.0).abs() < 1e-9, "cost(0) = {}", trace.cost);
    Ok(format!("p(0) = {p0:.12}, max p over 501 points = {pmax:.12}, cost(0) = {}", trace.cost))
}

fn c3_rom() -> Check {
    let start = Instant::now();
    let dicts = Dictionaries::in_memory();
    let d2 = dicts.get(2).map_err(e)?;
    ensure!(d2.len() == 60, "{} two-qubit states", d2.len());
    let mut worst: f64 = 0.0;
    for c in 0..d2.len() {
        let v: Vec<f64> = d2.column(c).iter().map(|&x| x as f64).collect();
        let m = msd_core::pauli::operator_from_pauli_vector(2, &v).map_err(e)?;
        let rho = DensityOperator::new(m).map_err(e)?;
        worst = worst.max((rom_of(&rho, &dicts).map_err(e)?.rom - 1.0).abs());
    }
    ensure!(worst < 1e-6, "stabilizer rom off by {worst}");
    let rt = rom_of(&t0().density(), &dicts).map_err(e)?;
    ensure!((rt.rom - 3f64.sqrt()).abs() < 1e-6, "rom(T) = {}", rt.rom);
    ensure!((rt.lrom - 0.5493).abs() < 1e-4, "lrom(T) = {}", rt.lrom);

    let mut rng = stream_rng(303, 0);
    let mut worst_oct: f64 = 0.0;
    for _ in 0..200 {
        let (z, phi, r): (f64, f64, f64) =
            (rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU), rng.random::<f64>().cbrt());
        let s = (1.0 - z * z).sqrt();
        let b = [r * s * phi.cos(), r * s * phi.sin(), r * z];
        let rho = DensityOperator::from_bloch(b).map_err(e)?;
        let want = (b[0].abs() + b[1].abs() + b[2].abs()).max(1.0);
        worst_oct = worst_oct.max((rom_of(&rho, &dicts).map_err(e)?.rom - want).abs());
    }
    ensure!(worst_oct < 1e-6, "octahedron mismatch {worst_oct}");
    let d3 = dicts.get(3).map_err(e)?.len();
    let dt = start.elapsed();
    ensure!(dt < Duration::from_secs(60), "took {:.1} s", secs(dt));

    let cache = tempfile::tempdir().map_err(e)?;
    let t4 = Instant::now();
    let (built, path) = StabilizerDictionary::load_or_build(4, cache.path()).map_err(e)?;
    let build = t4.elapsed();
    let t4 = Instant::now();
    let (cached, _) = StabilizerDictionary::load_or_build(4, cache.path()).map_err(e)?;
    let reload = t4.elapsed();
    ensure!(build < Duration::from_secs(600), "n=4 build took {:.1} s", secs(build));
    ensure!(path.exists() && built.len() == 36720 && cached.len() == 36720, "n=4 cache mismatch");
    ensure!((0..built.len()).step_by(997).all(|c| built.column(c) == cached.column(c)), "cached columns differ");
    Ok(format!(
        "60/60 stabilizer rom = 1 (max err {worst:.1e}), rom(T) = {:.9}, lrom(T) = {:.6}, octahedron max err {worst_oct:.1e}, \
         n=3 dict {d3} states; {:.2} s; n=4 build {:.3} s, cached reload {:.3} s",
        rt.rom,
        rt.lrom,
        secs(dt),
        secs(build),
        secs(reload)
    ))
}

fn c4_phase_ghz() -> Check {
    let dicts = Dictionaries::in_memory();
    let p = SweepParams {
        family: StateFamily::PhaseGhz(PhaseGhzSpec { n: 5, alpha: 1.0, phi: FRAC_PI_4 }),
        alpha_sq_grid: linspace(0.0, 1.0, 10),
        rounds: 1,
        lrom_max_k: 4,
        ..SweepParams::default()
    };
    let out = run_family_sweep(&p, engine(), &dicts).map_err(e)?;
    let mut worst: f64 = 0.0;
    let mut n_sub = 0;
    for pt in &out.points {
        for m in &pt.profile.as_ref().ok_or("no profile")?.rows {
            worst = worst.max(m.lrom.abs());
            n_sub += 1;
        }
    }
    ensure!(n_sub == 11 * 30, "{n_sub} subsystem values");
    ensure!(worst < 1e-6, "max |lrom| = {worst}");
    let eps = engine().threshold().map_err(e)?;
    let interior: Vec<_> = out.points.iter().filter(|pt| pt.row.alpha_sq > 0.0 && pt.row.alpha_sq < 1.0).collect();
    let above = interior.iter().filter(|pt| pt.row.round1_fidelity().is_some_and(|f| f > 1.0 - eps)).count();
    let frac = above as f64 / interior.len() as f64;
    ensure!(frac >= 0.8, "only {above}/{} interior points above threshold", interior.len());
    Ok(format!("330 proper-subsystem lrom values, max |lrom| = {worst:.1e}; {above}/{} interior points above 1 - eps*", interior.len()))
}

fn c5_ghz_t() -> Check {
    let mut rng = stream_rng(505, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let alpha: f64 = rng.random();
        let beta = (1.0 - alpha * alpha).sqrt();
        let rho = ghz_t(&GhzTSpec { n: 5, alpha, phi: rng.random_range(0.0..6.3) }).map_err(e)?.density();
        let want = DensityOperator::mixture(&[(alpha * alpha, &t0().density()), (beta * beta, &t1().density())])
            .map_err(e)?;
        for q in 0..5 {
            let red = rho.partial_trace(&SubsystemIndex::single(q)).map_err(e)?;
            worst = worst.max(red.trace_distance(&want).map_err(e)?);
        }
    }
    ensure!(worst < 1e-10, "trace distance {worst}");
    Ok(format!("50 random alpha x 5 qubits, max trace distance {worst:.1e}"))
}

fn c6_divergence() -> Check {
    let trace = engine().iterate(&noisy_t(0.3).tensor_power(5).map_err(e)?, 0.97, 15).map_err(e)?;
    let f10 = trace.rounds.get(9).ok_or("fewer than 10 rounds")?.output_t_fidelity;
    ensure!((f10 - 0.5).abs() < 0.01, "F after 10 rounds = {f10}");
    ensure!(trace.verdict == Verdict::Undistillable && trace.cost == -1.0, "verdict {:?}", trace.verdict);
    Ok(format!("F_T after round 10 = {f10:.6}, verdict undistillable, cost -1"))
}

fn c7_squeezing() -> Check {
    let start = Instant::now();
    let dicts = Dictionaries::in_memory();
    let base = SqueezeParams {
        initial: InitialState::Misaligned { theta_bar: FRAC_PI_4, theta_max: 0.05 },
        t_grid: linspace(0.0, 1.0, 10),
        samples: 100,
        magic_summaries: false,
        ..SqueezeParams::default()
    };
    let one = run_squeeze_study(&SqueezeParams { protocol: SqueezeProtocol::OneAxis, ..base.clone() }, 2024, engine(), &dicts)
        .map_err(e)?;
    let fr: Vec<f64> = one.summaries().iter().map(|s| s.distillable_fraction).collect();
    ensure!(one.t_grid[0] == 0.0 && fr[0] == 0.0, "{} distillable at t = 0", fr[0]);
    let (best_i, best) = fr.iter().enumerate().fold((0, 0.0), |a, (i, &f)| if f > a.1 { (i, f) } else { a });
    ensure!(best > 0.5, "best one-axis fraction {best}");
    let two = run_squeeze_study(&SqueezeParams { protocol: SqueezeProtocol::TwoAxis, ..base }, 2024, engine(), &dicts)
        .map_err(e)?;
    let two_max = two.summaries().iter().map(|s| s.distillable_fraction).fold(0.0, f64::max);
    ensure!(two_max == 0.0, "two-axis distillable fraction {two_max}");
    Ok(format!(
        "one-axis: 0% at t = 0, best {:.0}% at t = {:.1}; two-axis: 0% across 11 t values; 2 x 1100 runs in {:.1} s",
        100.0 * best,
        one.t_grid[best_i],
        secs(start.elapsed())
    ))
}

fn c8_random_states() -> Check {
    let start = Instant::now();
    let dicts = Dictionaries::in_memory();
    let p = RandomParams { samples: 500, lrom_max_k: 1, ..RandomParams::default() };
    let out = run_random_state_study(&p, 808, engine(), &dicts).map_err(e)?;
    ensure!(out.samples.len() == 500, "{} samples", out.samples.len());
    for s in &out.samples {
        ensure!(s.lambda_abs > 0.16 && s.round1_fidelity > out.fidelity_min, "sample {:?} violates acceptance", s.index);
    }
    let lrom1 = out.mean_lrom1().ok_or("no lrom1")?;
    let s1 = out.mean_s1();
    ensure!(lrom1 < 0.05, "mean lrom1 = {lrom1}");
    ensure!(s1 > 0.9 * LN_2, "mean S1 = {s1}");
    let r = &out.reference;
    ensure!((r.lambda_abs - 1.0).abs() < 1e-9 && (r.round1_fidelity - 1.0).abs() < 1e-9, "encoded T row {r:?}");
    // The 4-qubit profile stands in for the 5-qubit one; spot-check it on a few samples.
    let mut l4 = Vec::new();
    for psi in out.states.iter().take(5) {
        let prof = msd_core::magic::magic_profile_for(
            &psi.density(),
            &SubsystemIndex::all_of_size(5, 4),
            &dicts,
        )
        .map_err(e)?;
        l4.push(prof.aggregate(4).ok_or("no k=4")?.mean);
    }
    let l4_mean = l4.iter().sum::<f64>() / l4.len() as f64;
    ensure!(l4_mean > 0.0, "lrom4 mean {l4_mean}");
    Ok(format!(
        "500 accepted (rate {:.3}): mean lrom1 = {lrom1:.5}, mean S1 = {s1:.4} (> {:.4}); encoded T |lambda| = {:.12}, F = {:.12}; \
         lrom4 mean on 5 samples = {l4_mean:.3}; {:.1} s",
        out.acceptance_rate(),
        0.9 * LN_2,
        r.lambda_abs,
        r.round1_fidelity,
        secs(start.elapsed())
    ))
}

fn random_density(n: usize, rng: &mut impl Rng) -> Result<DensityOperator, String> {
    let a = msd_core::states::haar_random_pure_with(n, rng).map_err(e)?.density();
    let b = msd_core::states::haar_random_pure_with(n, rng).map_err(e)?.density();
    DensityOperator::mixture(&[(0.7, &a), (0.3, &b)]).map_err(e)
}

fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(i, j)] = C64::new(1.0, 0.0);
    }
    m
}

fn c9_properties() -> Check {
    let start = Instant::now();
    let mut rng = stream_rng(909, 0);
    let code = five_qubit_code();
    let proj = code_projector(&code).map_err(e)?;
    let m = proj.matrix();
    ensure!((m * m - m).camax() < 1e-12, "projector not idempotent");
    ensure!((m.trace().re - 2.0).abs() < 1e-12, "projector trace");
    for g in code.generators() {
        let gm = g.to_matrix();
        ensure!((m * &gm - &gm * m).camax() < 1e-12, "projector does not commute with {}", g.label());
    }

    for _ in 0..50 {
        let a = msd_core::states::haar_random_pure_with(1, &mut rng).map_err(e)?;
        let b = msd_core::states::haar_random_pure_with(1, &mut rng).map_err(e)?;
        let (ea, eb) = (encode(&code, &a).map_err(e)?, encode(&code, &b).map_err(e)?);
        let d = (a.inner(&b).map_err(e)? - ea.inner(&eb).map_err(e)?).norm();
        ensure!(d < 1e-12, "encode not isometric ({d})");
    }

    for _ in 0..20 {
        let (ra, rb) = (random_density(5, &mut rng)?, random_density(5, &mut rng)?);
        let w: f64 = rng.random();
        let mix = DensityOperator::mixture(&[(w, &ra), (1.0 - w, &rb)]).map_err(e)?;
        let u = |r: &DensityOperator| engine().unnormalized_output(r).map_err(e);
        let lhs = u(&mix)?;
        let rhs = u(&ra)? * C64::new(w, 0.0) + u(&rb)? * C64::new(1.0 - w, 0.0);
        ensure!((lhs - rhs).camax() < 1e-10, "bk_round not linear");
    }

    let dicts = Dictionaries::in_memory();
    let cliffords = single_qubit_clifford_group();
    for _ in 0..30 {
        let rho = random_density(2, &mut rng)?;
        let (a, b) = (&cliffords[rng.random_range(0..24)], &cliffords[rng.random_range(0..24)]);
        let u = cnot() * a.kronecker(b);
        let r0 = rom_of(&rho, &dicts).map_err(e)?.rom;
        let r1 = rom_of(&rho.conjugate(&u).map_err(e)?, &dicts).map_err(e)?.rom;
        ensure!((r0 - r1).abs() < 1e-6, "rom not Clifford invariant ({r0} vs {r1})");

        let q = random_density(1, &mut rng)?;
        let f0 = t_fidelity(&q).map_err(e)?;
        for c in cliffords {
            let f1 = t_fidelity(&q.conjugate(c).map_err(e)?).map_err(e)?;
            ensure!((f0 - f1).abs() < 1e-12, "t_fidelity not Clifford invariant");
        }
        ensure!(f0 <= 1.0 + 1e-12, "t_fidelity above 1");
    }
    for t in t_type_states() {
        ensure!((t_fidelity(&t.density()).map_err(e)? - 1.0).abs() < 1e-12, "T-type state below fidelity 1");
    }

    for _ in 0..10 {
        let (a, b, c) = (random_density(1, &mut rng)?, random_density(1, &mut rng)?, random_density(2, &mut rng)?);
        let l = |r: &DensityOperator| rom_of(r, &dicts).map(|x| x.lrom).map_err(e);
        let ab = a.tensor(&b).map_err(e)?;
        ensure!(l(&ab)? <= l(&a)? + l(&b)? + 1e-7, "lrom(a x b) not subadditive");
        let ac = a.tensor(&c).map_err(e)?;
        ensure!(l(&ac)? <= l(&a)? + l(&c)? + 1e-7, "lrom(a x c) not subadditive");
    }

    let dir = tempfile::tempdir().map_err(e)?;
    let studies = vec![
        (Study::ThresholdCurve(ThresholdParams::default()), None),
        (
            Study::FamilySweep(SweepParams {
                family: StateFamily::GhzT(GhzTSpec { n: 5, alpha: 1.0, phi: FRAC_PI_4 }),
                alpha_sq_grid: linspace(0.0, 1.0, 4),
                lrom_max_k: 2,
                ..SweepParams::default()
            }),
            None,
        ),
        (Study::SqueezeStudy(SqueezeParams { t_grid: linspace(0.0, 0.5, 2), samples: 5, ..SqueezeParams::default() }), Some(9)),
        (Study::RandomStateStudy(RandomParams { samples: 5, lrom_max_k: 2, export_amplitudes: true, ..RandomParams::default() }), Some(9)),
        (
            Study::RomReport(RomParams {
                state: StateSource::Family { spec: StateFamily::GhzT(GhzTSpec { n: 3, alpha: 0.7, phi: 0.2 }) },
                max_k: None,
                pairwise_nonlocal: true,
            }),
            None,
        ),
    ];
    let mut files = 0;
    for (i, (study, seed)) in studies.into_iter().enumerate() {
        let run = |tag: &str| {
            let mut cfg = ExperimentConfig::new(study.clone());
            cfg.seed = seed;
            cfg.output_dir = dir.path().join(format!("{i}{tag}"));
            cfg.cache_dir = Some(dir.path().join("dict"));
            execute(&cfg).map_err(e)
        };
        let (a, b) = (run("a")?, run("b")?);
        for t in &a.manifest.tables {
            let fa = std::fs::read(a.output_dir.join(&t.file)).map_err(e)?;
            let fb = std::fs::read(b.output_dir.join(&t.file)).map_err(e)?;
            ensure!(fa == fb, "{} differs between runs", t.file);
            files += 1;
        }
    }
    let dt = start.elapsed();
    ensure!(dt < Duration::from_secs(120), "property suite took {:.1} s", secs(dt));
    Ok(format!(
        "projector, encode isometry (50), bk_round linearity (20), Clifford invariance (30 + 30x24), \
         subadditivity (20), {files} CSV files byte-identical across reruns of all 5 studies; {:.1} s",
        secs(dt)
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("threshold", c1_threshold),
        ("success probability", c2_success_probability),
        ("robustness of magic", c3_rom),
        ("phase-GHZ structure", c4_phase_ghz),
        ("GHZ-T marginals", c5_ghz_t),
        ("above-threshold divergence", c6_divergence),
        ("squeezing rescue", c7_squeezing),
        ("random distillable ensemble", c8_random_states),
        ("property suites", c9_properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
