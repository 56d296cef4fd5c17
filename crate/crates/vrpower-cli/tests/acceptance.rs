//! End-to-end acceptance checks for the toolkit. Each criterion prints one
//! `PASS`/`FAIL` line; the binary exits nonzero if any criterion fails.
//!
//! Run directly with `cargo test --test acceptance`.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrpower::dataset::{
    Codec, DesignMatrix, Measurement, ModelSpec, PlaybackConfig, Projection, SequenceMeta,
    Variable,
};
use vrpower::evaluation::{
    contribution_breakdown, contributions, cross_validate, error_metrics, prune_report,
    PruneOptions,
};
use vrpower::solver::fit;
use vrpower::synth::{generate, NoiseModel, SynthConfig};
use vrpower::trace::{PowerTrace, WindowSpec};

type CriterionResult = Result<(), String>;
type Criterion = (&'static str, fn() -> CriterionResult);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)*)),
        }
    };
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("noiseless parameter recovery", c1_noiseless_recovery),
        ("agreement with a normal-equations oracle", c2_solver_oracle),
        ("cross-validated error under calibrated noise", c3_noise_band),
        ("pruning lands on the simplified variable set", c4_pruning),
        ("resolution savings through the CLI", c5_savings_cli),
        ("error-metric fixture", c6_metrics),
        ("contribution shares", c7_contributions),
        ("trace reduction and negative-net rejection", c8_trace_and_ingest),
        ("byte-reproducible pipeline", c9_reproducible_pipeline),
    ];
    let mut failures = 0u32;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(())) => println!("acceptance criterion {n} ({name}): PASS"),
            Ok(Err(msg)) => {
                failures += 1;
                println!("acceptance criterion {n} ({name}): FAIL - {msg}");
            }
            Err(panic) => {
                failures += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| panic.downcast_ref::<&str>().copied())
                    .unwrap_or("panic with non-string payload");
                println!("acceptance criterion {n} ({name}): FAIL - panicked: {msg}");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failures} acceptance criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn vrpower_cmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrpower"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning the vrpower binary")
}

fn run_ok(dir: &Path, args: &[&str]) -> CriterionResult {
    let out = vrpower_cmd(dir, args);
    ensure!(
        out.status.success(),
        "`vrpower {}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

/// Criterion 1: a noiseless dataset from the default grid is fitted back to
/// its generating parameters within 1e-8 relative, in under a second.
fn c1_noiseless_recovery() -> CriterionResult {
    let t0 = Instant::now();
    let cfg = SynthConfig::builtin(0);
    let ms = generate(&cfg).map_err(|e| e.to_string())?;
    let design = DesignMatrix::build(&ms, &ModelSpec::advanced()).map_err(|e| e.to_string())?;
    let model = fit(&design, None).map_err(|e| e.to_string())?;
    for (i, (got, want)) in model
        .params_raw()
        .iter()
        .zip(cfg.ground_truth.params_raw())
        .enumerate()
    {
        ensure!(
            (got - want).abs() <= 1e-8 * want.abs(),
            "parameter {i}: fitted {got:e} vs generated {want:e}"
        );
    }
    let elapsed = t0.elapsed();
    ensure!(
        elapsed < Duration::from_secs(1),
        "generate + fit took {elapsed:?}, budget 1 s"
    );
    Ok(())
}

/// Solves `AᵀA x = AᵀP` by Gaussian elimination with partial pivoting —
/// a from-scratch reference solution sharing no code with the fitter.
/// Written with textbook index arithmetic on purpose.
#[allow(clippy::needless_range_loop)]
fn normal_equations_oracle(design: &DesignMatrix) -> Option<Vec<f64>> {
    let (n, k) = (design.n_rows(), design.n_params());
    let a = design.matrix();
    let p = design.observations();
    let mut m = vec![vec![0.0f64; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            m[i][j] = (0..n).map(|r| a[(r, i)] * a[(r, j)]).sum();
        }
        m[i][k] = (0..n).map(|r| a[(r, i)] * p[r]).sum();
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..k {
            let factor = m[row][col] / m[col][col];
            for c in col..=k {
                m[row][c] -= factor * m[col][c];
            }
        }
    }
    let mut x = vec![0.0f64; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][k] - tail) / m[row][row];
    }
    Some(x)
}

/// Criterion 2: on ten random small instances (N ≤ 20, K ≤ 5) the fitter
/// matches an independent normal-equations solver within 1e-8.
fn c2_solver_oracle() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 10 {
        attempts += 1;
        ensure!(attempts < 200, "could not draw 10 solvable instances");

        let mut pool = Variable::ALL.to_vec();
        pool.shuffle(&mut rng);
        let k_vars = rng.gen_range(1..=4usize);
        let spec = match ModelSpec::new(pool[..k_vars].to_vec()) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let n = rng.gen_range(k_vars + 2..=20usize);
        let mut ms = Vec::with_capacity(n);
        for i in 0..n {
            let mut config = PlaybackConfig {
                app: "VaR".into(),
                stereo: rng.gen(),
                head_tracking: rng.gen(),
                video_360: rng.gen(),
                video_3d: rng.gen(),
                gyroscope: false,
                accelerometer: false,
                magnetometer: false,
            };
            match rng.gen_range(0..4u8) {
                1 => config.gyroscope = true,
                2 => config.accelerometer = true,
                3 => config.magnetometer = true,
                _ => {}
            }
            ms.push(Measurement {
                sequence: SequenceMeta {
                    name: format!("seq{i}"),
                    width: rng.gen_range(300..4000),
                    height: rng.gen_range(200..2200),
                    frame_rate: rng.gen_range(20.0..120.0),
                    bitrate: rng.gen_range(1e6..5e7),
                    codec: Codec::Hevc,
                    crf: 23,
                    projection: Projection::Rectilinear,
                    is_3d: false,
                },
                config,
                power: rng.gen_range(0.5..3.0),
            });
        }
        let design = match DesignMatrix::build(&ms, &spec) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let model = match fit(&design, None) {
            Ok(model) => model,
            Err(_) => continue, // rank-deficient draw; take another
        };
        let oracle = match normal_equations_oracle(&design) {
            Some(x) => x,
            None => continue,
        };
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (i, (got, want)) in model.params_scaled().iter().zip(&oracle).enumerate() {
            ensure!(
                (got - want).abs() <= 1e-8 * scale,
                "instance {checked}, parameter {i}: fitter {got:e} vs oracle {want:e}"
            );
        }
        checked += 1;
    }
    Ok(())
}

/// Criterion 3: for twenty seeds at σ = 0.02, cross-validated mean relative
/// error stays in the plausible band [1%, 3%], all inside 30 s.
fn c3_noise_band() -> CriterionResult {
    let t0 = Instant::now();
    for seed in 0..20u64 {
        let mut cfg = SynthConfig::builtin(seed);
        cfg.noise = NoiseModel::MultiplicativeGaussian { sigma: 0.02 };
        let ms = generate(&cfg).map_err(|e| e.to_string())?;
        let report =
            cross_validate(&ms, &ModelSpec::advanced(), None, None).map_err(|e| e.to_string())?;
        ensure!(
            report.mean_rel_error >= 0.01 && report.mean_rel_error <= 0.03,
            "seed {seed}: mean relative error {:.4}% outside [1%, 3%]",
            report.mean_rel_error * 100.0
        );
    }
    let elapsed = t0.elapsed();
    ensure!(
        elapsed < Duration::from_secs(30),
        "20 cross-validations took {elapsed:?}, budget 30 s"
    );
    Ok(())
}

/// Criterion 4: pruning the advanced set on noisy default-grid data retains
/// exactly {b, S, F_360}, and repeating the run reproduces the report.
fn c4_pruning() -> CriterionResult {
    let mut cfg = SynthConfig::builtin(4);
    cfg.noise = NoiseModel::MultiplicativeGaussian { sigma: 0.02 };
    let ms = generate(&cfg).map_err(|e| e.to_string())?;
    let options = PruneOptions::default();
    let first = prune_report(&ms, &ModelSpec::advanced(), &options).map_err(|e| e.to_string())?;
    ensure!(
        first.pruned == ModelSpec::simplified(),
        "retained {{{}}} instead of {{b, S, F_360}}",
        first.pruned.to_tag_list()
    );
    let second = prune_report(&ms, &ModelSpec::advanced(), &options).map_err(|e| e.to_string())?;
    ensure!(
        first.to_csv() == second.to_csv(),
        "two pruning runs over the same data disagree"
    );
    Ok(())
}

/// Criterion 5: through the CLI, a model fitted on noiseless default data
/// predicts that dropping 3840x1920 to 1920x1080 saves 0.266 ± 0.001 W,
/// i.e. 17.2% ± 0.1 pp of a 1.5465 W reference.
fn c5_savings_cli() -> CriterionResult {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_ok(dir.path(), &["synth", "--out", "data.csv"])?;
    run_ok(
        dir.path(),
        &["fit", "--data", "data.csv", "--spec", "advanced", "--out", "model.json"],
    )?;
    run_ok(
        dir.path(),
        &[
            "savings",
            "--model",
            "model.json",
            "--from",
            "3840x1920",
            "--to",
            "1920x1080",
            "--reference-power",
            "1.5465",
            "--out",
            "savings.json",
        ],
    )?;
    let text = fs::read_to_string(dir.path().join("savings.json")).map_err(|e| e.to_string())?;
    let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let delta = json["delta_w"].as_f64().ok_or("missing delta_w")?;
    let relative = json["relative_saving"].as_f64().ok_or("missing relative_saving")?;
    ensure!(
        (delta - 0.266).abs() <= 0.001,
        "saving {delta:.6} W outside 0.266 ± 0.001 W"
    );
    ensure!(
        (relative * 100.0 - 17.2).abs() <= 0.1,
        "relative saving {:.4}% outside 17.2 ± 0.1",
        relative * 100.0
    );
    Ok(())
}

/// Criterion 6: the error metrics reproduce the worked example
/// ε̄ = 0.075, ε_max = 0.10 to within 1e-15.
fn c6_metrics() -> CriterionResult {
    let (mean, max) = error_metrics(&[2.0, 4.0], &[2.2, 3.8]).map_err(|e| e.to_string())?;
    ensure!((mean - 0.075).abs() <= 1e-15, "mean {mean:e} != 0.075");
    ensure!((max - 0.10).abs() <= 1e-15, "max {max:e} != 0.10");
    Ok(())
}

/// Criterion 7: per-term shares sum to 100% ± 1e-9 on data the model
/// reproduces exactly, and an intercept above the smallest measured power
/// reports a worst-case share over 100% with the right witness.
fn c7_contributions() -> CriterionResult {
    let cfg = SynthConfig::builtin(0);
    let ms = generate(&cfg).map_err(|e| e.to_string())?;
    let model = cfg.ground_truth.to_power_model();
    let breakdown = contribution_breakdown(&model, &ms).map_err(|e| e.to_string())?;
    for row in &breakdown.rows {
        let total: f64 = row.parts_w.iter().sum();
        ensure!(
            (total - row.measured_w).abs() <= 1e-9 * row.measured_w,
            "row {}: share sum {:.12} W vs measured {:.12} W",
            row.index,
            total,
            row.measured_w
        );
    }

    let small = vec![
        mk_measurement("A", 1000, 1000, 2.0),
        mk_measurement("B", 2000, 1000, 1.5),
        mk_measurement("C", 2000, 2000, 1.0),
    ];
    let spec = ModelSpec::new(vec![Variable::Resolution]).map_err(|e| e.to_string())?;
    let design = DesignMatrix::build(&small, &spec).map_err(|e| e.to_string())?;
    let small_model = fit(&design, None).map_err(|e| e.to_string())?;
    let report = contributions(&small_model, &small).map_err(|e| e.to_string())?;
    let p0 = &report.entries[0];
    ensure!(p0.label == "p_0", "first entry is {}", p0.label);
    ensure!(
        (p0.max_percent - 225.0).abs() <= 1e-9 * 225.0,
        "intercept worst-case share {:.9}% != 225%",
        p0.max_percent
    );
    ensure!(
        p0.witness_sequence == "C" && p0.witness_index == 2,
        "witness {} [row {}], expected C [row 2]",
        p0.witness_sequence,
        p0.witness_index
    );
    Ok(())
}

fn mk_measurement(name: &str, width: u32, height: u32, power: f64) -> Measurement {
    Measurement {
        sequence: SequenceMeta {
            name: name.into(),
            width,
            height,
            frame_rate: 30.0,
            bitrate: 1e6,
            codec: Codec::Hevc,
            crf: 23,
            projection: Projection::Rectilinear,
            is_3d: false,
        },
        config: PlaybackConfig {
            app: "VaR".into(),
            stereo: false,
            head_tracking: false,
            video_360: false,
            video_3d: false,
            gyroscope: false,
            accelerometer: false,
            magnetometer: false,
        },
        power,
    }
}

/// Criterion 8: the windowed mean of a linear ramp is exact, and ingesting
/// a trace whose net power would be negative fails with the right category.
fn c8_trace_and_ingest() -> CriterionResult {
    let samples: Vec<(f64, f64)> = (0..=20).map(|i| (i as f64 * 0.5, i as f64 * 0.5)).collect();
    let trace = PowerTrace::new(samples).map_err(|e| e.to_string())?;
    let mean = trace
        .mean_power(&WindowSpec::default())
        .map_err(|e| e.to_string())?;
    ensure!((mean - 5.5).abs() <= 1e-9, "ramp mean {mean} != 5.5");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trace_csv = String::from("time_s,power_w\n");
    for i in 0..=100 {
        trace_csv.push_str(&format!("{},1.0\n", i as f64 * 0.1));
    }
    fs::write(dir.path().join("low.csv"), trace_csv).map_err(|e| e.to_string())?;
    fs::write(
        dir.path().join("session.csv"),
        "trace_file,sequence,width,height,fps,bitrate_bps,codec,crf,app,\
         f_st,f_dyn,f_360,f_3d,f_gyro,f_accel,f_magn\n\
         low.csv,SeqA,1920,1080,30,5000000,hevc,23,VaR,0,0,0,0,0,0,0\n",
    )
    .map_err(|e| e.to_string())?;
    let out = vrpower_cmd(
        dir.path(),
        &[
            "ingest",
            "--session",
            "session.csv",
            "--idle-power",
            "2.0",
            "--out",
            "net.csv",
        ],
    );
    ensure!(!out.status.success(), "ingest below idle unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure!(
        stderr.contains("error[negative-net]"),
        "stderr lacks error[negative-net]: {stderr}"
    );
    Ok(())
}

/// Criterion 9: the same seeded pipeline run twice through the binary
/// produces byte-identical data and report files (manifests aside, which
/// carry timestamps).
fn c9_reproducible_pipeline() -> CriterionResult {
    let files = [
        "data.csv",
        "truth.json",
        "model.json",
        "cv.csv",
        "folds.csv",
        "pruned.json",
        "prune.csv",
        "pred.csv",
        "contrib.csv",
        "breakdown.csv",
    ];
    let mut contents: Vec<Vec<Vec<u8>>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = dir.path();
        run_ok(
            d,
            &[
                "synth", "--seed", "5", "--sigma", "0.02", "--out", "data.csv",
                "--ground-truth-out", "truth.json",
            ],
        )?;
        run_ok(d, &["fit", "--data", "data.csv", "--out", "model.json"])?;
        run_ok(
            d,
            &["cv", "--data", "data.csv", "--out", "cv.csv", "--folds-out", "folds.csv"],
        )?;
        run_ok(
            d,
            &[
                "prune", "--data", "data.csv", "--out", "pruned.json", "--report-out",
                "prune.csv",
            ],
        )?;
        run_ok(
            d,
            &["predict", "--model", "model.json", "--data", "data.csv", "--out", "pred.csv"],
        )?;
        run_ok(
            d,
            &[
                "contrib", "--model", "model.json", "--data", "data.csv", "--out",
                "contrib.csv", "--breakdown-out", "breakdown.csv",
            ],
        )?;
        let mut round = Vec::new();
        for f in &files {
            round.push(fs::read(d.join(f)).map_err(|e| format!("{f}: {e}"))?);
        }
        for primary in [
            "data.manifest.json",
            "model.manifest.json",
            "cv.manifest.json",
            "pruned.manifest.json",
            "pred.manifest.json",
            "contrib.manifest.json",
        ] {
            ensure!(d.join(primary).exists(), "missing manifest {primary}");
        }
        contents.push(round);
    }
    for (f, (a, b)) in files.iter().zip(contents[0].iter().zip(&contents[1])) {
        ensure!(a == b, "{f} differs between identical runs");
    }
    Ok(())
}
