//! Runs, records, file formats, analysis and the command-line tool.

use std::path::{Path, PathBuf};
use std::process::Command;

use otoc::analysis::{fit_report, rates_from_rows, read_curves, CurveRow};
use otoc::config::{load_config, ExperimentConfig, Format};
use otoc::export::{export, CURVES_HEADER, MQC_HEADER, PLOT_FILES, PLOT_HEADER};
use otoc::record::ExperimentRecord;
use otoc::run_experiment;
use otoc::sweep::{run_sweep_with_workers, PointOutcome};
use otoc_core::scaling::{synthetic_fidelity_curves, AnalysisOptions, Ansatz, Smoothing, Stage};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn small_config(n: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::with_spins(n);
    c.perturbation.p_list = vec![0.0, 0.05, 0.2];
    c.evolution.t_list_us = vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    c
}

fn spinecho(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_spinecho"))
        .args(args)
        .env("SPINECHO_WORKERS", "1")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn two_spin_run_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = load_config(&fixture("two_spin.toml")).unwrap();
    run_experiment(&config, dir.path()).unwrap();
    assert_eq!(read(&dir.path().join("curves.csv")), read(&fixture("two_spin_curves.csv")));
    assert_eq!(read(&dir.path().join("mqc.csv")), read(&fixture("two_spin_mqc.csv")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = small_config(4);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, files_a) = run_experiment(&config, a.path()).unwrap();
    run_experiment(&config, b.path()).unwrap();
    assert_eq!(files_a.len(), 4 + PLOT_FILES.len());
    for f in files_a {
        let name = f.file_name().unwrap();
        assert_eq!(read(&f), read(&b.path().join(name)), "{name:?}");
    }
}

#[test]
fn reexport_reproduces_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(3);
    let (_, written) = run_experiment(&config, dir.path()).unwrap();
    let record = ExperimentRecord::load(&dir.path().join("record.json")).unwrap();
    let again = tempfile::tempdir().unwrap();
    export(&record, &Format::ALL, again.path()).unwrap();
    for f in written.iter().skip(1) {
        assert_eq!(read(f), read(&again.path().join(f.file_name().unwrap())));
    }
}

#[test]
fn empty_record_gives_header_only_files() {
    let mut config = small_config(2);
    config.perturbation.p_list = vec![0.0];
    let mut record = ExperimentRecord::from_sweep(&config, &otoc::sweep::SweepOutput { points: vec![] });
    record.points.clear();
    let dir = tempfile::tempdir().unwrap();
    export(&record, &Format::ALL, dir.path()).unwrap();
    assert_eq!(read(&dir.path().join("curves.csv")), format!("{CURVES_HEADER}\n"));
    assert_eq!(read(&dir.path().join("mqc.csv")), format!("{MQC_HEADER}\n"));
    for name in PLOT_FILES {
        assert_eq!(read(&dir.path().join(name)), format!("{PLOT_HEADER}\n"), "{name}");
    }
    let fit: serde_json::Value = serde_json::from_str(&read(&dir.path().join("fit.json"))).unwrap();
    assert_eq!(fit["status"], "stopped");
}

#[test]
fn every_grid_point_is_kept_or_explained() {
    let mut config = small_config(4);
    config.perturbation.p_list = vec![0.1, 0.6];
    config.evolution.t_list_us = (1..=12).map(|i| 10.0 * i as f64).collect();
    config.tomography.fidelity_floor = 0.5;
    let out = run_sweep_with_workers(&config, Some(1)).unwrap();
    let record = ExperimentRecord::from_sweep(&config, &out);
    assert!(!record.dropped.is_empty());
    assert_eq!(record.points.len() + record.dropped.len(), 24);
    for d in &record.dropped {
        assert!(d.fidelity <= 0.5 && d.reason.contains("below the floor"));
    }
    // Grid order is preserved across kept and dropped points.
    let times: Vec<f64> = out
        .points
        .iter()
        .map(|o| match o {
            PointOutcome::Kept { metrics, .. } => metrics.t,
            PointOutcome::Dropped { t, .. } => *t,
        })
        .collect();
    assert_eq!(&times[..12], &times[12..]);
}

#[test]
fn perturbation_lowers_the_echo() {
    let mut config = ExperimentConfig::with_spins(6);
    config.perturbation.p_list = vec![0.0, 0.2];
    config.evolution.t_list_us = (1..=10).map(|i| 8.0 * i as f64).collect();
    let out = run_sweep_with_workers(&config, None).unwrap();
    let record = ExperimentRecord::from_sweep(&config, &out);
    let (ideal, perturbed) = record.points.split_at(10);
    for (a, b) in ideal.iter().zip(perturbed) {
        assert!((a.fidelity - 1.0).abs() < 1e-12);
        assert!(b.fidelity <= a.fidelity);
    }
}

#[test]
fn zeeman_pulse_sweep_uses_phase_shifts() {
    let mut config = ExperimentConfig::with_spins(3);
    config.perturbation.kind = otoc_core::PerturbationKind::Zeeman;
    config.perturbation.delta_omega_z_hz = 2.0e3;
    config.perturbation.p_list = vec![0.0, 0.1];
    config.evolution.mode = otoc::config::EvolutionMode::Pulse;
    config.evolution.t_list_us = vec![40.0, 80.0, 120.0];
    config.tomography.verify = true;
    let out = run_sweep_with_workers(&config, Some(1)).unwrap();
    let record = ExperimentRecord::from_sweep(&config, &out);
    assert_eq!(record.points.len(), 6);
    assert!(record.points[..3].iter().all(|p| (p.fidelity - 1.0).abs() < 1e-12));
    // A single cycle carries no relative phase; decay starts with the second.
    let shifted: Vec<f64> = record.points[3..].iter().map(|p| p.fidelity).collect();
    assert!((shifted[0] - 1.0).abs() < 1e-12);
    assert!(shifted[1] < 1.0 - 1e-4 && shifted[2] < shifted[1]);
}

fn synthetic_rows(noise: f64, seed: u64) -> Vec<CurveRow> {
    let ansatz = Ansatz::new(-0.911, -0.57, 0.026, 0.48, 0.96);
    let ps: Vec<f64> = (0..16).map(|i| (0.002f64.ln() + (0.3f64 / 0.002).ln() * i as f64 / 15.0).exp()).collect();
    let times: Vec<f64> = (0..40).map(|i| (1e-5f64.ln() + 3000f64.ln() * i as f64 / 39.0).exp()).collect();
    let curves = synthetic_fidelity_curves(&ansatz, &ps, &times, |t| 1.0 + t / 1e-5, 5.0, noise, seed).unwrap();
    curves
        .iter()
        .flat_map(|c| {
            (0..c.t.len()).map(move |i| CurveRow {
                p: c.p,
                t_us: c.t[i] * 1e6,
                fidelity: c.fidelity[i],
                cluster_size: c.cluster_size[i],
            })
        })
        .collect()
}

#[test]
fn analysis_recovers_synthetic_critical_point() {
    let rows = synthetic_rows(0.05, 3);
    let rates = rates_from_rows(&rows, Smoothing::None).unwrap();
    let report = fit_report(&rates, &AnalysisOptions::default(), Smoothing::None);
    assert!(report.is_complete(), "{:?}", report.reason);
    let p_c = report.fit.p_c().unwrap();
    assert!((p_c / 0.026 - 1.0).abs() < 0.1, "p_c {p_c}");
}

#[test]
fn noiseless_power_law_has_negligible_exponent_error() {
    // χ = c t² is differentiated exactly by three-point stencils, so with
    // K = t² every curve is an exact power law χ' = 2c K^{1/2}.
    let rows: Vec<CurveRow> = [0.01, 0.02]
        .iter()
        .flat_map(|&p| {
            (1..=12).map(move |i| {
                let t = 1e-5 * i as f64;
                CurveRow {
                    p,
                    t_us: t * 1e6,
                    fidelity: (-p * 1e8 * t * t).exp(),
                    cluster_size: (t * 1e5).powi(2),
                }
            })
        })
        .collect();
    let rates = rates_from_rows(&rows, Smoothing::None).unwrap();
    let report = fit_report(&rates, &AnalysisOptions::default(), Smoothing::None);
    for a in &report.fit.alpha_per_p {
        assert!((a.alpha - 0.5).abs() < 1e-8 && a.stderr < 1e-8, "{a:?}");
    }
    assert_eq!(report.fit.stopped.as_ref().unwrap().stage, Stage::Sigmoid);
}

#[test]
fn curves_files_round_trip_through_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(4);
    config.output.formats = vec![Format::Curves];
    run_experiment(&config, dir.path()).unwrap();
    let rows = read_curves(&dir.path().join("curves.csv")).unwrap();
    assert_eq!(rows.len(), 18);
    assert_eq!(rows[7].p, 0.05);
}

#[test]
fn cli_run_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[system]\nn_spins = 3\n[perturbation]\np_list = [0.0, 0.1]\n[evolution]\nt_list_us = [5.0, 10.0, 15.0]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let (code, stdout, _) = spinecho(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("6 points kept, 0 dropped"));
    let again = dir.path().join("again");
    let (code, _, _) = spinecho(&[
        "export",
        out.join("record.json").to_str().unwrap(),
        "--formats",
        "curves,mqc",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(read(&out.join("curves.csv")), read(&again.join("curves.csv")));
    assert!(!again.join("fit.json").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[system]\nn_spins = 2\n[evolution]\nt_list_us = [2.0, 1.0]\n").unwrap();
    let (code, _, err) = spinecho(&["run", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("evolution.t_list_us"), "{err}");

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[system]\nn_spins = 2\n\n[output]\nformat = [\"curves\"]\n").unwrap();
    let (code, _, err) = spinecho(&["run", typo.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 5"), "{err}");

    let big = dir.path().join("big.toml");
    std::fs::write(&big, "[system]\nn_spins = 13\n").unwrap();
    let (code, _, _) = spinecho(&["run", big.to_str().unwrap()]);
    assert_eq!(code, 3);

    let (code, _, _) = spinecho(&["analyze", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(code, 1);
    let (code, _, _) = spinecho(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn cli_analyze_reports_insufficient_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(3);
    config.perturbation.p_list = vec![0.1];
    config.output.formats = vec![Format::Curves];
    run_experiment(&config, dir.path()).unwrap();
    let (code, stdout, stderr) = spinecho(&["analyze", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["status"], "stopped");
    assert_eq!(report["stopped_at"], "sigmoid");
    assert!(stderr.contains("insufficient p coverage"));
}

#[test]
fn cli_collapse_with_known_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    let mut text = format!("{CURVES_HEADER}\n");
    for r in synthetic_rows(0.0, 0) {
        text.push_str(&format!("{},{},{},0,{},0,0\n", r.p, r.t_us, r.fidelity, r.cluster_size));
    }
    std::fs::write(&path, text).unwrap();
    let (code, stdout, err) = spinecho(&[
        "collapse",
        path.to_str().unwrap(),
        "--alpha0",
        "0.48",
        "--alpha-inf",
        "0.96",
        "--s",
        "-0.911",
        "--nu",
        "-0.57",
        "--p-split",
        "0.026",
    ]);
    assert_eq!(code, 0, "{err}");
    let body: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let p_c = body["critical"]["p_c"].as_f64().unwrap();
    assert!((p_c / 0.026 - 1.0).abs() < 0.1, "{p_c}");
}

#[test]
fn cli_verify_passes_and_catches_a_sign_error() {
    let (code, stdout, _) = spinecho(&["verify", "--draws", "6"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 9);
    let (code, stdout, _) = spinecho(&["verify", "--draws", "6", "--inject-h0-sign-error"]);
    assert_eq!(code, 2);
    let failing: Vec<&str> = stdout.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].contains("second moment vs commutator overlap"));
}

#[test]
fn worker_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_spinecho"))
        .args(["run", fixture("two_spin.toml").to_str().unwrap(), "--out"])
        .arg(tempfile::tempdir().unwrap().path())
        .env("SPINECHO_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
