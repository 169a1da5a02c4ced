//! Exit criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use otoc::config::{EvolutionMode, ExperimentConfig, Format};
use otoc::record::ExperimentRecord;
use otoc::sweep::run_sweep_with_workers;
use otoc::verify::{self, CheckResult, VerifyOptions};
use otoc::run_experiment;
use otoc_core::scaling::{
    analyze_rates, decoherence_rate, linear_fit, synthetic_fidelity_curves, AnalysisOptions, Ansatz,
    RateSeries, Smoothing,
};
use rayon::prelude::*;

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn checks_line(id: usize, name: &'static str, checks: &[CheckResult], elapsed: Duration, limit: Duration) -> Line {
    let mut detail: Vec<String> = checks
        .iter()
        .map(|c| format!("{} {:.3e} < {:.0e}", c.name, c.residual, c.tolerance))
        .collect();
    detail.push(format!("runtime {:.1}s < {}s", elapsed.as_secs_f64(), limit.as_secs()));
    Line {
        id,
        name,
        passed: checks.iter().all(CheckResult::passed) && elapsed < limit,
        detail: detail.join("; "),
    }
}

fn identity_suite() -> Line {
    let start = Instant::now();
    let options = VerifyOptions { draws: 24, max_spins: 8, seed: 11, ..VerifyOptions::default() };
    let checks = verify::identity_suite(&options).expect("identity suite runs");
    checks_line(1, "identity suite (N <= 8, 24 draws)", &checks, start.elapsed(), Duration::from_secs(120))
}

fn perfect_echo() -> Line {
    let check = verify::perfect_echo(&[2, 4, 6, 8, 10]).expect("echo runs");
    Line {
        id: 2,
        name: "perfect echo at p = 0, N in {2,4,6,8,10}",
        passed: check.passed(),
        detail: format!("max |f - 1| {:.3e} < {:.0e}", check.residual, check.tolerance),
    }
}

fn two_spin() -> Line {
    let check = verify::two_spin_closed_form().expect("two-spin runs");
    Line {
        id: 3,
        name: "two-spin closed form over 50 times",
        passed: check.passed(),
        detail: format!("max error {:.3e} < {:.0e}", check.residual, check.tolerance),
    }
}

fn convergence() -> Line {
    let start = Instant::now();
    let checks = verify::convergence_orders(6).expect("orders run");
    checks_line(4, "convergence orders at N = 6 (|slope - order|)", &checks, start.elapsed(), Duration::from_secs(300))
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn short_time_law() -> Line {
    const TOL: f64 = 0.05;
    let mut config = ExperimentConfig::with_spins(8);
    config.perturbation.p_list = vec![0.0, 0.05];
    config.evolution.t_list_us = geomspace(0.01, 1000.0, 51);
    let out = run_sweep_with_workers(&config, None).expect("sweep runs");
    let record = ExperimentRecord::from_sweep(&config, &out);
    let mut slopes = Vec::new();
    for p in &config.perturbation.p_list {
        let (x, y): (Vec<f64>, Vec<f64>) = record
            .points
            .iter()
            .filter(|pt| pt.p == *p && pt.t_us <= 1.0 + 1e-9)
            .map(|pt| (pt.t_us.ln(), pt.m2.ln()))
            .unzip();
        assert_eq!(x.len(), 21);
        slopes.push(linear_fit(&x, &y).expect("fit").slope);
    }
    let worst = slopes.iter().map(|s| (s - 2.0).abs()).fold(0.0, f64::max);
    Line {
        id: 5,
        name: "m2 short-time slope, N = 8 chain, t in [0.01, 1] us",
        passed: worst < TOL,
        detail: format!("slopes {slopes:.5?}; max |slope - 2| {worst:.2e} < {TOL}"),
    }
}

fn round_trip() -> Line {
    const SEEDS: u64 = 100;
    const SUCCESS: f64 = 0.9;
    let start = Instant::now();
    let ansatz = Ansatz::new(-0.911, -0.57, 0.026, 0.48, 0.96);
    let ps = geomspace(0.002, 0.3, 16);
    let times = geomspace(1e-5, 3e-2, 40);
    let successes: Vec<bool> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let curves = synthetic_fidelity_curves(&ansatz, &ps, &times, |t| 1.0 + t / 1e-5, 5.0, 0.05, seed)
                .expect("generator");
            let rates: Vec<RateSeries> = curves
                .iter()
                .map(|c| decoherence_rate(c.p, &c.t, &c.fidelity, &c.cluster_size, Smoothing::None).expect("rates"))
                .collect();
            let fit = analyze_rates(&rates, &AnalysisOptions::default());
            match (fit.p_c(), fit.nu()) {
                (Some(p_c), Some(nu)) if fit.is_complete() => {
                    (p_c / ansatz.p_c - 1.0).abs() < 0.1 && (nu / ansatz.nu - 1.0).abs() < 0.2
                }
                _ => false,
            }
        })
        .collect();
    let elapsed = start.elapsed();
    let rate = successes.iter().filter(|s| **s).count() as f64 / SEEDS as f64;
    Line {
        id: 6,
        name: "scaling round trip, 100 seeds, 5% noise",
        passed: rate >= SUCCESS && elapsed < Duration::from_secs(60),
        detail: format!(
            "success {:.0}% >= {:.0}% (p_c within 10%, nu within 20%); runtime {:.1}s < 60s",
            100.0 * rate,
            100.0 * SUCCESS,
            elapsed.as_secs_f64()
        ),
    }
}

fn qualitative_physics() -> Line {
    const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
    const PLATEAU: f64 = 0.1;
    let start = Instant::now();
    let mut config = ExperimentConfig::with_spins(10);
    config.evolution.mode = EvolutionMode::Exact;
    config.evolution.t_list_us = (1..=20).map(|i| 9.0 * i as f64).collect();
    config.perturbation.intrinsic_strength = 0.02;
    let ps = config.perturbation.p_list.clone();
    let nt = config.evolution.t_list_us.len();

    // Seed averages of f and K on the (p, t) grid; K only where every
    // seed kept the point.
    let mut f = vec![vec![0.0; nt]; ps.len()];
    let mut k = vec![vec![Some(0.0); nt]; ps.len()];
    for seed in SEEDS {
        config.perturbation.intrinsic_seed = seed;
        let out = run_sweep_with_workers(&config, None).expect("sweep runs");
        let record = ExperimentRecord::from_sweep(&config, &out);
        let index = |p: f64, t_us: f64| {
            let i = ps.iter().position(|q| *q == p).unwrap();
            let j = config.evolution.t_list_us.iter().position(|s| (s - t_us).abs() < 1e-9).unwrap();
            (i, j)
        };
        for pt in &record.points {
            let (i, j) = index(pt.p, pt.t_us);
            f[i][j] += pt.fidelity / SEEDS.len() as f64;
            k[i][j] = k[i][j].map(|acc| acc + pt.cluster_size / SEEDS.len() as f64);
        }
        for d in &record.dropped {
            let (i, j) = index(d.p, d.t_us);
            f[i][j] += d.fidelity / SEEDS.len() as f64;
            k[i][j] = None;
        }
    }

    let late: Vec<usize> = (0..nt).filter(|&j| config.evolution.t_list_us[j] >= 100.0).collect();
    let mut f_violations = 0;
    let mut k_violations = 0;
    let mut k_pairs = 0;
    for &j in &late {
        for i in 1..ps.len() {
            if !(f[i][j] < f[i - 1][j]) {
                f_violations += 1;
            }
            if let (Some(a), Some(b)) = (k[i - 1][j], k[i][j]) {
                k_pairs += 1;
                if b > a {
                    k_violations += 1;
                }
            }
        }
    }

    // Plateau of the decay rate for the largest p.
    let last = ps.len() - 1;
    let t: Vec<f64> = config.evolution.t_list_us.iter().map(|t| t * 1e-6).collect();
    let kept: Vec<usize> = (0..nt).filter(|&j| k[last][j].is_some() && f[last][j] > 0.0).collect();
    let plateau = if kept.len() >= 6 {
        let tt: Vec<f64> = kept.iter().map(|&j| t[j]).collect();
        let ff: Vec<f64> = kept.iter().map(|&j| f[last][j]).collect();
        let kk: Vec<f64> = kept.iter().map(|&j| k[last][j].unwrap()).collect();
        let series = decoherence_rate(ps[last], &tt, &ff, &kk, Smoothing::None).expect("rates");
        let rate: Vec<f64> = series.samples.iter().map(|s| s.chi_rate).collect();
        let peak = tt
            .windows(2)
            .zip(rate.windows(2))
            .map(|(t, r)| (r[1] - r[0]) / (t[1] - t[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        let third = tt.len() - tt.len() / 3;
        let tail = linear_fit(&tt[third..], &rate[third..]).expect("fit").slope;
        Some(tail.abs() / peak)
    } else {
        None
    };

    let elapsed = start.elapsed();
    let passed = f_violations == 0
        && k_violations == 0
        && plateau.is_some_and(|r| r < PLATEAU)
        && elapsed < Duration::from_secs(600);
    Line {
        id: 7,
        name: "qualitative physics at N = 10, chain, 5 seeds",
        passed,
        detail: format!(
            "f increases with p at {f_violations} of {} (p, t >= 0.1 ms) pairs, need 0; \
             K increases with p at {k_violations} of {k_pairs} pairs, need 0; \
             final-third chi' slope / peak slope {} < {PLATEAU}; runtime {:.0}s < 600s",
            late.len() * (ps.len() - 1),
            plateau.map_or("undefined".into(), |r| format!("{r:.3}")),
            elapsed.as_secs_f64()
        ),
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).expect("output file")
}

fn determinism() -> Line {
    let mut config = ExperimentConfig::with_spins(5);
    config.perturbation.p_list = vec![0.0, 0.01, 0.03, 0.1, 0.3];
    config.evolution.t_list_us = (1..=10).map(|i| 15.0 * i as f64).collect();
    config.output.formats = Format::ALL.to_vec();
    let a = tempfile::tempdir().expect("tempdir");
    let b = tempfile::tempdir().expect("tempdir");
    let (_, written) = run_experiment(&config, a.path()).expect("first run");
    run_experiment(&config, b.path()).expect("second run");
    let differing = written
        .iter()
        .filter(|f| read(f) != read(&b.path().join(f.file_name().unwrap())))
        .count();

    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let golden_config = otoc::load_config(&fixtures.join("two_spin.toml")).expect("fixture config");
    let g = tempfile::tempdir().expect("tempdir");
    run_experiment(&golden_config, g.path()).expect("golden run");
    let golden_ok = read(&g.path().join("curves.csv")) == read(&fixtures.join("two_spin_curves.csv"))
        && read(&g.path().join("mqc.csv")) == read(&fixtures.join("two_spin_mqc.csv"));
    Line {
        id: 8,
        name: "determinism and golden N = 2 files",
        passed: differing == 0 && golden_ok,
        detail: format!(
            "{differing} of {} files differ between runs, need 0; golden files {}",
            written.len(),
            if golden_ok { "match" } else { "differ" }
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [fn() -> Line; 8] = [
        identity_suite,
        perfect_echo,
        two_spin,
        convergence,
        short_time_law,
        round_trip,
        qualitative_physics,
        determinism,
    ];
    let mut failed = 0;
    for criterion in criteria {
        let line = criterion();
        println!(
            "{} [{}] {}: {}",
            if line.passed { "PASS" } else { "FAIL" },
            line.id,
            line.name,
            line.detail
        );
        failed += usize::from(!line.passed);
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
