//! Sweeps over the `(p, t)` grid of an experiment.

use std::env;

use otoc_core::metrics::{commutator_overlap, fidelity};
use otoc_core::mqc::{exact_mqc_spectrum, phase_tomography};
use otoc_core::propagation::{
    dq_pulse_cycle, exact_propagator, heisenberg_evolve, phase_shifted_cycles, trotter_propagator,
};
use otoc_core::scaling::{decoherence_rate, Smoothing};
use otoc_core::spin::{
    build_system_with_cap, double_quantum_hamiltonian, iz_diagonal, perturbation_operator,
    random_secular_operator,
};
use otoc_core::{
    Error as CoreError, HilbertBasis, MetricsRecord, MqcSpectrum, OperatorMatrix, PerturbationKind,
    PerturbationSpec, PhaseGrid, PulseParams, SectorEvolver, SpinSystem,
};
use rayon::prelude::*;

use crate::config::{cycle_count, EvolutionMode, ExperimentConfig};
use crate::error::{AppError, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "SPINECHO_WORKERS";

/// Largest `|f_M|` difference tolerated between the Fourier and projected
/// spectra when `verify` is on.
pub const SPECTRUM_TOL: f64 = 1e-10;

/// Result of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Kept {
        metrics: MetricsRecord,
        spectrum: MqcSpectrum,
    },
    Dropped {
        p: f64,
        /// Seconds.
        t: f64,
        fidelity: f64,
        reason: String,
    },
}

/// All points of a sweep in grid order: `p` outer, `t` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub points: Vec<PointOutcome>,
}

/// Rate curve of one `p` built from the kept points.
#[derive(Debug, Clone, PartialEq)]
pub struct RateColumn {
    pub p: f64,
    /// `(χ, χ')` per kept point of this `p`, or `None` where the rate is
    /// undefined.
    pub values: Vec<Option<(f64, f64)>>,
}

/// Worker count from [`WORKERS_ENV`], or `None` for rayon's default.
pub fn workers_from_env() -> Result<Option<usize>> {
    match env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(AppError::config(WORKERS_ENV, format!("expected a positive integer, found `{v}`"))),
        },
    }
}

struct Context {
    system: SpinSystem,
    basis: HilbertBasis,
    iz: OperatorMatrix,
    iz_diag: Vec<f64>,
    h0: OperatorMatrix,
    grid: PhaseGrid,
    floor: f64,
    verify: bool,
}

/// Runs every `(p, t)` point of `config` with the worker count from the
/// environment.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    run_sweep_with_workers(config, workers_from_env()?)
}

pub fn run_sweep_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<SweepOutput> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| AppError::config(WORKERS_ENV, e.to_string()))?;
    pool.install(|| sweep(config))
}

fn sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    let s = &config.system;
    let system = build_system_with_cap(s.n_spins, s.topology, config.coupling_scale(), s.seed, s.max_spins)?;
    let basis = system.basis();
    let iz_diag = iz_diagonal(&system);
    let iz = OperatorMatrix::from_diagonal(
        &iz_diag.iter().map(|&v| otoc_core::Complex64::new(v, 0.0)).collect::<Vec<_>>(),
    )
    .assert_hermitian()?;
    let ctx = Context {
        h0: double_quantum_hamiltonian(&system),
        grid: config.tomography.n_phases.grid(s.n_spins)?,
        floor: config.tomography.fidelity_floor,
        verify: config.tomography.verify,
        system,
        basis,
        iz,
        iz_diag,
    };
    let points = match config.evolution.mode {
        EvolutionMode::Exact => sweep_exact(&ctx, config)?,
        _ => {
            let per_p: Vec<Result<Vec<PointOutcome>>> = config
                .perturbation
                .p_list
                .par_iter()
                .map(|&p| sweep_cycles(&ctx, config, p))
                .collect();
            let mut points = Vec::new();
            for r in per_p {
                points.extend(r?);
            }
            points
        }
    };
    Ok(SweepOutput { points })
}

fn spec_for(config: &ExperimentConfig, p: f64) -> PerturbationSpec {
    PerturbationSpec {
        kind: config.perturbation.kind,
        strength: p,
        delta_omega_z: config.delta_omega_z(),
        intrinsic_seed: config.perturbation.random_seed,
    }
}

fn intrinsic(ctx: &Context, config: &ExperimentConfig) -> Option<OperatorMatrix> {
    let pert = &config.perturbation;
    (pert.intrinsic_strength > 0.0).then(|| {
        random_secular_operator(
            &ctx.system,
            pert.intrinsic_strength * ctx.system.coupling_scale(),
            pert.intrinsic_seed,
        )
    })
}

/// Exact mode walks the grid time by time so that each backward
/// evolution is computed once and shared by every `p`.
fn sweep_exact(ctx: &Context, config: &ExperimentConfig) -> Result<Vec<PointOutcome>> {
    let noise = intrinsic(ctx, config);
    let forward: Vec<SectorEvolver> = config
        .perturbation
        .p_list
        .par_iter()
        .map(|&p| {
            let sigma = perturbation_operator(&spec_for(config, p), &ctx.system);
            let mut h = ctx.h0.scale(1.0 - p).add_scaled(&sigma, p);
            if let Some(r) = &noise {
                h = h.add_scaled(r, 1.0);
            }
            SectorEvolver::new(&h, &ctx.iz_diag, &ctx.basis)
        })
        .collect::<otoc_core::Result<_>>()?;
    let backward = SectorEvolver::new(&ctx.h0, &ctx.iz_diag, &ctx.basis)?;
    let ps = &config.perturbation.p_list;
    let by_time: Vec<Vec<PointOutcome>> = config
        .evolution
        .t_list_us
        .par_iter()
        .map(|&t_us| {
            let t = t_us * 1e-6;
            let b = backward.evolve(t);
            ps.iter()
                .zip(&forward)
                .map(|(&p, fwd)| measure(ctx, p, t, &fwd.evolve(t), &b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(ps.len() * by_time.len());
    for i in 0..ps.len() {
        points.extend(by_time.iter().map(|row| row[i].clone()));
    }
    Ok(points)
}

/// Trotter and pulse modes evolve whole cycles.
fn sweep_cycles(ctx: &Context, config: &ExperimentConfig, p: f64) -> Result<Vec<PointOutcome>> {
    let ev = &config.evolution;
    let h0 = &ctx.h0;
    let sigma = perturbation_operator(&spec_for(config, p), &ctx.system);
    let noise = intrinsic(ctx, config);
    let with_noise = |h: &OperatorMatrix| match &noise {
        Some(r) => h.add_scaled(r, 1.0),
        None => h.clone(),
    };
    let times_us = &ev.t_list_us;
    let pairs: Vec<(f64, OperatorMatrix, OperatorMatrix)> = match ev.mode {
        EvolutionMode::Exact => unreachable!("exact mode has its own sweep"),
        EvolutionMode::Trotter => {
            let tau_c = ev.tau_c_us * 1e-6;
            let h0f = with_noise(h0);
            let sigmaf = with_noise(&sigma);
            times_us
                .par_iter()
                .map(|&t_us| -> Result<_> {
                    let n = cycle_count(t_us, ev.tau_c_us);
                    let u_p = trotter_propagator(&h0f, &sigmaf, p, tau_c, n)?;
                    let t = n as f64 * tau_c;
                    let u_0 = exact_propagator(&ctx.h0, t)?;
                    Ok((t, heisenberg_evolve(&u_p, &ctx.iz), heisenberg_evolve(&u_0, &ctx.iz)))
                })
                .collect::<Result<_>>()?
        }
        EvolutionMode::Pulse => {
            let params = PulseParams::ideal(ev.delta_us * 1e-6, ev.tau_p_us * 1e-6, p, 1)?;
            let cycle = dq_pulse_cycle(&ctx.system, &params)?;
            let tau_0_us = params.tau_0 * 1e6;
            let free_sigma = exact_propagator(&sigma, params.tau_sigma)?;
            let perturbed_cycle = cycle.mul(&free_sigma);
            times_us
                .par_iter()
                .map(|&t_us| -> Result<_> {
                    let n = cycle_count(t_us, tau_0_us);
                    let u_p = match config.perturbation.kind {
                        PerturbationKind::Zeeman => {
                            let phi = -config.delta_omega_z() * params.tau_sigma;
                            phase_shifted_cycles(&cycle, &ctx.iz_diag, phi, n).frame_corrected
                        }
                        _ => perturbed_cycle.pow(n),
                    };
                    let u_0 = cycle.pow(n);
                    let t = n as f64 * params.tau_c;
                    Ok((t, heisenberg_evolve(&u_p, &ctx.iz), heisenberg_evolve(&u_0, &ctx.iz)))
                })
                .collect::<Result<_>>()?
        }
    };
    pairs
        .into_par_iter()
        .map(|(t, a, b)| measure(ctx, p, t, &a, &b))
        .collect()
}

fn measure(ctx: &Context, p: f64, t: f64, a: &OperatorMatrix, b: &OperatorMatrix) -> Result<PointOutcome> {
    let f = fidelity(a, b, &ctx.basis)?;
    let spectrum = phase_tomography(a, b, &ctx.basis, &ctx.grid, 0.0)?;
    if ctx.verify {
        let direct = exact_mqc_spectrum(a, b, &ctx.basis)?;
        CoreError::check("fourier vs projected spectrum", spectrum.max_difference(&direct), SPECTRUM_TOL)?;
    }
    let overlap = commutator_overlap(a, b, &ctx.iz)?;
    match MetricsRecord::assemble(p, t, f, &spectrum, overlap, ctx.floor) {
        Ok(metrics) => Ok(PointOutcome::Kept {
            metrics,
            spectrum: spectrum.at(t, None),
        }),
        Err(e @ CoreError::FidelityBelowFloor { .. }) => Ok(PointOutcome::Dropped {
            p,
            t,
            fidelity: f,
            reason: e.to_string(),
        }),
        Err(e) => Err(e.into()),
    }
}

/// `χ` and `χ'` for every kept point, curve by curve. A curve whose rate
/// cannot be formed (too few points, non-positive fidelity) gets `None`.
pub fn rate_columns(points: &[&MetricsRecord], smoothing: Smoothing) -> Vec<RateColumn> {
    let mut columns: Vec<RateColumn> = Vec::new();
    let mut start = 0;
    while start < points.len() {
        let p = points[start].p;
        let end = start + points[start..].iter().take_while(|m| m.p == p).count();
        let curve = &points[start..end];
        let t: Vec<f64> = curve.iter().map(|m| m.t).collect();
        let f: Vec<f64> = curve.iter().map(|m| m.fidelity).collect();
        let k: Vec<f64> = curve.iter().map(|m| m.cluster_size).collect();
        let values = match decoherence_rate(p, &t, &f, &k, smoothing) {
            Ok(series) => series.samples.iter().map(|s| Some((s.chi, s.chi_rate))).collect(),
            Err(_) => vec![None; curve.len()],
        };
        columns.push(RateColumn { p, values });
        start = end;
    }
    columns
}
