//! Cross-module invariant suite behind `spinecho verify`.

use std::fmt;

use otoc_core::linalg::expm_hermitian;
use otoc_core::metrics::{
    cluster_size, commutator_overlap, conventional_otoc_sides, fidelity, second_moment,
};
use otoc_core::mqc::{exact_mqc_spectrum, phase_tomography};
use otoc_core::propagation::{
    dq_pulse_cycle, exact_propagator, heisenberg_evolve, phase_shifted_sequence,
    trotter_propagator, PulseParams, TogglingAverage,
};
use otoc_core::scaling::linear_fit;
use otoc_core::spin::{
    build_system, collective_operator, dipolar_hamiltonian, double_quantum_hamiltonian,
    iz_diagonal, perturbed_hamiltonian, Axis,
};
use otoc_core::{PerturbationSpec, PhaseGrid, SectorEvolver, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub const SPECTRUM_TOL: f64 = 1e-10;
pub const MOMENT_TOL: f64 = 1e-9;
pub const ENCODED_ECHO_TOL: f64 = 1e-9;
pub const SUM_RULE_TOL: f64 = 1e-9;
pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const ECHO_TOL: f64 = 1e-12;
pub const FIRST_ORDER_TOL: f64 = 0.1;
pub const SECOND_ORDER_TOL: f64 = 0.2;

/// Coupling scale of the checks, rad/s.
const D: f64 = otoc_core::spin::DEFAULT_COUPLING_SCALE;

/// Outcome of one check: the worst residual seen and its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<36} residual {:.3e}  tolerance {:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Random `(N, topology, p, t)` draws of the identity checks.
    pub draws: usize,
    /// Largest `N` of the random draws.
    pub max_spins: usize,
    pub seed: u64,
    /// Spin count of the convergence-order checks.
    pub order_spins: usize,
    /// Spin counts of the perfect-echo check.
    pub echo_spins: Vec<usize>,
    /// Flips the sign of `H_0` in the backward evolution feeding the
    /// commutator overlap, for testing that the suite notices.
    pub inject_h0_sign_error: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            draws: 20,
            max_spins: 6,
            seed: 0,
            order_spins: 6,
            echo_spins: vec![2, 4, 6, 8],
            inject_h0_sign_error: false,
        }
    }
}

pub fn run_verify(options: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut out = identity_suite(options)?;
    out.push(two_spin_closed_form()?);
    out.push(perfect_echo(&options.echo_spins)?);
    out.extend(convergence_orders(options.order_spins)?);
    Ok(out)
}

const TOPOLOGIES: [Topology; 4] = [Topology::Chain, Topology::Ring, Topology::AllToAll, Topology::Random];

/// Spectrum, moment, encoded-echo and sum-rule identities over random
/// draws; each result is the worst case.
pub fn identity_suite(options: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (mut spectrum, mut moment, mut encoded, mut sum_rule) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let max_n = options.max_spins.max(2);
    for _ in 0..options.draws {
        let n = rng.random_range(2..=max_n);
        let topology = TOPOLOGIES[rng.random_range(0..TOPOLOGIES.len())];
        let seed: u64 = rng.random();
        let p: f64 = rng.random_range(0.0..0.5);
        let t: f64 = rng.random_range(0.0..4.0) / D;
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let spec = if rng.random_bool(0.5) {
            PerturbationSpec::dipolar(p)
        } else {
            PerturbationSpec::custom_random(p, seed ^ 0x5eed)
        };

        let system = build_system(n, topology, D, seed)?;
        let basis = system.basis();
        let iz_diag = iz_diagonal(&system);
        let iz = collective_operator(&system, Axis::Z);
        let h0 = double_quantum_hamiltonian(&system);
        let hp = perturbed_hamiltonian(&h0, &spec, &system)?;
        let a = SectorEvolver::new(&hp, &iz_diag, &basis)?.evolve(t);
        let b = SectorEvolver::new(&h0, &iz_diag, &basis)?.evolve(t);

        let f = fidelity(&a, &b, &basis)?;
        let fourier = phase_tomography(&a, &b, &basis, &PhaseGrid::auto(n), 0.0)?;
        let direct = exact_mqc_spectrum(&a, &b, &basis)?;
        spectrum = spectrum.max(fourier.max_difference(&direct));
        sum_rule = sum_rule.max((fourier.total() - f).abs());

        // Independent backward path: dense exponential instead of the
        // sector evolver.
        let h0_alt = if options.inject_h0_sign_error { h0.scale(-1.0) } else { h0.clone() };
        let b_alt = heisenberg_evolve(&exact_propagator(&h0_alt, t)?, &iz);
        let overlap = commutator_overlap(&a, &b_alt, &iz)?;
        moment = moment.max((second_moment(&fourier) - overlap).abs());

        let u0 = exact_propagator(&h0, t)?;
        let (lhs, rhs) = conventional_otoc_sides(&u0, phi, &iz, &basis)?;
        encoded = encoded.max((lhs - rhs).abs());
    }
    Ok(vec![
        CheckResult { name: "fourier vs projected spectrum", residual: spectrum, tolerance: SPECTRUM_TOL },
        CheckResult { name: "second moment vs commutator overlap", residual: moment, tolerance: MOMENT_TOL },
        CheckResult { name: "encoded echo vs otoc at p = 0", residual: encoded, tolerance: ENCODED_ECHO_TOL },
        CheckResult { name: "mqc sum rule", residual: sum_rule, tolerance: SUM_RULE_TOL },
    ])
}

/// Two coupled spins at `p = 0` over 50 times: `f_0 = cos²(dt)`,
/// `f_{±2} = sin²(dt)/2`, `K = 8 sin²(dt)`.
pub fn two_spin_closed_form() -> Result<CheckResult> {
    let system = build_system(2, Topology::Chain, D, 0)?;
    let basis = system.basis();
    let iz_diag = iz_diagonal(&system);
    let evolver = SectorEvolver::new(&double_quantum_hamiltonian(&system), &iz_diag, &basis)?;
    let grid = PhaseGrid::auto(2);
    let mut worst = 0.0f64;
    for i in 1..=50 {
        let t = 3.0 * i as f64 / (50.0 * D);
        let a = evolver.evolve(t);
        let s = phase_tomography(&a, &a, &basis, &grid, 0.0)?;
        let (sin, cos) = (D * t).sin_cos();
        let k = cluster_size(&s, otoc_core::metrics::DEFAULT_FIDELITY_FLOOR)?;
        for err in [
            s.amplitude(0) - cos * cos,
            s.amplitude(2) - sin * sin / 2.0,
            s.amplitude(-2) - sin * sin / 2.0,
            s.amplitude(1),
            s.amplitude(-1),
            k - 8.0 * sin * sin,
        ] {
            worst = worst.max(err.abs());
        }
    }
    Ok(CheckResult { name: "two-spin closed form", residual: worst, tolerance: CLOSED_FORM_TOL })
}

/// `|f - 1|` at `p = 0` over the default time grid for each `N` given.
pub fn perfect_echo(spins: &[usize]) -> Result<CheckResult> {
    let times: Vec<f64> = (1..=20).map(|i| 75e-6 * i as f64).collect();
    let mut worst = 0.0f64;
    for &n in spins {
        let system = build_system(n, Topology::Chain, D, 0)?;
        let basis = system.basis();
        let iz_diag = iz_diagonal(&system);
        let h0 = double_quantum_hamiltonian(&system);
        let hp = perturbed_hamiltonian(&h0, &PerturbationSpec::dipolar(0.0), &system)?;
        let fwd = SectorEvolver::new(&hp, &iz_diag, &basis)?;
        let bwd = SectorEvolver::new(&h0, &iz_diag, &basis)?;
        for &t in &times {
            let f = fidelity(&fwd.evolve(t), &bwd.evolve(t), &basis)?;
            worst = worst.max((f - 1.0).abs());
        }
    }
    Ok(CheckResult { name: "perfect echo at p = 0", residual: worst, tolerance: ECHO_TOL })
}

fn log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.slope)
}

/// Log-log slopes of the Trotter, 8-pulse and phase-shift errors against
/// their step sizes, over four halvings each.
pub fn convergence_orders(n_spins: usize) -> Result<Vec<CheckResult>> {
    let unit = build_system(n_spins, Topology::Chain, 1.0, 0)?;
    let h0 = double_quantum_hamiltonian(&unit);
    let hdd = dipolar_hamiltonian(&unit);
    let iz = collective_operator(&unit, Axis::Z);
    let total = 2.0;

    let p = 0.3;
    let exact = exact_propagator(&h0.scale(1.0 - p).add_scaled(&hdd, p), total)?;
    let (mut taus, mut errs) = (Vec::new(), Vec::new());
    for k in 0..5 {
        let n = 8u64 << k;
        let tau = total / n as f64;
        taus.push(tau);
        errs.push(trotter_propagator(&h0, &hdd, p, tau, n)?.frobenius_distance(&exact));
    }
    let trotter = log_slope(&taus, &errs)?;

    let params = PulseParams::ideal(2e-6, 3.24e-6, 0.0, 1)?;
    let avg = TogglingAverage::of(&params);
    let free = params.ideal_cycle_time();
    let (mut scales, mut errs) = (Vec::new(), Vec::new());
    for k in 0..5 {
        let d = 2.0e4 / f64::from(1u32 << k);
        let n = 4u64 << k;
        let s = unit.rescaled(d);
        let cycle = dq_pulse_cycle(&s, &params)?;
        let target = exact_propagator(&avg.hamiltonian(&s), free * n as f64)?;
        scales.push(d * free);
        errs.push(cycle.pow(n).frobenius_distance(&target));
    }
    let pulse = log_slope(&scales, &errs)?;

    let (p, dw) = (0.2, -1.0);
    let exact = exact_propagator(&h0.scale(1.0 - p).add_scaled(&iz, p * dw), total)?;
    let (mut taus, mut errs) = (Vec::new(), Vec::new());
    for k in 0..5 {
        let n = 8u64 << k;
        let tau_c = total / n as f64;
        let params = PulseParams::with_cycle_time(0.0, 0.0, (1.0 - p) * tau_c, p, n)?;
        let shifted = phase_shifted_sequence(&unit, &params, -dw * params.tau_sigma, n)?;
        let undo = expm_hermitian(&iz, -shifted.frame_phase)?;
        otoc_core::Error::check(
            "phase-shift frame correction",
            undo.mul(&shifted.raw).max_abs_diff(&shifted.frame_corrected),
            1e-10,
        )?;
        taus.push(tau_c);
        errs.push(shifted.frame_corrected.frobenius_distance(&exact));
    }
    let phase = log_slope(&taus, &errs)?;

    Ok(vec![
        CheckResult { name: "trotter error order (1)", residual: (trotter - 1.0).abs(), tolerance: FIRST_ORDER_TOL },
        CheckResult { name: "8-pulse cycle error order (2)", residual: (pulse - 2.0).abs(), tolerance: SECOND_ORDER_TOL },
        CheckResult { name: "phase-shift error order (1)", residual: (phase - 1.0).abs(), tolerance: FIRST_ORDER_TOL },
    ])
}
