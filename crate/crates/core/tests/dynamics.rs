//! Propagators: closed forms, echo reversibility and convergence orders.

use otoc_core::linalg::expm_hermitian;
use otoc_core::metrics::{fidelity, loschmidt_echo};
use otoc_core::propagation::{
    dq_pulse_cycle, exact_propagator, heisenberg_evolve, phase_shifted_sequence,
    trotter_propagator, PulseParams, SectorEvolver, TogglingAverage,
};
use otoc_core::scaling::linear_fit;
use otoc_core::spin::{
    build_system, collective_operator, dipolar_hamiltonian, double_quantum_hamiltonian,
    iz_diagonal, perturbed_hamiltonian, Axis, PerturbationSpec, Topology,
};
use otoc_core::OperatorMatrix;
use proptest::prelude::*;

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    linear_fit(
        &xs.iter().map(|v| v.ln()).collect::<Vec<_>>(),
        &ys.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    )
    .unwrap()
    .slope
}

#[test]
fn two_spin_propagator_blocks() {
    let d = 1.3;
    let t = 0.7;
    let s = build_system(2, Topology::Chain, d, 0).unwrap();
    let u = exact_propagator(&double_quantum_hamiltonian(&s), t).unwrap();
    let e = u.entries();
    // H_0 = -(d/2) σ_x on {↑↑, ↓↓}, so U = cos(dt/2) + i sin(dt/2) σ_x.
    assert!((e[(0, 0)].re - (d * t / 2.0).cos()).abs() < 1e-14);
    assert!((e[(0, 3)].im - (d * t / 2.0).sin()).abs() < 1e-14);
    assert!((e[(1, 1)].re - 1.0).abs() < 1e-14 && e[(1, 2)].norm() < 1e-14);
}

#[test]
fn two_spin_dipolar_fidelity_is_cosine() {
    // Within {↑↑, ↓↓} the dipolar part is proportional to the identity,
    // so it only slows the rotation generated by H_0 by (1 - p).
    let d = 2.0;
    let s = build_system(2, Topology::Chain, d, 0).unwrap();
    let h0 = double_quantum_hamiltonian(&s);
    let iz = collective_operator(&s, Axis::Z);
    let basis = s.basis();
    for p in [0.1, 0.35, 1.0] {
        let hp = perturbed_hamiltonian(&h0, &PerturbationSpec::dipolar(p), &s).unwrap();
        for k in 1..20 {
            let t = 0.13 * k as f64;
            let a = heisenberg_evolve(&exact_propagator(&hp, t).unwrap(), &iz);
            let b = heisenberg_evolve(&exact_propagator(&h0, t).unwrap(), &iz);
            let f = fidelity(&a, &b, &basis).unwrap();
            assert!((f - (p * d * t).cos()).abs() < 1e-12, "p={p} t={t}");
        }
    }
}

#[test]
fn perfect_echo_without_perturbation() {
    for n in [2, 4, 6] {
        let s = build_system(n, Topology::Chain, 1.0, 0).unwrap();
        let h0 = double_quantum_hamiltonian(&s);
        let iz = collective_operator(&s, Axis::Z);
        for t in [0.1, 1.0, 10.0] {
            let u = exact_propagator(&h0, t).unwrap();
            assert!((loschmidt_echo(&u, &u, &iz).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn echo_equals_overlap_of_evolved_observables() {
    let s = build_system(4, Topology::Random, 1.0, 3).unwrap();
    let h0 = double_quantum_hamiltonian(&s);
    let hp = perturbed_hamiltonian(&h0, &PerturbationSpec::dipolar(0.3), &s).unwrap();
    let iz = collective_operator(&s, Axis::Z);
    let (up, u0) = (exact_propagator(&hp, 2.1).unwrap(), exact_propagator(&h0, 2.1).unwrap());
    let f = fidelity(&heisenberg_evolve(&up, &iz), &heisenberg_evolve(&u0, &iz), &s.basis()).unwrap();
    assert!((loschmidt_echo(&up, &u0, &iz).unwrap() - f).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sector_evolution_matches_dense_exponential(
        n in 2usize..=5,
        seed in 0u64..500,
        p in 0.0f64..1.0,
        t in 0.0f64..5.0,
        zeeman in any::<bool>(),
    ) {
        let s = build_system(n, Topology::Random, 1.0, seed).unwrap();
        let h0 = double_quantum_hamiltonian(&s);
        let spec = if zeeman { PerturbationSpec::zeeman(p, 0.8) } else { PerturbationSpec::dipolar(p) };
        let h = perturbed_hamiltonian(&h0, &spec, &s).unwrap();
        let evolver = SectorEvolver::new(&h, &iz_diagonal(&s), &s.basis()).unwrap();
        let u = exact_propagator(&h, t).unwrap();
        let dense = heisenberg_evolve(&u, &collective_operator(&s, Axis::Z));
        prop_assert!(evolver.evolve(t).max_abs_diff(&dense) < 1e-11);
        prop_assert!(evolver.propagator(t).max_abs_diff(&u) < 1e-11);
    }

    #[test]
    fn propagators_are_unitary(n in 2usize..=5, seed in 0u64..500, t in 0.0f64..20.0) {
        let s = build_system(n, Topology::Random, 1.0, seed).unwrap();
        let u = exact_propagator(&dipolar_hamiltonian(&s), t).unwrap();
        prop_assert!(u.unitarity_error() < 1e-11);
    }
}

#[test]
fn non_hermitian_generator_is_rejected() {
    let s = build_system(2, Topology::Chain, 1.0, 0).unwrap();
    let y = collective_operator(&s, Axis::Y);
    let not_hermitian = OperatorMatrix::new(y.entries().map(|z| z * num_complex::Complex64::new(0.0, 1.0)));
    assert!(exact_propagator(&not_hermitian, 1.0).is_err());
}

#[test]
fn trotter_error_is_first_order() {
    let s = build_system(6, Topology::Chain, 1.0, 0).unwrap();
    let h0 = double_quantum_hamiltonian(&s);
    let sigma = dipolar_hamiltonian(&s);
    let p = 0.3;
    let total = 2.0;
    let exact = exact_propagator(&h0.scale(1.0 - p).add_scaled(&sigma, p), total).unwrap();
    let mut taus = Vec::new();
    let mut errs = Vec::new();
    for k in 0..5 {
        let n = 8u64 << k;
        let tau = total / n as f64;
        let u = trotter_propagator(&h0, &sigma, p, tau, n).unwrap();
        taus.push(tau);
        errs.push(u.frobenius_distance(&exact));
    }
    let m = slope(&taus, &errs);
    assert!((m - 1.0).abs() < 0.1, "slope {m}");
}

#[test]
fn pulse_cycle_approaches_toggling_average() {
    // Halving d while doubling the cycle count keeps the accumulated phase
    // fixed; the symmetric cycle has a cubic per-cycle error, so the total
    // error falls as (τd)².
    let base = build_system(6, Topology::Chain, 1.0, 0).unwrap();
    let params = PulseParams::ideal(2e-6, 3.24e-6, 0.0, 1).unwrap();
    let avg = TogglingAverage::of(&params);
    let free_time = params.ideal_cycle_time();
    let mut scales = Vec::new();
    let mut errs = Vec::new();
    for k in 0..5 {
        let d = 2.0e4 / f64::from(1 << k);
        let n = 4u64 << k;
        let s = base.rescaled(d);
        let cycle = dq_pulse_cycle(&s, &params).unwrap();
        let target = exact_propagator(&avg.hamiltonian(&s), free_time * n as f64).unwrap();
        scales.push(d * free_time);
        errs.push(cycle.pow(n).frobenius_distance(&target));
    }
    let m = slope(&scales, &errs);
    assert!((m - 2.0).abs() < 0.2, "slope {m}");
}

#[test]
fn ideal_pulses_average_to_double_quantum() {
    let params = PulseParams::ideal(2e-6, 0.0, 0.0, 1).unwrap();
    let avg = TogglingAverage::of(&params);
    assert!((avg.kappa - 1.0).abs() < 1e-15 && avg.lambda.abs() < 1e-15);
    let s = build_system(2, Topology::Chain, 3e4, 0).unwrap();
    // For two spins H_dd commutes with H_0, so the average is exact.
    let cycle = dq_pulse_cycle(&s, &params).unwrap();
    let target = exact_propagator(&double_quantum_hamiltonian(&s), params.ideal_cycle_time()).unwrap();
    assert!(cycle.frobenius_distance(&target) < 1e-12);
}

#[test]
fn phase_shift_protocol_is_first_order() {
    let s = build_system(6, Topology::Chain, 1.0, 0).unwrap();
    let h0 = double_quantum_hamiltonian(&s);
    let iz = collective_operator(&s, Axis::Z);
    let (p, dw, total) = (0.2, -1.0, 2.0);
    let exact = exact_propagator(&h0.scale(1.0 - p).add_scaled(&iz, p * dw), total).unwrap();
    let mut taus = Vec::new();
    let mut errs = Vec::new();
    for k in 0..5 {
        let n = 8u64 << k;
        let tau_c = total / n as f64;
        let params = PulseParams::with_cycle_time(0.0, 0.0, (1.0 - p) * tau_c, p, n).unwrap();
        let phi = -dw * params.tau_sigma;
        let shifted = phase_shifted_sequence(&s, &params, phi, n).unwrap();
        let undo = expm_hermitian(&iz, -shifted.frame_phase).unwrap();
        assert!(undo.mul(&shifted.raw).max_abs_diff(&shifted.frame_corrected) < 1e-10);
        taus.push(tau_c);
        errs.push(shifted.frame_corrected.frobenius_distance(&exact));
    }
    let m = slope(&taus, &errs);
    assert!((m - 1.0).abs() < 0.1, "slope {m}");
}
