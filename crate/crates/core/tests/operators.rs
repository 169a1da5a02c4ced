//! Spin operators against an independent Kronecker-product construction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use otoc_core::spin::{
    build_system, build_system_with_cap, collective_operator, dipolar_hamiltonian,
    double_quantum_hamiltonian, perturbed_hamiltonian, random_secular_operator, Axis,
    PerturbationSpec, SpinSystem, Topology,
};
use otoc_core::{Error, OperatorMatrix};
use proptest::prelude::*;

type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-spin operators in the (up, down) basis.
fn pauli_half(axis: Axis) -> M {
    match axis {
        Axis::X => M::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]),
        Axis::Y => M::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]),
        Axis::Z => M::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]),
    }
}

/// `I_axis^site` embedded as `1 ⊗ … ⊗ I_axis ⊗ … ⊗ 1` with spin 0 leftmost.
fn site_operator(n: usize, site: usize, axis: Axis) -> M {
    let mut out = M::identity(1, 1);
    for k in 0..n {
        let factor = if k == site { pauli_half(axis) } else { M::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

fn oracle_collective(n: usize, axis: Axis) -> M {
    (0..n).fold(M::zeros(1 << n, 1 << n), |acc, i| acc + site_operator(n, i, axis))
}

fn pair(n: usize, i: usize, j: usize, axis: Axis) -> M {
    site_operator(n, i, axis) * site_operator(n, j, axis)
}

fn oracle_dipolar(s: &SpinSystem) -> M {
    let n = s.n_spins();
    let mut h = M::zeros(1 << n, 1 << n);
    for i in 0..n {
        for j in i + 1..n {
            let d = c(s.coupling(i, j), 0.0);
            h += (pair(n, i, j, Axis::Z) * c(2.0, 0.0) - pair(n, i, j, Axis::X) - pair(n, i, j, Axis::Y)) * d;
        }
    }
    h
}

fn oracle_double_quantum(s: &SpinSystem) -> M {
    let n = s.n_spins();
    let mut h = M::zeros(1 << n, 1 << n);
    for i in 0..n {
        for j in i + 1..n {
            h -= (pair(n, i, j, Axis::X) - pair(n, i, j, Axis::Y)) * c(s.coupling(i, j), 0.0);
        }
    }
    h
}

fn max_diff(a: &OperatorMatrix, b: &M) -> f64 {
    (a.entries() - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![
        Just(Topology::Chain),
        Just(Topology::Ring),
        Just(Topology::AllToAll),
        Just(Topology::Random),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_match_tensor_products(n in 2usize..=5, topo in topology(), seed in 0u64..1000) {
        let s = build_system(n, topo, 1.7, seed).unwrap();
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            prop_assert!(max_diff(&collective_operator(&s, axis), &oracle_collective(n, axis)) < 1e-14);
        }
        prop_assert!(max_diff(&dipolar_hamiltonian(&s), &oracle_dipolar(&s)) < 1e-13);
        prop_assert!(max_diff(&double_quantum_hamiltonian(&s), &oracle_double_quantum(&s)) < 1e-13);
    }

    #[test]
    fn hamiltonians_are_real_symmetric_and_parity_preserving(n in 2usize..=6, topo in topology(), seed in 0u64..1000) {
        let s = build_system(n, topo, 1.0, seed).unwrap();
        let basis = s.basis();
        for h in [dipolar_hamiltonian(&s), double_quantum_hamiltonian(&s), random_secular_operator(&s, 1.0, seed)] {
            prop_assert!(h.is_hermitian());
            prop_assert!(h.is_real());
            for a in 0..s.dim() {
                for b in 0..s.dim() {
                    if h.entries()[(a, b)].norm() > 0.0 {
                        prop_assert_eq!(basis.parity(a), basis.parity(b));
                    }
                }
            }
        }
    }

    #[test]
    fn double_quantum_changes_order_by_two(n in 2usize..=6, seed in 0u64..1000) {
        let s = build_system(n, Topology::Random, 1.0, seed).unwrap();
        let basis = s.basis();
        let h0 = double_quantum_hamiltonian(&s);
        let hdd = dipolar_hamiltonian(&s);
        for a in 0..s.dim() {
            for b in 0..s.dim() {
                if h0.entries()[(a, b)].norm() > 0.0 {
                    prop_assert_eq!(basis.order(a, b).abs(), 2);
                }
                if hdd.entries()[(a, b)].norm() > 0.0 {
                    prop_assert_eq!(basis.order(a, b), 0);
                }
            }
        }
    }
}

#[test]
fn angular_momentum_algebra() {
    let s = build_system(3, Topology::Chain, 1.0, 0).unwrap();
    let [x, y, z] = [Axis::X, Axis::Y, Axis::Z].map(|a| collective_operator(&s, a));
    let i = Complex64::new(0.0, 1.0);
    let xy = x.commutator(&y);
    let expected = z.entries().map(|v| v * i);
    assert!(max_diff(&xy, &expected) < 1e-14);
    assert!(y.is_hermitian());
}

#[test]
fn two_spin_dipolar_spectrum() {
    // Triplet states ↑↑, ↓↓ sit at d/2; the antiparallel block splits into
    // the triplet 0 at -d and the singlet at 0.
    let d = 2.5;
    let s = build_system(2, Topology::Chain, d, 0).unwrap();
    let (vals, _) = otoc_core::linalg::eigh(&dipolar_hamiltonian(&s)).unwrap();
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    for (got, want) in v.iter().zip([-d, 0.0, d / 2.0, d / 2.0]) {
        assert!((got - want).abs() < 1e-13);
    }
    // ⟨↑↑|H_0|↓↓⟩ = -d/2.
    let h0 = double_quantum_hamiltonian(&s);
    assert!((h0.entries()[(0, 3)] - c(-d / 2.0, 0.0)).norm() < 1e-15);
}

#[test]
fn topologies_and_capacity() {
    let ring = build_system(6, Topology::Ring, 8.0, 0).unwrap();
    assert_eq!(ring.coupling(0, 5), 8.0);
    assert_eq!(ring.coupling(0, 3), 8.0 / 27.0);
    let a = build_system(5, Topology::Random, 1.0, 11).unwrap();
    let b = build_system(5, Topology::Random, 1.0, 11).unwrap();
    let other = build_system(5, Topology::Random, 1.0, 12).unwrap();
    assert_eq!(a.couplings(), b.couplings());
    assert_ne!(a.couplings(), other.couplings());
    assert!(a.couplings().iter().all(|v| v.abs() <= 1.0));
    assert!(matches!(build_system(13, Topology::Chain, 1.0, 0), Err(Error::Capacity { .. })));
    assert!(build_system_with_cap(13, Topology::Chain, 1.0, 0, 13).is_ok());
    assert!(build_system(0, Topology::Chain, 1.0, 0).is_err());
    assert!(build_system(3, Topology::Chain, -1.0, 0).is_err());
}

#[test]
fn perturbed_hamiltonian_interpolates() {
    let s = build_system(4, Topology::Chain, 1.0, 0).unwrap();
    let h0 = double_quantum_hamiltonian(&s);
    let hdd = dipolar_hamiltonian(&s);
    let h = perturbed_hamiltonian(&h0, &PerturbationSpec::dipolar(0.25), &s).unwrap();
    let want = h0.scale(0.75).add_scaled(&hdd, 0.25);
    assert!(h.max_abs_diff(&want) < 1e-15);
    let hz = perturbed_hamiltonian(&h0, &PerturbationSpec::zeeman(1.0, 3.0), &s).unwrap();
    assert!(hz.max_abs_diff(&collective_operator(&s, Axis::Z).scale(3.0)) < 1e-15);
    assert!(perturbed_hamiltonian(&h0, &PerturbationSpec::dipolar(1.5), &s).is_err());
}
