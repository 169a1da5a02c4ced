//! Spin-network Loschmidt-echo simulation and decoherence scaling analysis.
//!
//! The crate is `no_std` (with `alloc`) so the numerical kernel can be
//! embedded anywhere; file formats, configuration and the command-line
//! driver live in the `otoc` companion crate.
//!
//! Dynamics are always computed on the deviation operator `I_z`: the
//! identity part of the high-temperature initial state carries no signal,
//! so no density matrix is ever materialized.
//!
//! Module map:
//!
//! * [`spin`]: Hilbert space, collective operators, coupling topologies and
//!   the dipolar, double-quantum and perturbed Hamiltonians.
//! * [`propagation`]: exact, Trotterized, 8-pulse and phase-shifted
//!   propagators plus the parity-sector evolver used by sweeps.
//! * [`mqc`]: coherence-order projections and MQC fidelity spectra, both by
//!   direct projection and by phase-encoding Fourier tomography.
//! * [`metrics`]: fidelity, Loschmidt echo, second moments, commutator OTOCs
//!   and the effective cluster size `K(t)`.
//! * [`scaling`]: decoherence rates, power-law exponents and the finite-time
//!   scaling collapse that locates the critical perturbation.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod mqc;
pub mod propagation;
pub mod scaling;
pub mod spin;

pub use error::{Error, Result};
pub use linalg::{Complex64, OperatorMatrix};
pub use metrics::MetricsRecord;
pub use mqc::{MqcSpectrum, PhaseGrid};
pub use propagation::{PulseParams, SectorEvolver};
pub use spin::{HilbertBasis, PerturbationKind, PerturbationSpec, SpinSystem, Topology};
