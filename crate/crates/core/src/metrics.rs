//! Fidelity, Loschmidt echo, OTOC second moments and the cluster size.
//!
//! Every trace that is real in theory is evaluated in complex arithmetic
//! and checked against [`REAL_TOL`] before its real part is returned.


use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Complex64, OperatorMatrix};
use crate::mqc::{iz_norm, phase_encoded_fidelity, MqcSpectrum};
use crate::propagation::heisenberg_evolve;
use crate::spin::HilbertBasis;

/// Largest imaginary part tolerated on a trace that should be real.
pub const REAL_TOL: f64 = 1e-9;
/// Tolerance of the dual-path second-moment identity.
pub const MOMENT_TOL: f64 = 1e-9;
/// Tolerance of `Σ_M f_M = f`.
pub const SUM_RULE_TOL: f64 = 1e-9;
/// Default fidelity below which `K` is left undefined.
pub const DEFAULT_FIDELITY_FLOOR: f64 = 1e-6;

fn real(check: &'static str, z: Complex64) -> Result<f64> {
    Error::check(check, z.im.abs(), REAL_TOL)?;
    Ok(z.re)
}

fn diagonal(op: &OperatorMatrix) -> Option<alloc::vec::Vec<f64>> {
    let e = op.entries();
    let n = op.dim();
    for j in 0..n {
        for i in 0..n {
            if i != j && e[(i, j)] != Complex64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    if e.diagonal().iter().any(|z| z.im != 0.0) {
        return None;
    }
    Some(e.diagonal().iter().map(|z| z.re).collect())
}

/// `[O, D]` for a real diagonal `D`: `O_ab (d_b - d_a)`.
fn commutator_with_diagonal(o: &OperatorMatrix, d: &[f64]) -> OperatorMatrix {
    let e = o.entries();
    OperatorMatrix::new(CMatrix::from_fn(o.dim(), o.dim(), |a, b| e[(a, b)] * (d[b] - d[a])))
}

fn commutator(o: &OperatorMatrix, iz: &OperatorMatrix) -> OperatorMatrix {
    match diagonal(iz) {
        Some(d) => commutator_with_diagonal(o, &d),
        None => o.commutator(iz),
    }
}

fn norm_of(iz: &OperatorMatrix) -> Result<f64> {
    let n = real("Tr(I_z^2) reality", iz.trace_product(iz))?;
    if n > 0.0 {
        Ok(n)
    } else {
        Err(Error::invalid("I_z", "observable has zero norm"))
    }
}

/// `f = Tr[I_z(t) I_z^0(t)] / Tr(I_z²)`.
pub fn fidelity(iz_t: &OperatorMatrix, iz0_t: &OperatorMatrix, basis: &HilbertBasis) -> Result<f64> {
    if iz_t.dim() != basis.dim() || iz0_t.dim() != basis.dim() {
        return Err(Error::invalid("operators", "dimension does not match the basis"));
    }
    real("fidelity reality", iz_t.trace_product(iz0_t) / iz_norm(basis))
}

/// `Tr(U_0† U_p I_z U_p† U_0 I_z) / Tr(I_z²)`.
pub fn loschmidt_echo(u_p: &OperatorMatrix, u_0: &OperatorMatrix, iz: &OperatorMatrix) -> Result<f64> {
    let w = u_0.adjoint().mul(u_p);
    let echoed = heisenberg_evolve(&w, iz);
    real("echo reality", echoed.trace_product(iz) / norm_of(iz)?)
}

/// `m_2 = Σ_M M² f_M`.
pub fn second_moment(spectrum: &MqcSpectrum) -> f64 {
    spectrum
        .orders
        .iter()
        .zip(&spectrum.amplitudes)
        .map(|(&m, f)| f64::from(m * m) * f)
        .sum()
}

/// `Tr([I_z(t), I_z]† [I_z^0(t), I_z]) / Tr(I_z²)`.
pub fn commutator_overlap(
    iz_t: &OperatorMatrix,
    iz0_t: &OperatorMatrix,
    iz: &OperatorMatrix,
) -> Result<f64> {
    let ca = commutator(iz_t, iz);
    let cb = commutator(iz0_t, iz);
    real("commutator overlap reality", ca.inner(&cb) / norm_of(iz)?)
}

/// `K = 2 Σ M² f_M / Σ f_M`, undefined below `floor`.
pub fn cluster_size(spectrum: &MqcSpectrum, floor: f64) -> Result<f64> {
    let total = spectrum.total();
    if !(total > floor) {
        return Err(Error::FidelityBelowFloor {
            fidelity: total,
            floor,
        });
    }
    Ok(2.0 * second_moment(spectrum) / total)
}

/// Both sides of the conventional-OTOC identity at `p = 0`:
///
/// * `lhs = f_φ(p=0, t)`, the phase-encoded echo of `I_z^0(t)` with itself;
/// * `rhs = 1 - ½ Tr([φ_z(t), I_z]† [φ_z(t), I_z]) / Tr(I_z²)` with
///   `φ_z(t) = U_0 φ_z U_0†`.
pub fn conventional_otoc_sides(
    u_0: &OperatorMatrix,
    phi: f64,
    iz: &OperatorMatrix,
    basis: &HilbertBasis,
) -> Result<(f64, f64)> {
    let iz0_t = heisenberg_evolve(u_0, iz);
    let lhs = real(
        "encoded echo reality",
        phase_encoded_fidelity(&iz0_t, &iz0_t, basis, phi, 0.0)?,
    )?;
    let encoder = crate::linalg::diagonal_phase(&basis.magnetizations(), phi);
    let evolved = u_0.conjugate(&encoder);
    let c = commutator(&evolved, iz);
    let rhs = 1.0 - 0.5 * real("otoc reality", c.inner(&c) / norm_of(iz)?)?;
    Ok((lhs, rhs))
}

/// [`conventional_otoc_sides`] with the identity enforced to `1e-9`.
pub fn conventional_otoc_identity_check(
    u_0: &OperatorMatrix,
    phi: f64,
    iz: &OperatorMatrix,
    basis: &HilbertBasis,
) -> Result<(f64, f64)> {
    let (lhs, rhs) = conventional_otoc_sides(u_0, phi, iz, basis)?;
    Error::check("conventional otoc identity", (lhs - rhs).abs(), MOMENT_TOL)?;
    Ok((lhs, rhs))
}

/// One `(p, t)` point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsRecord {
    pub p: f64,
    /// Seconds.
    pub t: f64,
    pub fidelity: f64,
    pub m2: f64,
    pub cluster_size: f64,
    pub commutator_overlap: f64,
}

impl MetricsRecord {
    /// Assembles a record and enforces its identities: the spectrum sums to
    /// the directly computed fidelity, and its second moment equals the
    /// independently evaluated commutator overlap.
    pub fn assemble(
        p: f64,
        t: f64,
        fidelity: f64,
        spectrum: &MqcSpectrum,
        commutator_overlap: f64,
        floor: f64,
    ) -> Result<Self> {
        Error::check("mqc sum rule", (spectrum.total() - fidelity).abs(), SUM_RULE_TOL)?;
        let m2 = second_moment(spectrum);
        Error::check(
            "second moment vs commutator overlap",
            (m2 - commutator_overlap).abs(),
            MOMENT_TOL,
        )?;
        let cluster_size = cluster_size(spectrum, floor)?;
        Ok(Self {
            p,
            t,
            fidelity,
            m2,
            cluster_size,
            commutator_overlap,
        })
    }
}
