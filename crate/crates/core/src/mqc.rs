//! Coherence-order decomposition and MQC fidelity spectra.
//!
//! The element `⟨a|O|b⟩` has coherence order `M = M_z(b) - M_z(a)`, so that
//! `φ_z† O φ_z = Σ_M e^{iφM} O_M` for `φ_z = exp(iφ I_z)`. The spectrum of
//! a pair of evolved observables `A = I_z(t)`, `B = I_z^0(t)` is
//!
//! `f_M = Tr(A_M† B_M) / Tr(I_z²)`,
//!
//! so that the phase-encoded echo is `f_φ = Σ_M e^{iφM} f_M` and
//! `Σ_M f_M = Tr(A B) / Tr(I_z²)`.
//!
//! For Hermitian `A` and `B`, `f_{-M} = conj(f_M)` always holds. When both
//! evolutions are symmetric under a global spin flip (every perturbation
//! except the Zeeman offset) the amplitudes are also real. Spectra keep the
//! symmetric real part as `amplitudes` and the antisymmetric imaginary
//! part as `dispersion`, which only a Zeeman perturbation makes nonzero.

use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::linalg::{phase, CMatrix, Complex64, OperatorMatrix};
use crate::spin::{HilbertBasis, PerturbationSpec};

/// Tolerance on `|f_M - conj(f_{-M})|`.
pub const PAIRING_TOL: f64 = 1e-9;
/// Tolerance on the reconstruction of the echo signal from a spectrum.
pub const ALIASING_TOL: f64 = 1e-8;

/// `Tr(I_z²) = N 2^N / 4`, summed from the basis.
pub fn iz_norm(basis: &HilbertBasis) -> f64 {
    basis.magnetizations().iter().map(|m| m * m).sum()
}

/// Equally spaced encoding phases `φ_k = 2πk/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    phases: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(n_phases: usize) -> Result<Self> {
        if n_phases == 0 {
            return Err(Error::invalid("n_phases", "at least one phase is required"));
        }
        let step = 2.0 * core::f64::consts::PI / n_phases as f64;
        Ok(Self {
            phases: (0..n_phases).map(|k| step * k as f64).collect(),
        })
    }

    /// Smallest power of two strictly greater than `2N + 1`, enough for
    /// every order `|M| ≤ N`.
    pub fn auto(n_spins: usize) -> Self {
        let mut n = 1usize;
        while n <= 2 * n_spins + 1 {
            n *= 2;
        }
        Self::new(n).expect("nonzero grid")
    }

    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Largest order the grid resolves without aliasing.
    pub fn max_resolved_order(&self) -> usize {
        (self.n_phases() - 1) / 2
    }

    /// Midpoints between grid phases, used to detect aliasing.
    pub fn offset_phases(&self) -> Vec<f64> {
        let half = core::f64::consts::PI / self.n_phases() as f64;
        self.phases.iter().map(|p| p + half).collect()
    }
}

/// The MQC spectrum at one `(p, t)` point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MqcSpectrum {
    /// `-M_max ..= M_max`.
    pub orders: Vec<i32>,
    /// `Re f_M`, symmetric in `M`.
    pub amplitudes: Vec<f64>,
    /// `Im f_M`, antisymmetric in `M`.
    pub dispersion: Vec<f64>,
    pub time: f64,
    pub perturbation: Option<PerturbationSpec>,
}

impl MqcSpectrum {
    /// Builds a spectrum from complex `f_M` for `M = -M_max ..= M_max`
    /// after checking the Hermitian pairing `f_{-M} = conj(f_M)`.
    pub fn from_complex(values: &[Complex64]) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::invalid("values", "expected 2 M_max + 1 orders"));
        }
        let m_max = (values.len() / 2) as i32;
        let mut residue = 0.0f64;
        let mut amplitudes = Vec::with_capacity(values.len());
        let mut dispersion = Vec::with_capacity(values.len());
        for (i, v) in values.iter().enumerate() {
            let mirror = values[values.len() - 1 - i];
            residue = residue.max((v - mirror.conj()).norm());
            // Average with the mirror so the stored parts carry exact symmetry.
            amplitudes.push(0.5 * (v.re + mirror.re));
            dispersion.push(0.5 * (v.im - mirror.im));
        }
        Error::check("mqc pairing symmetry", residue, PAIRING_TOL)?;
        Ok(Self {
            orders: (-m_max..=m_max).collect(),
            amplitudes,
            dispersion,
            time: 0.0,
            perturbation: None,
        })
    }

    pub fn at(mut self, time: f64, perturbation: Option<PerturbationSpec>) -> Self {
        self.time = time;
        self.perturbation = perturbation;
        self
    }

    pub fn max_order(&self) -> i32 {
        self.orders.last().copied().unwrap_or(0)
    }

    /// `f_M`, zero outside the stored range.
    pub fn amplitude(&self, m: i32) -> f64 {
        let m_max = self.max_order();
        if m.abs() > m_max {
            0.0
        } else {
            self.amplitudes[(m + m_max) as usize]
        }
    }

    pub fn complex_amplitude(&self, m: i32) -> Complex64 {
        let m_max = self.max_order();
        if m.abs() > m_max {
            Complex64::new(0.0, 0.0)
        } else {
            let i = (m + m_max) as usize;
            Complex64::new(self.amplitudes[i], self.dispersion[i])
        }
    }

    /// `Σ_M f_M`, the global fidelity.
    pub fn total(&self) -> f64 {
        self.amplitudes.iter().sum()
    }

    /// Largest `|Im f_M|`.
    pub fn max_dispersion(&self) -> f64 {
        self.dispersion.iter().fold(0.0, |a, d| a.max(d.abs()))
    }

    /// `Σ_M e^{iφM} f_M`.
    pub fn signal(&self, phi: f64) -> Complex64 {
        self.orders
            .iter()
            .map(|&m| phase(phi * f64::from(m)) * self.complex_amplitude(m))
            .sum()
    }

    /// Largest `|f_M - other_M|` over the union of orders (complex).
    pub fn max_difference(&self, other: &Self) -> f64 {
        let m_max = self.max_order().max(other.max_order());
        (-m_max..=m_max)
            .map(|m| (self.complex_amplitude(m) - other.complex_amplitude(m)).norm())
            .fold(0.0, f64::max)
    }
}

/// Keeps the entries of `O` with coherence order `M`.
pub fn coherence_projection(o: &OperatorMatrix, m: i32, basis: &HilbertBasis) -> OperatorMatrix {
    let n = o.dim();
    let src = o.entries();
    let entries = CMatrix::from_fn(n, n, |a, b| {
        if basis.order(a, b) == m {
            src[(a, b)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    // Hermitian only when M = 0 and O is.
    let op = OperatorMatrix::new(entries);
    if m == 0 && o.is_hermitian() {
        op.assert_hermitian().expect("diagonal-order block of a Hermitian operator")
    } else {
        op
    }
}

/// Unnormalized `Tr(A_M† B_M)` for `M = -N ..= N`.
fn order_overlaps(a: &OperatorMatrix, b: &OperatorMatrix, basis: &HilbertBasis) -> Vec<Complex64> {
    let n_spins = basis.n_spins() as i32;
    let mut acc = vec![Complex64::new(0.0, 0.0); (2 * n_spins + 1) as usize];
    let (ea, eb) = (a.entries(), b.entries());
    let dim = a.dim();
    for col in 0..dim {
        let ca = ea.column(col);
        let cb = eb.column(col);
        for row in 0..dim {
            let m = basis.order(row, col);
            acc[(m + n_spins) as usize] += ca[row].conj() * cb[row];
        }
    }
    acc
}

fn check_pair(a: &OperatorMatrix, b: &OperatorMatrix, basis: &HilbertBasis) -> Result<()> {
    if a.dim() != basis.dim() || b.dim() != basis.dim() {
        return Err(Error::invalid("operators", "dimension does not match the basis"));
    }
    Ok(())
}

/// Spectrum by direct coherence-order projection.
pub fn exact_mqc_spectrum(
    iz_t: &OperatorMatrix,
    iz0_t: &OperatorMatrix,
    basis: &HilbertBasis,
) -> Result<MqcSpectrum> {
    check_pair(iz_t, iz0_t, basis)?;
    let norm = iz_norm(basis);
    let values: Vec<Complex64> = order_overlaps(iz_t, iz0_t, basis)
        .into_iter()
        .map(|v| v / norm)
        .collect();
    MqcSpectrum::from_complex(&values)
}

/// Samples the phase-encoded echo for one pair of evolved observables.
///
/// `Tr(A X) = Σ_ab A_ba X_ab` with `X_ab = conj(φ_a) B_ab φ_b`, so the
/// elementwise products `A_ba B_ab` are formed once and each phase costs a
/// single weighted sum.
struct EchoSampler {
    products: CMatrix,
    magnetizations: Vec<f64>,
    norm: f64,
}

impl EchoSampler {
    fn new(iz_t: &OperatorMatrix, iz0_t: &OperatorMatrix, basis: &HilbertBasis) -> Result<Self> {
        check_pair(iz_t, iz0_t, basis)?;
        let (ea, eb) = (iz_t.entries(), iz0_t.entries());
        let dim = basis.dim();
        let products = CMatrix::from_fn(dim, dim, |a, b| ea[(b, a)] * eb[(a, b)]);
        Ok(Self {
            products,
            magnetizations: basis.magnetizations(),
            norm: iz_norm(basis),
        })
    }

    fn sample(&self, angle: f64) -> Complex64 {
        let ph: Vec<Complex64> = self.magnetizations.iter().map(|&m| phase(angle * m)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, col) in self.products.column_iter().enumerate() {
            let inner: Complex64 = col.iter().zip(&ph).map(|(p, f)| p * f.conj()).sum();
            acc += inner * ph[b];
        }
        acc / self.norm
    }
}

/// `Tr[A φ_z† B φ_z] / Tr(I_z²)` with `φ_z = exp(i(φ + correction) I_z)`.
pub fn phase_encoded_fidelity(
    iz_t: &OperatorMatrix,
    iz0_t: &OperatorMatrix,
    basis: &HilbertBasis,
    phi: f64,
    frame_phase_correction: f64,
) -> Result<Complex64> {
    Ok(EchoSampler::new(iz_t, iz0_t, basis)?.sample(phi + frame_phase_correction))
}

/// Inverse transform `f_M = (1/n) Σ_k e^{-iMφ_k} f_{φ_k}` for
/// `|M| ≤ max_order`, with a reconstruction check at the grid phases.
pub fn fourier_mqc_spectrum(
    signals: &[Complex64],
    grid: &PhaseGrid,
    max_order: usize,
) -> Result<MqcSpectrum> {
    let n = grid.n_phases();
    if signals.len() != n {
        return Err(Error::invalid("signals", "one sample per grid phase is required"));
    }
    let m_max = max_order as i32;
    let values: Vec<Complex64> = (-m_max..=m_max)
        .map(|m| {
            signals
                .iter()
                .zip(grid.phases())
                .map(|(s, &phi)| s * phase(-f64::from(m) * phi))
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    let mismatch = reconstruction_mismatch(&values, grid.phases(), signals);
    if !(mismatch <= ALIASING_TOL) {
        return Err(Error::Aliasing {
            n_phases: n,
            mismatch,
        });
    }
    MqcSpectrum::from_complex(&values)
}

fn reconstruction_mismatch(values: &[Complex64], phases: &[f64], signals: &[Complex64]) -> f64 {
    let m_max = (values.len() / 2) as i32;
    phases
        .iter()
        .zip(signals)
        .map(|(&phi, s)| {
            let rebuilt: Complex64 = (-m_max..=m_max)
                .zip(values)
                .map(|(m, v)| phase(phi * f64::from(m)) * v)
                .sum();
            (rebuilt - s).norm()
        })
        .fold(0.0, f64::max)
}

/// The phase-encoding protocol end to end: samples `f_φ` on the grid,
/// transforms, and cross-checks the spectrum against extra samples taken
/// between the grid phases, which exposes aliasing the grid itself cannot
/// see.
pub fn phase_tomography(
    iz_t: &OperatorMatrix,
    iz0_t: &OperatorMatrix,
    basis: &HilbertBasis,
    grid: &PhaseGrid,
    frame_phase_correction: f64,
) -> Result<MqcSpectrum> {
    let sampler = EchoSampler::new(iz_t, iz0_t, basis)?;
    let sample = |phis: &[f64]| -> Vec<Complex64> {
        phis.iter()
            .map(|&phi| sampler.sample(phi + frame_phase_correction))
            .collect()
    };
    let signals = sample(grid.phases());
    let max_order = basis.n_spins().min(grid.max_resolved_order());
    let spectrum = fourier_mqc_spectrum(&signals, grid, max_order)?;
    let offsets = grid.offset_phases();
    let check = sample(&offsets);
    let values: Vec<Complex64> = spectrum
        .orders
        .iter()
        .map(|&m| spectrum.complex_amplitude(m))
        .collect();
    let mismatch = reconstruction_mismatch(&values, &offsets, &check);
    if !(mismatch <= ALIASING_TOL) {
        return Err(Error::Aliasing {
            n_phases: grid.n_phases(),
            mismatch,
        });
    }
    Ok(spectrum)
}
