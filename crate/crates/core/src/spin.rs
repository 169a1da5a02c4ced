//! Spin networks, collective operators and the engineered Hamiltonians.
//!
//! Basis convention: basis index `b` stores spin `i` in bit `N - 1 - i`,
//! with a cleared bit meaning spin up. For two spins the basis order is
//! `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.
//!
//! All Hamiltonians are in angular-frequency units (rad/s).

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{OperatorMatrix, RMatrix};

/// Default cap on the number of spins (dense `2^N` matrices).
pub const DEFAULT_MAX_SPINS: usize = 12;

/// Default dipolar coupling scale: 13 kHz resonance linewidth, in rad/s.
pub const DEFAULT_COUPLING_SCALE: f64 = 2.0 * core::f64::consts::PI * 13.0e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Topology {
    /// Open chain, `d_ij = d / |i - j|^3`.
    Chain,
    /// Periodic chain using the circular distance.
    Ring,
    /// Uniform `d_ij = d`.
    AllToAll,
    /// `d_ij` uniform in `[-d, d]`, reproducible from the seed.
    Random,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            "all_to_all" => Ok(Topology::AllToAll),
            "random" => Ok(Topology::Random),
            other => Err(Error::invalid(
                "topology",
                alloc::format!("unknown topology `{other}`"),
            )),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Chain => "chain",
            Topology::Ring => "ring",
            Topology::AllToAll => "all_to_all",
            Topology::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A network of spin-1/2 particles coupled by `d_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    n_spins: usize,
    couplings: RMatrix,
    coupling_scale: f64,
    topology: Topology,
    seed: u64,
}

impl SpinSystem {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// Symmetric coupling matrix with zero diagonal, rad/s.
    pub fn couplings(&self) -> &RMatrix {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[(i, j)]
    }

    /// The scale `d` the topology was built from.
    pub fn coupling_scale(&self) -> f64 {
        self.coupling_scale
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn basis(&self) -> HilbertBasis {
        HilbertBasis::new(self.n_spins)
    }

    /// Same network with every coupling multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            couplings: &self.couplings * factor,
            coupling_scale: self.coupling_scale * factor,
            ..self.clone()
        }
    }

    /// Builds a system from an explicit coupling matrix.
    pub fn from_couplings(couplings: RMatrix, max_spins: usize) -> Result<Self> {
        let n = couplings.nrows();
        check_capacity(n, max_spins)?;
        if !couplings.is_square() {
            return Err(Error::invalid("couplings", "matrix must be square"));
        }
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(Error::invalid("couplings", "diagonal must be zero"));
            }
            for j in 0..n {
                let c = couplings[(i, j)];
                if !c.is_finite() {
                    return Err(Error::invalid("couplings", "entries must be finite"));
                }
                if c != couplings[(j, i)] {
                    return Err(Error::invalid("couplings", "matrix must be symmetric"));
                }
            }
        }
        let scale = couplings.amax();
        Ok(Self {
            n_spins: n,
            couplings,
            coupling_scale: scale,
            topology: Topology::Random,
            seed: 0,
        })
    }
}

fn check_capacity(n_spins: usize, max_spins: usize) -> Result<()> {
    if n_spins == 0 {
        return Err(Error::invalid("n_spins", "at least one spin is required"));
    }
    if n_spins > max_spins || n_spins >= usize::BITS as usize {
        return Err(Error::Capacity {
            n_spins,
            max_spins,
        });
    }
    Ok(())
}

/// Builds a spin network under the default capacity cap.
pub fn build_system(
    n_spins: usize,
    topology: Topology,
    coupling_scale: f64,
    seed: u64,
) -> Result<SpinSystem> {
    build_system_with_cap(n_spins, topology, coupling_scale, seed, DEFAULT_MAX_SPINS)
}

pub fn build_system_with_cap(
    n_spins: usize,
    topology: Topology,
    coupling_scale: f64,
    seed: u64,
    max_spins: usize,
) -> Result<SpinSystem> {
    check_capacity(n_spins, max_spins)?;
    if !(coupling_scale > 0.0 && coupling_scale.is_finite()) {
        return Err(Error::invalid(
            "coupling_scale",
            "must be positive and finite",
        ));
    }
    let d = coupling_scale;
    let n = n_spins;
    let mut couplings = RMatrix::zeros(n, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        for j in (i + 1)..n {
            let value = match topology {
                Topology::Chain => d / cube((j - i) as f64),
                Topology::Ring => {
                    let r = (j - i).min(n - (j - i));
                    d / cube(r as f64)
                }
                Topology::AllToAll => d,
                Topology::Random => rng.random_range(-d..=d),
            };
            couplings[(i, j)] = value;
            couplings[(j, i)] = value;
        }
    }
    Ok(SpinSystem {
        n_spins,
        couplings,
        coupling_scale,
        topology,
        seed,
    })
}

fn cube(x: f64) -> f64 {
    x * x * x
}

/// Computational basis with per-state magnetization quantum numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertBasis {
    n_spins: usize,
    twice_m: Vec<i32>,
}

impl HilbertBasis {
    pub fn new(n_spins: usize) -> Self {
        let dim = 1usize << n_spins;
        let twice_m = (0..dim)
            .map(|b| n_spins as i32 - 2 * (b.count_ones() as i32))
            .collect();
        Self { n_spins, twice_m }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.twice_m.len()
    }

    /// `M_z` of basis state `b`.
    pub fn magnetization(&self, b: usize) -> f64 {
        f64::from(self.twice_m[b]) * 0.5
    }

    pub fn magnetizations(&self) -> Vec<f64> {
        self.twice_m.iter().map(|&m| f64::from(m) * 0.5).collect()
    }

    /// Coherence order of the element `|a⟩⟨b|`: `M_z(b) - M_z(a)`.
    pub fn order(&self, a: usize, b: usize) -> i32 {
        (self.twice_m[b] - self.twice_m[a]) / 2
    }

    /// Parity sector of a basis state (number of down spins mod 2).
    pub fn parity(&self, b: usize) -> usize {
        (b.count_ones() & 1) as usize
    }
}

#[inline]
fn spin_bit(n_spins: usize, i: usize) -> usize {
    1 << (n_spins - 1 - i)
}

#[inline]
fn is_up(state: usize, bit: usize) -> bool {
    state & bit == 0
}

/// `I_axis = Σ_i I_axis^i`.
pub fn collective_operator(system: &SpinSystem, axis: Axis) -> OperatorMatrix {
    let n = system.n_spins;
    let dim = system.dim();
    let basis = system.basis();
    let mut m = crate::linalg::CMatrix::zeros(dim, dim);
    match axis {
        Axis::Z => {
            for b in 0..dim {
                m[(b, b)].re = basis.magnetization(b);
            }
        }
        Axis::X | Axis::Y => {
            for b in 0..dim {
                for i in 0..n {
                    let bit = spin_bit(n, i);
                    let flipped = b ^ bit;
                    // ⟨flipped| I^i |b⟩: raising when b has spin i down.
                    let value = match axis {
                        Axis::X => num_complex::Complex64::new(0.5, 0.0),
                        _ if is_up(b, bit) => num_complex::Complex64::new(0.0, 0.5),
                        _ => num_complex::Complex64::new(0.0, -0.5),
                    };
                    m[(flipped, b)] += value;
                }
            }
        }
    }
    OperatorMatrix::new(m).with_flags(true, false)
}

/// Real diagonal of `I_z`.
pub fn iz_diagonal(system: &SpinSystem) -> Vec<f64> {
    system.basis().magnetizations()
}

/// Coefficients of the secular and double-quantum two-spin terms for one pair.
#[derive(Debug, Clone, Copy, Default)]
struct PairTerm {
    /// Weight of `I_z^i I_z^j`.
    zz: f64,
    /// Weight of `I_x^i I_x^j + I_y^i I_y^j` (flip-flop).
    flip_flop: f64,
    /// Weight of `I_x^i I_x^j - I_y^i I_y^j` (flip-flip).
    flip_flip: f64,
}

fn pair_sum(n_spins: usize, mut term: impl FnMut(usize, usize) -> PairTerm) -> RMatrix {
    let dim = 1usize << n_spins;
    let mut h = RMatrix::zeros(dim, dim);
    for i in 0..n_spins {
        for j in (i + 1)..n_spins {
            let t = term(i, j);
            if t.zz == 0.0 && t.flip_flop == 0.0 && t.flip_flip == 0.0 {
                continue;
            }
            let (bi, bj) = (spin_bit(n_spins, i), spin_bit(n_spins, j));
            for b in 0..dim {
                let parallel = is_up(b, bi) == is_up(b, bj);
                let flipped = b ^ bi ^ bj;
                if parallel {
                    h[(b, b)] += 0.25 * t.zz;
                    // (S+S+ + S-S-)/2 has matrix element 1/2.
                    h[(flipped, b)] += 0.5 * t.flip_flip;
                } else {
                    h[(b, b)] -= 0.25 * t.zz;
                    // (S+S- + S-S+)/2 has matrix element 1/2.
                    h[(flipped, b)] += 0.5 * t.flip_flop;
                }
            }
        }
    }
    h
}

/// Secular dipolar Hamiltonian
/// `H_dd = Σ_{i<j} d_ij [2 I_z^i I_z^j - (I_x^i I_x^j + I_y^i I_y^j)]`.
pub fn dipolar_hamiltonian(system: &SpinSystem) -> OperatorMatrix {
    let h = pair_sum(system.n_spins, |i, j| {
        let d = system.coupling(i, j);
        PairTerm {
            zz: 2.0 * d,
            flip_flop: -d,
            flip_flip: 0.0,
        }
    });
    OperatorMatrix::from_real(&h).with_flags(true, false)
}

/// Double-quantum Hamiltonian `H_0 = -Σ_{i<j} d_ij [I_x^i I_x^j - I_y^i I_y^j]`.
pub fn double_quantum_hamiltonian(system: &SpinSystem) -> OperatorMatrix {
    let h = pair_sum(system.n_spins, |i, j| PairTerm {
        flip_flip: -system.coupling(i, j),
        ..PairTerm::default()
    });
    OperatorMatrix::from_real(&h).with_flags(true, false)
}

/// Seeded random secular two-spin operator
/// `Σ_{i<j} scale (g_ij I_z^i I_z^j + h_ij (I_x^i I_x^j + I_y^i I_y^j))`
/// with standard-normal `g_ij`, `h_ij`. It commutes with `I_z`.
pub fn random_secular_operator(system: &SpinSystem, scale: f64, seed: u64) -> OperatorMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = pair_sum(system.n_spins, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        let k: f64 = StandardNormal.sample(&mut rng);
        PairTerm {
            zz: scale * g,
            flip_flop: scale * k,
            flip_flip: 0.0,
        }
    });
    OperatorMatrix::from_real(&h).with_flags(true, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PerturbationKind {
    /// `Σ = H_dd`.
    Dipolar,
    /// `Σ = Δω_z I_z`.
    Zeeman,
    /// `Σ` = seeded random secular two-spin operator.
    CustomRandom,
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dipolar" => Ok(PerturbationKind::Dipolar),
            "zeeman" => Ok(PerturbationKind::Zeeman),
            "custom_random" => Ok(PerturbationKind::CustomRandom),
            other => Err(Error::invalid(
                "kind",
                alloc::format!("unknown perturbation kind `{other}`"),
            )),
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationKind::Dipolar => "dipolar",
            PerturbationKind::Zeeman => "zeeman",
            PerturbationKind::CustomRandom => "custom_random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Dimensionless strength `p` in `[0, 1]`.
    pub strength: f64,
    /// Offset `Δω_z` in rad/s, used by [`PerturbationKind::Zeeman`].
    pub delta_omega_z: f64,
    /// Seed for [`PerturbationKind::CustomRandom`].
    pub intrinsic_seed: u64,
}

impl PerturbationSpec {
    pub fn dipolar(strength: f64) -> Self {
        Self {
            kind: PerturbationKind::Dipolar,
            strength,
            delta_omega_z: 0.0,
            intrinsic_seed: 0,
        }
    }

    pub fn zeeman(strength: f64, delta_omega_z: f64) -> Self {
        Self {
            kind: PerturbationKind::Zeeman,
            strength,
            delta_omega_z,
            intrinsic_seed: 0,
        }
    }

    pub fn custom_random(strength: f64, seed: u64) -> Self {
        Self {
            kind: PerturbationKind::CustomRandom,
            strength,
            delta_omega_z: 0.0,
            intrinsic_seed: seed,
        }
    }

    pub fn with_strength(self, strength: f64) -> Self {
        Self { strength, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::invalid(
                "p",
                alloc::format!("perturbation strength {} outside [0, 1]", self.strength),
            ));
        }
        if !self.delta_omega_z.is_finite() {
            return Err(Error::invalid("delta_omega_z", "must be finite".to_string()));
        }
        Ok(())
    }
}

/// The perturbation operator `Σ` selected by `spec`.
pub fn perturbation_operator(spec: &PerturbationSpec, system: &SpinSystem) -> OperatorMatrix {
    match spec.kind {
        PerturbationKind::Dipolar => dipolar_hamiltonian(system),
        PerturbationKind::Zeeman => {
            collective_operator(system, Axis::Z).scale(spec.delta_omega_z)
        }
        PerturbationKind::CustomRandom => {
            random_secular_operator(system, system.coupling_scale, spec.intrinsic_seed)
        }
    }
}

/// `H(p) = (1 - p) H_0 + p Σ`.
pub fn perturbed_hamiltonian(
    h0: &OperatorMatrix,
    spec: &PerturbationSpec,
    system: &SpinSystem,
) -> Result<OperatorMatrix> {
    spec.validate()?;
    if h0.dim() != system.dim() {
        return Err(Error::invalid("h0", "dimension does not match the system"));
    }
    let p = spec.strength;
    if p == 0.0 {
        return Ok(h0.clone());
    }
    let sigma = perturbation_operator(spec, system);
    Ok(h0.scale(1.0 - p).add_scaled(&sigma, p))
}
