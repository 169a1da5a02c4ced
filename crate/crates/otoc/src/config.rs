//! Experiment configuration in TOML.
//!
//! Every block and every key is optional; an empty file describes a
//! ten-spin dipolar chain. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use otoc_core::scaling::FitWindow;
use otoc_core::spin::DEFAULT_MAX_SPINS;
use otoc_core::{PerturbationKind, PhaseGrid, Topology};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_n_spins")]
    pub n_spins: usize,
    #[serde(default = "default_topology")]
    pub topology: Topology,
    /// Nearest-neighbour coupling in Hz; the simulation uses `2π` times this.
    #[serde(default = "default_coupling_hz")]
    pub coupling_scale_hz: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_spins")]
    pub max_spins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default = "default_kind")]
    pub kind: PerturbationKind,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    /// Offset field in Hz for the `zeeman` kind.
    #[serde(default)]
    pub delta_omega_z_hz: f64,
    /// Seed of the `custom_random` perturbation operator.
    #[serde(default)]
    pub random_seed: u64,
    /// Strength of an uncontrolled static term added to the forward
    /// evolution only, in units of the coupling scale. Zero disables it.
    #[serde(default)]
    pub intrinsic_strength: f64,
    #[serde(default)]
    pub intrinsic_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    /// Exact exponentials of the perturbed and ideal Hamiltonians.
    Exact,
    /// Concatenated `H_0` and `Σ` steps of length `tau_c_us`.
    Trotter,
    /// Ideal-pulse 8-pulse cycles with interleaved perturbation periods.
    Pulse,
}

impl fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvolutionMode::Exact => "exact",
            EvolutionMode::Trotter => "trotter",
            EvolutionMode::Pulse => "pulse",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default = "default_mode")]
    pub mode: EvolutionMode,
    #[serde(default = "default_t_list")]
    pub t_list_us: Vec<f64>,
    #[serde(default = "default_tau_c")]
    pub tau_c_us: f64,
    #[serde(default = "default_delta")]
    pub delta_us: f64,
    #[serde(default = "default_tau_p")]
    pub tau_p_us: f64,
}

/// Number of encoding phases: a count, or `"auto"` for the smallest power
/// of two resolving every coherence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseCount {
    #[default]
    Auto,
    Fixed(usize),
}

impl PhaseCount {
    pub fn grid(self, n_spins: usize) -> otoc_core::Result<PhaseGrid> {
        match self {
            PhaseCount::Auto => Ok(PhaseGrid::auto(n_spins)),
            PhaseCount::Fixed(n) => PhaseGrid::new(n),
        }
    }
}

impl Serialize for PhaseCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PhaseCount::Auto => s.serialize_str("auto"),
            PhaseCount::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = PhaseCount;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"auto\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<PhaseCount, E> {
                usize::try_from(v)
                    .map(PhaseCount::Fixed)
                    .map_err(|_| E::custom("n_phases must be positive"))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<PhaseCount, E> {
                Ok(PhaseCount::Fixed(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PhaseCount, E> {
                match v {
                    "auto" => Ok(PhaseCount::Auto),
                    other => Err(E::custom(format!("expected \"auto\", found \"{other}\""))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default)]
    pub n_phases: PhaseCount,
    /// Cross-check every Fourier spectrum against the direct projection.
    #[serde(default)]
    pub verify: bool,
    /// Fidelity below which `K` is undefined and the point is dropped.
    #[serde(default = "default_floor")]
    pub fidelity_floor: f64,
}

/// Long-time window for the power-law fits.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum WindowConfig {
    #[default]
    LatterHalf,
    All,
    ClusterSize { k_min: f64, k_max: f64 },
    TimeUs { t_min_us: f64, t_max_us: f64 },
}

impl WindowConfig {
    pub fn to_window(self) -> FitWindow {
        match self {
            WindowConfig::LatterHalf => FitWindow::LatterHalf,
            WindowConfig::All => FitWindow::All,
            WindowConfig::ClusterSize { k_min, k_max } => FitWindow::ClusterSize { k_min, k_max },
            WindowConfig::TimeUs { t_min_us, t_max_us } => FitWindow::Time {
                t_min: t_min_us * 1e-6,
                t_max: t_max_us * 1e-6,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub window: WindowConfig,
    /// Odd local least-squares window for `dχ/dt`; unset for plain
    /// differences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_set: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_set: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Curves,
    Mqc,
    Fit,
    Plot,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Curves, Format::Mqc, Format::Fit, Format::Plot];
}

impl std::str::FromStr for Format {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curves" => Ok(Format::Curves),
            "mqc" => Ok(Format::Mqc),
            "fit" => Ok(Format::Fit),
            "plot" => Ok(Format::Plot),
            other => Err(AppError::config(
                "formats",
                format!("unknown format `{other}` (expected curves, mqc, fit or plot)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_n_spins() -> usize {
    10
}
fn default_topology() -> Topology {
    Topology::Chain
}
fn default_coupling_hz() -> f64 {
    13.0e3
}
fn default_max_spins() -> usize {
    DEFAULT_MAX_SPINS
}
fn default_kind() -> PerturbationKind {
    PerturbationKind::Dipolar
}
/// Eight strengths log-spaced from 0.0045 up to 0.108.
fn default_p_list() -> Vec<f64> {
    vec![0.0045, 0.0071, 0.0112, 0.0176, 0.0277, 0.0436, 0.0687, 0.108]
}
fn default_mode() -> EvolutionMode {
    EvolutionMode::Exact
}
/// Twenty points evenly spaced up to 1.5 ms.
fn default_t_list() -> Vec<f64> {
    (1..=20).map(|i| 75.0 * i as f64).collect()
}
fn default_tau_c() -> f64 {
    otoc_core::propagation::NOMINAL_CYCLE_TIME * 1e6
}
fn default_delta() -> f64 {
    otoc_core::propagation::DEFAULT_DELTA * 1e6
}
fn default_tau_p() -> f64 {
    otoc_core::propagation::DEFAULT_TAU_P * 1e6
}
fn default_floor() -> f64 {
    otoc_core::metrics::DEFAULT_FIDELITY_FLOOR
}
fn default_directory() -> PathBuf {
    PathBuf::from("spinecho-out")
}
fn default_formats() -> Vec<Format> {
    Format::ALL.to_vec()
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_spins: default_n_spins(),
            topology: default_topology(),
            coupling_scale_hz: default_coupling_hz(),
            seed: 0,
            max_spins: default_max_spins(),
        }
    }
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            p_list: default_p_list(),
            delta_omega_z_hz: 0.0,
            random_seed: 0,
            intrinsic_strength: 0.0,
            intrinsic_seed: 0,
        }
    }
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            t_list_us: default_t_list(),
            tau_c_us: default_tau_c(),
            delta_us: default_delta(),
            tau_p_us: default_tau_p(),
        }
    }
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            n_phases: PhaseCount::Auto,
            verify: false,
            fidelity_floor: default_floor(),
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults everywhere except the spin count.
    pub fn with_spins(n_spins: usize) -> Self {
        Self {
            system: SystemConfig {
                n_spins,
                ..SystemConfig::default()
            },
            perturbation: PerturbationConfig::default(),
            evolution: EvolutionConfig::default(),
            tomography: TomographyConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| AppError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical serialization; also the input of the configuration hash.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Coupling scale in rad/s.
    pub fn coupling_scale(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.system.coupling_scale_hz
    }

    pub fn delta_omega_z(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.perturbation.delta_omega_z_hz
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.n_spins == 0 {
            return Err(AppError::config("system.n_spins", "must be at least 1"));
        }
        if !(s.coupling_scale_hz > 0.0 && s.coupling_scale_hz.is_finite()) {
            return Err(AppError::config("system.coupling_scale_hz", "must be positive"));
        }
        let p = &self.perturbation;
        if p.p_list.is_empty() {
            return Err(AppError::config("perturbation.p_list", "must not be empty"));
        }
        if let Some(bad) = p.p_list.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(AppError::config("perturbation.p_list", format!("{bad} lies outside [0, 1]")));
        }
        if !p.delta_omega_z_hz.is_finite() {
            return Err(AppError::config("perturbation.delta_omega_z_hz", "must be finite"));
        }
        if p.kind == PerturbationKind::Zeeman && p.delta_omega_z_hz == 0.0 {
            return Err(AppError::config(
                "perturbation.delta_omega_z_hz",
                "the zeeman perturbation needs a nonzero offset",
            ));
        }
        if !(p.intrinsic_strength >= 0.0 && p.intrinsic_strength.is_finite()) {
            return Err(AppError::config("perturbation.intrinsic_strength", "must be finite and non-negative"));
        }
        let e = &self.evolution;
        if e.t_list_us.is_empty() {
            return Err(AppError::config("evolution.t_list_us", "must not be empty"));
        }
        if e.t_list_us.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(AppError::config("evolution.t_list_us", "times must be finite and non-negative"));
        }
        if e.t_list_us.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AppError::config("evolution.t_list_us", "times must be strictly increasing"));
        }
        for (field, v) in [
            ("evolution.tau_c_us", e.tau_c_us),
            ("evolution.delta_us", e.delta_us),
            ("evolution.tau_p_us", e.tau_p_us),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(AppError::config(field, "must be finite and non-negative"));
            }
        }
        match e.mode {
            EvolutionMode::Exact => {}
            EvolutionMode::Trotter => {
                if !(e.tau_c_us > 0.0) {
                    return Err(AppError::config("evolution.tau_c_us", "trotter mode needs a positive cycle"));
                }
                self.check_cycle_counts(e.tau_c_us)?;
            }
            EvolutionMode::Pulse => {
                if !(e.delta_us > 0.0) {
                    return Err(AppError::config("evolution.delta_us", "pulse mode needs a positive delay"));
                }
                if p.intrinsic_strength > 0.0 {
                    return Err(AppError::config(
                        "perturbation.intrinsic_strength",
                        "pulse mode has no intrinsic term",
                    ));
                }
                if let Some(bad) = p.p_list.iter().find(|v| **v >= 1.0) {
                    return Err(AppError::config("perturbation.p_list", format!("pulse mode needs p < 1, found {bad}")));
                }
                let tau_0 = 4.0 * (3.0 * e.delta_us + e.tau_p_us);
                self.check_cycle_counts(tau_0)?;
            }
        }
        if let PhaseCount::Fixed(n) = self.tomography.n_phases {
            if n == 0 {
                return Err(AppError::config("tomography.n_phases", "must be positive"));
            }
        }
        let floor = self.tomography.fidelity_floor;
        if !(floor > 0.0 && floor < 1.0) {
            return Err(AppError::config("tomography.fidelity_floor", "must lie in (0, 1)"));
        }
        if let Some(w) = self.analysis.smoothing_window {
            if w < 3 || w % 2 == 0 {
                return Err(AppError::config("analysis.smoothing_window", "must be odd and at least 3"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(AppError::config("output.formats", "must not be empty"));
        }
        Ok(())
    }

    /// Cycle-based modes evolve for whole cycles only; distinct requested
    /// times must map to distinct cycle counts.
    fn check_cycle_counts(&self, cycle_us: f64) -> Result<()> {
        let counts: Vec<u64> = self.evolution.t_list_us.iter().map(|t| cycle_count(*t, cycle_us)).collect();
        if counts.windows(2).any(|w| w[0] == w[1]) {
            return Err(AppError::config(
                "evolution.t_list_us",
                format!("times closer than one cycle ({cycle_us} us) collapse onto the same cycle count"),
            ));
        }
        Ok(())
    }
}

/// Whole cycles closest to `t`.
pub fn cycle_count(t_us: f64, cycle_us: f64) -> u64 {
    (t_us / cycle_us).round() as u64
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    ExperimentConfig::from_toml(&text, path)
}
