use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{n_spins} spins exceed the capacity cap of {max_spins} (dimension 2^{n_spins})")]
    Capacity { n_spins: usize, max_spins: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("consistency check `{check}` failed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Consistency {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("eigendecomposition of a {dim}x{dim} matrix did not converge (hermiticity error {hermiticity_error:e}, max |entry| {max_entry:e})")]
    Eigen {
        dim: usize,
        hermiticity_error: f64,
        max_entry: f64,
    },

    #[error("phase grid of {n_phases} points aliases the coherence spectrum (reconstruction mismatch {mismatch:e})")]
    Aliasing { n_phases: usize, mismatch: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data for {stage}: {reason}")]
    InsufficientData { stage: &'static str, reason: String },

    #[error("fidelity {fidelity:e} is below the floor {floor:e}; cluster size undefined")]
    FidelityBelowFloor { fidelity: f64, floor: f64 },

    #[error("{stage} fit did not converge after {iterations} iterations (residual norm {residual:e})")]
    FitFailure {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("collapse infeasible: {0}")]
    CollapseInfeasible(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn insufficient(stage: &'static str, reason: impl Into<String>) -> Self {
        Error::InsufficientData {
            stage,
            reason: reason.into(),
        }
    }

    /// Fails with [`Error::Consistency`] when `residual` exceeds `tolerance`
    /// (or is NaN).
    pub fn check(check: &'static str, residual: f64, tolerance: f64) -> Result<()> {
        if residual <= tolerance {
            Ok(())
        } else {
            Err(Error::Consistency {
                check,
                residual,
                tolerance,
            })
        }
    }
}
