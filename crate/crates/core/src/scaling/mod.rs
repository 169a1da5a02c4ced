//! Decoherence rates, power-law exponents and finite-time scaling.
//!
//! The long-time Ansatz is `χ'(K, p) = K^{k₁} F((p_c - p) K^{k₂})` with
//! `F(x) ~ x^s` below `p_c` and `F(x) ~ (-x)^{-2ν}` above it, so that
//! `α₀ = k₁ + s k₂` and `α∞ = k₁ - 2ν k₂`. Equivalently
//! `χ' = K^{k₁} Φ(ζ(p) K^{-k₂ν})` with `ζ(p) ∝ |p - p_c|^{-ν}`.

pub mod collapse;
pub mod critical;
pub mod exponents;
pub mod monotone;
pub mod pipeline;
pub mod rates;
pub mod regression;
pub mod synthetic;

pub use collapse::{collapse_shift_factors, Branch, Collapse, CollapseOptions, ShiftFactor};
pub use critical::{critical_point_fit, CriticalFit, CriticalOptions};
pub use exponents::{
    asymptotic_exponents, default_branch_sets, exponent_relations, power_law_exponent,
    sigmoid_alpha_fit, Asymptotics, ExponentRelations, FitWindow, PowerLaw, Sigmoid,
};
pub use pipeline::{analyze_rates, AnalysisOptions, ScalingFit, Stage, StageFailure};
pub use rates::{decoherence_rate, RateSample, RateSeries, Smoothing};
pub use regression::{linear_fit, LinearFit};
pub use synthetic::{synthetic_fidelity_curves, synthetic_rate_curves, Ansatz, SyntheticCurve};
