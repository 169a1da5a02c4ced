//! The full scaling analysis, stage by stage.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::collapse::{collapse_shift_factors, Collapse, CollapseOptions};
use super::critical::{critical_point_fit, CriticalFit, CriticalOptions};
use super::exponents::{
    asymptotic_exponents, default_branch_sets, exponent_relations, power_law_exponent,
    sigmoid_alpha_fit, Asymptotics, ExponentRelations, FitWindow, PowerLaw, Sigmoid,
    MIN_SIGMOID_POINTS,
};
use super::rates::RateSeries;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stage {
    PowerLaw,
    Sigmoid,
    Asymptotics,
    Relations,
    Collapse,
    Critical,
}

impl core::fmt::Display for Stage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Stage::PowerLaw => "power_law",
            Stage::Sigmoid => "sigmoid",
            Stage::Asymptotics => "asymptotics",
            Stage::Relations => "relations",
            Stage::Collapse => "collapse",
            Stage::Critical => "critical",
        })
    }
}

/// Why the analysis stopped early.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageFailure {
    pub stage: Stage,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkippedCurve {
    pub p: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub window: FitWindow,
    /// Explicit low and high branch sets; defaults derive from the
    /// sigmoid midpoint.
    pub low_set: Option<Vec<f64>>,
    pub high_set: Option<Vec<f64>>,
    pub collapse_tolerance: f64,
    pub branch_scale: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            window: FitWindow::LatterHalf,
            low_set: None,
            high_set: None,
            collapse_tolerance: 1e-6,
            branch_scale: true,
        }
    }
}

/// Every intermediate result of the analysis. Fields after the stage that
/// stopped the run are `None`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFit {
    pub alpha_per_p: Vec<PowerLaw>,
    pub skipped: Vec<SkippedCurve>,
    pub sigmoid: Option<Sigmoid>,
    pub low_set: Vec<f64>,
    pub high_set: Vec<f64>,
    pub asymptotics: Option<Asymptotics>,
    pub relations: Option<ExponentRelations>,
    pub collapse: Option<Collapse>,
    pub critical: Option<CriticalFit>,
    pub stopped: Option<StageFailure>,
}

impl ScalingFit {
    pub fn is_complete(&self) -> bool {
        self.stopped.is_none()
    }

    pub fn p_c(&self) -> Option<f64> {
        self.critical.as_ref().map(|c| c.p_c)
    }

    pub fn nu(&self) -> Option<f64> {
        self.critical.as_ref().map(|c| c.nu)
    }
}

fn reason(e: &Error) -> String {
    e.to_string()
}

/// Runs power-law fits, the sigmoid, the asymptotic exponents, the
/// exponent relations, the collapse and the critical fit in order. Stops
/// at the first stage that cannot proceed and records why.
pub fn analyze_rates(curves: &[RateSeries], options: &AnalysisOptions) -> ScalingFit {
    let mut fit = ScalingFit {
        alpha_per_p: Vec::new(),
        skipped: Vec::new(),
        sigmoid: None,
        low_set: Vec::new(),
        high_set: Vec::new(),
        asymptotics: None,
        relations: None,
        collapse: None,
        critical: None,
        stopped: None,
    };
    let stop = |fit: &mut ScalingFit, stage, reason: String| {
        fit.stopped = Some(StageFailure { stage, reason });
    };

    for series in curves {
        match power_law_exponent(series, options.window) {
            Ok(pl) => fit.alpha_per_p.push(pl),
            Err(e) => fit.skipped.push(SkippedCurve {
                p: series.p,
                reason: reason(&e),
            }),
        }
    }
    fit.alpha_per_p.sort_by(|a, b| a.p.total_cmp(&b.p));
    let usable_count = fit.alpha_per_p.len();
    if usable_count < MIN_SIGMOID_POINTS {
        stop(
            &mut fit,
            Stage::Sigmoid,
            alloc::format!(
                "insufficient p coverage: {usable_count} usable p values, need {MIN_SIGMOID_POINTS}"
            ),
        );
        return fit;
    }

    let points: Vec<(f64, f64)> = fit.alpha_per_p.iter().map(|a| (a.p, a.alpha)).collect();
    let sigmoid = match sigmoid_alpha_fit(&points) {
        Ok(s) => s,
        Err(e) => {
            stop(&mut fit, Stage::Sigmoid, reason(&e));
            return fit;
        }
    };
    fit.sigmoid = Some(sigmoid);
    if sigmoid.degenerate {
        stop(&mut fit, Stage::Sigmoid, "α does not vary with p; no transition to analyze".into());
        return fit;
    }

    let usable: Vec<&RateSeries> = curves
        .iter()
        .filter(|c| fit.alpha_per_p.iter().any(|a| a.p == c.p))
        .collect();
    let usable: Vec<RateSeries> = usable.into_iter().cloned().collect();
    let ps: Vec<f64> = usable.iter().map(|c| c.p).collect();
    let (low_default, high_default) = default_branch_sets(&ps, sigmoid.p_mid);
    fit.low_set = options.low_set.clone().unwrap_or(low_default);
    fit.high_set = options.high_set.clone().unwrap_or(high_default);
    let asym = match asymptotic_exponents(
        &usable,
        sigmoid.p_mid,
        sigmoid.alpha0,
        sigmoid.alpha_inf,
        &fit.low_set,
        &fit.high_set,
        options.window,
    ) {
        Ok(a) => a,
        Err(e) => {
            stop(&mut fit, Stage::Asymptotics, reason(&e));
            return fit;
        }
    };
    fit.asymptotics = Some(asym);

    let relations = match exponent_relations(sigmoid.alpha0, sigmoid.alpha_inf, asym.s, asym.nu) {
        Ok(r) => r,
        Err(e) => {
            stop(&mut fit, Stage::Relations, reason(&e));
            return fit;
        }
    };
    fit.relations = Some(relations);

    let mut copts = CollapseOptions::new(Some(sigmoid.p_mid), sigmoid.alpha0, sigmoid.alpha_inf);
    copts.gauge_window = options.window;
    copts.tolerance = options.collapse_tolerance;
    let collapse = match collapse_shift_factors(&usable, &relations, &copts) {
        Ok(c) => c,
        Err(e) => {
            stop(&mut fit, Stage::Collapse, reason(&e));
            return fit;
        }
    };

    let copts = CriticalOptions {
        branch_scale: options.branch_scale,
        p_c_guess: Some(sigmoid.p_mid),
        nu_guess: Some(asym.nu),
    };
    let critical = critical_point_fit(&collapse.factors, copts);
    fit.collapse = Some(collapse);
    match critical {
        Ok(c) => fit.critical = Some(c),
        Err(e) => stop(&mut fit, Stage::Critical, reason(&e)),
    }
    fit
}
