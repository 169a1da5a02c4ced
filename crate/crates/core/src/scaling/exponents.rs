//! Growth exponents `α(p)`, their sigmoidal interpolation, the asymptotic
//! exponents `s` and `ν`, and the relations between them.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::rates::RateSeries;
use super::regression::{levenberg_marquardt, linear_fit, LinearFit, LmOptions};
use crate::error::{Error, Result};

/// Samples of a rate curve used in a power-law fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum FitWindow {
    /// Every sample.
    All,
    /// The half of the samples with the largest cluster sizes.
    #[default]
    LatterHalf,
    /// Samples with `k_min <= K <= k_max`.
    ClusterSize { k_min: f64, k_max: f64 },
    /// Samples with `t_min <= t <= t_max`.
    Time { t_min: f64, t_max: f64 },
}

impl FitWindow {
    /// Indices of the selected samples, in time order.
    pub fn select(&self, series: &RateSeries) -> Vec<usize> {
        let s = &series.samples;
        match *self {
            FitWindow::All => (0..s.len()).collect(),
            FitWindow::LatterHalf => {
                let mut idx: Vec<usize> = (0..s.len()).collect();
                idx.sort_by(|&a, &b| s[a].cluster_size.total_cmp(&s[b].cluster_size));
                let mut kept = idx.split_off(s.len() / 2);
                kept.sort_unstable();
                kept
            }
            FitWindow::ClusterSize { k_min, k_max } => (0..s.len())
                .filter(|&i| s[i].cluster_size >= k_min && s[i].cluster_size <= k_max)
                .collect(),
            FitWindow::Time { t_min, t_max } => (0..s.len())
                .filter(|&i| s[i].t >= t_min && s[i].t <= t_max)
                .collect(),
        }
    }
}

/// Minimum samples in a power-law window.
pub const MIN_WINDOW: usize = 4;

/// `χ' ∝ K^α` fitted on one curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerLaw {
    pub p: f64,
    pub alpha: f64,
    pub stderr: f64,
    /// `ln` of the prefactor.
    pub log_prefactor: f64,
    pub n_points: usize,
}

fn log_points(series: &RateSeries, idx: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = Vec::with_capacity(idx.len());
    let mut y = Vec::with_capacity(idx.len());
    for &i in idx {
        let s = series.samples[i];
        if !(s.cluster_size > 0.0) || !(s.chi_rate > 0.0) {
            return Err(Error::Domain(alloc::format!(
                "p = {}: non-positive K or rate at t = {} in the fit window",
                series.p,
                s.t
            )));
        }
        x.push(s.cluster_size.ln());
        y.push(s.chi_rate.ln());
    }
    Ok((x, y))
}

/// Log-log regression of `χ'` against `K` over `window`.
pub fn power_law_exponent(series: &RateSeries, window: FitWindow) -> Result<PowerLaw> {
    let idx = window.select(series);
    if idx.len() < MIN_WINDOW {
        return Err(Error::insufficient(
            "power law",
            alloc::format!("p = {}: window holds {} samples, need {MIN_WINDOW}", series.p, idx.len()),
        ));
    }
    let (x, y) = log_points(series, &idx)?;
    let fit = linear_fit(&x, &y)?;
    Ok(PowerLaw {
        p: series.p,
        alpha: fit.slope,
        stderr: fit.slope_stderr,
        log_prefactor: fit.intercept,
        n_points: idx.len(),
    })
}

/// `α(p) = α₀ + (α∞ - α₀) / (1 + exp(-(ln p - ln p_mid)/w))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sigmoid {
    pub alpha0: f64,
    pub alpha_inf: f64,
    pub p_mid: f64,
    pub width: f64,
    /// Standard errors of `(α₀, α∞, p_mid, w)`.
    pub stderr: [f64; 4],
    /// Set when `α` does not vary, leaving `p_mid` and `w` undetermined.
    pub degenerate: bool,
    pub residual_norm: f64,
}

impl Sigmoid {
    pub fn eval(&self, p: f64) -> f64 {
        sigmoid(self.alpha0, self.alpha_inf, self.p_mid.ln(), self.width, p)
    }
}

fn sigmoid(a0: f64, ainf: f64, ln_mid: f64, w: f64, p: f64) -> f64 {
    a0 + (ainf - a0) / (1.0 + (-(p.ln() - ln_mid) / w).exp())
}

/// Relative spread of `α` below which the sigmoid is declared degenerate.
pub const DEGENERATE_SPREAD: f64 = 1e-9;
/// Minimum number of `(p, α)` points for the sigmoid.
pub const MIN_SIGMOID_POINTS: usize = 5;

/// Least-squares sigmoid through `(p, α)` points (weights equal).
pub fn sigmoid_alpha_fit(points: &[(f64, f64)]) -> Result<Sigmoid> {
    if points.len() < MIN_SIGMOID_POINTS {
        return Err(Error::insufficient(
            "sigmoid",
            alloc::format!("{} p values, need {MIN_SIGMOID_POINTS}", points.len()),
        ));
    }
    if points.iter().any(|(p, a)| !(*p > 0.0) || !a.is_finite()) {
        return Err(Error::Domain("sigmoid needs p > 0 and finite α".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let mean = pts.iter().map(|v| v.1).sum::<f64>() / n as f64;
    let spread = pts.iter().map(|v| (v.1 - mean).abs()).fold(0.0, f64::max);
    let ln_lo = pts[0].0.ln();
    let ln_hi = pts[n - 1].0.ln();
    if spread <= DEGENERATE_SPREAD * (1.0 + mean.abs()) {
        return Ok(Sigmoid {
            alpha0: mean,
            alpha_inf: mean,
            p_mid: (0.5 * (ln_lo + ln_hi)).exp(),
            width: f64::NAN,
            stderr: [0.0, 0.0, f64::NAN, f64::NAN],
            degenerate: true,
            residual_norm: 0.0,
        });
    }
    let a0 = 0.5 * (pts[0].1 + pts[1].1);
    let ainf = 0.5 * (pts[n - 1].1 + pts[n - 2].1);
    let half = 0.5 * (a0 + ainf);
    let mut ln_mid = 0.5 * (ln_lo + ln_hi);
    for w in pts.windows(2) {
        if (w[0].1 - half) * (w[1].1 - half) <= 0.0 && w[0].1 != w[1].1 {
            let s = (half - w[0].1) / (w[1].1 - w[0].1);
            ln_mid = w[0].0.ln() + s * (w[1].0.ln() - w[0].0.ln());
            break;
        }
    }
    let span = (ln_hi - ln_lo).max(1e-3);
    let residuals = |q: &[f64]| -> Vec<f64> {
        let w = q[3].exp();
        pts.iter()
            .map(|&(p, a)| sigmoid(q[0], q[1], q[2], w, p) - a)
            .collect()
    };
    let mut best: Option<super::regression::LmResult> = None;
    for width_frac in [0.05, 0.15, 0.4] {
        let start = [a0, ainf, ln_mid, (span * width_frac).ln()];
        if let Ok(r) = levenberg_marquardt("sigmoid", residuals, &start, LmOptions::default()) {
            if best.as_ref().map_or(true, |b| r.residual_norm < b.residual_norm) {
                best = Some(r);
            }
        }
    }
    let fit = best.ok_or(Error::FitFailure {
        stage: "sigmoid",
        iterations: LmOptions::default().max_iterations,
        residual: f64::NAN,
    })?;
    let q = &fit.params;
    let width = q[3].exp();
    let p_mid = q[2].exp();
    Ok(Sigmoid {
        alpha0: q[0],
        alpha_inf: q[1],
        p_mid,
        width,
        // Delta method through the log parameterization.
        stderr: [fit.stderr(0), fit.stderr(1), p_mid * fit.stderr(2), width * fit.stderr(3)],
        degenerate: false,
        residual_norm: fit.residual_norm,
    })
}

/// Exponents of the two asymptotic branches of the scaling function.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Asymptotics {
    pub s: f64,
    pub s_stderr: f64,
    pub nu: f64,
    pub nu_stderr: f64,
    pub n_low: usize,
    pub n_high: usize,
}

/// Splits `ps` into the default low and high branch sets around `p_c`:
/// `p <= 0.35 p_c` and `p >= 1.9 p_c`.
pub fn default_branch_sets(ps: &[f64], p_c: f64) -> (Vec<f64>, Vec<f64>) {
    let low = ps.iter().copied().filter(|&p| p <= 0.35 * p_c).collect();
    let high = ps.iter().copied().filter(|&p| p >= 1.9 * p_c).collect();
    (low, high)
}

fn pooled_branch(
    curves: &[RateSeries],
    set: &[f64],
    p_c: f64,
    alpha: f64,
    window: FitWindow,
    stage: &'static str,
) -> Result<(LinearFit, usize)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut used = 0;
    for &p in set {
        let series = curves
            .iter()
            .find(|c| c.p == p)
            .ok_or_else(|| Error::invalid("p set", alloc::format!("no curve at p = {p}")))?;
        let idx = window.select(series);
        if idx.is_empty() {
            continue;
        }
        let (lk, lr) = log_points(series, &idx)?;
        let lx = (p - p_c).abs().ln();
        for (k, r) in lk.iter().zip(&lr) {
            x.push(lx);
            y.push(r - alpha * k);
        }
        used += 1;
    }
    if used < 2 {
        return Err(Error::insufficient(stage, "need at least two p values with samples"));
    }
    Ok((linear_fit(&x, &y)?, used))
}

/// `s` from `ln(χ'/K^{α₀})` against `ln(p_c - p)` on the low set and `-2ν`
/// from `ln(χ'/K^{α∞})` against `ln(p - p_c)` on the high set, each pooled
/// over the window samples of every curve.
pub fn asymptotic_exponents(
    curves: &[RateSeries],
    p_c: f64,
    alpha0: f64,
    alpha_inf: f64,
    low: &[f64],
    high: &[f64],
    window: FitWindow,
) -> Result<Asymptotics> {
    if !(p_c > 0.0) {
        return Err(Error::invalid("p_c", "must be positive"));
    }
    if low.iter().any(|&p| p >= p_c) || high.iter().any(|&p| p <= p_c) {
        return Err(Error::invalid("p sets", "sets straddle p_c"));
    }
    let (lo, n_low) = pooled_branch(curves, low, p_c, alpha0, window, "low-p asymptote")?;
    let (hi, n_high) = pooled_branch(curves, high, p_c, alpha_inf, window, "high-p asymptote")?;
    Ok(Asymptotics {
        s: lo.slope,
        s_stderr: lo.slope_stderr,
        nu: -0.5 * hi.slope,
        nu_stderr: 0.5 * hi.slope_stderr,
        n_low,
        n_high,
    })
}

/// Scaling exponents implied by the asymptotic constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentRelations {
    pub k1: f64,
    pub k2: f64,
    pub k2_nu: f64,
}

/// Residual tolerance of the relation checks.
pub const RELATION_TOL: f64 = 1e-10;

/// Solves `α₀ = k₁ + s k₂` and `α∞ = k₁ - 2ν k₂`.
pub fn exponent_relations(alpha0: f64, alpha_inf: f64, s: f64, nu: f64) -> Result<ExponentRelations> {
    let den = s + 2.0 * nu;
    if !(den.abs() > 1e-12) {
        return Err(Error::Domain("s + 2ν vanishes; k₂ is undetermined".into()));
    }
    let k2 = (alpha0 - alpha_inf) / den;
    let k1 = alpha0 - s * k2;
    let scale = 1.0 + alpha0.abs().max(alpha_inf.abs());
    Error::check("alpha0 relation", (k1 + s * k2 - alpha0).abs() / scale, RELATION_TOL)?;
    Error::check("alpha_inf relation", (k1 - 2.0 * nu * k2 - alpha_inf).abs() / scale, RELATION_TOL)?;
    Ok(ExponentRelations { k1, k2, k2_nu: k2 * nu })
}
