//! Critical point from shift factors: `ζ(p) = A|p - p_c|^{-ν} + B`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::collapse::{Branch, ShiftFactor};
use super::regression::{levenberg_marquardt, weighted_least_squares, LmOptions, LmResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CriticalOptions {
    /// Multiplies the low-branch model by a free positive scale, which
    /// absorbs the independent gauge of each branch.
    pub branch_scale: bool,
    pub p_c_guess: Option<f64>,
    pub nu_guess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalFit {
    pub p_c: f64,
    pub p_c_stderr: f64,
    pub nu: f64,
    pub nu_stderr: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Low-branch scale; exactly one unless fitted.
    pub low_branch_scale: f64,
    /// Row-major covariance of `(A, B, ν, p_c[, ln c_L])`.
    pub covariance: Vec<Vec<f64>>,
    /// Set when `p_c` falls outside the sampled `p` range.
    pub extrapolated: bool,
    /// Root-sum-square of relative residuals.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl CriticalFit {
    pub fn eval(&self, p: f64, branch: Branch) -> f64 {
        let scale = if branch == Branch::Low { self.low_branch_scale } else { 1.0 };
        scale * (self.amplitude * (p - self.p_c).abs().powf(-self.nu) + self.offset)
    }
}

fn model(q: &[f64], p: f64, branch: Branch, scaled: bool) -> f64 {
    let g = (p - q[3]).abs().powf(-q[2]);
    let c = if scaled && branch == Branch::Low { q[4].exp() } else { 1.0 };
    c * (q[0] * g + q[1])
}

/// Linear least squares for the amplitudes at fixed `(ν, p_c)`; returns the
/// starting vector and its relative cost.
fn profile(points: &[ShiftFactor], nu: f64, p_c: f64, scaled: bool) -> Option<(Vec<f64>, f64)> {
    let split = scaled && points.iter().any(|s| s.branch == Branch::Low) && points.iter().any(|s| s.branch == Branch::High);
    let cols = if split { 4 } else { 2 };
    let mut design = DMatrix::zeros(points.len(), cols);
    let mut y = Vec::with_capacity(points.len());
    let mut w = Vec::with_capacity(points.len());
    for (i, s) in points.iter().enumerate() {
        let g = (s.p - p_c).abs().powf(-nu);
        if !g.is_finite() {
            return None;
        }
        let off = if split && s.branch == Branch::Low { 2 } else { 0 };
        design[(i, off)] = g;
        design[(i, off + 1)] = 1.0;
        y.push(s.zeta);
        w.push(1.0 / (s.zeta * s.zeta));
    }
    let beta = weighted_least_squares(&design, &y, &w)?;
    let (a, b, ln_c) = if split {
        let c = beta[2] / beta[0];
        (beta[0], beta[1], if c > 0.0 { c.ln() } else { 0.0 })
    } else {
        (beta[0], beta[1], 0.0)
    };
    let mut q = alloc::vec![a, b, nu, p_c];
    if scaled {
        q.push(ln_c);
    }
    let cost: f64 = points
        .iter()
        .map(|s| {
            let r = (model(&q, s.p, s.branch, scaled) - s.zeta) / s.zeta;
            r * r
        })
        .sum();
    cost.is_finite().then_some((q, cost))
}

/// Fits the critical law to shift factors by a coarse profile scan over
/// `(ν, p_c)` followed by Levenberg-Marquardt on all parameters, with
/// residuals taken relative to `ζ`.
pub fn critical_point_fit(points: &[ShiftFactor], options: CriticalOptions) -> Result<CriticalFit> {
    let scaled = options.branch_scale
        && points.iter().any(|s| s.branch == Branch::Low)
        && points.iter().any(|s| s.branch == Branch::High);
    let n_params = if scaled { 5 } else { 4 };
    if points.len() <= n_params {
        return Err(Error::insufficient(
            "critical fit",
            alloc::format!("{} shift factors for {n_params} parameters", points.len()),
        ));
    }
    if points.iter().any(|s| !(s.p > 0.0) || !(s.zeta > 0.0) || !s.zeta.is_finite()) {
        return Err(Error::Domain("shift factors need p > 0 and finite ζ > 0".into()));
    }
    let p_min = points.iter().map(|s| s.p).fold(f64::INFINITY, f64::min);
    let p_max = points.iter().map(|s| s.p).fold(f64::NEG_INFINITY, f64::max);

    let mut p_grid: Vec<f64> = (0..=60)
        .map(|i| (p_min / 4.0) * (16.0 * p_max / p_min).powf(i as f64 / 60.0))
        .collect();
    p_grid.extend(options.p_c_guess);
    let mut nu_grid = alloc::vec![-1.5, -1.0, -0.7, -0.5, -0.35, -0.2, -0.1, 0.1, 0.3, 0.6];
    nu_grid.extend(options.nu_guess);

    let mut starts: Vec<(Vec<f64>, f64)> = Vec::new();
    for &p_c in &p_grid {
        if points.iter().any(|s| (s.p - p_c).abs() < 1e-9 * p_c) {
            continue;
        }
        for &nu in &nu_grid {
            if let Some(cand) = profile(points, nu, p_c, scaled) {
                starts.push(cand);
            }
        }
    }
    starts.sort_by(|a, b| a.1.total_cmp(&b.1));
    starts.truncate(6);

    let residuals = |q: &[f64]| -> Vec<f64> {
        points
            .iter()
            .map(|s| (model(q, s.p, s.branch, scaled) - s.zeta) / s.zeta)
            .collect()
    };
    let mut best: Option<LmResult> = None;
    let mut last_err = None;
    for (q0, _) in &starts {
        match levenberg_marquardt("critical fit", residuals, q0, LmOptions::default()) {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.residual_norm < b.residual_norm) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let fit = match best {
        Some(f) => f,
        None => {
            return Err(last_err.unwrap_or(Error::FitFailure {
                stage: "critical fit",
                iterations: 0,
                residual: f64::NAN,
            }))
        }
    };
    let q = &fit.params;
    let p_c = q[3];
    let covariance = (0..n_params)
        .map(|i| (0..n_params).map(|j| fit.covariance[(i, j)]).collect())
        .collect();
    Ok(CriticalFit {
        p_c,
        p_c_stderr: fit.stderr(3),
        nu: q[2],
        nu_stderr: fit.stderr(2),
        amplitude: q[0],
        offset: q[1],
        low_branch_scale: if scaled { q[4].exp() } else { 1.0 },
        covariance,
        extrapolated: p_c < p_min || p_c > p_max,
        residual_norm: fit.residual_norm,
        iterations: fit.iterations,
    })
}
