//! Ordinary least squares and damped nonlinear least squares.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Straight-line fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// NaN when fewer than three points leave no residual degrees of freedom.
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub residual_ss: f64,
    pub n: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::invalid("y", "length differs from x"));
    }
    if n < 2 {
        return Err(Error::insufficient("linear fit", "need at least two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in regression data".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("regression abscissa has no spread".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = residual_ss / (nf - 2.0);
        (
            (s2 / sxx).sqrt(),
            (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        residual_ss,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost reduction and the relative step both
    /// fall below this.
    pub tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// `s² (JᵀJ)⁻¹`; NaN entries when the normal matrix is singular or no
    /// degrees of freedom remain.
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl LmResult {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[(i, i)].sqrt()
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(residuals: &F, params: &[f64], base: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = base.len();
    let n = params.len();
    let mut j = DMatrix::zeros(m, n);
    let mut probe = params.to_vec();
    for k in 0..n {
        let h = 1e-6 * params[k].abs().max(1e-6);
        probe[k] = params[k] + h;
        let up = residuals(&probe);
        probe[k] = params[k] - h;
        let down = residuals(&probe);
        probe[k] = params[k];
        for i in 0..m {
            j[(i, k)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    j
}

/// Minimizes `Σ r_i(θ)²` by Levenberg-Marquardt with Marquardt scaling and
/// a central-difference Jacobian. Non-finite residuals count as an
/// infinite cost, which lets models reject parameters outside their domain.
pub fn levenberg_marquardt<F>(
    stage: &'static str,
    residuals: F,
    initial: &[f64],
    options: LmOptions,
) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = initial.len();
    let mut params = initial.to_vec();
    let mut r = residuals(&params);
    let m = r.len();
    if m < n {
        return Err(Error::insufficient(stage, "fewer residuals than parameters"));
    }
    let mut c = cost(&r);
    if !c.is_finite() {
        return Err(Error::invalid("initial", "model is undefined at the starting point"));
    }
    let mut lambda = options.initial_damping;
    let mut iterations = 0;
    let mut converged = c == 0.0;
    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let j = jacobian(&residuals, &params, &r);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let rt = residuals(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let rel_cost = (c - ct) / c.max(f64::MIN_POSITIVE);
                let rel_step = step
                    .iter()
                    .zip(&params)
                    .map(|(s, p)| s.abs() / p.abs().max(1e-12))
                    .fold(0.0, f64::max);
                params = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if c == 0.0 || (rel_cost < options.tolerance && rel_step < options.tolerance.sqrt()) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            // No downhill step at any damping: a (local) minimum to
            // working precision.
            let gnorm = g.amax();
            if gnorm <= 1e-8 * (1.0 + c) || lambda > 1e16 {
                converged = true;
            } else {
                break;
            }
        }
    }
    if !converged {
        return Err(Error::FitFailure {
            stage,
            iterations,
            residual: c.sqrt(),
        });
    }
    let j = jacobian(&residuals, &params, &r);
    let jtj = j.transpose() * &j;
    let dof = m.saturating_sub(n);
    let covariance = match jtj.clone().try_inverse() {
        Some(inv) if dof > 0 => inv * (c / dof as f64),
        _ => DMatrix::from_element(n, n, f64::NAN),
    };
    Ok(LmResult {
        params,
        covariance,
        residual_norm: c.sqrt(),
        iterations,
    })
}

/// Weighted linear least squares `min Σ w_i (y_i - Σ_k X_ik β_k)²`.
pub fn weighted_least_squares(design: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = design.shape();
    let mut xtwx = DMatrix::zeros(n, n);
    let mut xtwy = DVector::zeros(n);
    for i in 0..m {
        for a in 0..n {
            let xa = design[(i, a)] * w[i];
            xtwy[a] += xa * y[i];
            for b in 0..n {
                xtwx[(a, b)] += xa * design[(i, b)];
            }
        }
    }
    xtwx.cholesky().map(|c| c.solve(&xtwy).iter().copied().collect())
}
