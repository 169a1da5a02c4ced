//! Decoherence rates `χ = -ln f` and their time derivatives.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// One sample of a rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateSample {
    pub t: f64,
    pub cluster_size: f64,
    pub chi: f64,
    pub chi_rate: f64,
}

/// Rate curve of one perturbation strength.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateSeries {
    pub p: f64,
    pub samples: Vec<RateSample>,
}

impl RateSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Derivative estimator for `dχ/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum Smoothing {
    /// Three-point second-order differences on the raw grid.
    #[default]
    None,
    /// Local quadratic least squares over an odd `window` of samples.
    SavitzkyGolay { window: usize },
}

/// Derivative at `x` of the quadratic through three points.
fn lagrange3_slope(xs: [f64; 3], ys: [f64; 3], x: f64) -> f64 {
    let mut d = 0.0;
    for j in 0..3 {
        let a = xs[(j + 1) % 3];
        let b = xs[(j + 2) % 3];
        d += ys[j] * ((x - a) + (x - b)) / ((xs[j] - a) * (xs[j] - b));
    }
    d
}

/// `dy/dx` with second-order accuracy on a nonuniform grid: centred
/// three-point stencils inside, one-sided three-point stencils at the ends.
pub fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            lagrange3_slope([x[c - 1], x[c], x[c + 1]], [y[c - 1], y[c], y[c + 1]], x[i])
        })
        .collect()
}

fn savitzky_golay_derivative(x: &[f64], y: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - window);
            let xs = &x[start..start + window];
            let ys = &y[start..start + window];
            let scale = (xs[window - 1] - xs[0]).max(f64::MIN_POSITIVE);
            // Fit y ≈ c0 + c1 u + c2 u² with u = (x - x_i)/scale.
            let mut s = [0.0; 5];
            let mut r = [0.0; 3];
            for (&xv, &yv) in xs.iter().zip(ys) {
                let u = (xv - x[i]) / scale;
                let mut pow = 1.0;
                for (k, sk) in s.iter_mut().enumerate() {
                    *sk += pow;
                    if k < 3 {
                        r[k] += pow * yv;
                    }
                    pow *= u;
                }
            }
            let a = nalgebra::Matrix3::new(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
            let c = a
                .lu()
                .solve(&nalgebra::Vector3::new(r[0], r[1], r[2]))
                .map_or(f64::NAN, |c| c[1]);
            c / scale
        })
        .collect()
}

/// Builds a rate series from fidelity samples.
///
/// Fails on non-positive fidelities, non-increasing times, or fewer than
/// three samples. Fidelities marginally above one (rounding) give slightly
/// negative `χ` and are accepted.
pub fn decoherence_rate(
    p: f64,
    t: &[f64],
    fidelity: &[f64],
    cluster_size: &[f64],
    smoothing: Smoothing,
) -> Result<RateSeries> {
    let n = t.len();
    if fidelity.len() != n || cluster_size.len() != n {
        return Err(Error::invalid("fidelity", "series lengths differ"));
    }
    if n < 3 {
        return Err(Error::insufficient("decoherence rate", "need at least three time samples"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t", "times must be strictly increasing"));
    }
    if let Some(f) = fidelity.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
        return Err(Error::Domain(alloc::format!("fidelity {f} has no logarithm")));
    }
    let chi: Vec<f64> = fidelity.iter().map(|f| -f.ln()).collect();
    let rate = match smoothing {
        Smoothing::None => derivative(t, &chi),
        Smoothing::SavitzkyGolay { window } => {
            if window < 3 || window % 2 == 0 || window > n {
                return Err(Error::invalid(
                    "window",
                    "must be odd, at least 3 and no longer than the series",
                ));
            }
            savitzky_golay_derivative(t, &chi, window)
        }
    };
    let samples = (0..n)
        .map(|i| RateSample {
            t: t[i],
            cluster_size: cluster_size[i],
            chi: chi[i],
            chi_rate: rate[i],
        })
        .collect();
    Ok(RateSeries { p, samples })
}
