//! Isotonic regression and shape-preserving cubic interpolation.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::regression::weighted_least_squares;

/// Weighted pool-adjacent-violators projection onto non-decreasing
/// (`increasing = true`) or non-increasing sequences.
pub fn pava(values: &[f64], weights: &[f64], increasing: bool) -> Vec<f64> {
    let sign = if increasing { 1.0 } else { -1.0 };
    // Blocks of (weighted mean, weight, count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((sign * v, w, 1));
        while blocks.len() > 1 {
            let (m1, w1, c1) = blocks[blocks.len() - 1];
            let (m0, w0, c0) = blocks[blocks.len() - 2];
            if m0 <= m1 {
                break;
            }
            blocks.pop();
            let w = w0 + w1;
            let m = if w > 0.0 { (m0 * w0 + m1 * w1) / w } else { 0.5 * (m0 + m1) };
            *blocks.last_mut().unwrap() = (m, w, c0 + c1);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, c)| core::iter::repeat(sign * m).take(c))
        .collect()
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes)
/// with linear extrapolation along the end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two knots.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = alloc::vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Self { x, y, d };
        }
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Self { x, y, d }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Monotone smoother of scattered points: a least-squares piecewise-linear
/// fit on `n_knots` equispaced knots (lightly ridge-regularized so empty
/// intervals stay defined), projected by [`pava`] and interpolated by
/// [`Pchip`]. Returns `None` with fewer than two distinct abscissae.
pub fn monotone_fit(x: &[f64], y: &[f64], n_knots: usize, increasing: bool) -> Option<Pchip> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) || n_knots < 2 {
        return None;
    }
    let k = n_knots;
    let step = (hi - lo) / (k - 1) as f64;
    let knots: Vec<f64> = (0..k).map(|i| lo + step * i as f64).collect();
    let m = x.len();
    let rows = m + k - 2;
    let mut design = DMatrix::zeros(rows, k);
    let mut target = alloc::vec![0.0; rows];
    let mut weights = alloc::vec![1.0; rows];
    let mut mass = alloc::vec![0.0; k];
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        let pos = ((xi - lo) / step).clamp(0.0, (k - 1) as f64);
        let j = (pos.floor() as usize).min(k - 2);
        let s = pos - j as f64;
        design[(i, j)] = 1.0 - s;
        design[(i, j + 1)] = s;
        mass[j] += 1.0 - s;
        mass[j + 1] += s;
        target[i] = yi;
    }
    let ridge = 1e-6 * m as f64 / k as f64;
    for j in 0..k - 2 {
        let r = m + j;
        design[(r, j)] = 1.0;
        design[(r, j + 1)] = -2.0;
        design[(r, j + 2)] = 1.0;
        weights[r] = ridge;
    }
    let values = weighted_least_squares(&design, &target, &weights)?;
    let w: Vec<f64> = mass.iter().map(|v| v + 1e-9).collect();
    let projected = pava(&values, &w, increasing);
    Some(Pchip::new(knots, projected))
}

/// Monotone interpolant of scattered points: isotonic regression of the
/// points sorted by `x`, one knot per pooled block at the block's mean
/// abscissa, joined by [`Pchip`]. Strictly monotone data is interpolated
/// exactly. Returns `None` with fewer than two blocks.
pub fn isotonic_interpolant(x: &[f64], y: &[f64], increasing: bool) -> Option<Pchip> {
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sign = if increasing { 1.0 } else { -1.0 };
    // Blocks of (sum x, sum y, count); ties in x always share a block.
    let mut blocks: Vec<(f64, f64, f64)> = Vec::with_capacity(pts.len());
    for (xi, yi) in pts {
        let tied = blocks.last().is_some_and(|b| b.0 / b.2 == xi);
        if tied {
            let b = blocks.last_mut().unwrap();
            *b = (b.0 + xi, b.1 + sign * yi, b.2 + 1.0);
        } else {
            blocks.push((xi, sign * yi, 1.0));
        }
        while blocks.len() > 1 {
            let (x1, y1, c1) = blocks[blocks.len() - 1];
            let (x0, y0, c0) = blocks[blocks.len() - 2];
            if y0 / c0 < y1 / c1 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (x0 + x1, y0 + y1, c0 + c1);
        }
    }
    if blocks.len() < 2 {
        return None;
    }
    let kx = blocks.iter().map(|b| b.0 / b.2).collect();
    let ky = blocks.iter().map(|b| sign * b.1 / b.2).collect();
    Some(Pchip::new(kx, ky))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pava_pools_violators() {
        let out = pava(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4], true);
        assert_eq!(out, [1.0, 2.5, 2.5, 4.0]);
        let out = pava(&[1.0, 3.0, 2.0], &[1.0; 3], false);
        assert_eq!(out, [2.0, 2.0, 2.0]);
    }

    #[test]
    fn pchip_reproduces_lines_and_knots() {
        let x = [0.0, 1.0, 3.0, 4.0];
        let p = Pchip::new(x.to_vec(), x.iter().map(|v| 2.0 * v - 1.0).collect());
        for t in [-1.0, 0.5, 2.2, 3.9, 6.0] {
            assert!((p.eval(t) - (2.0 * t - 1.0)).abs() < 1e-12);
        }
        let q = Pchip::new(x.to_vec(), [0.0, 1.0, 1.5, 5.0].to_vec());
        for (xi, yi) in x.iter().zip([0.0, 1.0, 1.5, 5.0]) {
            assert!((q.eval(*xi) - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn isotonic_interpolant_passes_through_monotone_data() {
        let x = [3.0, 0.0, 1.0, 2.0];
        let y = [9.0, 0.0, 1.0, 4.0];
        let p = isotonic_interpolant(&x, &y, true).unwrap();
        for (xi, yi) in x.iter().zip(y) {
            assert!((p.eval(*xi) - yi).abs() < 1e-12);
        }
        let q = isotonic_interpolant(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, 1.0, 3.0], true).unwrap();
        assert_eq!(q.knots(), (&[0.0, 1.5, 3.0][..], &[0.0, 1.5, 3.0][..]));
        assert!(isotonic_interpolant(&[0.0, 1.0], &[1.0, 0.0], true).is_none());
    }

    #[test]
    fn pchip_preserves_monotonicity() {
        let p = Pchip::new([0.0, 1.0, 2.0, 3.0].to_vec(), [0.0, 0.0, 1.0, 1.0].to_vec());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=300 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}
