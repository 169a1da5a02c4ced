//! Data collapse of rate curves onto a single scaling function.
//!
//! Each curve is mapped to `(u, v) = (ln K^{-k₂ν}, ln χ'/K^{k₁})` and shifted
//! along `u` by `ln ζ(p)`. Curves are split into a low and a high branch
//! around a critical-point estimate; within a branch the shifts minimize the
//! squared distance of every curve to a monotone master curve built from
//! the other curves of that branch.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::exponents::{ExponentRelations, FitWindow};
use super::monotone::{isotonic_interpolant, pava, Pchip};
use super::rates::RateSeries;
use super::regression::linear_fit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Branch {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftFactor {
    pub p: f64,
    pub zeta: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOptions {
    /// Curves with `p < p_split` form the low branch. `None` keeps every
    /// curve on the high branch.
    pub p_split: Option<f64>,
    pub alpha0: f64,
    pub alpha_inf: f64,
    /// Samples entering the collapse.
    pub window: FitWindow,
    /// Samples of the reference curves that set the gauge.
    pub gauge_window: FitWindow,
    /// Convergence threshold on the largest relative change of any `ζ`
    /// over one sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl CollapseOptions {
    pub fn new(p_split: Option<f64>, alpha0: f64, alpha_inf: f64) -> Self {
        Self {
            p_split,
            alpha0,
            alpha_inf,
            window: FitWindow::All,
            gauge_window: FitWindow::LatterHalf,
            tolerance: 1e-6,
            max_sweeps: 200,
        }
    }
}

/// Master curve of one branch, sampled at its knots in `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MasterCurve {
    pub branch: Branch,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Collapsed points of one curve in `(u + ln ζ, v)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CollapsedCurve {
    pub p: f64,
    pub branch: Branch,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Collapse {
    pub factors: Vec<ShiftFactor>,
    /// RMS leave-one-out residual in `v` over overlapping samples.
    pub residual: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub masters: Vec<MasterCurve>,
    pub curves: Vec<CollapsedCurve>,
}

struct Curve {
    p: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    log_zeta: f64,
    /// Monotone interpolant of `v` over the unshifted `u`.
    shape: Pchip,
    lo: f64,
    hi: f64,
}

impl Curve {
    fn range(&self) -> (f64, f64) {
        (self.lo + self.log_zeta, self.hi + self.log_zeta)
    }
}

/// Fewest samples of a curve that must fall inside the master's support
/// for the overlap-restricted misfit to apply.
const MIN_OVERLAP: usize = 3;

/// Fraction of each curve's support over which its weight ramps to zero.
const EDGE_TAPER: f64 = 0.05;

fn taper(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo || x > hi {
        return 0.0;
    }
    let ramp = EDGE_TAPER * (hi - lo);
    ((x - lo) / ramp).min((hi - x) / ramp).min(1.0)
}

/// Master curve of a set of shifted curves: at each `u` the weighted mean
/// of the interpolants of every curve covering that point, with weights
/// tapering at the ends of each curve. Identical curves at equal shifts
/// reproduce each other exactly, and the master moves continuously with
/// the shifts.
struct Master<'a> {
    parts: Vec<&'a Curve>,
}

impl<'a> Master<'a> {
    fn new(curves: &'a [Curve], members: &[usize]) -> Option<Self> {
        (!members.is_empty()).then(|| Self {
            parts: members.iter().map(|&j| &curves[j]).collect(),
        })
    }

    fn domain(&self) -> (f64, f64) {
        self.parts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
            let (lo, hi) = c.range();
            (a.min(lo), b.max(hi))
        })
    }

    /// Value and total weight at `x`; the value is meaningless at zero weight.
    fn eval(&self, x: f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut weight = 0.0;
        for c in &self.parts {
            let (lo, hi) = c.range();
            let w = taper(x, lo, hi);
            if w > 0.0 {
                sum += w * c.shape.eval(x - c.log_zeta);
                weight += w;
            }
        }
        (if weight > 0.0 { sum / weight } else { 0.0 }, weight)
    }

    /// Linear extrapolation of the curve whose support lies nearest `x`.
    fn extrapolate(&self, x: f64) -> f64 {
        let distance = |c: &Curve| {
            let (lo, hi) = c.range();
            (lo - x).max(x - hi).max(0.0)
        };
        let nearest = self
            .parts
            .iter()
            .min_by(|a, b| distance(a).total_cmp(&distance(b)))
            .unwrap();
        nearest.shape.eval(x - nearest.log_zeta)
    }
}

/// Weighted mean squared deviation of the curve from the master over the
/// master's support, each sample weighted by the master's coverage capped
/// at one. With too little overlap the curve is compared against the
/// extrapolated master instead, scaled up so any genuine overlap is
/// preferred.
fn misfit(curve: &Curve, m: &Master<'_>, log_zeta: f64) -> f64 {
    let mut inside = 0.0;
    let mut weight = 0.0;
    let mut n_in = 0usize;
    let mut all = 0.0;
    for (u, v) in curve.u.iter().zip(&curve.v) {
        let x = u + log_zeta;
        let (mv, w) = m.eval(x);
        if w > 0.0 {
            let r = v - mv;
            let w = w.min(1.0);
            inside += w * r * r;
            weight += w;
            n_in += 1;
            all += r * r;
        } else {
            let r = v - m.extrapolate(x);
            all += r * r;
        }
    }
    if n_in >= MIN_OVERLAP.min(curve.u.len()) && weight > 0.0 {
        inside / weight
    } else {
        1e3 * (1.0 + all / curve.u.len() as f64)
    }
}

/// Isotonic interpolant of one curve, or a flat line when the data pool
/// into a single level.
fn curve_shape(u: &[f64], v: &[f64], increasing: bool) -> Pchip {
    isotonic_interpolant(u, v, increasing).unwrap_or_else(|| {
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        Pchip::new(alloc::vec![lo, hi.max(lo + 1.0)], alloc::vec![mean, mean])
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Coarse scan followed by golden-section refinement.
fn best_shift(curve: &Curve, m: &Master<'_>, center: f64, half_width: f64, step: f64) -> f64 {
    let n = (2.0 * half_width / step).ceil() as usize;
    let mut best = (center, f64::INFINITY);
    for i in 0..=n {
        let z = center - half_width + step * i as f64;
        let c = misfit(curve, m, z);
        if c < best.1 {
            best = (z, c);
        }
    }
    golden_section(|z| misfit(curve, m, z), best.0 - step, best.0 + step, 1e-10)
}

/// Number of points at which the master of a branch is reported.
const MASTER_SAMPLES: usize = 200;

fn sample_master(m: &Master<'_>, branch: Branch, increasing: bool) -> MasterCurve {
    let (lo, hi) = m.domain();
    let mut u = Vec::with_capacity(MASTER_SAMPLES);
    let mut v = Vec::with_capacity(MASTER_SAMPLES);
    for i in 0..MASTER_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (MASTER_SAMPLES - 1) as f64;
        let (mv, w) = m.eval(x);
        if w > 0.0 {
            u.push(x);
            v.push(mv);
        }
    }
    let v = pava(&v, &alloc::vec![1.0; v.len()], increasing);
    MasterCurve { branch, u, v }
}

/// `ζ = sqrt(⟨χ'/K^α⟩)` over the window of the reference curve.
fn gauge(series: &RateSeries, alpha: f64, window: FitWindow) -> f64 {
    let idx = window.select(series);
    let mean = idx
        .iter()
        .map(|&i| {
            let s = series.samples[i];
            s.chi_rate / s.cluster_size.powf(alpha)
        })
        .sum::<f64>()
        / idx.len() as f64;
    mean.sqrt()
}

/// Shift factors collapsing `curves` under the exponents `relations`.
///
/// The reference curve of the high branch (largest `p`) is fixed at
/// `ζ = sqrt(⟨χ'/K^{α∞}⟩)`, that of the low branch (smallest `p`) at
/// `ζ = sqrt(⟨χ'/K^{α₀}⟩)`. Fails with [`Error::CollapseInfeasible`] when the
/// shifted supports of a branch do not form one connected interval.
pub fn collapse_shift_factors(
    curves: &[RateSeries],
    relations: &ExponentRelations,
    options: &CollapseOptions,
) -> Result<Collapse> {
    if curves.is_empty() {
        return Err(Error::insufficient("collapse", "no curves"));
    }
    let mut work = Vec::with_capacity(curves.len());
    let mut branches = Vec::with_capacity(curves.len());
    for series in curves {
        let idx = options.window.select(series);
        let mut u = Vec::with_capacity(idx.len());
        let mut v = Vec::with_capacity(idx.len());
        for &i in &idx {
            let s = series.samples[i];
            if s.cluster_size > 0.0 && s.chi_rate > 0.0 {
                let lk = s.cluster_size.ln();
                u.push(-relations.k2_nu * lk);
                v.push(s.chi_rate.ln() - relations.k1 * lk);
            }
        }
        if u.len() < 2 {
            return Err(Error::insufficient(
                "collapse",
                alloc::format!("p = {}: fewer than two usable samples", series.p),
            ));
        }
        let branch = match options.p_split {
            Some(split) if series.p < split => Branch::Low,
            _ => Branch::High,
        };
        branches.push(branch);
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::insufficient(
                "collapse",
                alloc::format!("p = {}: samples span a single cluster size", series.p),
            ));
        }
        work.push(Curve {
            p: series.p,
            shape: Pchip::new(alloc::vec![lo, hi], alloc::vec![0.0, 0.0]),
            u,
            v,
            log_zeta: 0.0,
            lo,
            hi,
        });
    }

    let mut sweeps = 0;
    let mut converged = true;
    let mut masters = Vec::new();
    let mut sq = 0.0;
    let mut count = 0usize;
    for branch in [Branch::Low, Branch::High] {
        let mut members: Vec<usize> = (0..work.len()).filter(|&j| branches[j] == branch).collect();
        if members.is_empty() {
            continue;
        }
        members.sort_by(|&a, &b| work[a].p.total_cmp(&work[b].p));
        let slope: f64 = members
            .iter()
            .filter_map(|&j| linear_fit(&work[j].u, &work[j].v).ok())
            .map(|f| f.slope)
            .sum();
        for &j in &members {
            work[j].shape = curve_shape(&work[j].u, &work[j].v, slope >= 0.0);
        }
        let (reference, alpha) = match branch {
            Branch::Low => (members[0], options.alpha0),
            Branch::High => (members[members.len() - 1], options.alpha_inf),
        };
        let g = gauge(&curves[reference], alpha, options.gauge_window);
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::Domain("gauge curve has no positive mean rate".into()));
        }
        work[reference].log_zeta = g.ln();

        // Place curves one at a time, nearest to the reference first.
        let mut order: Vec<usize> = members.iter().copied().filter(|&j| j != reference).collect();
        let lp_ref = work[reference].p.ln();
        order.sort_by(|&a, &b| {
            (work[a].p.ln() - lp_ref).abs().total_cmp(&(work[b].p.ln() - lp_ref).abs())
        });
        let mut placed = alloc::vec![reference];
        for &j in &order {
            let center = placed
                .iter()
                .min_by(|&&a, &&b| {
                    (work[a].p - work[j].p).abs().total_cmp(&(work[b].p - work[j].p).abs())
                })
                .map_or(0.0, |&a| work[a].log_zeta);
            let shift = match Master::new(&work, &placed) {
                Some(m) => best_shift(&work[j], &m, center, 8.0, 0.05),
                None => center,
            };
            work[j].log_zeta = shift;
            placed.push(j);
        }

        // Leave-one-out refinement.
        let mut branch_converged = order.is_empty();
        let mut branch_sweeps = 0;
        while !branch_converged && branch_sweeps < options.max_sweeps {
            branch_sweeps += 1;
            let mut change: f64 = 0.0;
            for &j in &order {
                let others: Vec<usize> = members.iter().copied().filter(|&i| i != j).collect();
                let Some(m) = Master::new(&work, &others) else { continue };
                let old = work[j].log_zeta;
                let new = best_shift(&work[j], &m, old, 0.5, 0.05);
                change = change.max((new - old).abs());
                work[j].log_zeta = new;
            }
            branch_converged = change < options.tolerance;
        }
        sweeps = sweeps.max(branch_sweeps);
        converged &= branch_converged;

        let mut spans: Vec<(f64, f64, f64)> = members.iter().map(|&i| {
            let (a, b) = work[i].range();
            (a, b, work[i].p)
        }).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = spans[0].1;
        for &(a, b, p) in &spans[1..] {
            if a > reach {
                return Err(Error::CollapseInfeasible(alloc::format!(
                    "scaled support of the curve at p = {p} is disjoint from the rest of its branch"
                )));
            }
            reach = reach.max(b);
        }
        for &j in &order {
            let others: Vec<usize> = members.iter().copied().filter(|&i| i != j).collect();
            if let Some(m) = Master::new(&work, &others) {
                for (u, v) in work[j].u.iter().zip(&work[j].v) {
                    let (mv, w) = m.eval(u + work[j].log_zeta);
                    if w > 0.0 {
                        sq += (v - mv) * (v - mv);
                        count += 1;
                    }
                }
            }
        }
        if let Some(m) = Master::new(&work, &members) {
            masters.push(sample_master(&m, branch, slope >= 0.0));
        }
    }

    let factors = work
        .iter()
        .zip(&branches)
        .map(|(c, &branch)| ShiftFactor {
            p: c.p,
            zeta: c.log_zeta.exp(),
            branch,
        })
        .collect();
    let collapsed = work
        .iter()
        .zip(&branches)
        .map(|(c, &branch)| CollapsedCurve {
            p: c.p,
            branch,
            x: c.u.iter().map(|u| u + c.log_zeta).collect(),
            y: c.v.clone(),
        })
        .collect();
    Ok(Collapse {
        factors,
        residual: if count > 0 { (sq / count as f64).sqrt() } else { 0.0 },
        sweeps,
        converged,
        masters,
        curves: collapsed,
    })
}
