//! Synthetic data obeying the long-time scaling Ansatz
//! `χ' = K^{k₁} F((p_c - p) K^{k₂})`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::exponents::{exponent_relations, ExponentRelations};
use super::rates::{RateSample, RateSeries};
use crate::error::{Error, Result};

/// Generator parameters. `sharpness` rescales the argument of `F`; larger
/// values confine the crossover between the branches to a narrower band
/// around `p_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ansatz {
    pub s: f64,
    pub nu: f64,
    pub p_c: f64,
    pub alpha0: f64,
    pub alpha_inf: f64,
    pub sharpness: f64,
}

impl Ansatz {
    pub fn new(s: f64, nu: f64, p_c: f64, alpha0: f64, alpha_inf: f64) -> Self {
        Self {
            s,
            nu,
            p_c,
            alpha0,
            alpha_inf,
            sharpness: 100.0,
        }
    }

    pub fn relations(&self) -> Result<ExponentRelations> {
        exponent_relations(self.alpha0, self.alpha_inf, self.s, self.nu)
    }

    /// `F(y) = (1 + y₊²)^{s/2} (1 + y₋²)^{-ν}`: `F ~ y^s` for large positive
    /// `y` and `F ~ |y|^{-2ν}` for large negative `y`.
    pub fn scaling_function(&self, y: f64) -> f64 {
        let pos = y.max(0.0);
        let neg = (-y).max(0.0);
        (1.0 + pos * pos).powf(0.5 * self.s) * (1.0 + neg * neg).powf(-self.nu)
    }

    /// Noiseless `χ'` in units of the rate scale.
    pub fn rate(&self, relations: &ExponentRelations, p: f64, k: f64) -> f64 {
        let y = self.sharpness * (self.p_c - p) * k.powf(relations.k2);
        k.powf(relations.k1) * self.scaling_function(y)
    }
}

fn noise_factor(rng: &mut ChaCha8Rng, level: f64) -> f64 {
    if level == 0.0 {
        return 1.0;
    }
    let e: f64 = StandardNormal.sample(rng);
    1.0 + level * e
}

/// Rate curves sampled directly at the cluster sizes `ks` (with `t = K`
/// as a placeholder time axis) and multiplicative Gaussian noise of
/// relative size `noise` on every `χ'`.
pub fn synthetic_rate_curves(
    ansatz: &Ansatz,
    ps: &[f64],
    ks: &[f64],
    rate_scale: f64,
    noise: f64,
    seed: u64,
) -> Result<Vec<RateSeries>> {
    let rel = ansatz.relations()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ps
        .iter()
        .map(|&p| RateSeries {
            p,
            samples: ks
                .iter()
                .map(|&k| RateSample {
                    t: k,
                    cluster_size: k,
                    chi: f64::NAN,
                    chi_rate: rate_scale * ansatz.rate(&rel, p, k) * noise_factor(&mut rng, noise),
                })
                .collect(),
        })
        .collect())
}

/// Fidelity and cluster-size curves on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCurve {
    pub p: f64,
    pub t: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub cluster_size: Vec<f64>,
}

/// Integrates `χ'(t) = r K(t)^{k₁} F(...)` from `t = 0` and returns
/// `f = e^{-χ}` on `times`. The rate scale `r` is chosen so the largest
/// final `χ` equals `chi_max`. Noise multiplies each increment of `χ`
/// between consecutive grid times, which puts relative noise of size
/// `noise` on the finite-difference rate.
pub fn synthetic_fidelity_curves(
    ansatz: &Ansatz,
    ps: &[f64],
    times: &[f64],
    cluster_size: impl Fn(f64) -> f64,
    chi_max: f64,
    noise: f64,
    seed: u64,
) -> Result<Vec<SyntheticCurve>> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::invalid("times", "must be positive and strictly increasing"));
    }
    let rel = ansatz.relations()?;
    const SUB: usize = 64;
    let increments: Vec<Vec<f64>> = ps
        .iter()
        .map(|&p| {
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    let h = (t - prev) / SUB as f64;
                    let g = |x: f64| ansatz.rate(&rel, p, cluster_size(x));
                    let mut acc = g(prev) + g(t);
                    for i in 1..SUB {
                        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(prev + h * i as f64);
                    }
                    prev = t;
                    acc * h / 3.0
                })
                .collect()
        })
        .collect();
    let largest = increments
        .iter()
        .map(|inc| inc.iter().sum::<f64>())
        .fold(0.0, f64::max);
    if !(largest > 0.0) || !largest.is_finite() {
        return Err(Error::Domain("generator produced no decay".into()));
    }
    let scale = chi_max / largest;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ps
        .iter()
        .zip(increments)
        .map(|(&p, inc)| {
            let mut chi = 0.0;
            let fidelity = inc
                .iter()
                .map(|d| {
                    chi += scale * d * noise_factor(&mut rng, noise);
                    (-chi).exp()
                })
                .collect();
            SyntheticCurve {
                p,
                t: times.to_vec(),
                fidelity,
                cluster_size: times.iter().map(|&t| cluster_size(t)).collect(),
            }
        })
        .collect())
}
