//! The persisted result of a run: every grid point, or why it is missing.

use std::path::Path;

use otoc_core::scaling::{RateSample, RateSeries, Smoothing};
use otoc_core::MetricsRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{AppError, Result};
use crate::sweep::{rate_columns, PointOutcome, SweepOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    /// Unix time taken from `SOURCE_DATE_EPOCH`; absent otherwise so that
    /// repeated runs stay byte-identical.
    pub created: Option<u64>,
}

/// One kept `(p, t)` point with its coherence spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub p: f64,
    pub t_us: f64,
    pub fidelity: f64,
    pub m2: f64,
    pub cluster_size: f64,
    pub commutator_overlap: f64,
    pub chi: Option<f64>,
    /// `dχ/dt` per microsecond, matching the file time unit.
    pub chi_rate_per_us: Option<f64>,
    pub orders: Vec<i32>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPoint {
    pub p: f64,
    pub t_us: f64,
    pub fidelity: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// SHA-256 of the canonical TOML form of `config`.
    pub config_hash: String,
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    pub points: Vec<PointRecord>,
    pub dropped: Vec<DroppedPoint>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    Sha256::digest(config.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn created_from_env() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
}

pub fn smoothing_of(config: &ExperimentConfig) -> Smoothing {
    match config.analysis.smoothing_window {
        Some(window) => Smoothing::SavitzkyGolay { window },
        None => Smoothing::None,
    }
}

impl ExperimentRecord {
    pub fn from_sweep(config: &ExperimentConfig, sweep: &SweepOutput) -> Self {
        let kept: Vec<&MetricsRecord> = sweep
            .points
            .iter()
            .filter_map(|o| match o {
                PointOutcome::Kept { metrics, .. } => Some(metrics),
                PointOutcome::Dropped { .. } => None,
            })
            .collect();
        let mut rates = rate_columns(&kept, smoothing_of(config))
            .into_iter()
            .flat_map(|c| c.values);
        let mut points = Vec::new();
        let mut dropped = Vec::new();
        for outcome in &sweep.points {
            match outcome {
                PointOutcome::Kept { metrics: m, spectrum } => {
                    let rate = rates.next().flatten();
                    points.push(PointRecord {
                        p: m.p,
                        t_us: m.t * 1e6,
                        fidelity: m.fidelity,
                        m2: m.m2,
                        cluster_size: m.cluster_size,
                        commutator_overlap: m.commutator_overlap,
                        chi: rate.map(|r| r.0),
                        chi_rate_per_us: rate.map(|r| r.1 * 1e-6),
                        orders: spectrum.orders.clone(),
                        amplitudes: spectrum.amplitudes.clone(),
                    });
                }
                PointOutcome::Dropped { p, t, fidelity, reason } => dropped.push(DroppedPoint {
                    p: *p,
                    t_us: t * 1e6,
                    fidelity: *fidelity,
                    reason: reason.clone(),
                }),
            }
        }
        Self {
            config_hash: config_hash(config),
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: config.system.seed,
                created: created_from_env(),
            },
            config: config.clone(),
            points,
            dropped,
        }
    }

    /// Rate curves of every `p` whose rates are defined throughout.
    pub fn rate_series(&self) -> Vec<RateSeries> {
        let mut out: Vec<RateSeries> = Vec::new();
        for pt in &self.points {
            let (Some(chi), Some(rate)) = (pt.chi, pt.chi_rate_per_us) else {
                continue;
            };
            let sample = RateSample {
                t: pt.t_us * 1e-6,
                cluster_size: pt.cluster_size,
                chi,
                chi_rate: rate * 1e6,
            };
            match out.last_mut() {
                Some(s) if s.p == pt.p => s.samples.push(sample),
                _ => out.push(RateSeries {
                    p: pt.p,
                    samples: vec![sample],
                }),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| AppError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
