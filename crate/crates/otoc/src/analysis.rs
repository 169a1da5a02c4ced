//! Scaling analysis of stored curves and the fit report.

use std::path::{Path, PathBuf};

use otoc_core::scaling::{
    analyze_rates, decoherence_rate, AnalysisOptions, FitWindow, RateSeries, ScalingFit, Smoothing,
    Stage,
};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{AppError, Result};
use crate::export::CURVES_HEADER;
use crate::record::smoothing_of;

/// Minimum samples per curve for a rate estimate.
pub const MIN_TIMES: usize = 5;

/// Structured fit report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    /// `complete`, or `stopped` with the stage and the reason.
    pub status: &'static str,
    pub stopped_at: Option<Stage>,
    pub reason: Option<String>,
    pub window: FitWindow,
    /// Window of the reference curves fixing the shift-factor gauge.
    pub gauge_window: FitWindow,
    pub smoothing: Smoothing,
    pub branch_scale: bool,
    pub curves: Vec<CurveSummary>,
    pub fit: ScalingFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub p: f64,
    pub n_samples: usize,
}

impl FitReport {
    pub fn is_complete(&self) -> bool {
        self.fit.is_complete()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn analysis_options(config: &ExperimentConfig) -> AnalysisOptions {
    AnalysisOptions {
        window: config.analysis.window.to_window(),
        low_set: config.analysis.low_set.clone(),
        high_set: config.analysis.high_set.clone(),
        ..AnalysisOptions::default()
    }
}

pub fn fit_report(curves: &[RateSeries], options: &AnalysisOptions, smoothing: Smoothing) -> FitReport {
    let fit = analyze_rates(curves, options);
    let (status, stopped_at, reason) = match &fit.stopped {
        None => ("complete", None, None),
        Some(s) => ("stopped", Some(s.stage), Some(s.reason.clone())),
    };
    FitReport {
        status,
        stopped_at,
        reason,
        window: options.window,
        gauge_window: options.window,
        smoothing,
        branch_scale: options.branch_scale,
        curves: curves
            .iter()
            .map(|c| CurveSummary {
                p: c.p,
                n_samples: c.len(),
            })
            .collect(),
        fit,
    }
}

/// Report for the rate curves stored with a run.
pub fn record_report(record: &crate::record::ExperimentRecord) -> FitReport {
    fit_report(
        &record.rate_series(),
        &analysis_options(&record.config),
        smoothing_of(&record.config),
    )
}

/// One row of a curves file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub p: f64,
    pub t_us: f64,
    pub fidelity: f64,
    pub cluster_size: f64,
}

/// Reads the `p`, `t_us`, fidelity and `K` columns of a curves file.
pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let parse_err = |line: usize, message: String| AppError::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CURVES_HEADER => {}
        other => {
            return Err(parse_err(
                1,
                format!("expected header `{CURVES_HEADER}`, found `{}`", other.unwrap_or("")),
            ))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(parse_err(i + 2, format!("expected 7 columns, found {}", cols.len())));
        }
        let num = |j: usize| -> Result<f64> {
            cols[j]
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_err(i + 2, format!("`{}` is not a number", cols[j])))
        };
        rows.push(CurveRow {
            p: num(0)?,
            t_us: num(1)?,
            fidelity: num(2)?,
            cluster_size: num(4)?,
        });
    }
    Ok(rows)
}

/// Curves files named on the command line; directories contribute their
/// `curves.csv`.
pub fn resolve_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let f = input.join(crate::export::CURVES_FILE);
            if !f.is_file() {
                return Err(AppError::io(
                    &f,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no curves file in directory"),
                ));
            }
            files.push(f);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        return Err(AppError::config("inputs", "no curves files given"));
    }
    Ok(files)
}

/// Groups rows by `p` (in order of first appearance, times sorted) and
/// recomputes `χ` and `χ'` from the fidelities.
pub fn rates_from_rows(rows: &[CurveRow], smoothing: Smoothing) -> Result<Vec<RateSeries>> {
    let mut groups: Vec<(f64, Vec<CurveRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.p) {
            Some(g) => g.1.push(*r),
            None => groups.push((r.p, vec![*r])),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (p, mut g) in groups {
        g.sort_by(|a, b| a.t_us.total_cmp(&b.t_us));
        if g.len() < MIN_TIMES {
            return Err(AppError::config(
                "inputs",
                format!("p = {p}: {} time samples, need at least {MIN_TIMES}", g.len()),
            ));
        }
        let t: Vec<f64> = g.iter().map(|r| r.t_us * 1e-6).collect();
        let f: Vec<f64> = g.iter().map(|r| r.fidelity).collect();
        let k: Vec<f64> = g.iter().map(|r| r.cluster_size).collect();
        out.push(decoherence_rate(p, &t, &f, &k, smoothing)?);
    }
    Ok(out)
}

pub fn load_rates(inputs: &[PathBuf], smoothing: Smoothing) -> Result<Vec<RateSeries>> {
    let mut rows = Vec::new();
    for f in resolve_inputs(inputs)? {
        rows.extend(read_curves(&f)?);
    }
    rates_from_rows(&rows, smoothing)
}
