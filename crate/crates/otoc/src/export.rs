//! Curves, MQC, fit-report and plot-data files.
//!
//! Numbers are written with ten significant digits in Rust's exponent
//! notation (`1.234567890e-3`); magnitudes below `1e-14` are written as
//! `0` and undefined values as `nan`. Times are in microseconds and rates
//! per microsecond.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use otoc_core::scaling::{Branch, Collapse, CriticalFit, ScalingFit};

use crate::analysis::{record_report, FitReport};
use crate::config::Format;
use crate::error::{AppError, Result};
use crate::record::ExperimentRecord;

pub const CURVES_HEADER: &str = "p,t_us,fidelity,m2,K,chi,chi_rate";
pub const MQC_HEADER: &str = "p,t_us,M,f_M";
pub const PLOT_HEADER: &str = "x,y,series";

pub const RECORD_FILE: &str = "record.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const MQC_FILE: &str = "mqc.csv";
pub const FIT_FILE: &str = "fit.json";

/// Plot-data files, one per figure panel.
pub const PLOT_FILES: [&str; 7] = [
    "plot_fidelity.csv",
    "plot_cluster_size.csv",
    "plot_mqc.csv",
    "plot_rate.csv",
    "plot_alpha.csv",
    "plot_collapse.csv",
    "plot_zeta.csv",
];

/// Values below this magnitude are written as `0`.
pub const ZERO_CUTOFF: f64 = 1e-14;

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.abs() < ZERO_CUTOFF {
        "0".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.9e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_num)
}

fn series_p(p: f64) -> String {
    format!("p={}", fmt_num(p))
}

pub fn curves_csv(record: &ExperimentRecord) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for pt in &record.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_num(pt.p),
            fmt_num(pt.t_us),
            fmt_num(pt.fidelity),
            fmt_num(pt.m2),
            fmt_num(pt.cluster_size),
            fmt_opt(pt.chi),
            fmt_opt(pt.chi_rate_per_us)
        );
    }
    s
}

pub fn mqc_csv(record: &ExperimentRecord) -> String {
    let mut s = format!("{MQC_HEADER}\n");
    for pt in &record.points {
        for (m, f) in pt.orders.iter().zip(&pt.amplitudes) {
            let _ = writeln!(s, "{},{},{m},{}", fmt_num(pt.p), fmt_num(pt.t_us), fmt_num(*f));
        }
    }
    s
}

struct Plot(String);

impl Plot {
    fn new() -> Self {
        Self(format!("{PLOT_HEADER}\n"))
    }

    fn point(&mut self, x: f64, y: f64, series: &str) {
        let _ = writeln!(self.0, "{},{},{series}", fmt_num(x), fmt_num(y));
    }
}

fn geomspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Low => "low",
        Branch::High => "high",
    }
}

/// Data panels of a run: fidelity, `K` and `χ'` curves plus the final-time
/// MQC spectrum of each `p`.
fn record_plots(record: &ExperimentRecord) -> [String; 4] {
    let mut fid = Plot::new();
    let mut k = Plot::new();
    let mut mqc = Plot::new();
    let mut rate = Plot::new();
    for (i, pt) in record.points.iter().enumerate() {
        let series = series_p(pt.p);
        fid.point(pt.t_us, pt.fidelity, &series);
        k.point(pt.t_us, pt.cluster_size, &series);
        if let Some(r) = pt.chi_rate_per_us {
            rate.point(pt.cluster_size, r, &series);
        }
        let last = record.points.get(i + 1).map_or(true, |n| n.p != pt.p);
        if last {
            for (m, f) in pt.orders.iter().zip(&pt.amplitudes) {
                mqc.point(f64::from(*m), *f, &series);
            }
        }
    }
    [fid.0, k.0, mqc.0, rate.0]
}

/// Analysis panels: `α(p)` with the sigmoid, the collapse with its master
/// curves, and `ζ(p)` with the critical fit.
pub fn fit_plots(fit: &ScalingFit) -> [String; 3] {
    let mut alpha = Plot::new();
    for a in &fit.alpha_per_p {
        alpha.point(a.p, a.alpha, "alpha");
    }
    if let (Some(sig), Some(first), Some(last)) = (&fit.sigmoid, fit.alpha_per_p.first(), fit.alpha_per_p.last()) {
        if first.p > 0.0 && last.p > first.p {
            for p in geomspace(first.p, last.p, 100) {
                alpha.point(p, sig.eval(p), "sigmoid");
            }
        }
    }
    let mut collapse = Plot::new();
    let mut zeta = Plot::new();
    if let Some(c) = &fit.collapse {
        collapse_points(c, &mut collapse);
        for f in &c.factors {
            zeta.point(f.p, f.zeta, &format!("zeta_{}", branch_name(f.branch)));
        }
        if let Some(crit) = &fit.critical {
            critical_curve(c, crit, &mut zeta);
        }
    }
    [alpha.0, collapse.0, zeta.0]
}

fn collapse_points(c: &Collapse, plot: &mut Plot) {
    for curve in &c.curves {
        let series = series_p(curve.p);
        for (x, y) in curve.x.iter().zip(&curve.y) {
            plot.point(*x, *y, &series);
        }
    }
    for m in &c.masters {
        let series = format!("master_{}", branch_name(m.branch));
        for (x, y) in m.u.iter().zip(&m.v) {
            plot.point(*x, *y, &series);
        }
    }
}

fn critical_curve(c: &Collapse, crit: &CriticalFit, plot: &mut Plot) {
    for branch in [Branch::Low, Branch::High] {
        let ps: Vec<f64> = c.factors.iter().filter(|f| f.branch == branch).map(|f| f.p).collect();
        let (Some(lo), Some(hi)) = (ps.iter().copied().reduce(f64::min), ps.iter().copied().reduce(f64::max)) else {
            continue;
        };
        if !(lo > 0.0 && hi > lo) {
            continue;
        }
        let series = format!("fit_{}", branch_name(branch));
        for p in geomspace(lo, hi, 100) {
            plot.point(p, crit.eval(p, branch), &series);
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| AppError::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

/// Writes the requested formats for `record` into `dir` and returns the
/// paths written, in a fixed order.
pub fn export(record: &ExperimentRecord, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let needs_fit = formats.iter().any(|f| matches!(f, Format::Fit | Format::Plot));
    let report = needs_fit.then(|| record_report(record));
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Curves => written.push(write(dir, CURVES_FILE, &curves_csv(record))?),
            Format::Mqc => written.push(write(dir, MQC_FILE, &mqc_csv(record))?),
            Format::Fit => {
                let report = report.as_ref().expect("report computed for fit");
                written.push(write(dir, FIT_FILE, &report.to_json())?);
            }
            Format::Plot => {
                let report = report.as_ref().expect("report computed for plots");
                written.extend(write_plots(dir, record, report)?);
            }
        }
    }
    Ok(written)
}

/// All seven plot files of a run.
pub fn write_plots(dir: &Path, record: &ExperimentRecord, report: &FitReport) -> Result<Vec<PathBuf>> {
    let data = record_plots(record);
    let mut written = Vec::new();
    for (name, body) in PLOT_FILES[..4].iter().zip(&data) {
        written.push(write(dir, name, body)?);
    }
    written.extend(write_fit_plots(dir, &report.fit)?);
    Ok(written)
}

/// The `α`, collapse and `ζ` plot files only.
pub fn write_fit_plots(dir: &Path, fit: &ScalingFit) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, body) in PLOT_FILES[4..].iter().zip(&fit_plots(fit)) {
        written.push(write(dir, name, body)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0), "1.000000000e0");
        assert_eq!(fmt_num(-0.0012345678901), "-1.234567890e-3");
        assert_eq!(fmt_num(6.5e-15), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(1500.0), "1.500000000e3");
    }
}
