//! Experiment driver for spin-echo decoherence studies.
//!
//! Reads a TOML experiment description, sweeps the `(p, t)` grid with
//! the `otoc-core` kernel, stores the run as a JSON record and writes the
//! curve, MQC, fit-report and plot-data files. The `spinecho` binary is a
//! thin command-line layer over these modules.
//!
//! * [`config`]: the TOML schema, defaults and validation.
//! * [`sweep`]: evolution modes and the parallel grid sweep.
//! * [`record`]: the persisted run and its rate curves.
//! * [`analysis`]: curve files in, scaling fit report out.
//! * [`export`]: file formats.
//! * [`verify`]: the invariant suite behind `spinecho verify`.

pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod record;
pub mod sweep;
pub mod verify;

pub use config::{load_config, ExperimentConfig};
pub use error::{AppError, Result};
pub use record::ExperimentRecord;

use std::path::{Path, PathBuf};

/// Runs `config`, saves the record and the configured formats into
/// `dir`, and returns the record with the paths written.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<(ExperimentRecord, Vec<PathBuf>)> {
    let sweep = sweep::run_sweep(config)?;
    let record = ExperimentRecord::from_sweep(config, &sweep);
    export::ensure_dir(dir)?;
    let record_path = dir.join(export::RECORD_FILE);
    record.save(&record_path)?;
    let mut written = vec![record_path];
    written.extend(export::export(&record, &config.output.formats, dir)?);
    Ok((record, written))
}
