use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use otoc::analysis::{fit_report, load_rates};
use otoc::config::{Format, WindowConfig};
use otoc::export::{self, FIT_FILE};
use otoc::verify::{run_verify, VerifyOptions};
use otoc::{load_config, run_experiment, AppError, ExperimentRecord, Result};
use otoc_core::scaling::{
    collapse_shift_factors, critical_point_fit, exponent_relations, AnalysisOptions, CollapseOptions,
    CriticalOptions, Smoothing,
};

#[derive(Parser)]
#[command(name = "spinecho", version, about = "Loschmidt-echo sweeps and decoherence scaling analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML configuration.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaling analysis of curves files or run directories.
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for the fit report and analysis plots; the report goes
        /// to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rates: RateArgs,
        /// Use every sample instead of the latter half in the power-law fits.
        #[arg(long)]
        all_samples: bool,
        /// Comma-separated low-branch strengths.
        #[arg(long, value_delimiter = ',')]
        low_set: Option<Vec<f64>>,
        /// Comma-separated high-branch strengths.
        #[arg(long, value_delimiter = ',')]
        high_set: Option<Vec<f64>>,
        /// Fit one amplitude to both branches of the critical law.
        #[arg(long)]
        no_branch_scale: bool,
    },
    /// Collapse curves with given exponents and fit the critical point.
    Collapse {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        alpha0: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha_inf: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        /// Strength separating the low and the high branch.
        #[arg(long)]
        p_split: Option<f64>,
        #[arg(long)]
        no_branch_scale: bool,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        rates: RateArgs,
        /// Output file; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite output files from a saved record.
    Export {
        record: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "curves,mqc,fit,plot")]
        formats: Vec<Format>,
        /// Output directory; defaults to the record's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_h0_sign_error: bool,
    },
}

#[derive(clap::Args)]
struct RateArgs {
    /// Odd window of the local quadratic fit for dχ/dt.
    #[arg(long)]
    smoothing: Option<usize>,
}

impl RateArgs {
    fn smoothing(&self) -> Smoothing {
        self.smoothing.map_or(Smoothing::None, |window| Smoothing::SavitzkyGolay { window })
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| AppError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run { config, out } => {
            let config = load_config(&config)?;
            let dir = out.unwrap_or_else(|| config.output.directory.clone());
            let (record, written) = run_experiment(&config, &dir)?;
            println!("{} points kept, {} dropped", record.points.len(), record.dropped.len());
            for d in &record.dropped {
                println!("dropped p={} t_us={}: {}", d.p, d.t_us, d.reason);
            }
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Analyze { inputs, out, rates, all_samples, low_set, high_set, no_branch_scale } => {
            let smoothing = rates.smoothing();
            let curves = load_rates(&inputs, smoothing)?;
            let window = if all_samples { WindowConfig::All } else { WindowConfig::LatterHalf };
            let options = AnalysisOptions {
                window: window.to_window(),
                low_set,
                high_set,
                branch_scale: !no_branch_scale,
                ..AnalysisOptions::default()
            };
            let report = fit_report(&curves, &options, smoothing);
            match &out {
                Some(dir) => {
                    export::ensure_dir(dir)?;
                    write_or_print(Some(&dir.join(FIT_FILE)), &report.to_json())?;
                    export::write_fit_plots(dir, &report.fit)?;
                }
                None => print!("{}", report.to_json()),
            }
            if let (Some(stage), Some(reason)) = (report.stopped_at, &report.reason) {
                eprintln!("analysis stopped at {stage}: {reason}");
                return Ok(1);
            }
            Ok(0)
        }
        Command::Collapse { inputs, alpha0, alpha_inf, s, nu, p_split, no_branch_scale, tolerance, rates, out } => {
            let curves = load_rates(&inputs, rates.smoothing())?;
            let relations = exponent_relations(alpha0, alpha_inf, s, nu)?;
            let mut options = CollapseOptions::new(p_split, alpha0, alpha_inf);
            options.tolerance = tolerance;
            let collapse = collapse_shift_factors(&curves, &relations, &options)?;
            let critical = critical_point_fit(
                &collapse.factors,
                CriticalOptions { branch_scale: !no_branch_scale, p_c_guess: p_split, nu_guess: Some(nu) },
            )?;
            let body = serde_json::json!({
                "relations": relations,
                "collapse": collapse,
                "critical": critical,
            });
            write_or_print(out.as_ref(), &to_json(&body))?;
            Ok(0)
        }
        Command::Export { record, formats, out } => {
            let dir = out.unwrap_or_else(|| record.parent().map(PathBuf::from).unwrap_or_default());
            let loaded = ExperimentRecord::load(&record)?;
            for path in export::export(&loaded, &formats, &dir)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Verify { draws, seed, inject_h0_sign_error } => {
            let options = VerifyOptions { draws, seed, inject_h0_sign_error, ..VerifyOptions::default() };
            let results = run_verify(&options)?;
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(AppError::Verification(format!("{failed} of {} checks failed", results.len())));
            }
            println!("all {} checks passed", results.len());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
