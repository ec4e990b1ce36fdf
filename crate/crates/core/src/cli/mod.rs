//! Command-line front end: resolves configuration, runs sweeps, writes CSV,
//! SVG and a run manifest.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric-domain failure.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod plot;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use crate::error::SimError;
use crate::experiment::{run_sweep, sensitivity_sweep, SweepResult};
pub use config::{parse_config, CliArgs, RunPlan};
pub use manifest::{OutputRecord, RunManifest};
pub use plot::{write_plot, PlotSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Numeric(#[from] SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match parse_config(args).and_then(|plan| execute(&plan)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Series {
    label: String,
    result: SweepResult,
    csv: Option<PathBuf>,
}

fn compute(plan: &RunPlan) -> Result<Vec<Series>, SimError> {
    let config = &plan.config;
    let out = plan.out.as_deref();
    let mut series = Vec::new();
    match &plan.strengths {
        Some(strengths) => {
            for (s, result) in sensitivity_sweep(config, strengths)? {
                series.push(Series {
                    label: format!("strength {s}"),
                    result,
                    csv: out.map(|o| config::sibling(o, &format!(".strength-{s}.csv"))),
                });
            }
        }
        None => {
            let label = if config.pollution.enabled {
                format!("pollution, strength {}", config.pollution.strength)
            } else {
                "no pollution".to_string()
            };
            series.push(Series {
                label,
                result: run_sweep(config)?,
                csv: out.map(Path::to_path_buf),
            });
        }
    }
    if plan.compare_off {
        let mut off = config.clone();
        off.pollution.enabled = false;
        series.push(Series {
            label: "no pollution".to_string(),
            result: run_sweep(&off)?,
            csv: out.map(|o| config::sibling(o, ".no-pollution.csv")),
        });
    }
    Ok(series)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn execute(plan: &RunPlan) -> Result<(), CliError> {
    let started_at = now();
    if !plan.seed_from_flag {
        eprintln!("seed: {}", plan.config.seed);
    }
    let series = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?
            .install(|| compute(plan))?,
        None => compute(plan)?,
    };

    let mut outputs = Vec::new();
    for s in &series {
        eprintln!(
            "{}: revenue peaks at alpha = {}, within {}% of peak over [{}, {}]",
            s.label,
            s.result.argmax_revenue_alpha,
            plan.config.flat_tolerance * 100.0,
            s.result.revenue_flat_region.0,
            s.result.revenue_flat_region.1
        );
        match &s.csv {
            Some(path) => {
                csv::write_csv(&s.result, path).map_err(CliError::io(path))?;
                outputs.push(path.clone());
            }
            None => {
                let mut stdout = io::stdout().lock();
                stdout
                    .write_all(csv::render_csv(&s.result).as_bytes())
                    .map_err(CliError::io(Path::new("<stdout>")))?;
            }
        }
    }
    if let Some(path) = &plan.plot {
        let plotted: Vec<PlotSeries<'_>> = series
            .iter()
            .map(|s| PlotSeries {
                label: s.label.clone(),
                result: &s.result,
            })
            .collect();
        write_plot(&plotted, plan.plot_metric, path).map_err(CliError::io(path))?;
        outputs.push(path.clone());
    }
    if let Some(path) = &plan.manifest {
        let outputs = outputs
            .iter()
            .map(|p| OutputRecord::of_file(p).map_err(CliError::io(p)))
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: plan.config.seed,
            seed_source: if plan.seed_from_flag { "flag" } else { "random" }.to_string(),
            config: plan.config.clone(),
            strengths: plan.strengths.clone(),
            reproduce_args: plan.reproduce_args(),
            started_at,
            finished_at: now(),
            outputs,
        };
        manifest.write(path).map_err(CliError::io(path))?;
    }
    Ok(())
}
