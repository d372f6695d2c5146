//! Experiment driver: reads a TOML run configuration, runs one experiment
//! and writes CSV tables plus a JSON manifest.

pub mod config;
mod experiments;
pub mod output;

use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<critgpc::Error> for CliError {
    fn from(e: critgpc::Error) -> Self {
        use critgpc::Error as E;
        match e {
            E::InvalidParameter { .. } | E::DegreeOverflow { .. } | E::NoBracket(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a finished run reports back; also written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: Experiment,
    pub version: &'static str,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub results: Value,
    pub artifacts: Vec<String>,
}

impl Report {
    /// Looks up a result by a `/`-separated path, e.g. `"critical/value"`
    /// or `"runs/0/trend"`.
    pub fn get(&self, path: &str) -> Option<&Value> {
        let pointer = format!("/{path}");
        self.results.pointer(&pointer)
    }

    pub fn f64(&self, path: &str) -> Option<f64> {
        self.get(path).and_then(Value::as_f64)
    }
}

/// Runs `experiment` with `config`, writing artifacts under `out_dir` (or
/// the config's `output_dir`, or `out/<experiment>`).
pub fn run(
    experiment: Experiment,
    config: &RunConfig,
    out_dir: Option<&Path>,
) -> Result<Report, CliError> {
    if let Some(declared) = config.experiment {
        if declared != experiment {
            return Err(CliError::Validation(format!(
                "experiment: config declares `{declared}` but `{experiment}` was requested"
            )));
        }
    }
    let dir: PathBuf = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    std::fs::create_dir_all(&dir)?;
    let mut sink = output::Sink::new(&dir);
    let start = Instant::now();
    let results = experiments::dispatch(experiment, config, &mut sink)?;
    let report = Report {
        experiment,
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        results,
        artifacts: sink.written().to_vec(),
    };
    sink.json("manifest.json", &report)?;
    Ok(report)
}

/// Configures the global rayon pool; only the first call has an effect.
pub fn set_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Err(CliError::Validation("threads: must be at least 1".into()));
    }
    // a second initialization fails harmlessly
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}
