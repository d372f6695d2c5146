use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use critgpc::gpc_kg::{DEFAULT_LOCUS_SAMPLES, DEFAULT_SNAPSHOTS};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KgRun,
    KgCritical,
    KgGpc,
    SgRun,
    SgBisect,
    SgGpcV,
    SgGpcHermite,
    SgGpcEps,
    Convergence,
    MeanCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::KgRun,
        Experiment::KgCritical,
        Experiment::KgGpc,
        Experiment::SgRun,
        Experiment::SgBisect,
        Experiment::SgGpcV,
        Experiment::SgGpcHermite,
        Experiment::SgGpcEps,
        Experiment::Convergence,
        Experiment::MeanCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::KgRun => "kg-run",
            Experiment::KgCritical => "kg-critical",
            Experiment::KgGpc => "kg-gpc",
            Experiment::SgRun => "sg-run",
            Experiment::SgBisect => "sg-bisect",
            Experiment::SgGpcV => "sg-gpc-v",
            Experiment::SgGpcHermite => "sg-gpc-hermite",
            Experiment::SgGpcEps => "sg-gpc-eps",
            Experiment::Convergence => "convergence",
            Experiment::MeanCompare => "mean-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Validation(format!("unknown experiment `{s}`")))
    }
}

/// One experiment's settings. Sections not used by the experiment keep
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must agree with the experiment named on the command line.
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub kg: KgSection,
    #[serde(default)]
    pub gpc_kg: GpcKgSection,
    #[serde(default)]
    pub sg: SgSection,
    #[serde(default)]
    pub bisect: BisectSection,
    #[serde(default)]
    pub chaos: ChaosSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KgSection {
    pub m: usize,
    /// Strengths for `kg-run`, one run each.
    pub eta: Vec<f64>,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub record_interval: f64,
    pub linearized_sg: bool,
    /// Grid orders for `kg-critical`.
    pub m_values: Vec<usize>,
    /// Cross-check the eigenvalue route by energy bisection (costly for
    /// large m).
    pub evolution_check: bool,
    pub evolution_t_final: f64,
    pub evolution_tol: f64,
    /// Potential locations reported by the analytic oracles.
    pub alphas: Vec<f64>,
}

impl Default for KgSection {
    fn default() -> Self {
        KgSection {
            m: 63,
            eta: vec![1.004332],
            t_final: 100.0,
            dt: None,
            record_interval: 1.0,
            linearized_sg: false,
            m_values: vec![31, 63, 127, 255],
            evolution_check: false,
            evolution_t_final: 1000.0,
            evolution_tol: 1e-8,
            alphas: vec![0.0, 0.5, -0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpcKgSection {
    pub n_order: usize,
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub snapshots: Vec<f64>,
    pub locus_samples: usize,
    /// Rows written per locus table.
    pub locus_output_points: usize,
    /// Monte Carlo samples for the locus comparison; 0 skips it.
    pub mc_samples: usize,
    /// Final time for `mean-compare`.
    pub t_mean: f64,
    pub n_quad: usize,
    /// Sample counts `M` for the Monte Carlo error sweep.
    pub mc_sweep: Vec<usize>,
}

impl Default for GpcKgSection {
    fn default() -> Self {
        GpcKgSection {
            n_order: 80,
            a: 0.95,
            b: 1.05,
            m: 63,
            snapshots: DEFAULT_SNAPSHOTS.to_vec(),
            locus_samples: DEFAULT_LOCUS_SAMPLES,
            locus_output_points: 2001,
            mc_samples: 0,
            t_mean: 100.0,
            n_quad: 50,
            mc_sweep: (0..6).map(|j| 500 << j).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgSection {
    /// Kink velocities for `sg-run`; the first is also the fixed velocity
    /// of the amplitude experiments.
    pub velocity: Vec<f64>,
    pub epsilon: f64,
    pub half_length: f64,
    pub x0: f64,
    pub m: usize,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub sample_interval: f64,
}

impl Default for SgSection {
    fn default() -> Self {
        SgSection {
            velocity: vec![0.1],
            epsilon: 0.5,
            half_length: 8.0,
            x0: -6.0,
            m: 127,
            dt: None,
            t_final: 600.0,
            sample_interval: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BisectParameter {
    Velocity,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BisectSection {
    pub parameter: BisectParameter,
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Default for BisectSection {
    fn default() -> Self {
        BisectSection {
            parameter: BisectParameter::Velocity,
            lo: 0.1,
            hi: 0.2,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosSection {
    pub n_order: usize,
    pub n_quad: usize,
    #[serde(rename = "Va")]
    pub va: f64,
    #[serde(rename = "Vb")]
    pub vb: f64,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    /// Run an amplitude bisection over `[eps_a, eps_b]` next to the chaos
    /// estimate in `sg-gpc-eps`.
    pub cross_check: bool,
    pub cross_check_tol: f64,
}

impl Default for ChaosSection {
    fn default() -> Self {
        ChaosSection {
            n_order: 14,
            n_quad: 30,
            va: 0.1215,
            vb: 0.121757,
            mu: 0.12,
            sigma: 0.01,
            alpha: 0.11,
            beta: 0.13,
            eps_a: 0.495,
            eps_b: 0.4975,
            cross_check: false,
            cross_check_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Discrete critical strength over grid orders.
    CriticalEta,
    /// Monte Carlo mean error over sample counts.
    McError,
    /// Discrete delta mass over grid orders.
    DeltaMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            kind: SweepKind::CriticalEta,
            values: vec![31.0, 63.0, 127.0, 255.0],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
