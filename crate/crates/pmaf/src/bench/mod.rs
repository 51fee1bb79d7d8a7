//! Desk-scale experiment runner behind the `pmaf` binary: solver
//! comparison statistics, eigensolver precision sweeps, backward-pass
//! efficiency, the 2x2 case-study trace export, and the
//! finite-difference gradient audit.

mod experiments;
mod report;

pub use experiments::{
    case_study_instance, case_study_methods, less_method_rows, run, RunOutcome,
};
pub use report::Report;

use crate::{Error, Precision, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Solver-variant statistics against the high-precision reference.
    LessCompare,
    /// Eigensolver precision sweep (power/simultaneous iteration vs the
    /// Jacobi reference).
    IedPrecision,
    /// Exploited vs materialized backward timing and allocation.
    BackwardBench,
    /// Per-iteration trace export for one 2x2 instance across methods.
    CaseStudy,
    /// Finite-difference audit of every backward pass.
    GradCheck,
}

/// Problem size; square sizes in [`Experiment::BackwardBench`] select the
/// eigen rows, rectangular ones the least-squares rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Size {
    pub m: usize,
    pub n: usize,
}

impl std::str::FromStr for Size {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (m, n) = s
            .split_once('x')
            .ok_or_else(|| Error::Config(format!("size `{s}` is not of the form MxN")))?;
        let parse = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad size component `{v}`")))
        };
        Ok(Size {
            m: parse(m)?,
            n: parse(n)?,
        })
    }
}

impl std::fmt::Display for Size {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

/// Full experiment configuration; serialized as the reproducibility
/// sidecar next to the CSV output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sizes: Vec<Size>,
    pub n_samples: usize,
    pub seed: u64,
    pub precision: Precision,
    /// CSV destination; stdout when absent.
    pub output_path: Option<PathBuf>,
    /// Also write `<output>.config.json`.
    pub sidecar: bool,
    pub workers: usize,
    /// Budget for materialized-tensor paths, in bytes.
    pub byte_budget: u64,
    /// Sample symmetric (vs plain nonsymmetric) eigen instances.
    pub symmetric: bool,
    /// Eigensolver tolerance; `None` picks a precision-appropriate value.
    pub ied_tol: Option<f64>,
    pub ied_max_iters: usize,
    /// Extra solver configuration traced as a `custom` method row by the
    /// case study when set.
    #[serde(default)]
    pub custom_method: Option<crate::less::LessConfig>,
    /// Case-study instance override (`a` row major, then `b`).
    #[serde(default)]
    pub instance: Option<(Vec<Vec<f64>>, Vec<f64>)>,
    /// Test hook: corrupt one analytic gradient entry so the audit must
    /// fail.
    #[serde(default)]
    pub corrupt_gradients: bool,
}

pub const DEFAULT_BYTE_BUDGET: u64 = 2 * 1024 * 1024 * 1024;

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        let sizes = match experiment {
            Experiment::LessCompare => vec![Size { m: 2, n: 2 }, Size { m: 64, n: 32 }],
            Experiment::IedPrecision => vec![
                Size { m: 32, n: 32 },
                Size { m: 64, n: 64 },
                Size { m: 128, n: 128 },
            ],
            Experiment::BackwardBench => vec![Size { m: 8, n: 64 }, Size { m: 512, n: 512 }],
            Experiment::CaseStudy => vec![Size { m: 2, n: 2 }],
            Experiment::GradCheck => vec![
                Size { m: 4, n: 3 },
                Size { m: 8, n: 4 },
                Size { m: 8, n: 8 },
            ],
        };
        let n_samples = match experiment {
            Experiment::LessCompare => 1000,
            Experiment::IedPrecision => 5,
            Experiment::BackwardBench => 100,
            Experiment::CaseStudy => 1,
            Experiment::GradCheck => 20,
        };
        Self {
            experiment,
            sizes,
            n_samples,
            seed: 7,
            precision: Precision::F64,
            output_path: None,
            sidecar: false,
            workers: 1,
            byte_budget: DEFAULT_BYTE_BUDGET,
            symmetric: true,
            ied_tol: None,
            ied_max_iters: 1000,
            custom_method: None,
            instance: None,
            corrupt_gradients: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("at least one size is required".to_string()));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".to_string()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".to_string()));
        }
        Ok(())
    }
}
