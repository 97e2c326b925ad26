//! Run configuration, one JSON document per run.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sublinear_core::nonlinear::{Ball, SolverOptions};
use sublinear_core::weights::{eval_weight, RegionMeta, WeightSpec};
use sublinear_core::{build_grid, BoundaryCondition, Geometry, Grid, ScalarField};

use crate::error::{CliError, CliResult};

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub bc: BoundaryCondition,
    pub geometry: Geometry,
    pub n_interior: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

/// Settings of the `deadcore` command.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeadCoreConfig {
    /// Ball for the barrier prediction.
    #[serde(default)]
    pub ball: Option<Ball>,
    /// δ values for the `b1 - δ b2` family.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Distance from `∂{b2 > 0}` defining the inner core.
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub weight: WeightSpec,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub q_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
    /// Sweep along a branch toward `q = 1` instead of a positivity sweep.
    #[serde(default)]
    pub branch: bool,
    #[serde(default)]
    pub region: Option<RegionMeta>,
    #[serde(default)]
    pub rho0: Option<f64>,
    /// Insist on the explicit radial conditions in `conditions`.
    #[serde(default)]
    pub explicit: bool,
    #[serde(default)]
    pub deadcore: Option<DeadCoreConfig>,
}

fn check_exponent(q: f64) -> CliResult<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("q = {q} must lie in (0, 1)")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(q) = self.q {
            check_exponent(q)?;
        }
        if let Some(grid) = &self.q_grid {
            for &q in grid {
                check_exponent(q)?;
            }
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats is empty".into()));
        }
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> CliResult<Grid> {
        build_grid(self.problem.geometry, self.problem.n_interior).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn weight_field(&self) -> CliResult<ScalarField> {
        let grid = self.grid()?;
        eval_weight(&self.weight, &grid).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn require_q(&self) -> CliResult<f64> {
        self.q.ok_or_else(|| CliError::Config("this command needs `q`".into()))
    }

    pub fn require_q_grid(&self) -> CliResult<&[f64]> {
        match &self.q_grid {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(CliError::Config("this command needs a nonempty `q_grid`".into())),
        }
    }

    /// Output directory after the environment override, created if needed.
    pub fn output_dir(&self) -> CliResult<PathBuf> {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| self.output.dir.clone());
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
