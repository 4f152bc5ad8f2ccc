//! Run configuration shared by every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::poisson::SolverOptions;
use crate::torsion::BundleOptions;
use crate::variation::FdSteps;
use crate::verify::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    /// Grid spacing for single-resolution commands.
    pub grid: f64,
    /// Strictly decreasing grid spacings for convergence studies.
    pub ladder: Vec<f64>,
    pub nodes: usize,
    pub solver_tolerance: f64,
    pub fd_first: f64,
    pub fd_second: f64,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Arguments the run was started with.
    pub command: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        let fd = FdSteps::default();
        Self {
            grid: 1.0 / 128.0,
            ladder: vec![],
            nodes: 256,
            solver_tolerance: SolverOptions::default().tolerance,
            fd_first: fd.first,
            fd_second: fd.second,
            tolerances: Tolerances::default(),
            seed: 0,
            out: None,
            format: Format::Json,
            command: vec![],
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("grid", self.grid)?;
        positive("solver tolerance", self.solver_tolerance)?;
        positive("first-order step", self.fd_first)?;
        positive("second-order step", self.fd_second)?;
        if let Value::Object(map) = serde_json::to_value(self.tolerances)? {
            for (name, v) in map {
                positive(&format!("tolerance {name}"), v.as_f64().unwrap_or(f64::NAN))?;
            }
        }
        for &d in &self.ladder {
            positive("ladder spacing", d)?;
        }
        if self.ladder.windows(2).any(|p| p[1] >= p[0]) {
            return Err(Error::InvalidArgument(format!(
                "resolution ladder must be strictly decreasing, got {:?}",
                self.ladder
            )));
        }
        Ok(())
    }

    /// Reads a (possibly partial) tolerance table; missing entries keep
    /// their defaults and unknown names are rejected.
    pub fn load_tolerances(path: &Path) -> Result<Tolerances> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn bundle_options(&self) -> BundleOptions {
        let mut options = BundleOptions::default();
        options.solver.tolerance = self.solver_tolerance;
        options.solver.target = options.solver.target.min(self.solver_tolerance);
        options
    }

    pub fn fd_steps(&self) -> FdSteps {
        FdSteps {
            first: self.fd_first,
            second: self.fd_second,
        }
    }

    /// Grid spacings a command should run at: the ladder when given,
    /// otherwise the single grid.
    pub fn grids(&self) -> Vec<f64> {
        if self.ladder.is_empty() {
            vec![self.grid]
        } else {
            self.ladder.clone()
        }
    }
}
