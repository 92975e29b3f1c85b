use std::path::{Path, PathBuf};

use plq_smoother::SolverOptions;
use serde::Serialize;

use crate::{CliError, Oracle};

/// Wall-clock milliseconds per phase of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Phases {
    pub parse_ms: f64,
    pub build_ms: f64,
    pub solve_ms: f64,
    pub write_ms: f64,
}

/// Summary written next to the output of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub options: SolverOptions,
    pub oracle: Oracle,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub final_residual: f64,
    pub final_mu: f64,
    pub total_ms: f64,
    pub phases: Phases,
}

impl RunReport {
    /// `<output>.report.json`
    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".report.json");
        PathBuf::from(s)
    }

    pub fn write(&self, output: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_for(output);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
