//! JSON model configuration.
//!
//! ```json
//! {
//!   "n": 2, "m": 1, "N": 100,
//!   "G": [[1, 0.1], [0, 1]],
//!   "H": [[1, 0]],
//!   "Q": [[0.01, 0], [0, 0.01]],
//!   "R": [[1]],
//!   "x0": [0, 0],
//!   "process_penalty": {"kind": "l2"},
//!   "measurement_penalty": {"kind": "huber", "kappa": 1.0}
//! }
//! ```
//!
//! Each matrix is either one constant matrix (broadcast over all steps; a constant `G` is
//! used from step 2 on, step 1 being the identity) or a list of `N` per-step matrices.
//! Penalties are a single spec or a list of `N` specs.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use plq_smoother::penalty::rows_to_matrix;
use plq_smoother::{PenaltySpec, PlqPenalty, StateSpaceModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSeq {
    Constant(Vec<Vec<f64>>),
    PerStep(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PenaltySeq {
    One(PenaltySpec),
    PerStep(Vec<PenaltySpec>),
}

impl PenaltySeq {
    pub fn specs(&self) -> &[PenaltySpec] {
        match self {
            PenaltySeq::One(s) => std::slice::from_ref(s),
            PenaltySeq::PerStep(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(rename = "G")]
    pub g: MatrixSeq,
    #[serde(rename = "H")]
    pub h: MatrixSeq,
    #[serde(rename = "Q")]
    pub q: MatrixSeq,
    #[serde(rename = "R")]
    pub r: MatrixSeq,
    pub x0: Vec<f64>,
    pub process_penalty: PenaltySeq,
    pub measurement_penalty: PenaltySeq,
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    fn sequence(&self, name: &str, seq: &MatrixSeq, rows: usize, cols: usize) -> Result<Vec<DMatrix<f64>>, CliError> {
        let check = |label: String, m: DMatrix<f64>| {
            if m.shape() != (rows, cols) {
                return Err(CliError::Input(format!("{label} has shape {:?}, expected ({rows}, {cols})", m.shape())));
            }
            Ok(m)
        };
        match seq {
            MatrixSeq::Constant(m) => {
                let mat = check(name.to_string(), rows_to_matrix(name, m, None)?)?;
                Ok(vec![mat; self.horizon])
            }
            MatrixSeq::PerStep(list) => {
                if list.len() != self.horizon {
                    return Err(CliError::Input(format!("{name} lists {} matrices, N = {}", list.len(), self.horizon)));
                }
                list.iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let label = format!("{name}[{}]", k + 1);
                        check(label.clone(), rows_to_matrix(&label, m, None)?)
                    })
                    .collect()
            }
        }
    }

    pub fn model(&self) -> Result<StateSpaceModel, CliError> {
        let (n, m) = (self.n, self.m);
        if self.horizon == 0 {
            return Err(CliError::Input("N must be positive".into()));
        }
        if self.x0.len() != n {
            return Err(CliError::Input(format!("x0 has length {}, expected n = {n}", self.x0.len())));
        }
        let mut g = self.sequence("G", &self.g, n, n)?;
        if matches!(self.g, MatrixSeq::Constant(_)) {
            g[0] = DMatrix::identity(n, n);
        }
        let h = self.sequence("H", &self.h, m, n)?;
        let q = self.sequence("Q", &self.q, n, n)?;
        let r = self.sequence("R", &self.r, m, m)?;
        Ok(StateSpaceModel::new(g, h, q, r, DVector::from_column_slice(&self.x0))?)
    }

    pub fn process_penalties(&self) -> Result<Vec<PlqPenalty>, CliError> {
        resolve("process_penalty", &self.process_penalty, self.n, self.horizon)
    }

    pub fn measurement_penalties(&self) -> Result<Vec<PlqPenalty>, CliError> {
        resolve("measurement_penalty", &self.measurement_penalty, self.m, self.horizon)
    }

    /// True when every penalty is the plain L2 atom.
    pub fn is_quadratic(&self) -> bool {
        self.process_penalty.specs().iter().chain(self.measurement_penalty.specs()).all(|s| *s == PenaltySpec::L2)
    }
}

fn resolve(name: &str, seq: &PenaltySeq, dim: usize, horizon: usize) -> Result<Vec<PlqPenalty>, CliError> {
    let specs = seq.specs();
    if specs.len() != 1 && specs.len() != horizon {
        return Err(CliError::Input(format!("{name} lists {} penalties, expected 1 or N = {horizon}", specs.len())));
    }
    specs
        .iter()
        .enumerate()
        .map(|(k, s)| s.resolve(dim).map_err(|e| CliError::Input(format!("{name}[{}]: {e}", k + 1))))
        .collect()
}

/// Parses the short penalty syntax used on the command line: `l2`, `l1`, `l1:<scale>`,
/// `huber:<kappa>`, `vapnik:<epsilon>`.
pub fn parse_penalty_flag(text: &str) -> Result<PenaltySpec, CliError> {
    let (kind, param) = match text.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (text, None),
    };
    let value = |name: &str| -> Result<f64, CliError> {
        let p = param.ok_or_else(|| CliError::Input(format!("penalty '{text}' needs a {name}, e.g. {kind}:1.0")))?;
        p.parse().map_err(|_| CliError::Input(format!("penalty '{text}': cannot parse {name} '{p}'")))
    };
    let spec = match kind.to_ascii_lowercase().as_str() {
        "l2" => PenaltySpec::L2,
        "l1" => PenaltySpec::L1 { scale: if param.is_some() { value("scale")? } else { 1.0 } },
        "huber" => PenaltySpec::Huber { kappa: value("kappa")? },
        "vapnik" => PenaltySpec::Vapnik { epsilon: value("epsilon")? },
        other => return Err(CliError::Input(format!("unknown penalty kind '{other}' (l2, l1, huber, vapnik)"))),
    };
    if let Some(kind) = spec.atom_kind() {
        kind.validate()?;
    }
    Ok(spec)
}
