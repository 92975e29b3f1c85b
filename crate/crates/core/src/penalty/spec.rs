use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AtomKind, PlqPenalty};
use crate::error::{invalid, Result};

fn one() -> f64 {
    1.0
}

/// Penalty description as it appears in configuration files.
///
/// ```json
/// {"kind": "huber", "kappa": 1.0}
/// {"kind": "plq", "A": [[1, -1]], "a": [1, 0], "M": [[0]], "b": [0], "B": [[1]]}
/// ```
///
/// Atom specs apply coordinatewise; a `plq` spec must match the target dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PenaltySpec {
    L2,
    L1 {
        #[serde(default = "one")]
        scale: f64,
    },
    Huber {
        kappa: f64,
    },
    Vapnik {
        epsilon: f64,
    },
    Plq(RawPenaltySpec),
}

/// Raw `(A, a, M, b, B)` data, matrices given row by row. `A` has `dim_u` rows (or is
/// empty when there are no constraints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPenaltySpec {
    #[serde(rename = "A", default)]
    pub a_mat: Vec<Vec<f64>>,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(rename = "B")]
    pub b_mat: Vec<Vec<f64>>,
}

impl PenaltySpec {
    pub fn atom_kind(&self) -> Option<AtomKind> {
        match *self {
            PenaltySpec::L2 => Some(AtomKind::L2),
            PenaltySpec::L1 { scale } => Some(AtomKind::L1 { scale }),
            PenaltySpec::Huber { kappa } => Some(AtomKind::Huber { kappa }),
            PenaltySpec::Vapnik { epsilon } => Some(AtomKind::Vapnik { epsilon }),
            PenaltySpec::Plq(_) => None,
        }
    }

    /// Builds the penalty acting on `R^dim`.
    pub fn resolve(&self, dim: usize) -> Result<PlqPenalty> {
        match self {
            PenaltySpec::Plq(raw) => {
                let p = raw.build()?;
                if p.dim_y() != dim {
                    return Err(invalid(format!("plq penalty acts on R^{}, expected R^{dim}", p.dim_y())));
                }
                Ok(p)
            }
            atom => PlqPenalty::replicated(atom.atom_kind().expect("atom spec"), dim),
        }
    }
}

impl From<AtomKind> for PenaltySpec {
    fn from(kind: AtomKind) -> Self {
        match kind {
            AtomKind::L2 => PenaltySpec::L2,
            AtomKind::L1 { scale } => PenaltySpec::L1 { scale },
            AtomKind::Huber { kappa } => PenaltySpec::Huber { kappa },
            AtomKind::Vapnik { epsilon } => PenaltySpec::Vapnik { epsilon },
        }
    }
}

impl RawPenaltySpec {
    pub fn build(&self) -> Result<PlqPenalty> {
        let m = rows_to_matrix("M", &self.m, None)?;
        let dim_u = m.nrows();
        let a_mat = if self.a_mat.iter().all(|r| r.is_empty()) {
            DMatrix::zeros(dim_u, 0)
        } else {
            rows_to_matrix("A", &self.a_mat, None)?
        };
        let b_mat = rows_to_matrix("B", &self.b_mat, None)?;
        PlqPenalty::new(a_mat, DVector::from_vec(self.a.clone()), m, DVector::from_vec(self.b.clone()), b_mat)
    }
}

/// Converts a row-major nested list into a matrix, checking that rows are rectangular.
pub fn rows_to_matrix(name: &str, rows: &[Vec<f64>], ncols: Option<usize>) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let cols = ncols.or_else(|| rows.first().map(|r| r.len())).unwrap_or(0);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(invalid(format!("{name}: row {} has {} entries, expected {cols}", i + 1, r.len())));
        }
    }
    Ok(DMatrix::from_row_iterator(nrows, cols, rows.iter().flatten().copied()))
}
