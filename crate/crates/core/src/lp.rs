//! Thin wrappers over `minilp` for the small LPs used by the cone checks.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Coefficients smaller than this are dropped when building constraints.
const COEF_EPS: f64 = 1e-15;

/// `max cᵀd  s.t.  rowsᵀ d <= 0 (one row per column of `cone_rows`), -1 <= d <= 1`.
///
/// `cone_rows` is `dim × k`: column `i` gives the constraint `⟨col_i, d⟩ <= 0`.
pub(crate) fn max_over_boxed_cone(c: &DVector<f64>, cone_rows: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let dim = c.len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..dim).map(|j| lp.add_var(c[j], (-1.0, 1.0))).collect();
    for col in cone_rows.column_iter() {
        let expr: Vec<_> =
            col.iter().enumerate().filter(|(_, v)| v.abs() > COEF_EPS).map(|(j, &v)| (vars[j], v)).collect();
        if !expr.is_empty() {
            lp.add_constraint(expr.as_slice(), ComparisonOp::Le, 0.0);
        }
    }
    let sol = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    let d = DVector::from_iterator(dim, vars.iter().map(|v| sol[*v]));
    Ok((sol.objective(), d))
}

/// A point of `{u : Aᵀu <= a}` that is as deep inside as possible, with the depth capped
/// at one. Returns `(u, depth)`; `None` when the polyhedron is empty.
///
/// `a_mat` is `dim_u × n_constraints`.
pub(crate) fn deep_interior_point(a_mat: &DMatrix<f64>, a_rhs: &DVector<f64>) -> Result<Option<(DVector<f64>, f64)>> {
    let dim = a_mat.nrows();
    if a_mat.ncols() == 0 {
        return Ok(Some((DVector::zeros(dim), 1.0)));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let u: Vec<_> = (0..dim).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let depth = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for (i, col) in a_mat.column_iter().enumerate() {
        let norm = col.norm();
        let mut expr: Vec<_> =
            col.iter().enumerate().filter(|(_, v)| v.abs() > COEF_EPS).map(|(j, &v)| (u[j], v)).collect();
        expr.push((depth, norm));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, a_rhs[i]);
    }
    match lp.solve() {
        Ok(sol) => {
            let point = DVector::from_iterator(dim, u.iter().map(|v| sol[*v]));
            let t = sol[depth];
            // Negative depth means every point violates some constraint.
            if t < -1e-9 {
                Ok(None)
            } else {
                Ok(Some((point, t)))
            }
        }
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Lp(e.to_string())),
    }
}
