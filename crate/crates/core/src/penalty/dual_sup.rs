//! Generic evaluation of `θ_{U,M}(w) = sup_{u ∈ U} ⟨u, w⟩ - ½ uᵀMu` for one block.
//!
//! Primal-dual barrier iterations on the concave QP
//!
//! ```text
//! max wᵀu - ½ uᵀMu   s.t.  Aᵀu + s = a,  s >= 0
//! ```
//!
//! with the barrier target reduced by a factor 10 per step and termination once the
//! duality measure `sᵀq / ℓ` drops below `1e-10`.

use nalgebra::{DMatrix, DVector};

use super::{recession_ascent, TOL_LP, TOL_PSD};
use crate::error::{Error, Result};
use crate::linalg::psd_null_space;

const MU_REDUCE: f64 = 0.1;
const DUALITY_TOL: f64 = 1e-10;
const STEP_FRAC: f64 = 0.995;
const MAX_ITER: usize = 200;

pub(super) fn sup_quadratic(
    m: &DMatrix<f64>,
    a_mat: &DMatrix<f64>,
    a_rhs: &DVector<f64>,
    w: &DVector<f64>,
    start: &DVector<f64>,
    degenerate: bool,
) -> Result<f64> {
    let null = psd_null_space(m, TOL_PSD);
    if recession_ascent(&null, a_mat, w)? > TOL_LP * w.amax().max(1.0) {
        return Err(Error::UnboundedPenalty);
    }

    // Flat directions (Null(M) ∩ U^∞ ≠ {0}) leave the barrier problem without a
    // maximizer; a far-away box restores compactness without moving the supremum.
    let (a_mat, a_rhs) = if degenerate {
        let dim = m.nrows();
        let radius = 1e4 * (1.0 + w.amax() + a_rhs.amax() + start.amax());
        let mut a_box = DMatrix::zeros(dim, a_mat.ncols() + 2 * dim);
        a_box.view_mut((0, 0), a_mat.shape()).copy_from(a_mat);
        let mut rhs = DVector::from_element(a_box.ncols(), radius);
        rhs.rows_mut(0, a_rhs.len()).copy_from(a_rhs);
        for i in 0..dim {
            a_box[(i, a_mat.ncols() + 2 * i)] = 1.0;
            a_box[(i, a_mat.ncols() + 2 * i + 1)] = -1.0;
        }
        (a_box, rhs)
    } else {
        (a_mat.clone(), a_rhs.clone())
    };

    let value = |u: &DVector<f64>| w.dot(u) - 0.5 * u.dot(&(m * u));

    let n_con = a_mat.ncols();
    if n_con == 0 {
        let u = m.clone().cholesky().ok_or(Error::UnboundedPenalty)?.solve(w);
        return Ok(value(&u));
    }

    let mut u = start.clone();
    let mut s = &a_rhs - a_mat.tr_mul(&u);
    for si in s.iter_mut() {
        if *si <= 1e-8 {
            *si = si.max(1.0);
        }
    }
    let mut q = DVector::from_element(n_con, 1.0);
    let scale = 1.0 + w.amax() + a_rhs.amax();

    for _ in 0..MAX_ITER {
        let r_dual = w - m * &u - &a_mat * &q;
        let r_prim = a_mat.tr_mul(&u) + &s - &a_rhs;
        let gap = s.dot(&q) / n_con as f64;
        if gap <= DUALITY_TOL && r_dual.amax() <= 1e-10 * scale && r_prim.amax() <= 1e-10 * scale {
            break;
        }
        let target = MU_REDUCE * gap;
        let r_comp = q.component_mul(&s).add_scalar(-target);

        let ratio = q.component_div(&s);
        let t = m + &a_mat * DMatrix::from_diagonal(&ratio) * a_mat.transpose();
        let corr = (q.component_mul(&r_prim) - &r_comp).component_div(&s);
        let rhs = &r_dual - &a_mat * corr;
        let du = match t.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => t.lu().solve(&rhs).ok_or(Error::UnboundedPenalty)?,
        };
        let ds = -&r_prim - a_mat.tr_mul(&du);
        let dq = (-&r_comp - q.component_mul(&ds)).component_div(&s);

        let alpha = (STEP_FRAC * max_step(&s, &ds).min(max_step(&q, &dq))).min(1.0);
        u += alpha * du;
        s += alpha * ds;
        q += alpha * dq;
    }
    Ok(value(&u))
}

/// Largest `α` keeping `v + α dv >= 0` (infinite when `dv >= 0`).
pub(crate) fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter().zip(dv.iter()).filter(|(_, &d)| d < 0.0).map(|(&x, &d)| -x / d).fold(f64::INFINITY, f64::min)
}
