//! Residual and Newton step computed step by step, never forming stacked matrices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{Direction, IpIterate, KktResidual, KktSystem};
use crate::error::{Error, Result};
use crate::linalg::{phi_from_weights, symmetrize};
use crate::model::{SmootherProblem, StepLayout};
use crate::penalty::PlqPenalty;

pub(super) struct Structured<'a> {
    pub problem: &'a SmootherProblem,
}

impl KktSystem for Structured<'_> {
    fn residual(&self, it: &IpIterate) -> Result<KktResidual> {
        kkt_residual(self.problem, it)
    }

    fn direction(&self, it: &IpIterate, res: &KktResidual) -> Result<Direction> {
        direction(self.problem, it, res)
    }
}

/// Relaxed KKT residual `F_μ` at `it` (with `μ = it.mu`), in `O(N)` block operations.
pub fn kkt_residual(p: &SmootherProblem, it: &IpIterate) -> Result<KktResidual> {
    it.check_shape(p)?;
    let n = p.n;
    let big_n = p.horizon;
    let mut r = KktResidual {
        primal_w: DVector::zeros(p.n_cw),
        primal_v: DVector::zeros(p.n_cv),
        comp_w: it.q_w.component_mul(&it.s_w).add_scalar(-it.mu),
        comp_v: it.q_v.component_mul(&it.s_v).add_scalar(-it.mu),
        dual_w: DVector::zeros(p.dim_uw),
        dual_v: DVector::zeros(p.dim_uv),
        stat_x: DVector::zeros(p.dim_x()),
    };
    let mut gx = DVector::zeros(n);
    let mut tmp = DVector::zeros(n);

    for k in 0..big_n {
        let (lw, lv) = (&p.w_layout[k], &p.v_layout[k]);
        let (pw, pv) = (&*p.process[k], &*p.measurement[k]);
        let (cw, cv) = (&lw.constraints, &lv.constraints);
        let uw = it.u_w.rows(lw.u.start, lw.u.len());
        let uv = it.u_v.rows(lv.u.start, lv.u.len());
        let xk = it.x.rows(k * n, n);

        // F1, F2 = Aᵀu + s - a
        let mut f1 = r.primal_w.rows_mut(cw.start, cw.len());
        f1.copy_from(&it.s_w.rows(cw.start, cw.len()));
        f1 -= pw.constraint_rhs();
        f1.gemv_tr(1.0, pw.constraint_matrix(), &uw, 1.0);
        let mut f2 = r.primal_v.rows_mut(cv.start, cv.len());
        f2.copy_from(&it.s_v.rows(cv.start, cv.len()));
        f2 -= pv.constraint_rhs();
        f2.gemv_tr(1.0, pv.constraint_matrix(), &uv, 1.0);

        // F5 = b̃ʷ + Bʷ Q^{-1/2} G x - Mʷuʷ - Aʷqʷ
        gx.copy_from(&xk);
        if k > 0 {
            gx.gemv(-1.0, &p.transitions[k], &it.x.rows((k - 1) * n, n), 1.0);
        }
        let mut f5 = r.dual_w.rows_mut(lw.u.start, lw.u.len());
        f5.copy_from(&p.b_tilde_w[k]);
        f5.gemv(1.0, &p.proc_map[k], &gx, 1.0);
        f5.gemv(-1.0, pw.quad(), &uw, 1.0);
        f5.gemv(-1.0, pw.constraint_matrix(), &it.q_w.rows(cw.start, cw.len()), 1.0);

        // F6 = b̃ᵛ - Bᵛ R^{-1/2} H x - Mᵛuᵛ - Aᵛqᵛ
        let mut f6 = r.dual_v.rows_mut(lv.u.start, lv.u.len());
        f6.copy_from(&p.b_tilde_v[k]);
        f6.gemv(-1.0, &p.meas_map[k], &xk, 1.0);
        f6.gemv(-1.0, pv.quad(), &uv, 1.0);
        f6.gemv(-1.0, pv.constraint_matrix(), &it.q_v.rows(cv.start, cv.len()), 1.0);

        let mut f7 = r.stat_x.rows_mut(k * n, n);
        f7.gemv_tr(1.0, &p.proc_map[k], &uw, 0.0);
        f7.gemv_tr(-1.0, &p.meas_map[k], &uv, 1.0);
        if k + 1 < big_n {
            let next = &p.w_layout[k + 1];
            tmp.gemv_tr(1.0, &p.proc_map[k + 1], &it.u_w.rows(next.u.start, next.u.len()), 0.0);
            f7.gemv_tr(-1.0, &p.transitions[k + 1], &tmp, 1.0);
        }
    }
    Ok(r)
}

/// Exact Newton direction for `F_μ` at `it`.
///
/// Errors with [`Error::DegeneratePenalty`] when a per-step `T` block cannot be
/// factorized and with [`Error::NotSpd`] when the reduced system is not positive definite.
pub fn newton_step(p: &SmootherProblem, it: &IpIterate) -> Result<Direction> {
    let res = kkt_residual(p, it)?;
    direction(p, it, &res)
}

/// Per-step elimination data of one penalty family.
struct Reduced {
    /// Cholesky factor of `T_k`.
    t_chol: Vec<Cholesky<f64, Dyn>>,
    /// `F̃ = F_dual - A S⁻¹(Q F_primal - F_comp)`, laid out like `u`.
    f_tilde: DVector<f64>,
    /// `Mapᵀ T⁻¹ Map`
    omega: Vec<DMatrix<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn reduce(
    which: &'static str,
    penalties: &[std::sync::Arc<PlqPenalty>],
    layout: &[StepLayout],
    maps: &[DMatrix<f64>],
    q: &DVector<f64>,
    s: &DVector<f64>,
    primal: &DVector<f64>,
    comp: &DVector<f64>,
    dual: &DVector<f64>,
) -> Result<Reduced> {
    let steps = penalties.len();
    let mut out =
        Reduced { t_chol: Vec::with_capacity(steps), f_tilde: dual.clone(), omega: Vec::with_capacity(steps) };
    let mut t_inv_map = DMatrix::zeros(0, 0);
    for k in 0..steps {
        let pen = &*penalties[k];
        let lay = &layout[k];
        let a = pen.constraint_matrix();

        let mut t = pen.quad().clone();
        let mut f_tilde = out.f_tilde.rows_mut(lay.u.start, lay.u.len());
        for (j, i) in lay.constraints.clone().enumerate() {
            let col = a.column(j);
            t.ger(q[i] / s[i], &col, &col, 1.0);
            f_tilde.axpy(-(q[i] * primal[i] - comp[i]) / s[i], &col, 1.0);
        }
        symmetrize(&mut t);
        let chol = t
            .cholesky()
            .filter(|c| {
                let l = c.l_dirty();
                (0..l.nrows()).all(|i| l[(i, i)].is_finite() && l[(i, i)] > 0.0)
            })
            .ok_or(Error::DegeneratePenalty { which, step: k + 1 })?;

        if t_inv_map.shape() == maps[k].shape() {
            t_inv_map.copy_from(&maps[k]);
        } else {
            t_inv_map = maps[k].clone();
        }
        chol.solve_mut(&mut t_inv_map);
        let mut omega = maps[k].tr_mul(&t_inv_map);
        symmetrize(&mut omega);

        out.t_chol.push(chol);
        out.omega.push(omega);
    }
    Ok(out)
}

/// `T⁻¹ v` for every step, with `v` laid out like `u`.
fn solve_blocks(t_chol: &[Cholesky<f64, Dyn>], layout: &[StepLayout], v: &mut DVector<f64>) {
    for (chol, lay) in t_chol.iter().zip(layout) {
        chol.solve_mut(&mut v.rows_mut(lay.u.start, lay.u.len()));
    }
}

fn direction(p: &SmootherProblem, it: &IpIterate, res: &KktResidual) -> Result<Direction> {
    let n = p.n;
    let big_n = p.horizon;
    let w = reduce(
        "process",
        &p.process,
        &p.w_layout,
        &p.proc_map,
        &it.q_w,
        &it.s_w,
        &res.primal_w,
        &res.comp_w,
        &res.dual_w,
    )?;
    let v = reduce(
        "measurement",
        &p.measurement,
        &p.v_layout,
        &p.meas_map,
        &it.q_v,
        &it.s_v,
        &res.primal_v,
        &res.comp_v,
        &res.dual_v,
    )?;

    // Φ Δx = -F7 - Cʷᵀ Tʷ⁻¹ F̃5 + Cᵛᵀ Tᵛ⁻¹ F̃6
    let mut yw = w.f_tilde.clone();
    solve_blocks(&w.t_chol, &p.w_layout, &mut yw);
    let mut yv = v.f_tilde.clone();
    solve_blocks(&v.t_chol, &p.v_layout, &mut yv);
    let mut rhs = -&res.stat_x;
    let mut tmp = DVector::zeros(n);
    for k in 0..big_n {
        let (lw, lv) = (&p.w_layout[k], &p.v_layout[k]);
        let mut blk = rhs.rows_mut(k * n, n);
        blk.gemv_tr(-1.0, &p.proc_map[k], &yw.rows(lw.u.start, lw.u.len()), 1.0);
        if k + 1 < big_n {
            let next = &p.w_layout[k + 1];
            tmp.gemv_tr(1.0, &p.proc_map[k + 1], &yw.rows(next.u.start, next.u.len()), 0.0);
            blk.gemv_tr(1.0, &p.transitions[k + 1], &tmp, 1.0);
        }
        blk.gemv_tr(1.0, &p.meas_map[k], &yv.rows(lv.u.start, lv.u.len()), 1.0);
    }
    let dx = phi_from_weights(&p.transitions, w.omega, v.omega).into_factor()?.solve(&rhs);

    // Δuʷ = Tʷ⁻¹(F̃5 + Cʷ Δx), Δuᵛ = Tᵛ⁻¹(F̃6 - Cᵛ Δx)
    let mut u_w = w.f_tilde;
    let mut u_v = v.f_tilde;
    for k in 0..big_n {
        tmp.copy_from(&dx.rows(k * n, n));
        if k > 0 {
            tmp.gemv(-1.0, &p.transitions[k], &dx.rows((k - 1) * n, n), 1.0);
        }
        let (lw, lv) = (&p.w_layout[k], &p.v_layout[k]);
        u_w.rows_mut(lw.u.start, lw.u.len()).gemv(1.0, &p.proc_map[k], &tmp, 1.0);
        u_v.rows_mut(lv.u.start, lv.u.len()).gemv(-1.0, &p.meas_map[k], &dx.rows(k * n, n), 1.0);
    }
    solve_blocks(&w.t_chol, &p.w_layout, &mut u_w);
    solve_blocks(&v.t_chol, &p.v_layout, &mut u_v);

    let (s_w, q_w) = back_substitute(&p.process, &p.w_layout, &u_w, &it.q_w, &it.s_w, &res.primal_w, &res.comp_w);
    let (s_v, q_v) = back_substitute(&p.measurement, &p.v_layout, &u_v, &it.q_v, &it.s_v, &res.primal_v, &res.comp_v);
    Ok(Direction { x: dx, u_w, u_v, q_w, s_w, q_v, s_v })
}

/// `Δs = -F_primal - AᵀΔu`, `Δq = (-F_comp - q ∘ Δs) / s`.
fn back_substitute(
    penalties: &[std::sync::Arc<PlqPenalty>],
    layout: &[StepLayout],
    du: &DVector<f64>,
    q: &DVector<f64>,
    s: &DVector<f64>,
    primal: &DVector<f64>,
    comp: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let mut ds = DVector::zeros(q.len());
    let mut dq = DVector::zeros(q.len());
    for (pen, lay) in penalties.iter().zip(layout) {
        let a = pen.constraint_matrix();
        let du_k = du.rows(lay.u.start, lay.u.len());
        for (j, i) in lay.constraints.clone().enumerate() {
            ds[i] = -primal[i] - a.column(j).dot(&du_k);
            dq[i] = (-comp[i] - q[i] * ds[i]) / s[i];
        }
    }
    (ds, dq)
}
