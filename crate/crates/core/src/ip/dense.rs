//! Dense reference formulation: stacked matrices, full Jacobian, LU solve.

use nalgebra::{DMatrix, DVector};

use super::{run, Direction, IpIterate, KktResidual, KktSystem, SmootherResult, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::block_diag;
use crate::model::SmootherProblem;

/// Largest `n N` accepted by the dense path.
pub const DENSE_MAX_DIM: usize = 200;

/// Stacked operators of the smoothing problem.
struct DenseKkt {
    a_w: DMatrix<f64>,
    a_v: DMatrix<f64>,
    rhs_w: DVector<f64>,
    rhs_v: DVector<f64>,
    m_w: DMatrix<f64>,
    m_v: DMatrix<f64>,
    /// `Bʷ Q^{-1/2} G`
    c_w: DMatrix<f64>,
    /// `Bᵛ R^{-1/2} H`
    c_v: DMatrix<f64>,
    bt_w: DVector<f64>,
    bt_v: DVector<f64>,
}

fn stacked(blocks: impl Iterator<Item = DMatrix<f64>>) -> DMatrix<f64> {
    let owned: Vec<DMatrix<f64>> = blocks.collect();
    block_diag(&owned.iter().collect::<Vec<_>>())
}

fn stack_vec(parts: impl Iterator<Item = DVector<f64>>) -> DVector<f64> {
    let v: Vec<f64> = parts.flat_map(|p| p.iter().copied().collect::<Vec<_>>()).collect();
    DVector::from_vec(v)
}

impl DenseKkt {
    fn new(p: &SmootherProblem) -> Result<Self> {
        let (n, big_n) = (p.state_dim(), p.horizon());
        let dim = n * big_n;
        if dim > DENSE_MAX_DIM {
            return Err(invalid(format!("dense reference solver is limited to n N <= {DENSE_MAX_DIM}, got {dim}")));
        }
        let steps = 0..big_n;
        let proc = |k: usize| p.process_penalty(k);
        let meas = |k: usize| p.measurement_penalty(k);

        let mut g = DMatrix::identity(dim, dim);
        for k in 1..big_n {
            g.view_mut((k * n, (k - 1) * n), (n, n)).copy_from(&(-&p.transitions()[k]));
        }
        let h = stacked(steps.clone().map(|k| p.observations()[k].clone()));
        let q_is = stacked(steps.clone().map(|k| p.q_inv_sqrt()[k].clone()));
        let r_is = stacked(steps.clone().map(|k| p.r_inv_sqrt()[k].clone()));
        let b_w = stacked(steps.clone().map(|k| proc(k).transform().clone()));
        let b_v = stacked(steps.clone().map(|k| meas(k).transform().clone()));

        let mut x_tilde = DVector::zeros(dim);
        x_tilde.rows_mut(0, n).copy_from(p.x0());
        let z = stack_vec(p.measurements().iter().cloned());

        let shift_w = stack_vec(steps.clone().map(|k| proc(k).shift().clone()));
        let shift_v = stack_vec(steps.clone().map(|k| meas(k).shift().clone()));
        let bw_qis = &b_w * &q_is;
        let bv_ris = &b_v * &r_is;

        Ok(Self {
            a_w: stacked(steps.clone().map(|k| proc(k).constraint_matrix().clone())),
            a_v: stacked(steps.clone().map(|k| meas(k).constraint_matrix().clone())),
            rhs_w: stack_vec(steps.clone().map(|k| proc(k).constraint_rhs().clone())),
            rhs_v: stack_vec(steps.clone().map(|k| meas(k).constraint_rhs().clone())),
            m_w: stacked(steps.clone().map(|k| proc(k).quad().clone())),
            m_v: stacked(steps.clone().map(|k| meas(k).quad().clone())),
            c_w: &bw_qis * &g,
            c_v: &bv_ris * &h,
            bt_w: shift_w - &bw_qis * x_tilde,
            bt_v: shift_v + &bv_ris * z,
        })
    }

    fn residual(&self, it: &IpIterate) -> KktResidual {
        KktResidual {
            primal_w: self.a_w.tr_mul(&it.u_w) + &it.s_w - &self.rhs_w,
            primal_v: self.a_v.tr_mul(&it.u_v) + &it.s_v - &self.rhs_v,
            comp_w: it.q_w.component_mul(&it.s_w).add_scalar(-it.mu),
            comp_v: it.q_v.component_mul(&it.s_v).add_scalar(-it.mu),
            dual_w: &self.bt_w + &self.c_w * &it.x - &self.m_w * &it.u_w - &self.a_w * &it.q_w,
            dual_v: &self.bt_v - &self.c_v * &it.x - &self.m_v * &it.u_v - &self.a_v * &it.q_v,
            stat_x: self.c_w.tr_mul(&it.u_w) - self.c_v.tr_mul(&it.u_v),
        }
    }

    /// Jacobian with rows `F1..F7` and columns `(sʷ, sᵛ, qʷ, qᵛ, uʷ, uᵛ, x)`.
    fn jacobian(&self, it: &IpIterate) -> DMatrix<f64> {
        let (lw, lv) = (self.a_w.ncols(), self.a_v.ncols());
        let (dw, dv) = (self.a_w.nrows(), self.a_v.nrows());
        let nx = self.c_w.ncols();
        let sizes = [lw, lv, lw, lv, dw, dv, nx];
        let offs: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let total: usize = sizes.iter().sum();
        let (s_w, s_v, q_w, q_v, u_w, u_v, x) = (0, 1, 2, 3, 4, 5, 6);
        let mut j = DMatrix::zeros(total, total);
        let mut put = |row: usize, col: usize, m: &DMatrix<f64>| {
            j.view_mut((offs[row], offs[col]), m.shape()).copy_from(m);
        };
        let ident = |k| DMatrix::identity(k, k);

        put(0, s_w, &ident(lw));
        put(0, u_w, &self.a_w.transpose());
        put(1, s_v, &ident(lv));
        put(1, u_v, &self.a_v.transpose());
        put(2, s_w, &DMatrix::from_diagonal(&it.q_w));
        put(2, q_w, &DMatrix::from_diagonal(&it.s_w));
        put(3, s_v, &DMatrix::from_diagonal(&it.q_v));
        put(3, q_v, &DMatrix::from_diagonal(&it.s_v));
        put(4, q_w, &(-&self.a_w));
        put(4, u_w, &(-&self.m_w));
        put(4, x, &self.c_w);
        put(5, q_v, &(-&self.a_v));
        put(5, u_v, &(-&self.m_v));
        put(5, x, &(-&self.c_v));
        put(6, u_w, &self.c_w.transpose());
        put(6, u_v, &(-self.c_v.transpose()));
        j
    }
}

impl KktSystem for DenseKkt {
    fn residual(&self, it: &IpIterate) -> Result<KktResidual> {
        Ok(DenseKkt::residual(self, it))
    }

    fn direction(&self, it: &IpIterate, res: &KktResidual) -> Result<Direction> {
        let j = self.jacobian(it);
        let delta = j
            .lu()
            .solve(&(-res.to_vector()))
            .ok_or_else(|| Error::Precondition("dense KKT Jacobian is singular".into()))?;
        let mut at = 0;
        let mut take = |len: usize| {
            let v = delta.rows(at, len).into_owned();
            at += len;
            v
        };
        let s_w = take(it.s_w.len());
        let s_v = take(it.s_v.len());
        let q_w = take(it.q_w.len());
        let q_v = take(it.q_v.len());
        let u_w = take(it.u_w.len());
        let u_v = take(it.u_v.len());
        let x = take(it.x.len());
        Ok(Direction { x, u_w, u_v, q_w, s_w, q_v, s_v })
    }
}

/// `F_μ` at `it` evaluated with stacked dense matrices.
pub fn dense_kkt_residual(p: &SmootherProblem, it: &IpIterate) -> Result<KktResidual> {
    it.check_shape(p)?;
    Ok(DenseKkt::new(p)?.residual(it))
}

/// The full Jacobian `F_μ^{(1)}` at `it`: rows in residual block order, columns ordered
/// `(sʷ, sᵛ, qʷ, qᵛ, uʷ, uᵛ, x)` as in [`Direction::to_vector`].
pub fn dense_kkt_jacobian(p: &SmootherProblem, it: &IpIterate) -> Result<DMatrix<f64>> {
    it.check_shape(p)?;
    Ok(DenseKkt::new(p)?.jacobian(it))
}

/// Reference solve with default options.
pub fn dense_reference_solve(p: &SmootherProblem) -> Result<SmootherResult> {
    dense_reference_solve_with(p, &SolverOptions::default())
}

/// Same interior-point iteration as [`ip_solve`](super::ip_solve) with dense assembly and
/// an LU solve of the whole Newton system. Limited to `n N <= DENSE_MAX_DIM`.
pub fn dense_reference_solve_with(p: &SmootherProblem, opts: &SolverOptions) -> Result<SmootherResult> {
    let sys = DenseKkt::new(p)?;
    run(&sys, p, opts)
}
