//! The classical quadratic smoother, used as a reference for the L2/L2 case.
//!
//! Both routines minimize
//!
//! ```text
//! Σ_k ‖z_k - H_k x_k‖²_{R_k⁻¹} + ‖x_k - G_k x_{k-1}‖²_{Q_k⁻¹}
//! ```
//!
//! with `x_0` known and `G_1 = I`. The PLQ objective with L2 atoms is half of this sum.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{assemble_phi, checked_cholesky, symmetrize};
use crate::model::{stack, StateSpaceModel};

fn spd_inverse(m: &DMatrix<f64>, block: usize) -> Result<DMatrix<f64>> {
    let chol = checked_cholesky(m.clone()).ok_or(Error::NotSpd { block })?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

fn check_measurements(model: &StateSpaceModel, z: &[DVector<f64>]) -> Result<()> {
    if z.len() != model.horizon() {
        return Err(invalid(format!("{} measurements for a horizon of {}", z.len(), model.horizon())));
    }
    if let Some(k) = z.iter().position(|zk| zk.len() != model.meas_dim()) {
        return Err(invalid(format!("measurement {} has length {}, expected {}", k + 1, z[k].len(), model.meas_dim())));
    }
    Ok(())
}

/// Forward Kalman filter followed by the Rauch–Tung–Striebel backward pass.
///
/// The filter starts from the predicted state `x_0` with covariance `Q_1`.
pub fn rts_smooth(model: &StateSpaceModel, z: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    check_measurements(model, z)?;
    let big_n = model.horizon();
    let (g, h, q, r) = (model.transitions(), model.observations(), model.process_cov(), model.measurement_cov());

    let mut x_pred = Vec::with_capacity(big_n);
    let mut p_pred = Vec::with_capacity(big_n);
    let mut x_filt: Vec<DVector<f64>> = Vec::with_capacity(big_n);
    let mut p_filt: Vec<DMatrix<f64>> = Vec::with_capacity(big_n);

    for k in 0..big_n {
        let (xp, pp) = if k == 0 {
            (model.x0().clone(), q[0].clone())
        } else {
            let mut pp = &g[k] * &p_filt[k - 1] * g[k].transpose() + &q[k];
            symmetrize(&mut pp);
            (&g[k] * &x_filt[k - 1], pp)
        };
        let pht = &pp * h[k].transpose();
        let s = &h[k] * &pht + &r[k];
        let s_chol = checked_cholesky(s).ok_or(Error::NotSpd { block: k })?;
        // K = P Hᵀ S⁻¹
        let gain = s_chol.solve(&pht.transpose()).transpose();
        let xf = &xp + &gain * (&z[k] - &h[k] * &xp);
        let mut pf = &pp - &gain * pht.transpose();
        symmetrize(&mut pf);
        x_pred.push(xp);
        p_pred.push(pp);
        x_filt.push(xf);
        p_filt.push(pf);
    }

    let mut smoothed = vec![DVector::zeros(0); big_n];
    smoothed[big_n - 1] = x_filt[big_n - 1].clone();
    for k in (0..big_n - 1).rev() {
        let chol = checked_cholesky(p_pred[k + 1].clone()).ok_or(Error::NotSpd { block: k + 1 })?;
        // C = P_k Gᵀ P_pred⁻¹
        let c = chol.solve(&(&g[k + 1] * &p_filt[k])).transpose();
        smoothed[k] = &x_filt[k] + c * (&smoothed[k + 1] - &x_pred[k + 1]);
    }
    Ok(smoothed)
}

/// Solves `(GᵀQ⁻¹G + HᵀR⁻¹H) x = GᵀQ⁻¹x̃₀ + HᵀR⁻¹z` with the block-tridiagonal solver.
pub fn normal_equations_smooth(model: &StateSpaceModel, z: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    check_measurements(model, z)?;
    let (n, big_n) = (model.state_dim(), model.horizon());
    let mut omega_w = Vec::with_capacity(big_n);
    let mut omega_v = Vec::with_capacity(big_n);
    let mut rhs = DVector::zeros(n * big_n);
    for k in 0..big_n {
        let q_inv = spd_inverse(&model.process_cov()[k], k)?;
        let r_inv = spd_inverse(&model.measurement_cov()[k], k)?;
        let h = &model.observations()[k];
        let ht_rinv = h.transpose() * r_inv;
        let mut blk = rhs.rows_mut(k * n, n);
        blk += &ht_rinv * &z[k];
        if k == 0 {
            blk += &q_inv * model.x0();
        }
        omega_v.push(&ht_rinv * h);
        omega_w.push(q_inv);
    }
    let phi = assemble_phi(model.transitions(), &omega_w, &omega_v)?;
    let x = phi.factor()?.solve(&rhs);
    Ok((0..big_n).map(|k| x.rows(k * n, n).into_owned()).collect())
}

/// The classical least-squares objective above (without the factor ½).
pub fn quadratic_objective(model: &StateSpaceModel, z: &[DVector<f64>], states: &[DVector<f64>]) -> Result<f64> {
    check_measurements(model, z)?;
    if states.len() != model.horizon() {
        return Err(invalid("trajectory length differs from the horizon"));
    }
    let mut total = 0.0;
    for k in 0..model.horizon() {
        let prev = if k == 0 { model.x0().clone() } else { &model.transitions()[k] * &states[k - 1] };
        let e = &states[k] - prev;
        let r = &z[k] - &model.observations()[k] * &states[k];
        let q_inv = spd_inverse(&model.process_cov()[k], k)?;
        let r_inv = spd_inverse(&model.measurement_cov()[k], k)?;
        total += e.dot(&(q_inv * &e)) + r.dot(&(r_inv * &r));
    }
    Ok(total)
}

/// Stacked RTS solution, convenient for comparisons with the interior-point solver.
pub fn rts_smooth_stacked(model: &StateSpaceModel, z: &[DVector<f64>]) -> Result<DVector<f64>> {
    Ok(stack(&rts_smooth(model, z)?))
}
