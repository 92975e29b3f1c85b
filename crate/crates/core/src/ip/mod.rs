//! Primal-dual interior-point solver for the PLQ smoothing problem.
//!
//! With `uʷ, uᵛ` the dual variables of the two penalties, `sʷ, sᵛ` slacks and `qʷ, qᵛ`
//! multipliers of the constraints `Aᵀu <= a`, the relaxed optimality system `F_μ = 0`
//! reads
//!
//! ```text
//! F1 = Aʷᵀuʷ + sʷ - aʷ
//! F2 = Aᵛᵀuᵛ + sᵛ - aᵛ
//! F3 = qʷ ∘ sʷ - μ
//! F4 = qᵛ ∘ sᵛ - μ
//! F5 = b̃ʷ + BʷQ^{-1/2}G x - Mʷuʷ - Aʷqʷ
//! F6 = b̃ᵛ - BᵛR^{-1/2}H x - Mᵛuᵛ - Aᵛqᵛ
//! F7 = GᵀQ^{-1/2}Bʷᵀuʷ - HᵀR^{-1/2}Bᵛᵀuᵛ
//! ```
//!
//! [`newton_step`] eliminates everything but `Δx` through the per-step matrices
//! `T = M + A (q/s) Aᵀ`, leaving a block-tridiagonal system in `Δx`. The same loop also
//! drives a dense reference solver ([`dense_reference_solve`]) that assembles the full
//! Jacobian.

mod dense;
mod structured;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{objective, SmootherProblem};
use crate::penalty::max_step;

pub use dense::{
    dense_kkt_jacobian, dense_kkt_residual, dense_reference_solve, dense_reference_solve_with, DENSE_MAX_DIM,
};
pub use structured::{kkt_residual, newton_step};

/// Primal-dual iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IpIterate {
    /// Stacked states, length `n N`.
    pub x: DVector<f64>,
    pub u_w: DVector<f64>,
    pub u_v: DVector<f64>,
    pub q_w: DVector<f64>,
    pub s_w: DVector<f64>,
    pub q_v: DVector<f64>,
    pub s_v: DVector<f64>,
    /// Complementarity target of the relaxed system.
    pub mu: f64,
}

impl IpIterate {
    /// Starting point: `x = 0`, each penalty's interior dual point, `s = a - Aᵀu` (entries
    /// that are not positive are reset to 1), `q = 1` and `μ = sᵀq / ℓ`.
    pub fn initial(problem: &SmootherProblem) -> Self {
        let mut u_w = DVector::zeros(problem.dim_u_w());
        let mut s_w = DVector::zeros(problem.n_constraints_w());
        let mut u_v = DVector::zeros(problem.dim_u_v());
        let mut s_v = DVector::zeros(problem.n_constraints_v());
        for k in 0..problem.horizon() {
            for (pen, lay, u, s) in [
                (problem.process_penalty(k), &problem.w_layout()[k], &mut u_w, &mut s_w),
                (problem.measurement_penalty(k), &problem.v_layout()[k], &mut u_v, &mut s_v),
            ] {
                let start = pen.dual_start();
                u.rows_mut(lay.u.start, lay.u.len()).copy_from(start);
                let slack = pen.constraint_rhs() - pen.constraint_matrix().tr_mul(start);
                s.rows_mut(lay.constraints.start, lay.constraints.len()).copy_from(&slack);
            }
        }
        s_w.iter_mut().chain(s_v.iter_mut()).filter(|v| **v <= 0.0).for_each(|v| *v = 1.0);
        let q_w = DVector::from_element(s_w.len(), 1.0);
        let q_v = DVector::from_element(s_v.len(), 1.0);
        let mut it = Self { x: DVector::zeros(problem.dim_x()), u_w, u_v, q_w, s_w, q_v, s_v, mu: 0.0 };
        it.mu = it.average_complementarity();
        it
    }

    pub fn n_constraints(&self) -> usize {
        self.s_w.len() + self.s_v.len()
    }

    /// `sᵀq`
    pub fn complementarity(&self) -> f64 {
        self.s_w.dot(&self.q_w) + self.s_v.dot(&self.q_v)
    }

    /// `sᵀq / ℓ`, zero without constraints.
    pub fn average_complementarity(&self) -> f64 {
        match self.n_constraints() {
            0 => 0.0,
            l => self.complementarity() / l as f64,
        }
    }

    /// `max_i s_i q_i`, zero without constraints.
    pub fn max_complementarity(&self) -> f64 {
        self.s_w
            .iter()
            .zip(self.q_w.iter())
            .chain(self.s_v.iter().zip(self.q_v.iter()))
            .map(|(s, q)| (s * q).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest entry of `s` and `q`; `+inf` without constraints.
    pub fn min_positive(&self) -> f64 {
        [&self.s_w, &self.q_w, &self.s_v, &self.q_v]
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    fn step(&mut self, d: &Direction, alpha: f64) {
        self.x.axpy(alpha, &d.x, 1.0);
        self.u_w.axpy(alpha, &d.u_w, 1.0);
        self.u_v.axpy(alpha, &d.u_v, 1.0);
        self.q_w.axpy(alpha, &d.q_w, 1.0);
        self.s_w.axpy(alpha, &d.s_w, 1.0);
        self.q_v.axpy(alpha, &d.q_v, 1.0);
        self.s_v.axpy(alpha, &d.s_v, 1.0);
    }

    pub(crate) fn check_shape(&self, problem: &SmootherProblem) -> Result<()> {
        let expected = [
            ("x", self.x.len(), problem.dim_x()),
            ("u_w", self.u_w.len(), problem.dim_u_w()),
            ("u_v", self.u_v.len(), problem.dim_u_v()),
            ("q_w", self.q_w.len(), problem.n_constraints_w()),
            ("s_w", self.s_w.len(), problem.n_constraints_w()),
            ("q_v", self.q_v.len(), problem.n_constraints_v()),
            ("s_v", self.s_v.len(), problem.n_constraints_v()),
        ];
        for (name, got, want) in expected {
            if got != want {
                return Err(invalid(format!("iterate block {name} has length {got}, expected {want}")));
            }
        }
        Ok(())
    }
}

/// Newton direction, one vector per unknown block.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub x: DVector<f64>,
    pub u_w: DVector<f64>,
    pub u_v: DVector<f64>,
    pub q_w: DVector<f64>,
    pub s_w: DVector<f64>,
    pub q_v: DVector<f64>,
    pub s_v: DVector<f64>,
}

impl Direction {
    /// Stacked as `(sʷ, sᵛ, qʷ, qᵛ, uʷ, uᵛ, x)`, the column order of [`dense_kkt_jacobian`].
    pub fn to_vector(&self) -> DVector<f64> {
        concat(&[&self.s_w, &self.s_v, &self.q_w, &self.q_v, &self.u_w, &self.u_v, &self.x])
    }

    /// Largest `α <= 1` keeping `s + α Δs` and `q + α Δq` nonnegative is `α_max`; the
    /// returned step is `min(1, frac · α_max)`.
    pub fn step_length(&self, it: &IpIterate, frac: f64) -> f64 {
        let alpha_max = [
            max_step(&it.s_w, &self.s_w),
            max_step(&it.q_w, &self.q_w),
            max_step(&it.s_v, &self.s_v),
            max_step(&it.q_v, &self.q_v),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        (frac * alpha_max).min(1.0)
    }
}

/// The seven residual blocks of `F_μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    /// `Aʷᵀuʷ + sʷ - aʷ`
    pub primal_w: DVector<f64>,
    /// `Aᵛᵀuᵛ + sᵛ - aᵛ`
    pub primal_v: DVector<f64>,
    /// `qʷ ∘ sʷ - μ`
    pub comp_w: DVector<f64>,
    /// `qᵛ ∘ sᵛ - μ`
    pub comp_v: DVector<f64>,
    pub dual_w: DVector<f64>,
    pub dual_v: DVector<f64>,
    /// Stationarity in `x`.
    pub stat_x: DVector<f64>,
}

impl KktResidual {
    pub fn blocks(&self) -> [&DVector<f64>; 7] {
        [&self.primal_w, &self.primal_v, &self.comp_w, &self.comp_v, &self.dual_w, &self.dual_v, &self.stat_x]
    }

    /// Stacked in block order 1..7, the row order of [`dense_kkt_jacobian`].
    pub fn to_vector(&self) -> DVector<f64> {
        concat(&self.blocks())
    }

    pub fn block_inf_norms(&self) -> [f64; 7] {
        self.blocks().map(|b| b.amax())
    }

    pub fn inf_norm(&self) -> f64 {
        self.block_inf_norms().into_iter().fold(0.0, f64::max)
    }

    /// `‖F_0‖_∞` given that `self` is `F_μ`.
    pub fn unrelaxed_inf_norm(&self, mu: f64) -> f64 {
        let comp = |c: &DVector<f64>| c.iter().fold(0.0_f64, |acc, v| acc.max((v + mu).abs()));
        [&self.primal_w, &self.primal_v, &self.dual_w, &self.dual_v, &self.stat_x]
            .iter()
            .map(|b| b.amax())
            .fold(comp(&self.comp_w).max(comp(&self.comp_v)), f64::max)
    }
}

fn concat(parts: &[&DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

/// Solver tolerances and step control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_mu: f64,
    pub tol_res: f64,
    pub max_iter: usize,
    pub mu_reduce: f64,
    pub step_frac: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol_mu: 1e-10, tol_res: 1e-8, max_iter: 50, mu_reduce: 0.1, step_frac: 0.995 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_mu > 0.0 && self.tol_mu.is_finite()) {
            return Err(invalid(format!("tol_mu must be positive, got {}", self.tol_mu)));
        }
        if !(self.tol_res > 0.0 && self.tol_res.is_finite()) {
            return Err(invalid(format!("tol_res must be positive, got {}", self.tol_res)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        if !(self.mu_reduce > 0.0 && self.mu_reduce < 1.0) {
            return Err(invalid(format!("mu_reduce must lie in (0, 1), got {}", self.mu_reduce)));
        }
        if !(self.step_frac > 0.0 && self.step_frac < 1.0) {
            return Err(invalid(format!("step_frac must lie in (0, 1), got {}", self.step_frac)));
        }
        Ok(())
    }
}

/// Outcome of a smoothing solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherResult {
    /// Smoothed states `x̂_1 .. x̂_N`.
    pub states: Vec<DVector<f64>>,
    pub objective_value: f64,
    pub iterations: usize,
    /// `‖F_0‖_∞` at the returned iterate.
    pub final_residual: f64,
    pub final_mu: f64,
    pub converged: bool,
    /// `sᵀq` before the first and after every step.
    pub complementarity: Vec<f64>,
    pub iterate: IpIterate,
}

impl SmootherResult {
    pub fn stacked_states(&self) -> &DVector<f64> {
        &self.iterate.x
    }
}

/// Residual and Newton direction of one formulation of the KKT system.
pub(crate) trait KktSystem {
    fn residual(&self, it: &IpIterate) -> Result<KktResidual>;
    fn direction(&self, it: &IpIterate, res: &KktResidual) -> Result<Direction>;
}

pub(crate) fn run<S: KktSystem>(sys: &S, problem: &SmootherProblem, opts: &SolverOptions) -> Result<SmootherResult> {
    opts.validate()?;
    let mut it = IpIterate::initial(problem);
    let mut history = vec![it.complementarity()];
    let mut iterations = 0;
    let mut res = sys.residual(&it)?;
    let (mut converged, mut final_residual) = certificate(&res, &it, opts);

    while !converged && iterations < opts.max_iter {
        let d = sys.direction(&it, &res)?;
        let alpha = d.step_length(&it, opts.step_frac);
        it.step(&d, alpha);
        it.mu = opts.mu_reduce * it.average_complementarity();
        iterations += 1;
        history.push(it.complementarity());
        res = sys.residual(&it)?;
        (converged, final_residual) = certificate(&res, &it, opts);
    }

    Ok(SmootherResult {
        states: problem.unstack(&it.x),
        objective_value: objective(problem, &it.x)?,
        iterations,
        final_residual,
        final_mu: it.mu,
        converged,
        complementarity: history,
        iterate: it,
    })
}

/// Converged when `‖F_0‖_∞ <= tol_res`, `μ <= tol_mu` and `max s_i q_i <= 10 tol_mu`.
/// `res` is `F_μ` at `it`.
fn certificate(res: &KktResidual, it: &IpIterate, opts: &SolverOptions) -> (bool, f64) {
    let f0 = res.unrelaxed_inf_norm(it.mu);
    let ok = f0 <= opts.tol_res && it.mu <= opts.tol_mu && it.max_complementarity() <= 10.0 * opts.tol_mu;
    (ok, f0)
}

/// Solves the smoothing problem with the structured interior-point method.
///
/// Running out of iterations is not an error: the result then has `converged = false`.
pub fn ip_solve(problem: &SmootherProblem, opts: &SolverOptions) -> Result<SmootherResult> {
    run(&structured::Structured { problem }, problem, opts)
}
