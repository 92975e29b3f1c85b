//! State-space models and the stacked PLQ smoothing objective.
//!
//! The model is
//!
//! ```text
//! x_1 = x_0 + w_1,   x_k = G_k x_{k-1} + w_k   (k = 2..N)
//! z_k = H_k x_k + v_k                          (k = 1..N)
//! ```
//!
//! with a known `x_0`. The MAP objective over the whole trajectory is
//!
//! ```text
//! ρ_w(Q^{-1/2}(G x - x̃₀)) + ρ_v(R^{-1/2}(z - H x))
//! ```
//!
//! where `G` is block bidiagonal (identity diagonal, `-G_k` below it), `H`, `Q`, `R` are
//! block diagonal and `x̃₀` carries `x_0` in its first block. None of the stacked
//! matrices is ever formed: everything is stored per step.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::analysis::check_finite;
use crate::error::{invalid, Error, Result};
use crate::linalg::{is_spd, sym_inv_sqrt};
use crate::penalty::{block_compose, PenaltySpec, PlqPenalty};

/// Linear state-space model with known initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    transitions: Vec<DMatrix<f64>>,
    observations: Vec<DMatrix<f64>>,
    process_cov: Vec<DMatrix<f64>>,
    measurement_cov: Vec<DMatrix<f64>>,
    x0: DVector<f64>,
}

impl StateSpaceModel {
    /// Time-varying model. `transitions[0]` must be the identity; all covariances must be
    /// symmetric positive definite.
    pub fn new(
        transitions: Vec<DMatrix<f64>>,
        observations: Vec<DMatrix<f64>>,
        process_cov: Vec<DMatrix<f64>>,
        measurement_cov: Vec<DMatrix<f64>>,
        x0: DVector<f64>,
    ) -> Result<Self> {
        let horizon = transitions.len();
        if horizon == 0 {
            return Err(invalid("model needs at least one time step"));
        }
        for (name, len) in [("H", observations.len()), ("Q", process_cov.len()), ("R", measurement_cov.len())] {
            if len != horizon {
                return Err(invalid(format!("{name} has {len} steps, G has {horizon}")));
            }
        }
        let n = x0.len();
        if n == 0 {
            return Err(invalid("state dimension must be positive"));
        }
        let m = observations[0].nrows();
        if m == 0 {
            return Err(invalid("measurement dimension must be positive"));
        }
        for k in 0..horizon {
            let step = k + 1;
            if transitions[k].shape() != (n, n) {
                return Err(invalid(format!(
                    "G at step {step} has shape {:?}, expected ({n}, {n})",
                    transitions[k].shape()
                )));
            }
            if observations[k].shape() != (m, n) {
                return Err(invalid(format!(
                    "H at step {step} has shape {:?}, expected ({m}, {n})",
                    observations[k].shape()
                )));
            }
            if process_cov[k].shape() != (n, n) || !is_spd(&process_cov[k]) {
                return Err(invalid(format!("Q at step {step} must be a symmetric positive definite {n}×{n} matrix")));
            }
            if measurement_cov[k].shape() != (m, m) || !is_spd(&measurement_cov[k]) {
                return Err(invalid(format!("R at step {step} must be a symmetric positive definite {m}×{m} matrix")));
            }
        }
        if (&transitions[0] - DMatrix::<f64>::identity(n, n)).amax() > 0.0 {
            return Err(invalid("G at step 1 must be the identity (x_1 = x_0 + w_1)"));
        }
        Ok(Self { transitions, observations, process_cov, measurement_cov, x0 })
    }

    /// Constant matrices broadcast over `horizon` steps; the first transition is replaced
    /// by the identity.
    pub fn time_invariant(
        g: DMatrix<f64>,
        h: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        x0: DVector<f64>,
        horizon: usize,
    ) -> Result<Self> {
        let n = x0.len();
        let mut transitions = vec![g; horizon];
        if let Some(first) = transitions.first_mut() {
            *first = DMatrix::identity(n, n);
        }
        Self::new(transitions, vec![h; horizon], vec![q; horizon], vec![r; horizon], x0)
    }

    pub fn state_dim(&self) -> usize {
        self.x0.len()
    }

    pub fn meas_dim(&self) -> usize {
        self.observations[0].nrows()
    }

    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    pub fn observations(&self) -> &[DMatrix<f64>] {
        &self.observations
    }

    pub fn process_cov(&self) -> &[DMatrix<f64>] {
        &self.process_cov
    }

    pub fn measurement_cov(&self) -> &[DMatrix<f64>] {
        &self.measurement_cov
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    /// `G x` for the stacked bidiagonal `G`.
    pub fn apply_g(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.state_dim();
        let mut out = x.clone();
        for k in 1..self.horizon() {
            let prev = &self.transitions[k] * x.rows((k - 1) * n, n);
            let mut blk = out.rows_mut(k * n, n);
            blk -= prev;
        }
        out
    }

    /// `G⁻¹ y` by forward substitution.
    pub fn solve_g(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.state_dim();
        let mut x = y.clone();
        for k in 1..self.horizon() {
            let prev = &self.transitions[k] * x.rows((k - 1) * n, n);
            let mut blk = x.rows_mut(k * n, n);
            blk += prev;
        }
        x
    }
}

/// Index ranges of one time step inside the stacked dual vector and constraint list.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLayout {
    pub u: Range<usize>,
    pub constraints: Range<usize>,
}

fn layout(penalties: &[Arc<PlqPenalty>]) -> (Vec<StepLayout>, usize, usize) {
    let (mut du, mut dc) = (0, 0);
    let steps = penalties
        .iter()
        .map(|p| {
            let l = StepLayout { u: du..du + p.dim_u(), constraints: dc..dc + p.n_constraints() };
            du += p.dim_u();
            dc += p.n_constraints();
            l
        })
        .collect();
    (steps, du, dc)
}

/// All data of the smoothing objective, stored per step.
#[derive(Debug, Clone)]
pub struct SmootherProblem {
    pub(crate) n: usize,
    pub(crate) m: usize,
    pub(crate) horizon: usize,
    pub(crate) transitions: Vec<DMatrix<f64>>,
    pub(crate) observations: Vec<DMatrix<f64>>,
    pub(crate) q_inv_sqrt: Vec<DMatrix<f64>>,
    pub(crate) r_inv_sqrt: Vec<DMatrix<f64>>,
    pub(crate) process: Vec<Arc<PlqPenalty>>,
    pub(crate) measurement: Vec<Arc<PlqPenalty>>,
    pub(crate) z: Vec<DVector<f64>>,
    pub(crate) x0: DVector<f64>,
    /// `b̃ʷ_k = bʷ_k - Bʷ_k Q_k^{-1/2} x̃₀_k`
    pub(crate) b_tilde_w: Vec<DVector<f64>>,
    /// `b̃ᵛ_k = bᵛ_k + Bᵛ_k R_k^{-1/2} z_k`
    pub(crate) b_tilde_v: Vec<DVector<f64>>,
    /// `Bʷ_k Q_k^{-1/2}`
    pub(crate) proc_map: Vec<DMatrix<f64>>,
    /// `Bᵛ_k R_k^{-1/2} H_k`
    pub(crate) meas_map: Vec<DMatrix<f64>>,
    pub(crate) w_layout: Vec<StepLayout>,
    pub(crate) v_layout: Vec<StepLayout>,
    pub(crate) dim_uw: usize,
    pub(crate) dim_uv: usize,
    pub(crate) n_cw: usize,
    pub(crate) n_cv: usize,
}

/// Assembles the smoothing problem.
///
/// `process` and `measurement` hold per-step penalties on `R^n` and `R^m`; a single entry
/// is recycled for every step. Each distinct penalty must pass
/// [`check_finite`](crate::analysis::check_finite), otherwise
/// [`Error::DegenerateDensity`] is returned.
pub fn build_problem(
    model: &StateSpaceModel,
    process: &[PlqPenalty],
    measurement: &[PlqPenalty],
    z: &[DVector<f64>],
) -> Result<SmootherProblem> {
    let (n, m, horizon) = (model.state_dim(), model.meas_dim(), model.horizon());
    if z.len() != horizon {
        return Err(invalid(format!("{} measurements for a horizon of {horizon}", z.len())));
    }
    if let Some(k) = z.iter().position(|zk| zk.len() != m) {
        return Err(invalid(format!("measurement {} has length {}, expected {m}", k + 1, z[k].len())));
    }
    let process = schedule("process", process, n, horizon)?;
    let measurement = schedule("measurement", measurement, m, horizon)?;

    let mut q_inv_sqrt = Vec::with_capacity(horizon);
    let mut r_inv_sqrt = Vec::with_capacity(horizon);
    for k in 0..horizon {
        q_inv_sqrt.push(
            sym_inv_sqrt(&model.process_cov[k]).ok_or_else(|| invalid(format!("Q at step {} is not SPD", k + 1)))?,
        );
        r_inv_sqrt.push(
            sym_inv_sqrt(&model.measurement_cov[k])
                .ok_or_else(|| invalid(format!("R at step {} is not SPD", k + 1)))?,
        );
    }

    let proc_map: Vec<DMatrix<f64>> = (0..horizon).map(|k| process[k].transform() * &q_inv_sqrt[k]).collect();
    let meas_scaled: Vec<DMatrix<f64>> = (0..horizon).map(|k| measurement[k].transform() * &r_inv_sqrt[k]).collect();
    let meas_map = (0..horizon).map(|k| &meas_scaled[k] * &model.observations[k]).collect();

    let b_tilde_w = (0..horizon)
        .map(|k| {
            let b = process[k].shift().clone();
            if k == 0 {
                b - &proc_map[0] * model.x0()
            } else {
                b
            }
        })
        .collect();
    let b_tilde_v = (0..horizon).map(|k| measurement[k].shift() + &meas_scaled[k] * &z[k]).collect();

    let (w_layout, dim_uw, n_cw) = layout(&process);
    let (v_layout, dim_uv, n_cv) = layout(&measurement);

    Ok(SmootherProblem {
        n,
        m,
        horizon,
        transitions: model.transitions.clone(),
        observations: model.observations.clone(),
        q_inv_sqrt,
        r_inv_sqrt,
        process,
        measurement,
        z: z.to_vec(),
        x0: model.x0.clone(),
        b_tilde_w,
        b_tilde_v,
        proc_map,
        meas_map,
        w_layout,
        v_layout,
        dim_uw,
        dim_uv,
        n_cw,
        n_cv,
    })
}

/// [`build_problem`] from configuration-level penalty specs.
pub fn build_problem_from_specs(
    model: &StateSpaceModel,
    process: &[PenaltySpec],
    measurement: &[PenaltySpec],
    z: &[DVector<f64>],
) -> Result<SmootherProblem> {
    let proc: Vec<PlqPenalty> = process.iter().map(|s| s.resolve(model.state_dim())).collect::<Result<_>>()?;
    let meas: Vec<PlqPenalty> = measurement.iter().map(|s| s.resolve(model.meas_dim())).collect::<Result<_>>()?;
    build_problem(model, &proc, &meas, z)
}

fn schedule(which: &str, penalties: &[PlqPenalty], dim: usize, horizon: usize) -> Result<Vec<Arc<PlqPenalty>>> {
    if penalties.len() != 1 && penalties.len() != horizon {
        return Err(invalid(format!("{which} penalty list has {} entries, expected 1 or {horizon}", penalties.len())));
    }
    let mut shared = Vec::with_capacity(penalties.len());
    for (i, p) in penalties.iter().enumerate() {
        if p.dim_y() != dim {
            return Err(invalid(format!("{which} penalty {} acts on R^{}, expected R^{dim}", i + 1, p.dim_y())));
        }
        // Repeated entries are checked once.
        let seen = shared.iter().find(|q: &&Arc<PlqPenalty>| q.as_ref() == p).cloned();
        let arc = match seen {
            Some(q) => q,
            None => {
                let report = check_finite(p)?;
                if !report.satisfied {
                    return Err(Error::DegenerateDensity(format!(
                        "{which} penalty {} has Null(M) ∩ U^∞ ≠ {{0}} (witness {:?})",
                        i + 1,
                        report.witness.map(|w| w.as_slice().to_vec()).unwrap_or_default()
                    )));
                }
                Arc::new(p.clone())
            }
        };
        shared.push(arc);
    }
    Ok((0..horizon).map(|k| shared[if shared.len() == 1 { 0 } else { k }].clone()).collect())
}

impl SmootherProblem {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn meas_dim(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Length of the stacked state vector, `n N`.
    pub fn dim_x(&self) -> usize {
        self.n * self.horizon
    }

    pub fn dim_u_w(&self) -> usize {
        self.dim_uw
    }

    pub fn dim_u_v(&self) -> usize {
        self.dim_uv
    }

    pub fn n_constraints_w(&self) -> usize {
        self.n_cw
    }

    pub fn n_constraints_v(&self) -> usize {
        self.n_cv
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    pub fn observations(&self) -> &[DMatrix<f64>] {
        &self.observations
    }

    pub fn q_inv_sqrt(&self) -> &[DMatrix<f64>] {
        &self.q_inv_sqrt
    }

    pub fn r_inv_sqrt(&self) -> &[DMatrix<f64>] {
        &self.r_inv_sqrt
    }

    pub fn process_penalty(&self, k: usize) -> &PlqPenalty {
        &self.process[k]
    }

    pub fn measurement_penalty(&self, k: usize) -> &PlqPenalty {
        &self.measurement[k]
    }

    pub fn measurements(&self) -> &[DVector<f64>] {
        &self.z
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn b_tilde_w(&self) -> &[DVector<f64>] {
        &self.b_tilde_w
    }

    pub fn b_tilde_v(&self) -> &[DVector<f64>] {
        &self.b_tilde_v
    }

    pub fn w_layout(&self) -> &[StepLayout] {
        &self.w_layout
    }

    pub fn v_layout(&self) -> &[StepLayout] {
        &self.v_layout
    }

    /// Block composition of the per-step process penalties over `R^{nN}`. Dense; small
    /// problems only.
    pub fn stacked_process_penalty(&self) -> Result<PlqPenalty> {
        block_compose(&self.process.iter().map(|p| p.as_ref().clone()).collect::<Vec<_>>())
    }

    /// Block composition of the per-step measurement penalties over `R^{mN}`.
    pub fn stacked_measurement_penalty(&self) -> Result<PlqPenalty> {
        block_compose(&self.measurement.iter().map(|p| p.as_ref().clone()).collect::<Vec<_>>())
    }

    /// Whitened process residual `Q_k^{-1/2}(x_k - G_k x_{k-1} - x̃₀_k)`.
    pub fn process_residual(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        let n = self.n;
        let mut e: DVector<f64> = x.rows(k * n, n).into_owned();
        if k == 0 {
            e -= &self.x0;
        } else {
            e -= &self.transitions[k] * x.rows((k - 1) * n, n);
        }
        &self.q_inv_sqrt[k] * e
    }

    /// Whitened measurement residual `R_k^{-1/2}(z_k - H_k x_k)`.
    pub fn measurement_residual(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        let n = self.n;
        &self.r_inv_sqrt[k] * (&self.z[k] - &self.observations[k] * x.rows(k * n, n))
    }

    /// Per-step `(process, measurement)` penalty values.
    pub fn objective_terms(&self, x: &DVector<f64>) -> Result<Vec<(f64, f64)>> {
        self.check_x(x)?;
        (0..self.horizon)
            .map(|k| {
                let pw = self.process[k].eval(&self.process_residual(x, k))?;
                let pv = self.measurement[k].eval(&self.measurement_residual(x, k))?;
                Ok((pw, pv))
            })
            .collect()
    }

    pub(crate) fn check_x(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim_x() {
            return Err(invalid(format!("state vector has length {}, expected {}", x.len(), self.dim_x())));
        }
        Ok(())
    }

    /// Splits a stacked state vector into `N` states.
    pub fn unstack(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.horizon).map(|k| x.rows(k * self.n, self.n).into_owned()).collect()
    }
}

/// Value of the smoothing objective at the stacked trajectory `x`.
pub fn objective(problem: &SmootherProblem, x: &DVector<f64>) -> Result<f64> {
    Ok(problem.objective_terms(x)?.iter().map(|(a, b)| a + b).sum())
}

/// Stacks `N` state vectors into one.
pub fn stack(states: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(states.iter().map(|s| s.len()).sum(), states.iter().flat_map(|s| s.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::AtomKind;

    fn scalar_model(horizon: usize) -> StateSpaceModel {
        let one = DMatrix::identity(1, 1);
        StateSpaceModel::time_invariant(one.clone(), one.clone(), one.clone(), one, DVector::zeros(1), horizon).unwrap()
    }

    fn l2() -> PlqPenalty {
        PlqPenalty::atom(AtomKind::L2).unwrap()
    }

    #[test]
    fn single_step_objective() {
        let model = scalar_model(1);
        let p = build_problem(&model, &[l2()], &[l2()], &[DVector::from_element(1, 2.0)]).unwrap();
        for x in [-1.0, 0.0, 1.0, 2.5] {
            let v = objective(&p, &DVector::from_element(1, x)).unwrap();
            assert!((v - (0.5 * x * x + 0.5 * (x - 2.0) * (x - 2.0))).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_data_zero_objective() {
        let model = scalar_model(4);
        let p = build_problem(&model, &[l2()], &[l2()], &vec![DVector::zeros(1); 4]).unwrap();
        assert_eq!(objective(&p, &DVector::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn g_round_trip() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, -0.3, 0.8]);
        let model = StateSpaceModel::time_invariant(
            g,
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![0.5, -1.0]),
            5,
        )
        .unwrap();
        let x = DVector::from_fn(10, |i, _| (i as f64 * 0.7).cos());
        assert!((model.solve_g(&model.apply_g(&x)) - &x).amax() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = scalar_model(3);
        let z = vec![DVector::zeros(1); 3];
        assert!(matches!(build_problem(&model, &[l2()], &[l2()], &z[..2]), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_problem(&model, &[l2(), l2()], &[l2()], &z), Err(Error::InvalidArgument(_))));
        let line = PlqPenalty::new(
            DMatrix::zeros(1, 0),
            DVector::zeros(0),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DMatrix::identity(1, 1),
        )
        .unwrap();
        assert!(matches!(build_problem(&model, &[line], &[l2()], &z), Err(Error::DegenerateDensity(_))));

        let one = DMatrix::identity(1, 1);
        let not_spd =
            StateSpaceModel::time_invariant(one.clone(), one.clone(), -one.clone(), one.clone(), DVector::zeros(1), 2);
        assert!(matches!(not_spd, Err(Error::InvalidArgument(_))));
        let bad_g1 = StateSpaceModel::new(
            vec![one.clone() * 2.0],
            vec![one.clone()],
            vec![one.clone()],
            vec![one],
            DVector::zeros(1),
        );
        assert!(matches!(bad_g1, Err(Error::InvalidArgument(_))));
    }
}
