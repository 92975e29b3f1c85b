#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use plq_smoother::model::build_problem;
use plq_smoother::sim::{random_model, simulate, NoiseSpec};
use plq_smoother::{AtomKind, PlqPenalty, SmootherProblem, StateSpaceModel};

pub fn scalar_model(horizon: usize) -> StateSpaceModel {
    let one = DMatrix::identity(1, 1);
    StateSpaceModel::time_invariant(one.clone(), one.clone(), one.clone(), one, DVector::zeros(1), horizon).unwrap()
}

pub fn atom(kind: AtomKind, dim: usize) -> PlqPenalty {
    PlqPenalty::replicated(kind, dim).unwrap()
}

/// Random model with simulated Gaussian data.
pub fn random_instance(seed: u64, n: usize, m: usize, horizon: usize) -> (StateSpaceModel, Vec<DVector<f64>>) {
    let model = random_model(seed, n, m, horizon).unwrap();
    let sim = simulate(&model, &NoiseSpec::gaussian(seed ^ 0x5a5a), &NoiseSpec::gaussian(seed ^ 0xa5a5)).unwrap();
    (model, sim.z)
}

pub fn problem(
    model: &StateSpaceModel,
    process: AtomKind,
    measurement: AtomKind,
    z: &[DVector<f64>],
) -> SmootherProblem {
    build_problem(model, &[atom(process, model.state_dim())], &[atom(measurement, model.meas_dim())], z).unwrap()
}

pub const HUBER: AtomKind = AtomKind::Huber { kappa: 1.0 };
pub const L1: AtomKind = AtomKind::L1 { scale: 1.0 };
pub const VAPNIK: AtomKind = AtomKind::Vapnik { epsilon: 0.1 };
