//! Synthetic trajectories and measurements.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::StateSpaceModel;

/// Name of the generator behind every simulation, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream 0 for process noise, stream 1 for measurement noise";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseBase {
    Gaussian,
    /// Laplace with unit variance before scaling by the covariance factor.
    Laplace,
}

/// Noise distribution of one sequence: base draws with covariance `Q_k` (or `R_k`), each
/// sample multiplied by `outlier_scale` with probability `outlier_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub base: NoiseBase,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(seed: u64) -> Self {
        Self { base: NoiseBase::Gaussian, outlier_prob: 0.0, outlier_scale: 1.0, seed }
    }

    pub fn with_outliers(self, prob: f64, scale: f64) -> Self {
        Self { outlier_prob: prob, outlier_scale: scale, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.outlier_prob) {
            return Err(invalid(format!("outlier_prob must lie in [0, 1), got {}", self.outlier_prob)));
        }
        if !(self.outlier_scale >= 1.0 && self.outlier_scale.is_finite()) {
            return Err(invalid(format!("outlier_scale must be >= 1, got {}", self.outlier_scale)));
        }
        Ok(())
    }
}

struct NoiseStream {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    fn new(spec: NoiseSpec, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        Self { spec, rng }
    }

    fn unit(&mut self) -> f64 {
        match self.spec.base {
            NoiseBase::Gaussian => self.rng.sample(StandardNormal),
            NoiseBase::Laplace => {
                // Inverse CDF with scale 1/√2, so the variance is 1.
                let u: f64 = self.rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln() / std::f64::consts::SQRT_2
            }
        }
    }

    /// `factor · ε` with `ε` of identity covariance, possibly inflated.
    fn draw(&mut self, factor: &DMatrix<f64>) -> DVector<f64> {
        let eps = DVector::from_fn(factor.ncols(), |_, _| self.unit());
        let mut sample = factor * eps;
        if self.spec.outlier_prob > 0.0 && self.rng.random::<f64>() < self.spec.outlier_prob {
            sample *= self.spec.outlier_scale;
        }
        sample
    }
}

/// Ground truth and data of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub x_true: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
}

fn cholesky_factor(m: &DMatrix<f64>, what: &str, k: usize) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| invalid(format!("{what} at step {} is not positive definite", k + 1)))
}

/// Rolls the model forward from `x_0` with noise drawn per `w_spec` and `v_spec`.
/// Deterministic given the two seeds.
pub fn simulate(model: &StateSpaceModel, w_spec: &NoiseSpec, v_spec: &NoiseSpec) -> Result<Simulation> {
    w_spec.validate()?;
    v_spec.validate()?;
    let mut w_rng = NoiseStream::new(*w_spec, 0);
    let mut v_rng = NoiseStream::new(*v_spec, 1);
    let mut x_true = Vec::with_capacity(model.horizon());
    let mut z = Vec::with_capacity(model.horizon());
    let mut prev = model.x0().clone();
    for k in 0..model.horizon() {
        let w = w_rng.draw(&cholesky_factor(&model.process_cov()[k], "Q", k)?);
        let v = v_rng.draw(&cholesky_factor(&model.measurement_cov()[k], "R", k)?);
        let x = &model.transitions()[k] * &prev + w;
        z.push(&model.observations()[k] * &x + v);
        prev = x.clone();
        x_true.push(x);
    }
    Ok(Simulation { x_true, z })
}

/// Mean squared componentwise error.
pub fn mse(x_hat: &[DVector<f64>], x_true: &[DVector<f64>]) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(invalid(format!("trajectories have {} and {} states", x_hat.len(), x_true.len())));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (k, (a, b)) in x_hat.iter().zip(x_true).enumerate() {
        if a.len() != b.len() {
            return Err(invalid(format!("state {} has lengths {} and {}", k + 1, a.len(), b.len())));
        }
        total += (a - b).norm_squared();
        count += a.len();
    }
    if count == 0 {
        return Err(invalid("mse of empty trajectories"));
    }
    Ok(total / count as f64)
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(dim, dim) * 0.2
}

/// Random time-varying model: stable transitions (spectral norm at most 0.95), random
/// observation matrices and SPD covariances.
pub fn random_model(seed: u64, n: usize, m: usize, horizon: usize) -> Result<StateSpaceModel> {
    if n == 0 || m == 0 || horizon == 0 {
        return Err(invalid("random_model needs positive dimensions"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Vec::with_capacity(horizon);
    let mut h = Vec::with_capacity(horizon);
    let mut q = Vec::with_capacity(horizon);
    let mut r = Vec::with_capacity(horizon);
    for k in 0..horizon {
        if k == 0 {
            g.push(DMatrix::identity(n, n));
        } else {
            let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let norm = raw.clone().singular_values().max();
            let target = rng.random_range(0.5..0.95);
            g.push(if norm > 0.0 { raw * (target / norm) } else { raw });
        }
        h.push(DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)));
        q.push(random_spd(&mut rng, n));
        r.push(random_spd(&mut rng, m));
    }
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    StateSpaceModel::new(g, h, q, r, x0)
}
