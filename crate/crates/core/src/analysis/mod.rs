//! Executable validity conditions for PLQ penalties.
//!
//! * [`check_coercivity`] decides `[Bᵀ cone(U)]° = {0}`, which is equivalent to
//!   `ρ(y) → ∞` as `|y| → ∞` and therefore to `exp(-ρ)` being normalizable.
//! * [`check_finite`] decides `Null(M) ∩ U^∞ = {0}`, which makes `ρ` finite everywhere
//!   and every `T = M + A D Aᵀ` (positive diagonal `D`) invertible, the condition the
//!   interior-point solver relies on.
//! * [`check_domain_membership`] tests `y ∈ dom ρ` by evaluating the dual supremum.
//! * [`normalization_constant`] integrates `exp(-ρ)` for scalar penalties.
//!
//! Both cone checks reduce to the same LP procedure: a polyhedral cone `{d : Gᵀd <= 0}`
//! is `{0}` iff `max ±d_j` over the cone intersected with the unit box is zero for every
//! coordinate `j`.

mod generators;
mod quadrature;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{columns_to_matrix, psd_null_space};
use crate::penalty::{cone_witnesses, eval_dual_sup, finiteness_witnesses, PlqPenalty, TOL_PSD};

pub use quadrature::integrate;

/// Default bound on the number of `cone(U)` generators enumerated for raw blocks.
pub const DEFAULT_MAX_GENERATORS: usize = 10_000;

/// Outcome of a cone condition check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeCheckReport {
    pub satisfied: bool,
    /// Nonzero direction certifying the failure, present iff `satisfied` is false.
    pub witness: Option<DVector<f64>>,
}

impl ConeCheckReport {
    fn from_witnesses(mut found: Vec<DVector<f64>>) -> Self {
        match found.pop() {
            Some(w) => Self { satisfied: false, witness: Some(w) },
            None => Self { satisfied: true, witness: None },
        }
    }
}

/// Coercivity check with the default generator bound.
pub fn check_coercivity(p: &PlqPenalty) -> Result<ConeCheckReport> {
    check_coercivity_with_limit(p, DEFAULT_MAX_GENERATORS)
}

/// Decides whether `{d : ⟨B d, g⟩ <= 0 for every generator g of cone(U)}` is `{0}`.
///
/// When the check fails the witness `d` lies in that polar cone, so `ρ(τ d)` stays
/// bounded as `τ → ∞`.
pub fn check_coercivity_with_limit(p: &PlqPenalty, max_generators: usize) -> Result<ConeCheckReport> {
    let gens = generators::cone_generators(p, max_generators)?;
    let images: Vec<DVector<f64>> = gens.iter().map(|g| p.transform().tr_mul(g)).collect();
    let rows = columns_to_matrix(p.dim_y(), &images);
    Ok(ConeCheckReport::from_witnesses(cone_witnesses(&rows, p.dim_y())?))
}

/// Decides `Null(M) ∩ {d : Aᵀd <= 0} = {0}`. The witness is a direction `d` in `u` space.
pub fn check_finite(p: &PlqPenalty) -> Result<ConeCheckReport> {
    let null = psd_null_space(p.quad(), TOL_PSD);
    Ok(ConeCheckReport::from_witnesses(finiteness_witnesses(&null, p.constraint_matrix())?))
}

/// `y ∈ dom ρ`, i.e. the dual supremum at `b + B y` is finite.
pub fn check_domain_membership(p: &PlqPenalty, y: &DVector<f64>) -> bool {
    matches!(eval_dual_sup(p, y), Ok(v) if v.is_finite())
}

/// Normalization data of a scalar PLQ density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// `c₁ = ∫ exp(-ρ(y)) dy`
    pub c1: f64,
    /// Integration window `[-half_width, half_width]` actually used.
    pub half_width: f64,
}

/// Truncated tail mass allowed outside the integration window.
const TAIL_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-11;

/// `c₁ = ∫ exp(-ρ(y)) dy` for a coercive penalty on `R`.
pub fn normalization_constant(p: &PlqPenalty) -> Result<f64> {
    Ok(normalize(p)?.c1)
}

/// Like [`normalization_constant`] but also reports the integration window.
///
/// The window `[-L, L]` doubles until the convexity bound on the two tails,
/// `exp(-ρ(±L)) / β±` with `β±` the secant slope between `±L/2` and `±L`, is below
/// `1e-12`.
pub fn normalize(p: &PlqPenalty) -> Result<Normalization> {
    if p.dim_y() != 1 {
        return Err(Error::Unsupported(format!(
            "normalization constants are only computed for scalar penalties (dim_y = {})",
            p.dim_y()
        )));
    }
    if !check_coercivity(p)?.satisfied {
        return Err(Error::Precondition("penalty is not coercive, exp(-ρ) is not integrable".into()));
    }
    let rho = |y: f64| p.eval(&DVector::from_element(1, y));

    let mut half = 1.0_f64;
    loop {
        let mut tail = 0.0;
        for side in [1.0, -1.0] {
            let outer = rho(side * half)?;
            let inner = rho(side * half / 2.0)?;
            let slope = (outer - inner) / (half / 2.0);
            tail += if slope > 0.0 { (-outer).exp() / slope } else { f64::INFINITY };
        }
        if tail < TAIL_TOL {
            break;
        }
        half *= 2.0;
        if half > 1e8 {
            return Err(Error::Precondition("could not bound the tails of exp(-ρ)".into()));
        }
    }

    let mut failure = None;
    let mut density = |y: f64| match rho(y) {
        Ok(v) => (-v).exp(),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let left = integrate(&mut density, -half, 0.0, 0.0, QUAD_REL_TOL);
    let right = integrate(&mut density, 0.0, half, 0.0, QUAD_REL_TOL);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Normalization { c1: left + right, half_width: half })
}

/// Dense `u`-space generator matrix of `cone(U)` (columns), exposed for diagnostics.
pub fn cone_generator_matrix(p: &PlqPenalty) -> Result<DMatrix<f64>> {
    let gens = generators::cone_generators(p, DEFAULT_MAX_GENERATORS)?;
    Ok(columns_to_matrix(p.dim_u(), &gens))
}
