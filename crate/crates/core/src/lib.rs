//! Kalman smoothing with piecewise linear-quadratic (PLQ) penalties.
//!
//! Process and measurement deviations are penalized by convex functions of the form
//!
//! ```text
//! rho(y) = sup_{u in U} <u, b + B y> - 1/2 <u, M u>,    U = { u : Aᵀu <= a }
//! ```
//!
//! which covers the L2, L1, Huber and Vapnik losses as well as arbitrary user-supplied
//! polyhedral penalties. The smoothing problem is solved by a primal-dual interior-point
//! method whose Newton systems reduce to a symmetric block-tridiagonal solve, so each
//! iteration costs `O(N n³)` in the number of time steps `N`.
//!
//! Module map:
//!
//! * [`penalty`] – the [`PlqPenalty`] type, atom constructors, evaluators.
//! * [`analysis`] – coercivity / finiteness checks and scalar normalization constants.
//! * [`model`] – state-space models and the stacked smoothing objective.
//! * [`linalg`] – block-tridiagonal factorization and small dense helpers.
//! * [`ip`] – the structured interior-point solver and a dense reference solver.
//! * [`oracle`] – the classical Kalman filter / RTS smoother for the quadratic case.
//! * [`sim`] – synthetic data with Gaussian, Laplace and outlier-contaminated noise.

pub mod analysis;
pub mod error;
pub mod ip;
pub mod linalg;
mod lp;
pub mod model;
pub mod oracle;
pub mod penalty;
pub mod sim;

pub use error::{Error, Result};
pub use ip::{ip_solve, IpIterate, SmootherResult, SolverOptions};
pub use model::{build_problem, SmootherProblem, StateSpaceModel};
pub use penalty::{AtomKind, PenaltySpec, PlqPenalty};
