//! Outage-constrained power loading for the multi-user MISO downlink.
//!
//! The base station holds Gaussian-perturbed estimates of the user channels and
//! fixes a set of beamforming directions. For each user the probability that the
//! received SINR meets its target must stay above `1 - epsilon`. This crate
//! evaluates that probability exactly through a contour-integral CDF of a
//! Hermitian quadratic form and minimises the total transmit power with:
//!
//! * [`descent::solve_general`]: feasible cyclic coordinate descent for any
//!   fixed beamformer, bisecting each coordinate against the exact integral;
//! * [`zf::solve_zf_coord_descent`]: the same loop for zero-forcing directions,
//!   with the probability replaced by a residue closed form;
//! * [`zf::solve_zf_coord_update`]: a closed-form cyclic update for
//!   zero-forcing directions that reuses one eigendecomposition per user and cycle.
//!
//! Every probability can be cross-checked with the seeded Monte Carlo estimators
//! in [`quadratic::monte_carlo`].

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descent;
pub mod error;
pub mod linalg;
pub mod model;
pub mod parallel;
pub mod quadratic;
pub mod zf;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use model::{BeamformerKind, BeamformerMatrix, PowerAllocation, QosSpec, QuadraticOutageForm, ScenarioInstance};
pub use parallel::Execution;
pub use quadratic::{EstimateMethod, GaussianQuadratic, ProbabilityEstimate};
