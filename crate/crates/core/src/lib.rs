//! Numerical laboratory for the two-dimensional Broadwell model.
//!
//! The physical system `du_i/dt + c_i . grad u_i = C_i(u)` and its
//! self-similar rescaling are integrated on uniform grids, while weighted
//! line functionals are monitored against closed-form comparison bounds.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod cli;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod model;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use fields::{Axis, Boundary, Domain, Field, FrameTransform, Interpolation};
pub use functionals::FunctionalSeries;
pub use model::VelocityModel;
pub use solver::{
    run_physical, run_rescaled, step_physical, step_rescaled, CollisionIntegrator, DtMode,
    Monitors, PhysicalStepConfig, RescaledStepConfig, RunOutput, RunStatus,
};
