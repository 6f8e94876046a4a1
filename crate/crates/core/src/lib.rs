//! Numerical laboratory for a free-boundary vector-host (mosquito/bird)
//! reaction-diffusion model of West Nile virus.
//!
//! * [`model`] and [`ode`]: parameters, `R0`, the endemic equilibrium and the
//!   homogeneous dynamics.
//! * [`thresholds`] and [`eigen_oracle`]: `R0^D`, the risk index `R0^F(t)` and
//!   an independent discrete eigenvalue check.
//! * [`front`]: the moving-front solver in front-fixed coordinates, including
//!   a scalar logistic validation mode.
//! * [`analysis`]: spreading/vanishing classification, speed fits and the
//!   explicit upper/lower solutions used as comparison audits.
//! * [`wavespeed`]: minimal traveling-front speed and semi-wavefront solves.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod eigen_oracle;
pub mod error;
pub mod front;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod thresholds;
pub mod wavespeed;

pub use error::{Result, WnvError};
pub use model::{EndemicEquilibrium, EpidemicParams, ModelMode};
pub use thresholds::{DomainInterval, EigenConstruction, ThresholdReport};
