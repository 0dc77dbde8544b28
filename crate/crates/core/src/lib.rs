//! Simulation core for a cavity-optomechanical system with coherent feedback
//! and optical/mechanical parametric amplification.
//!
//! Everything here is pure computation over value types: mean-field and
//! covariance dynamics, Gaussian correlation measures, limit-cycle detection,
//! and sweep specifications. IO, parallelism and wall clocks live in the
//! `comfb` companion crate.
//!
//! All rates and times are dimensionless in units of the mechanical
//! frequency `omega_b`; SI quantities are converted at the boundary
//! (see [`model::units`]).

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod contour;
pub mod cycle;
pub mod diagnostics;
pub mod drift;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod mean_field;
pub mod measures;
pub mod model;
pub mod ode;
pub mod pipeline;
pub mod presets;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use measures::{CorrelationRecord, CovarianceMatrix};
pub use model::{DerivedParams, SystemParams};
