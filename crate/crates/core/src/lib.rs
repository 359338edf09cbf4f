//! Command-filtered backstepping flight control for a 6-DOF quadrotor.
//!
//! The crate is organised bottom-up:
//!
//! * [`vehicle_model`] holds the plant, motor mixing and the auxiliary
//!   translational geometry.
//! * [`filters`] provides the super-twisting command filter and the
//!   first-order dynamic-surface filter.
//! * [`observers`] provides the nonlinear disturbance observer and the
//!   two-state high-gain observer.
//! * [`attitude_control`] and [`position_control`] are the inner and outer
//!   backstepping loops.
//! * [`disturbances`] generates the deterministic and seeded-stochastic
//!   disturbance signals.
//! * [`sim`] wires everything into a 48-state closed loop, integrates it with
//!   fixed-step RK4 and writes traces and summaries.

pub mod attitude_control;
pub mod disturbances;
mod error;
pub mod filters;
pub mod observers;
pub mod position_control;
pub mod sim;
pub mod vehicle_model;

pub use error::{Error, Result};
