//! Particle dynamics for classical and extended Hamiltonians (Nosé thermostat,
//! Andersen–Parrinello–Rahman cell dynamics) together with a kernel-regularized
//! Irving–Kirkwood–Noll field extractor and finite-difference evaluation of the
//! resulting continuum balance laws.
//!
//! Layout:
//! * [`state`], [`trajectory`], [`grid`]: shared containers.
//! * [`potentials`]: pair and external potentials.
//! * [`dynamics`]: Hamiltonians, equations of motion, integrators, monitors.
//! * [`ensemble`]: initial densities, parallel batches, ensemble averages.
//! * [`fields`]: continuum fields as ensemble averages of mollified Dirac combs.
//! * [`balance`]: residuals of the mass, momentum and energy balances.
//! * [`checks`]: the built-in verification suite.
//! * [`scenarios`]: longer acceptance runs.

pub mod balance;
pub mod checks;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod potentials;
pub mod scenarios;
pub mod state;
pub mod trajectory;
mod units;

pub use error::{Error, Result};
pub use units::Units;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use dynamics::{Backend, EquationsOfMotion, System};
pub use fields::{FieldSet, Kernel};
pub use grid::GridSpec;
pub use state::{AprState, NhState, NveState, ParticleSet};
pub use trajectory::Trajectory;
