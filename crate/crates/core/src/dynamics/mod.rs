//! Hamiltonians, equations of motion and integrators.

mod apr;
pub mod fd;
mod integrator;
mod liouville;
mod nh;
mod nve;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::potentials::Interactions;
use crate::state::ParticleSet;
use crate::Vec3;

pub use apr::{eom_apr_exact, kinetic_energy_exact_apr, AprKinetic, AprSystem, ExactKineticTerms, CONSTRAINT_TOL};
pub use integrator::{
    integrate, integrate_partial, real_time_map, step, ConservationMonitor, IntegrationRun, IntegratorSpec, Scheme,
};
pub use liouville::phase_volume_check;
pub use nh::NhSystem;
pub use nve::NveSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Nve,
    Nh,
    Apr,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Nve => "NVE",
            Backend::Nh => "NH",
            Backend::Apr => "APR",
        })
    }
}

/// Hamiltonian vector field on a flat phase vector `z = [q, p]`.
pub trait EquationsOfMotion: Sync {
    fn backend(&self) -> Backend;
    fn particles(&self) -> &ParticleSet;
    fn interactions(&self) -> &Interactions;
    /// Length of the phase vector.
    fn dim(&self) -> usize;
    fn hamiltonian(&self, z: &[f64]) -> Result<f64>;
    /// `ż = J ∇H(z)`, written into `out`.
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()>;
    /// Validates state invariants (positive `s`, positive `det F`).
    fn check_state(&self, _z: &[f64]) -> Result<()> {
        Ok(())
    }
    /// Thermostat variable `s` for virtual-time backends.
    fn thermostat_s(&self, _z: &[f64]) -> Option<f64> {
        None
    }
    /// Total linear momentum, when it is a meaningful conserved quantity.
    fn linear_momentum(&self, _z: &[f64]) -> Option<Vec3> {
        None
    }
}

/// Closed set of the supported backends.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Nve(NveSystem),
    Nh(NhSystem),
    Apr(AprSystem),
}

macro_rules! delegate {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            System::Nve($s) => $e,
            System::Nh($s) => $e,
            System::Apr($s) => $e,
        }
    };
}

impl EquationsOfMotion for System {
    fn backend(&self) -> Backend {
        delegate!(self, s => s.backend())
    }
    fn particles(&self) -> &ParticleSet {
        delegate!(self, s => s.particles())
    }
    fn interactions(&self) -> &Interactions {
        delegate!(self, s => s.interactions())
    }
    fn dim(&self) -> usize {
        delegate!(self, s => s.dim())
    }
    fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        delegate!(self, s => s.hamiltonian(z))
    }
    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        delegate!(self, s => s.rhs(z, out))
    }
    fn check_state(&self, z: &[f64]) -> Result<()> {
        delegate!(self, s => s.check_state(z))
    }
    fn thermostat_s(&self, z: &[f64]) -> Option<f64> {
        delegate!(self, s => s.thermostat_s(z))
    }
    fn linear_momentum(&self, z: &[f64]) -> Option<Vec3> {
        delegate!(self, s => s.linear_momentum(z))
    }
}

impl From<NveSystem> for System {
    fn from(s: NveSystem) -> Self {
        System::Nve(s)
    }
}

impl From<NhSystem> for System {
    fn from(s: NhSystem) -> Self {
        System::Nh(s)
    }
}

impl From<AprSystem> for System {
    fn from(s: AprSystem) -> Self {
        System::Apr(s)
    }
}
