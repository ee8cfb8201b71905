//! Kernel-regularised continuum fields from ensembles of trajectories.

mod assemble;
pub mod catalog;
mod fieldset;
mod kernel;

pub use assemble::compute_fields;
pub use catalog::{CatalogEntry, CATALOG};
pub use fieldset::{ncomp, Field, FieldSet};
pub use kernel::{BondQuadrature, Kernel, Stamp};

use crate::dynamics::{Backend, System};
use crate::ensemble::EnsembleBatch;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::trajectory::Clock;

fn require(system: &System, backend: Backend) -> Result<()> {
    use crate::dynamics::EquationsOfMotion;
    if system.backend() != backend {
        return Err(Error::BackendMismatch(format!("requires {backend}, got {}", system.backend())));
    }
    Ok(())
}

/// `n, ρ, ρv, v, ε_K, ε_V`.
pub fn primary_fields(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    compute_fields(batch, system, grid, clock)?.subset(&["n", "rho", "rho_v", "v", "eps_K", "eps_V"])
}

/// Collective and distributed thermostat energies.
pub fn extended_energy_fields_nh(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    require(system, Backend::Nh)?;
    compute_fields(batch, system, grid, clock)?.subset(&["eps_ps", "eps_s", "eps_bar_ps", "eps_bar_s"])
}

/// Collective and distributed enthalpic energies.
pub fn extended_energy_fields_apr(batch: &EnsembleBatch, system: &System, grid: &GridSpec) -> Result<FieldSet> {
    require(system, Backend::Apr)?;
    compute_fields(batch, system, grid, Clock::Virtual)?.subset(&["eps_P", "eps_bar_P"])
}

/// `T_K, T_V, T`.
pub fn stress_fields(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    compute_fields(batch, system, grid, clock)?.subset(&["T_K", "T_V", "T"])
}

/// Heat-flux contributions applicable to the backend.
pub fn heat_flux_fields(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    use crate::dynamics::EquationsOfMotion;
    let names: &[&str] = match system.backend() {
        Backend::Nve => &["q_K", "q_V", "q_T"],
        Backend::Nh => &["q_K", "q_V", "q_T", "q_ps", "q_s"],
        Backend::Apr => &["q_K", "q_V", "q_T", "q_P"],
    };
    compute_fields(batch, system, grid, clock)?.subset(names)
}

/// Source terms applicable to the backend.
pub fn source_fields(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    use crate::dynamics::EquationsOfMotion;
    let names: &[&str] = match system.backend() {
        Backend::Nve => &["sigma_eps_0"],
        Backend::Nh => &[
            "sigma_rho",
            "sigma_eps_0",
            "sigma_eps_K",
            "sigma_eps_V",
            "sigma_eps_ps",
            "sigma_eps_s",
            "sigma_bar_ps",
            "sigma_bar_s",
        ],
        Backend::Apr => &["sigma_eps_apr"],
    };
    compute_fields(batch, system, grid, clock)?.subset(names)
}

/// `f^e`.
pub fn external_force_field(batch: &EnsembleBatch, system: &System, grid: &GridSpec, clock: Clock) -> Result<FieldSet> {
    compute_fields(batch, system, grid, clock)?.subset(&["f_e"])
}
