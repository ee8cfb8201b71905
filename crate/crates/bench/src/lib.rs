//! Fixtures shared by the criterion benches in `benches/`.

use ikn_core::dynamics::{IntegratorSpec, NhSystem};
use ikn_core::ensemble::{run_batch, sample_initial, AuxiliaryScheme, EnsembleBatch, InitialDensity, MomentumScheme, PositionScheme};
use ikn_core::potentials::{ExternalPotential, Interactions, PairPotential};
use ikn_core::{scenarios, ParticleSet, Result, System, Units, Vec3};

/// Cut Lennard-Jones pairs in a weak harmonic trap.
pub fn lj_interactions() -> Result<Interactions> {
    Ok(Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0)?)
        .with_external(ExternalPotential::HarmonicTrap { kappa: 0.3, center: Vec3::zeros() }))
}

/// Thermostatted droplet and one sampled phase point.
pub fn nh_droplet(n: usize) -> Result<(System, Vec<f64>)> {
    let sys: System = NhSystem::new(ParticleSet::uniform(n, 1.0)?, lj_interactions()?, 10.0, 1.0, Units::default(), 10.0)?.into();
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 1.2, jitter: 0.05, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 1.0 },
        aux: AuxiliaryScheme::default(),
        units: Units::default(),
        seed: 11,
    };
    let z = sample_initial(&d, &sys, 1)?.remove(0);
    Ok((sys, z))
}

/// Positions of the first `n` lattice sites of the droplet.
pub fn droplet_positions(n: usize) -> Vec<Vec3> {
    ikn_core::ensemble::lattice_sites(n, 1.2, Vec3::zeros())
}

/// Integrated dimer ensemble of `m` members, as used by the field benches.
pub fn dimer_batch(m: usize) -> Result<(System, EnsembleBatch)> {
    let sys = scenarios::nh_dimer()?;
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 1.0, jitter: 0.15, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 0.3 },
        aux: AuxiliaryScheme { sigma_s: 0.1, sigma_ps: 0.3, ..Default::default() },
        units: Units::default(),
        seed: 5,
    };
    let init = sample_initial(&d, &sys, m)?;
    let batch = run_batch(&sys, &init, &IntegratorSpec::midpoint(0.01), 50, 10)?;
    Ok((sys, batch))
}
