//! Longer verification runs: conservation and its step-size scaling, thermostat
//! and barostat statistics, residual convergence and energy-mode consistency.
//!
//! Each function returns raw measurements; the thresholds live with the caller.

use crate::balance::{convergence_report, energy_balance_residual, manufactured_fields, balance_report, BalanceSpec, ConvergenceFit, EnergyMode};
use crate::checks::relaxed_cluster;
use crate::dynamics::{AprKinetic, AprSystem, Backend, IntegratorSpec, NhSystem, System};
use crate::ensemble::{lattice_sites, run_batch, sample_initial, AuxiliaryScheme, InitialDensity, MomentumScheme, PositionScheme};
use crate::error::Result;
use crate::fields::{compute_fields, FieldSet};
use crate::grid::GridSpec;
use crate::potentials::{Bond, ExternalPotential, Interactions, PairPotential, Topology};
use crate::state::{AprState, NhState, ParticleSet};
use crate::trajectory::Clock;
use crate::units::Units;
use crate::{Mat3, Vec3};

/// Worst relative drift of the extended Hamiltonian at `Δτ` and `Δτ/2`.
#[derive(Debug, Clone, Copy)]
pub struct DriftPair {
    pub coarse: f64,
    pub fine: f64,
}

impl DriftPair {
    pub fn ratio(&self) -> f64 {
        self.coarse / self.fine
    }
}

/// Eight Lennard-Jones particles started at a relaxed cluster, sixteen members,
/// integrated over the same virtual time at `1e-3` and `5e-4`.
pub fn lj_cluster_drift(backend: Backend) -> Result<DriftPair> {
    let inter = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0)?);
    let x = relaxed_cluster(&inter, 8, 1.12)?;
    let parts = ParticleSet::uniform(8, 1.0)?;
    let (sys, t0): (System, f64) = match backend {
        Backend::Apr => (AprSystem::new(parts, inter, 20.0, 20.0, Mat3::zeros(), AprKinetic::ParrinelloRahman)?.into(), 0.1),
        _ => (NhSystem::new(parts, inter, 10.0, 0.03, Units::default(), 10.0)?.into(), 0.03),
    };
    let d = InitialDensity {
        positions: PositionScheme::Explicit(x),
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: t0 },
        aux: AuxiliaryScheme { sigma_s: 0.0, sigma_ps: 0.0, ..Default::default() },
        units: Units::default(),
        seed: 64,
    };
    let init = sample_initial(&d, &sys, 16)?;
    let drift = |dt: f64, steps: usize| -> Result<f64> { Ok(run_batch(&sys, &init, &IntegratorSpec::midpoint(dt), steps, steps / 10)?.max_drift()) };
    Ok(DriftPair { coarse: drift(1e-3, 10_000)?, fine: drift(5e-4, 20_000)? })
}

/// Mean and standard error of a per-trajectory statistic.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn from_samples(x: &[f64]) -> Estimate {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate { mean, stderr: (var / n).sqrt() }
    }
}

/// Kinetic temperature `Σ m|v|²/(3N k_B)` of a 32-particle Lennard-Jones droplet
/// held by a weak trap, averaged over virtual time after a burn-in third and
/// then over 64 members.
pub fn nh_kinetic_temperature() -> Result<Estimate> {
    let n = 32;
    let inter = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0)?)
        .with_external(ExternalPotential::HarmonicTrap { kappa: 0.3, center: Vec3::zeros() });
    let parts = ParticleSet::uniform(n, 1.0)?;
    let sys: System = NhSystem::new(parts.clone(), inter, 10.0, 1.0, Units::default(), 10.0)?.into();
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 1.2, jitter: 0.05, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 1.0 },
        aux: AuxiliaryScheme::default(),
        units: Units::default(),
        seed: 3,
    };
    let init = sample_initial(&d, &sys, 64)?;
    let batch = run_batch(&sys, &init, &IntegratorSpec::midpoint(0.004), 15_000, 50)?;
    let kb = Units::default().k_b;
    let mut per_member = Vec::new();
    for tr in &batch.trajectories {
        let samples = tr.samples();
        let tail = &samples[samples.len() / 3..];
        let mut acc = 0.0;
        for smp in tail {
            let st = NhState::from_phase(&smp.z, n);
            acc += st.momenta.iter().zip(parts.masses()).map(|(p, m)| p.norm_squared() / (m * st.s * st.s)).sum::<f64>();
        }
        per_member.push(acc / (tail.len() as f64 * 3.0 * n as f64 * kb));
    }
    Ok(Estimate::from_samples(&per_member))
}

/// Bonds of a 2×2×2 simple-cubic cell with unit spacing, periodic with period 2:
/// every site bonds to its `+e_a` neighbour, through the image when needed.
pub fn periodic_cube_bonds() -> (Vec<Vec3>, Vec<Bond>) {
    let sites = lattice_sites(8, 1.0, Vec3::zeros());
    let find = |t: &Vec3| sites.iter().position(|s| (s - t).norm() < 1e-9);
    let mut bonds = Vec::new();
    for i in 0..sites.len() {
        for a in 0..3 {
            let mut t = sites[i];
            t[a] += 1.0;
            let mut shift = [0.0; 3];
            if find(&t).is_none() {
                t[a] -= 2.0;
                shift[a] = -2.0;
            }
            let j = find(&t).expect("periodic neighbour exists");
            bonds.push(Bond { i, j, shift });
        }
    }
    (sites, bonds)
}

/// Time-averaged deformation gradient of the periodic harmonic cell under
/// hydrostatic `P = p̄I`, against the closed-form stretch.
#[derive(Debug, Clone, Copy)]
pub struct CellAverage {
    pub mean: Mat3,
    pub lambda: f64,
}

impl CellAverage {
    /// `max |⟨F⟩ − λI| / λ`.
    pub fn relative_error(&self) -> f64 {
        (self.mean - Mat3::identity() * self.lambda).abs().max() / self.lambda
    }
}

/// Harmonic bonds of stiffness `k` and rest length 1: the enthalpy
/// `½·24k(λ − 1)² − 3ω p̄ λ` is stationary at `λ = 1 + ω p̄ / (8k)`.
pub fn apr_hydrostatic_cell() -> Result<CellAverage> {
    let (k, omega, pbar) = (1.0, 8.0, 0.1);
    let (sites, bonds) = periodic_cube_bonds();
    let n = sites.len();
    let inter = Interactions::new(Some(PairPotential::harmonic(k, 1.0)?), ExternalPotential::None, Topology::Bonds(bonds));
    let sys: System = AprSystem::new(ParticleSet::uniform(n, 1.0)?, inter, 20.0, omega, Mat3::identity() * pbar, AprKinetic::ParrinelloRahman)?.into();
    let d = InitialDensity {
        positions: PositionScheme::Explicit(sites),
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 0.002 },
        aux: AuxiliaryScheme { cell0: Mat3::identity() * 1.05, ..Default::default() },
        units: Units::default(),
        seed: 4,
    };
    let init = sample_initial(&d, &sys, 8)?;
    let batch = run_batch(&sys, &init, &IntegratorSpec::midpoint(0.01), 20_000, 10)?;
    let mut mean = Mat3::zeros();
    let mut count = 0.0;
    for tr in &batch.trajectories {
        let samples = tr.samples();
        for smp in &samples[samples.len() / 10..] {
            mean += AprState::from_phase(&smp.z, n).cell;
            count += 1.0;
        }
    }
    Ok(CellAverage { mean: mean / count, lambda: 1.0 + omega * pbar / (8.0 * k) })
}

/// Field grid of the thermostatted dimer benchmark.
pub fn dimer_grid() -> Result<GridSpec> {
    GridSpec::cube(3.0, 0.3, 0.0, 0.1, 6)
}

/// Thermostatted harmonic dimer in a trap. `ω` is the interior volume of
/// [`dimer_grid`], so collective thermostat densities integrate to the
/// thermostat energy over the evaluated region.
pub fn nh_dimer() -> Result<System> {
    let grid = dimer_grid()?;
    let omega = grid.interior_mask().iter().filter(|m| **m).count() as f64 * grid.cell_volume();
    let inter = Interactions::pairwise(PairPotential::harmonic(1.0, 1.0)?)
        .with_external(ExternalPotential::HarmonicTrap { kappa: 2.0, center: Vec3::zeros() });
    Ok(NhSystem::new(ParticleSet::uniform(2, 1.0)?, inter, 1.0, 0.3, Units::default(), omega)?.into())
}

/// Virtual-clock fields of `m` dimer members drawn with `seed`.
pub fn dimer_fields(sys: &System, m: usize, seed: u64) -> Result<FieldSet> {
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 1.0, jitter: 0.15, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 0.3 },
        aux: AuxiliaryScheme { sigma_s: 0.1, sigma_ps: 0.3, ..Default::default() },
        units: Units::default(),
        seed,
    };
    let init = sample_initial(&d, sys, m)?;
    let batch = run_batch(sys, &init, &IntegratorSpec::midpoint(0.01), 50, 10)?;
    compute_fields(&batch, sys, &dimer_grid()?, Clock::Virtual)
}

/// Stochastic-residual fits over `sizes` for every balance, both energy modes.
/// The energy fit of each mode is labelled with the mode.
pub fn dimer_convergence(sizes: &[usize]) -> Result<Vec<(String, ConvergenceFit)>> {
    let sys = nh_dimer()?;
    let mut out = Vec::new();
    for mode in [EnergyMode::Collective, EnergyMode::Distributed] {
        let spec = BalanceSpec { backend: Backend::Nh, mode };
        let rep = convergence_report(sizes, &spec, |m, half| dimer_fields(&sys, m, 1000 * m as u64 + half as u64))?;
        for (name, fit) in rep.balances {
            let keep = name.starts_with("energy") || mode == EnergyMode::Collective;
            if keep {
                out.push((name, fit));
            }
        }
    }
    Ok(out)
}

const WAVE_FIELDS: &[(&str, u8)] =
    &[("rho", 0), ("rho_v", 1), ("v", 1), ("T", 2), ("f_e", 1), ("eps_K", 0), ("eps_V", 0), ("q_K", 1), ("q_V", 1), ("q_T", 1)];

/// A density bump translating rigidly under constant stress, on a grid with the
/// given spacings. All balances hold exactly in the continuum.
pub fn travelling_wave(dx: f64, dt: f64, nt: usize) -> Result<FieldSet> {
    let g = GridSpec::new([-2.0; 3], [2.0; 3], dx, 0.4, 0.0, dt, nt)?;
    let c = Vec3::new(0.6, -0.3, 0.2);
    let stress = [0.4, 0.1, -0.2, 0.1, 0.3, 0.05, -0.2, 0.05, 0.5];
    Ok(manufactured_fields(&g, Backend::Nve, Clock::Virtual, WAVE_FIELDS, |name, r, t| {
        let xi = r - c * t - Vec3::new(0.1, 0.0, -0.1);
        let prof = (-xi.norm_squared()).exp();
        let rho = 1.0 + 0.5 * prof;
        match name {
            "rho" => vec![rho],
            "rho_v" => (c * rho).as_slice().to_vec(),
            "v" => c.as_slice().to_vec(),
            "T" => stress.to_vec(),
            "eps_K" => vec![0.5 * c.norm_squared() * rho],
            "eps_V" => vec![0.3 * prof * prof],
            _ => vec![0.0; 3],
        }
    }))
}

/// `L∞` residual ratio between the travelling wave at `(Δx, Δt) = (0.2, 0.1)`
/// and at half of both; second order gives 4.
pub fn manufactured_ratios() -> Result<Vec<(String, f64)>> {
    let spec = BalanceSpec { backend: Backend::Nve, mode: EnergyMode::Collective };
    let coarse = balance_report(&travelling_wave(0.2, 0.1, 5)?, &spec)?;
    let fine = balance_report(&travelling_wave(0.1, 0.05, 9)?, &spec)?;
    Ok(coarse.entries.iter().zip(&fine.entries).map(|(a, b)| (a.name.clone(), a.linf / b.linf)).collect())
}

/// Box-integrated energy residual of each mode over independent batches.
#[derive(Debug, Clone, Copy)]
pub struct ModeComparison {
    pub collective: Estimate,
    pub distributed: Estimate,
}

impl ModeComparison {
    pub fn difference(&self) -> f64 {
        (self.collective.mean - self.distributed.mean).abs()
    }

    /// Standard error of the difference of the two means.
    pub fn stderr(&self) -> f64 {
        self.collective.stderr.hypot(self.distributed.stderr)
    }
}

/// Integrates the energy residual of both modes over the interior region and all
/// interior times, for `batches` dimer ensembles of `m` members each.
pub fn energy_mode_comparison(batches: usize, m: usize) -> Result<ModeComparison> {
    let sys = nh_dimer()?;
    let (mut coll, mut dist) = (Vec::new(), Vec::new());
    for b in 0..batches as u64 {
        let fs = dimer_fields(&sys, m, 77 + b)?;
        let weight = fs.grid.cell_volume() * fs.grid.dt;
        for (mode, out) in [(EnergyMode::Collective, &mut coll), (EnergyMode::Distributed, &mut dist)] {
            let e = energy_balance_residual(&fs, &BalanceSpec { backend: Backend::Nh, mode })?;
            out.push(e.integral(weight).iter().map(|v| v[0]).sum::<f64>());
        }
    }
    Ok(ModeComparison { collective: Estimate::from_samples(&coll), distributed: Estimate::from_samples(&dist) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_cube_has_three_bonds_per_site() {
        let (sites, bonds) = periodic_cube_bonds();
        assert_eq!(bonds.len(), 24);
        for i in 0..sites.len() {
            assert_eq!(bonds.iter().filter(|b| b.i == i).count(), 3);
        }
        for b in &bonds {
            let sep = sites[b.i] - sites[b.j] + Vec3::from(b.shift);
            assert!((sep.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimer_omega_is_interior_volume() {
        let sys = nh_dimer().unwrap();
        match sys {
            System::Nh(nh) => assert!((nh.omega_ref - 13f64.powi(3) * 0.027).abs() < 1e-9),
            _ => unreachable!(),
        }
    }
}
