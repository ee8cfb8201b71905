//! Verification suite.
//!
//! Each check returns the measured quantity so that callers can report it next to
//! its tolerance. [`run_suite`] runs the desk-scale set used by `ikn check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::balance::{balance_report, BalanceSpec, EnergyMode};
use crate::dynamics::fd::{gradient_mismatch, rhs_divergence};
use crate::dynamics::{phase_volume_check, AprKinetic, AprSystem, Backend, EquationsOfMotion, IntegratorSpec, NhSystem, NveSystem, System};
use crate::ensemble::{lattice_sites, run_batch, EnsembleBatch};
use crate::error::{Error, Result};
use crate::fields::{compute_fields, FieldSet, Kernel};
use crate::grid::GridSpec;
use crate::linalg::mat_from_row_major;
use crate::potentials::{ExternalPotential, Interactions, PairPotential};
use crate::state::{AprState, NhState, NveState, ParticleSet};
use crate::trajectory::Clock;
use crate::units::Units;
use crate::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckOutcome { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<44} {:.3e} (tol {:.1e})", self.name, self.value, self.tolerance)
    }
}

/// Small Lennard-Jones cluster in a weak harmonic trap, for any backend.
pub fn fixture(backend: Backend, kinetic: AprKinetic, n: usize) -> Result<System> {
    let parts = ParticleSet::new((0..n).map(|k| 1.0 + 0.25 * (k % 3) as f64).collect())?;
    let inter = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0)?)
        .with_external(ExternalPotential::HarmonicTrap { kappa: 0.3, center: Vec3::new(0.05, -0.02, 0.01) });
    Ok(match backend {
        Backend::Nve => NveSystem::new(parts, inter)?.into(),
        Backend::Nh => NhSystem::new(parts, inter, 2.0, 1.0, Units::default(), 10.0)?.into(),
        Backend::Apr => {
            let piola = Mat3::new(0.2, 0.05, 0.0, 0.05, -0.1, 0.02, 0.0, 0.02, 0.1);
            AprSystem::new(parts, inter, 5.0, 8.0, piola, kinetic)?.into()
        }
    })
}

/// Lattice cluster relaxed by steepest descent to a local minimum of `inter`.
/// A small deterministic offset breaks the cubic symmetry first.
pub fn relaxed_cluster(inter: &Interactions, n: usize, spacing: f64) -> Result<Vec<Vec3>> {
    let mut x = lattice_sites(n, spacing, Vec3::zeros());
    for (k, p) in x.iter_mut().enumerate() {
        let k = k as f64;
        *p += Vec3::new(0.01 * k, -0.007 * k, 0.003 * k * k);
    }
    for _ in 0..50_000 {
        let f = inter.forces(&x)?;
        if f.iter().all(|v| v.norm() < 1e-11) {
            break;
        }
        for (p, v) in x.iter_mut().zip(&f) {
            *p += v * 2e-3;
        }
    }
    Ok(x)
}

fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    sigma * rng.sample::<f64, _>(StandardNormal)
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    Vec3::new(normal(rng, sigma), normal(rng, sigma), normal(rng, sigma))
}

/// Random admissible phase point near a lattice configuration. For the exact
/// kinetic backend the momenta are drawn on the admissible set.
pub fn random_state(system: &System, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = system.particles().len();
    let sites: Vec<Vec3> = lattice_sites(n, 1.15, Vec3::zeros()).into_iter().map(|s| s + gaussian(rng, 0.04)).collect();
    let momenta: Vec<Vec3> = (0..n).map(|_| gaussian(rng, 0.6)).collect();
    let z = match system {
        System::Nve(_) => NveState { positions: sites, momenta }.to_phase(),
        System::Nh(_) => {
            let s = rng.random_range(0.8..1.25);
            NhState { positions: sites, momenta, s, p_s: normal(rng, 0.5) }.to_phase()
        }
        System::Apr(sys) => {
            let mut f = Mat3::identity();
            for x in f.iter_mut() {
                *x += normal(rng, 0.04);
            }
            let finv = f.try_inverse().ok_or(Error::SingularCell(f.determinant()))?;
            let reference: Vec<Vec3> = sites.iter().map(|r| finv * r).collect();
            match sys.kinetic {
                AprKinetic::ParrinelloRahman => {
                    let mut g = Mat3::zeros();
                    for x in g.iter_mut() {
                        *x += normal(rng, 0.4);
                    }
                    AprState { reference, momenta, cell: f, cell_momentum: g }.to_phase()
                }
                AprKinetic::ExactMinimalNorm => {
                    let sdot: Vec<Vec3> = (0..n).map(|_| gaussian(rng, 0.5)).collect();
                    let mut fdot = Mat3::zeros();
                    for x in fdot.iter_mut() {
                        *x += normal(rng, 0.1);
                    }
                    sys.exact_phase(&reference, &f, &sdot, &fdot)
                }
            }
        }
    };
    system.check_state(&z)?;
    Ok(z)
}

/// Largest relative mismatch between the RHS and `J∇H` by finite differences.
pub fn gradient_check(system: &System, states: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..states {
        let z = random_state(system, &mut rng)?;
        worst = worst.max(gradient_mismatch(system, &z)?);
    }
    Ok(worst)
}

/// Largest `|tr ∂f/∂z|` over random states.
pub fn divergence_check(system: &System, states: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..states {
        let z = random_state(system, &mut rng)?;
        worst = worst.max(rhs_divergence(system, &z)?.abs());
    }
    Ok(worst)
}

/// `|det − 1|` of the tangent map after `steps` midpoint steps from a random state.
pub fn phase_volume_error(system: &System, seed: u64, dtau: f64, steps: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = random_state(system, &mut rng)?;
    Ok((phase_volume_check(system, &z, dtau, steps)? - 1.0).abs())
}

/// Single-sample batch holding `states` at `t = 0`.
pub fn snapshot_batch(system: &System, states: &[Vec<f64>]) -> Result<EnsembleBatch> {
    run_batch(system, states, &IntegratorSpec::midpoint(1.0), 0, 1)
}

/// Grid used by the built-in checks: `[−3, 3]³`, `Δx = 0.3`, `h = 3Δx`.
pub fn default_grid(dt: f64, nt: usize) -> Result<GridSpec> {
    GridSpec::cube(3.0, 0.3, 0.0, dt, nt)
}

/// Errors of `∫ρ = Σm`, `∫n = 1` and `∫b_h = 1` for a scattered configuration.
pub fn normalization_errors(grid: &GridSpec, seed: u64) -> Result<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 5;
    let parts = ParticleSet::new((0..n).map(|_| rng.random_range(0.5..2.0)).collect())?;
    let half = 0.5 * (grid.upper[0] - grid.lower[0]) - grid.h;
    let positions: Vec<Vec3> = (0..n)
        .map(|_| Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half)))
        .collect();
    let sys: System = NveSystem::new(parts.clone(), Interactions::pairwise(PairPotential::harmonic(1.0, 0.5)?))?.into();
    let z = NveState { positions: positions.clone(), momenta: vec![Vec3::zeros(); n] }.to_phase();
    let fs = compute_fields(&snapshot_batch(&sys, &[z])?, &sys, grid, Clock::Virtual)?;
    let rho = (fs.integral("rho", 0)?[0] - parts.total_mass()).abs();
    let num = (fs.integral("n", 0)?[0] - 1.0).abs();
    // ∫T_V = Σ (V′/r) x⊗x ∫b over bonds; a single bond isolates ∫b.
    let mut bond = 0.0f64;
    for (i, j) in [(0, 1), (2, 3), (1, 4)] {
        let pos = vec![positions[i], positions[j]];
        let two = NveSystem::new(ParticleSet::uniform(2, 1.0)?, Interactions::pairwise(PairPotential::harmonic(1.0, 0.5)?))?;
        let x = pos[0] - pos[1];
        let r = x.norm();
        let coef = (r - 0.5) / r;
        let two: System = two.into();
        let z = NveState { positions: pos, momenta: vec![Vec3::zeros(); 2] }.to_phase();
        let fs = compute_fields(&snapshot_batch(&two, &[z])?, &two, grid, Clock::Virtual)?;
        let tv = fs.integral("T_V", 0)?;
        let trace = tv[0] + tv[4] + tv[8];
        bond = bond.max((trace / (coef * r * r) - 1.0).abs());
    }
    Ok([rho, num, bond])
}

/// Discrete kernel weights of one point at every node, by direct evaluation.
fn oracle_weights(grid: &GridSpec, kernel: &Kernel, p: &Vec3) -> Vec<f64> {
    let nodes = grid.node_count();
    let mut w: Vec<f64> = (0..nodes).map(|i| kernel.value((grid.node(i) - p).norm())).collect();
    let total: f64 = w.iter().sum::<f64>() * grid.cell_volume();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Largest nodal errors of `T_V` and `q_V` for one harmonic bond whose ends move
/// with `±u` along the bond, against a direct single-bond evaluation.
pub fn two_body_oracle_errors(grid: &GridSpec) -> Result<(f64, f64)> {
    let (k_spring, r0, m) = (1.0, 1.0, 1.0);
    let e = Vec3::new(1.0, 0.4, -0.3).normalize();
    let (ri, rj) = (Vec3::new(0.11, -0.07, 0.05) + e * 0.65, Vec3::new(0.11, -0.07, 0.05) - e * 0.65);
    let u = 0.7;
    let (vi, vj) = (e * u, -e * u);
    let sys: System = NveSystem::new(ParticleSet::uniform(2, m)?, Interactions::pairwise(PairPotential::harmonic(k_spring, r0)?))?.into();
    let z = NveState { positions: vec![ri, rj], momenta: vec![vi * m, vj * m] }.to_phase();
    let fs = compute_fields(&snapshot_batch(&sys, &[z])?, &sys, grid, Clock::Virtual)?;

    let kernel = Kernel::new(grid.h)?;
    let nodes = grid.node_count();
    let (wi, wj) = (oracle_weights(grid, &kernel, &ri), oracle_weights(grid, &kernel, &rj));
    let floor = 1e-8 * 2.0 * m / grid.box_volume();
    let vel: Vec<Vec3> = (0..nodes)
        .map(|i| {
            let rho = m * (wi[i] + wj[i]);
            if rho > floor {
                (vi * wi[i] + vj * wj[i]) * m / rho
            } else {
                Vec3::zeros()
            }
        })
        .collect();
    let x = ri - rj;
    let r = x.norm();
    let coef = k_spring * (r - r0) / r;
    // Eight-point Gauss-Legendre on [0, 1].
    let gl = [
        (0.019_855_071_751_231_9, 0.050_614_268_145_188_1),
        (0.101_666_761_293_186_6, 0.111_190_517_226_687_2),
        (0.237_233_795_041_835_5, 0.156_853_322_938_943_6),
        (0.408_282_678_752_175_1, 0.181_341_891_689_181),
        (0.591_717_321_247_824_9, 0.181_341_891_689_181),
        (0.762_766_204_958_164_5, 0.156_853_322_938_943_6),
        (0.898_333_238_706_813_4, 0.111_190_517_226_687_2),
        (0.980_144_928_248_768_1, 0.050_614_268_145_188_1),
    ];
    let mut b = vec![0.0; nodes];
    for (alpha, wa) in gl {
        let w = oracle_weights(grid, &kernel, &(ri * alpha + rj * (1.0 - alpha)));
        for (bi, wi) in b.iter_mut().zip(w) {
            *bi += wa * wi;
        }
    }
    let (mut err_t, mut err_q) = (0.0f64, 0.0f64);
    for i in 0..nodes {
        let tv = fs.at("T_V", 0, i)?;
        let expect = x * x.transpose() * (coef * b[i]);
        let got = mat_from_row_major(tv);
        err_t = err_t.max((got - expect).abs().max());
        let q = -x * (coef * b[i] * x.dot(&(-vel[i])));
        let got = Vec3::from_column_slice(fs.at("q_V", 0, i)?);
        err_q = err_q.max((got - q).abs().max());
    }
    Ok((err_t, err_q))
}

/// Static, force-free configuration of `n` well-separated particles.
fn static_states(backend: Backend, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let sites = lattice_sites(n, 1.3, Vec3::new(0.1, -0.05, 0.0));
    let z = match backend {
        Backend::Nve => NveState { positions: sites.clone(), momenta: vec![Vec3::zeros(); n] }.to_phase(),
        Backend::Nh => NhState { positions: sites.clone(), momenta: vec![Vec3::zeros(); n], s: 1.0, p_s: 0.0 }.to_phase(),
        Backend::Apr => AprState { reference: sites.clone(), momenta: vec![Vec3::zeros(); n], cell: Mat3::identity(), cell_momentum: Mat3::zeros() }.to_phase(),
    };
    (sites, z)
}

/// Systems whose dynamics reduce to the classical one: frozen thermostat with
/// `s = 1, p_s = 0`, and a frozen identity cell with `P = 0`.
pub fn reduced_system(backend: Backend, particles: ParticleSet, inter: Interactions) -> Result<System> {
    Ok(match backend {
        Backend::Nve => NveSystem::new(particles, inter)?.into(),
        Backend::Nh => NhSystem::new(particles, inter, 10.0, 1.0, Units::default(), 20.0)?.frozen(true).into(),
        Backend::Apr => AprSystem::new(particles, inter, 20.0, 20.0, Mat3::zeros(), AprKinetic::ParrinelloRahman)?.frozen_cell(true).into(),
    })
}

fn run_fields(system: &System, z0: &[f64], grid: &GridSpec, dtau: f64, steps: usize) -> Result<FieldSet> {
    let batch = run_batch(system, &[z0.to_vec()], &IntegratorSpec::midpoint(dtau), steps, 1)?;
    compute_fields(&batch, system, grid, Clock::Virtual)
}

/// Largest `|residual|` of every balance, backend and energy mode on a static,
/// force-free ensemble.
pub fn exact_zero_residual() -> Result<f64> {
    let grid = GridSpec::cube(3.0, 0.3, 0.0, 0.1, 6)?;
    let mut worst = 0.0f64;
    for backend in [Backend::Nve, Backend::Nh, Backend::Apr] {
        let (_, z) = static_states(backend, 4);
        let sys = reduced_system(backend, ParticleSet::uniform(4, 1.0)?, Interactions::free())?;
        let fs = run_fields(&sys, &z, &grid, 0.05, 10)?;
        for mode in [EnergyMode::Collective, EnergyMode::Distributed] {
            for e in balance_report(&fs, &BalanceSpec { backend, mode })?.entries {
                worst = worst.max(e.linf);
            }
        }
    }
    Ok(worst)
}

/// Shared oscillating dimer used by the reduction checks.
pub fn reduction_case() -> Result<(ParticleSet, Interactions, Vec<Vec3>, Vec<Vec3>)> {
    let parts = ParticleSet::new(vec![1.0, 1.5])?;
    let inter = Interactions::pairwise(PairPotential::harmonic(2.0, 1.0)?)
        .with_external(ExternalPotential::HarmonicTrap { kappa: 0.5, center: Vec3::zeros() });
    let r = vec![Vec3::new(0.65, 0.1, -0.05), Vec3::new(-0.5, -0.05, 0.1)];
    let p = vec![Vec3::new(0.2, -0.3, 0.1), Vec3::new(-0.1, 0.25, 0.05)];
    Ok((parts, inter, r, p))
}

/// Compares reduced NH and APR runs against NVE on the same trajectory: every
/// common field and the mass, momentum and collective energy residuals must be
/// bitwise equal. Returns the number of mismatching values.
pub fn backend_reduction_mismatches() -> Result<usize> {
    let grid = GridSpec::cube(3.0, 0.3, 0.0, 0.05, 9)?;
    let (parts, inter, r, p) = reduction_case()?;
    let nve = reduced_system(Backend::Nve, parts.clone(), inter.clone())?;
    let nh = reduced_system(Backend::Nh, parts.clone(), inter.clone())?;
    let apr = reduced_system(Backend::Apr, parts, inter)?;
    let z_nve = NveState { positions: r.clone(), momenta: p.clone() }.to_phase();
    let z_nh = NhState { positions: r.clone(), momenta: p.clone(), s: 1.0, p_s: 0.0 }.to_phase();
    let z_apr = AprState { reference: r, momenta: p, cell: Mat3::identity(), cell_momentum: Mat3::zeros() }.to_phase();
    let base = run_fields(&nve, &z_nve, &grid, 0.01, 40)?;
    let base_rep = balance_report(&base, &BalanceSpec { backend: Backend::Nve, mode: EnergyMode::Collective })?;
    let mut bad = 0;
    for (sys, z) in [(&nh, &z_nh), (&apr, &z_apr)] {
        let fs = run_fields(sys, z, &grid, 0.01, 40)?;
        for (name, f) in base.iter() {
            let g = fs.get(name)?;
            bad += f.values.iter().zip(&g.values).filter(|(a, b)| a != b).count();
        }
        let rep = balance_report(&fs, &BalanceSpec { backend: sys.backend(), mode: EnergyMode::Collective })?;
        for (a, b) in base_rep.entries.iter().zip(&rep.entries) {
            bad += a.values.iter().zip(&b.values).filter(|(x, y)| x != y).count();
        }
    }
    Ok(bad)
}

/// Runs the desk-scale verification suite.
pub fn run_suite() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let backends = [
        ("NVE", Backend::Nve, AprKinetic::ParrinelloRahman),
        ("NH", Backend::Nh, AprKinetic::ParrinelloRahman),
        ("APR", Backend::Apr, AprKinetic::ParrinelloRahman),
        ("APR exact", Backend::Apr, AprKinetic::ExactMinimalNorm),
    ];
    for (label, backend, kinetic) in backends {
        let sys = fixture(backend, kinetic, 4)?;
        out.push(CheckOutcome::at_most(format!("gradient cross-check {label}"), gradient_check(&sys, 100, 11)?, 1e-6));
        out.push(CheckOutcome::at_most(format!("phase-space divergence {label}"), divergence_check(&sys, 100, 12)?, 1e-8));
    }
    for (label, backend) in [("NVE", Backend::Nve), ("NH", Backend::Nh), ("APR", Backend::Apr)] {
        let sys = fixture(backend, AprKinetic::ParrinelloRahman, 2)?;
        out.push(CheckOutcome::at_most(format!("phase volume {label}"), phase_volume_error(&sys, 13, 1e-3, 1000)?, 1e-6));
    }
    let grid = default_grid(1.0, 1)?;
    let [rho, num, bond] = normalization_errors(&grid, 14)?;
    out.push(CheckOutcome::at_most("normalisation of rho", rho, 1e-6));
    out.push(CheckOutcome::at_most("normalisation of n", num, 1e-6));
    out.push(CheckOutcome::at_most("normalisation of bond function", bond, 1e-6));
    let (tv, qv) = two_body_oracle_errors(&grid)?;
    out.push(CheckOutcome::at_most("single-bond T_V oracle", tv, 1e-8));
    out.push(CheckOutcome::at_most("single-bond q_V oracle", qv, 1e-8));
    out.push(CheckOutcome::at_most("exact-zero balance suite", exact_zero_residual()?, 1e-10));
    out.push(CheckOutcome::at_most("backend reductions (mismatching values)", backend_reduction_mismatches()? as f64, 0.0));
    Ok(out)
}
