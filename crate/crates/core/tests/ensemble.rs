use ikn_core::dynamics::{integrate, AprKinetic, AprSystem, EquationsOfMotion, IntegratorSpec, NhSystem, NveSystem, System};
use ikn_core::ensemble::{
    ensemble_average, run_batch, sample_initial, AuxiliaryScheme, InitialDensity, MomentumScheme, PositionScheme,
};
use ikn_core::linalg::vec_at;
use ikn_core::potentials::{ExternalPotential, Interactions, PairPotential};
use ikn_core::state::ParticleSet;
use ikn_core::trajectory::Clock;
use ikn_core::{Error, Mat3, Units, Vec3};

fn density(positions: PositionScheme, momenta: MomentumScheme, seed: u64) -> InitialDensity {
    InitialDensity { positions, momenta, aux: AuxiliaryScheme::default(), units: Units::default(), seed }
}

fn lattice(spacing: f64, jitter: f64) -> PositionScheme {
    PositionScheme::Lattice { spacing, jitter, center: Vec3::zeros() }
}

fn oscillators(n: usize) -> System {
    NveSystem::new(ParticleSet::uniform(n, 1.0).unwrap(), Interactions::free().with_external(ExternalPotential::HarmonicTrap { kappa: 1.0, center: Vec3::zeros() }))
        .unwrap()
        .into()
}

fn kinetic(z: &[f64]) -> f64 {
    let n = z.len() / 6;
    (0..n).map(|k| 0.5 * vec_at(&z[3 * n..], k).norm_squared()).sum()
}

#[test]
fn degenerate_density_gives_identical_samples() {
    let sys: System = NhSystem::new(ParticleSet::uniform(2, 1.0).unwrap(), Interactions::free(), 10.0, 1.0, Units::default(), 1.0).unwrap().into();
    let d = density(PositionScheme::Explicit(vec![Vec3::zeros(), Vec3::x()]), MomentumScheme::Zero, 9);
    let s = sample_initial(&d, &sys, 3).unwrap();
    assert!(s.iter().all(|z| *z == s[0]));
    let spread = InitialDensity { aux: AuxiliaryScheme { sigma_s: 0.2, sigma_ps: 0.5, ..Default::default() }, ..d };
    let s = sample_initial(&spread, &sys, 3).unwrap();
    assert!(s.iter().all(|z| z[..6] == s[0][..6] && z[6] > 0.0));
    assert_ne!(s[0], s[1]);
}

#[test]
fn maxwell_boltzmann_temperature() {
    let sys = oscillators(8);
    let d = density(lattice(1.0, 0.1), MomentumScheme::MaxwellBoltzmann { temperature: 1.0 }, 2024);
    let m = 10_000;
    let samples = sample_initial(&d, &sys, m).unwrap();
    let mean: f64 = samples.iter().map(|z| 2.0 * kinetic(z)).sum::<f64>() / (3.0 * 8.0 * m as f64);
    assert!((mean - 1.0).abs() <= 0.03, "{mean}");
}

#[test]
fn sampling_is_deterministic_in_the_seed() {
    let sys: System = AprSystem::new(ParticleSet::uniform(4, 1.0).unwrap(), Interactions::free(), 2.0, 1.0, Mat3::zeros(), AprKinetic::ParrinelloRahman).unwrap().into();
    let d = InitialDensity {
        aux: AuxiliaryScheme { sigma_f: 0.05, ..Default::default() },
        ..density(lattice(1.2, 0.05), MomentumScheme::MaxwellBoltzmann { temperature: 0.5 }, 77)
    };
    let a = sample_initial(&d, &sys, 5).unwrap();
    let b = sample_initial(&d, &sys, 5).unwrap();
    assert_eq!(a, b);
    let c = sample_initial(&InitialDensity { seed: 78, ..d }, &sys, 5).unwrap();
    assert_ne!(a, c);
}

#[test]
fn inverted_cell_density_exhausts_the_retry_cap() {
    let sys: System = AprSystem::new(ParticleSet::uniform(1, 1.0).unwrap(), Interactions::free(), 2.0, 1.0, Mat3::zeros(), AprKinetic::ParrinelloRahman).unwrap().into();
    let d = InitialDensity {
        aux: AuxiliaryScheme { cell0: -Mat3::identity(), sigma_f: 1e-3, ..Default::default() },
        ..density(PositionScheme::Explicit(vec![Vec3::zeros()]), MomentumScheme::Zero, 1)
    };
    let err = sample_initial(&d, &sys, 2).unwrap_err();
    match err {
        Error::SampleFailed { source, .. } => assert!(matches!(*source, Error::RetryCapExceeded(100))),
        other => panic!("{other}"),
    }
    assert!(matches!(sample_initial(&d, &sys, 0), Err(Error::EmptyBatch)));
}

#[test]
fn single_member_batch_reproduces_integrate() {
    let sys = oscillators(3);
    let d = density(lattice(1.0, 0.1), MomentumScheme::MaxwellBoltzmann { temperature: 1.0 }, 5);
    let init = sample_initial(&d, &sys, 1).unwrap();
    let spec = IntegratorSpec::midpoint(0.01);
    let batch = run_batch(&sys, &init, &spec, 200, 10).unwrap();
    let single = integrate(&sys, &init[0], 200, &spec, 10).unwrap();
    assert_eq!(batch.trajectories[0].samples(), single.trajectory.samples());
    assert_eq!(batch.monitors[0], single.monitor);
}

#[test]
fn batch_is_independent_of_worker_count() {
    let sys: System = NhSystem::new(ParticleSet::uniform(4, 1.0).unwrap(), Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0).unwrap()), 10.0, 1.0, Units::default(), 10.0)
        .unwrap()
        .into();
    let d = InitialDensity {
        aux: AuxiliaryScheme { sigma_s: 0.05, sigma_ps: 0.1, ..Default::default() },
        ..density(lattice(1.12, 0.03), MomentumScheme::MaxwellBoltzmann { temperature: 0.5 }, 3)
    };
    let init = sample_initial(&d, &sys, 4).unwrap();
    let spec = IntegratorSpec::midpoint(2e-3);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_batch(&sys, &init, &spec, 100, 5).unwrap())
    };
    let (one, four) = (run(1), run(4));
    for (a, b) in one.trajectories.iter().zip(&four.trajectories) {
        assert_eq!(a.samples(), b.samples());
    }
}

#[test]
fn nh_lj_batch_conserves_extended_energy() {
    // Thermal momenta around a relaxed cluster. Starting from the bare cubic lattice
    // the cluster collapses and the released energy drives the midpoint error to 1e-5.
    let inter = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0).unwrap());
    let x = ikn_core::checks::relaxed_cluster(&inter, 8, 1.12).unwrap();
    let sys: System = NhSystem::new(ParticleSet::uniform(8, 1.0).unwrap(), inter, 10.0, 0.1, Units::default(), 10.0).unwrap().into();
    let d = InitialDensity {
        aux: AuxiliaryScheme { sigma_s: 0.01, sigma_ps: 0.02, ..Default::default() },
        ..density(PositionScheme::Explicit(x), MomentumScheme::MaxwellBoltzmann { temperature: 0.1 }, 64)
    };
    let init = sample_initial(&d, &sys, 64).unwrap();
    let batch = run_batch(&sys, &init, &IntegratorSpec::midpoint(1e-3), 1000, 100).unwrap();
    assert!(batch.max_drift() <= 1e-5, "{}", batch.max_drift());
}

#[test]
fn averages_of_constant_and_conserved_observables_are_exact() {
    let sys = oscillators(2);
    let d = density(lattice(1.0, 0.2), MomentumScheme::MaxwellBoltzmann { temperature: 1.0 }, 8);
    let batch = run_batch(&sys, &sample_initial(&d, &sys, 16).unwrap(), &IntegratorSpec::midpoint(0.05), 20, 1).unwrap();
    let c = ensemble_average(&batch, |_| Ok(2.5), 0.37, Clock::Physical).unwrap();
    assert_eq!((c.mean, c.stderr), (2.5, 0.0));
    let mass = sys.particles().total_mass();
    let m = ensemble_average(&batch, |_| Ok(mass), 0.5, Clock::Physical).unwrap();
    assert_eq!((m.mean, m.stderr), (2.0, 0.0));
    assert!(matches!(ensemble_average(&batch, |_| Ok(1.0), 1.5, Clock::Physical), Err(Error::TimeOutOfRange { .. })));
}

#[test]
fn stored_times_pass_through_without_interpolation() {
    let sys = oscillators(1);
    let d = density(lattice(1.0, 0.3), MomentumScheme::MaxwellBoltzmann { temperature: 1.0 }, 4);
    let batch = run_batch(&sys, &sample_initial(&d, &sys, 3).unwrap(), &IntegratorSpec::midpoint(0.1), 30, 3).unwrap();
    for t in batch.trajectories.iter() {
        for s in t.samples() {
            assert_eq!(t.state_at(s.t, Clock::Physical).unwrap(), s.z);
        }
    }
}

#[test]
fn oscillator_kinetic_energy_follows_the_propagated_gaussian() {
    let sys = oscillators(1);
    let x0 = Vec3::new(1.0, -0.5, 0.25);
    let t0 = 0.7;
    let d = density(PositionScheme::Explicit(vec![x0]), MomentumScheme::MaxwellBoltzmann { temperature: t0 }, 99);
    let batch = run_batch(&sys, &sample_initial(&d, &sys, 4000).unwrap(), &IntegratorSpec::midpoint(0.01), 150, 10).unwrap();
    let t: f64 = 1.2;
    let est = ensemble_average(&batch, |z| Ok(kinetic(z)), t, Clock::Physical).unwrap();
    let exact = 0.5 * (x0.norm_squared() * t.sin().powi(2) + 3.0 * t0 * t.cos().powi(2));
    assert!((est.mean - exact).abs() <= 3.0 * est.stderr, "{} vs {exact} (se {})", est.mean, est.stderr);
}

#[test]
fn standard_error_halves_when_m_quadruples() {
    let sys = oscillators(2);
    let se = |m: usize| {
        let d = density(lattice(1.0, 0.2), MomentumScheme::MaxwellBoltzmann { temperature: 1.0 }, 17);
        let batch = run_batch(&sys, &sample_initial(&d, &sys, m).unwrap(), &IntegratorSpec::midpoint(0.05), 10, 1).unwrap();
        ensemble_average(&batch, |z| Ok(kinetic(z)), 0.5, Clock::Physical).unwrap().stderr
    };
    let ratio = se(1000) / se(4000);
    assert!((1.7..=2.3).contains(&ratio), "{ratio}");
}

#[test]
fn nh_averages_at_common_physical_time() {
    let sys: System = NhSystem::new(ParticleSet::uniform(2, 1.0).unwrap(), Interactions::pairwise(PairPotential::harmonic(1.0, 1.0).unwrap()), 10.0, 1.0, Units::default(), 1.0)
        .unwrap()
        .into();
    let d = InitialDensity {
        aux: AuxiliaryScheme { sigma_s: 0.1, sigma_ps: 0.3, ..Default::default() },
        ..density(PositionScheme::Explicit(vec![Vec3::zeros(), Vec3::x() * 1.1]), MomentumScheme::MaxwellBoltzmann { temperature: 1.0 }, 6)
    };
    let batch = run_batch(&sys, &sample_initial(&d, &sys, 8).unwrap(), &IntegratorSpec::midpoint(0.01), 100, 1).unwrap();
    let (start, end) = batch.span(Clock::Physical);
    assert_eq!(start, 0.0);
    let t = 0.5 * end;
    let s = ensemble_average(&batch, |z| Ok(z[6]), t, Clock::Physical).unwrap();
    assert!(s.mean > 0.0 && s.stderr > 0.0);
}
