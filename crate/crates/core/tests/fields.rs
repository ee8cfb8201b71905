use approx::assert_abs_diff_eq;
use ikn_core::checks::snapshot_batch;
use ikn_core::dynamics::{AprKinetic, AprSystem, NhSystem, NveSystem};
use ikn_core::ensemble::{run_batch, sample_initial, AuxiliaryScheme, InitialDensity, MomentumScheme, PositionScheme};
use ikn_core::fields::{compute_fields, extended_energy_fields_apr, extended_energy_fields_nh, primary_fields, source_fields, Kernel};
use ikn_core::linalg::mat_from_row_major;
use ikn_core::potentials::{ExternalPotential, Interactions, PairPotential};
use ikn_core::trajectory::Clock;
use ikn_core::*;

fn grid() -> GridSpec {
    GridSpec::cube(3.0, 0.3, 0.0, 0.1, 1).unwrap()
}

fn nve(n: usize, inter: Interactions) -> System {
    NveSystem::new(ParticleSet::uniform(n, 1.0).unwrap(), inter).unwrap().into()
}

fn snap(sys: &System, states: &[Vec<f64>]) -> FieldSet {
    compute_fields(&snapshot_batch(sys, states).unwrap(), sys, &grid(), Clock::Virtual).unwrap()
}

fn at_rest(positions: Vec<Vec3>) -> Vec<f64> {
    let n = positions.len();
    NveState { positions, momenta: vec![Vec3::zeros(); n] }.to_phase()
}

fn max_abs(fs: &FieldSet, name: &str) -> f64 {
    fs.get(name).unwrap().values.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn nh_system(inter: Interactions) -> System {
    NhSystem::new(ParticleSet::uniform(2, 1.0).unwrap(), inter, 2.0, 1.0, Units::default(), 10.0).unwrap().into()
}

#[test]
fn single_particle_density_is_the_kernel() {
    let m = 1.7;
    let r0 = Vec3::new(0.13, -0.21, 0.08);
    let sys: System = NveSystem::new(ParticleSet::uniform(1, m).unwrap(), Interactions::free()).unwrap().into();
    let fs = snap(&sys, &[at_rest(vec![r0])]);
    let g = grid();
    let kernel = Kernel::new(g.h).unwrap();
    let w: Vec<f64> = (0..g.node_count()).map(|i| kernel.value((g.node(i) - r0).norm())).collect();
    let total: f64 = w.iter().sum::<f64>() * g.cell_volume();
    assert!((total - 1.0).abs() < 5e-3);
    for (i, wi) in w.iter().enumerate() {
        assert_abs_diff_eq!(fs.at("rho", 0, i).unwrap()[0], m * wi / total, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(fs.integral("rho", 0).unwrap()[0], m, epsilon = 1e-6);
    assert_abs_diff_eq!(fs.integral("n", 0).unwrap()[0], 1.0, epsilon = 1e-6);
    for name in ["rho_v", "eps_K", "T_K", "T_V", "q_K", "q_V", "q_T", "f_e", "sigma_eps_0"] {
        assert_eq!(max_abs(&fs, name), 0.0, "{name}");
    }
}

#[test]
fn primary_fields_cover_the_expected_names() {
    let sys = nve(1, Interactions::free());
    let batch = snapshot_batch(&sys, &[at_rest(vec![Vec3::zeros()])]).unwrap();
    let fs = primary_fields(&batch, &sys, &grid(), Clock::Virtual).unwrap();
    let names: Vec<&str> = fs.names().collect();
    assert_eq!(names.len(), 6);
    for n in ["n", "rho", "rho_v", "v", "eps_K", "eps_V"] {
        assert!(fs.contains(n));
    }
}

#[test]
fn dimer_potential_energy_integrates_to_pair_energy() {
    let sys = nve(2, Interactions::pairwise(PairPotential::harmonic(1.0, 0.5).unwrap()));
    let fs = snap(&sys, &[at_rest(vec![Vec3::new(0.5, 0.02, 0.0), Vec3::new(-0.5, 0.02, 0.0)])]);
    assert_abs_diff_eq!(fs.integral("eps_V", 0).unwrap()[0], 0.125, epsilon = 1e-6);
    assert_eq!(max_abs(&fs, "q_V"), 0.0);
}

#[test]
fn stretched_bond_stress_integral() {
    // Tension is positive: ∫T_V = +V′(r) r e⊗e for one bond.
    let e = Vec3::new(1.0, 1.0, 0.5).normalize();
    let sys = nve(2, Interactions::pairwise(PairPotential::harmonic(1.0, 1.0).unwrap()));
    let fs = snap(&sys, &[at_rest(vec![e, -e])]);
    let got = mat_from_row_major(&fs.integral("T_V", 0).unwrap());
    let expect = e * e.transpose() * 2.0;
    assert!((got - expect).abs().max() <= 1e-4, "{got}");
}

#[test]
fn stress_tensors_are_symmetric() {
    let sys = nve(4, Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0).unwrap()));
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 1.1, jitter: 0.05, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 1.0 },
        aux: AuxiliaryScheme::default(),
        units: Units::default(),
        seed: 5,
    };
    let fs = snap(&sys, &sample_initial(&d, &sys, 8).unwrap());
    for name in ["T_K", "T_V", "T"] {
        for i in 0..fs.nodes() {
            let t = mat_from_row_major(fs.at(name, 0, i).unwrap());
            assert_eq!(t, t.transpose(), "{name} at {i}");
        }
    }
}

#[test]
fn kinetic_stress_trace_is_twice_peculiar_kinetic_energy() {
    let sys = nve(5, Interactions::free());
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 0.6, jitter: 0.3, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 1.0 },
        aux: AuxiliaryScheme::default(),
        units: Units::default(),
        seed: 9,
    };
    let fs = snap(&sys, &sample_initial(&d, &sys, 32).unwrap());
    let mut checked = 0;
    for i in 0..fs.nodes() {
        if !fs.v_defined[i] {
            continue;
        }
        let rho = fs.at("rho", 0, i).unwrap()[0];
        let v = Vec3::from_column_slice(fs.at("v", 0, i).unwrap());
        let pec = fs.at("eps_K", 0, i).unwrap()[0] - 0.5 * rho * v.norm_squared();
        let t = fs.at("T_K", 0, i).unwrap();
        assert!((t[0] + t[4] + t[8] + 2.0 * pec).abs() <= 1e-10);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn uniform_external_field() {
    let g = Vec3::new(0.3, -0.2, 0.9);
    let sys = nve(1, Interactions::free().with_external(ExternalPotential::UniformField { g }));
    let fs = snap(&sys, &[at_rest(vec![Vec3::new(0.2, 0.1, -0.3)])]);
    let f = fs.integral("f_e", 0).unwrap();
    for c in 0..3 {
        assert_abs_diff_eq!(f[c], -g[c], epsilon = 1e-6);
    }
}

#[test]
fn trap_centre_has_no_external_force() {
    let sys = nve(1, Interactions::free().with_external(ExternalPotential::HarmonicTrap { kappa: 2.0, center: Vec3::zeros() }));
    let fs = snap(&sys, &[at_rest(vec![Vec3::zeros()])]);
    assert_eq!(max_abs(&fs, "f_e"), 0.0);
}

#[test]
fn degenerate_thermostat_fields_vanish() {
    let sys = nh_system(Interactions::pairwise(PairPotential::harmonic(1.0, 1.0).unwrap()));
    let z = NhState {
        positions: vec![Vec3::new(0.6, 0.0, 0.1), Vec3::new(-0.6, 0.05, 0.0)],
        momenta: vec![Vec3::new(0.3, 0.1, 0.0), Vec3::new(-0.3, -0.1, 0.0)],
        s: 1.3,
        p_s: 0.0,
    }
    .to_phase();
    let batch = snapshot_batch(&sys, &[z]).unwrap();
    let fs = source_fields(&batch, &sys, &grid(), Clock::Virtual).unwrap();
    for name in ["sigma_rho", "sigma_eps_K", "sigma_eps_V", "sigma_eps_ps", "sigma_eps_s", "sigma_bar_ps", "sigma_bar_s", "sigma_eps_0"] {
        assert_eq!(max_abs(&fs, name), 0.0, "{name}");
    }
    let ext = extended_energy_fields_nh(&batch, &sys, &grid(), Clock::Virtual).unwrap();
    assert_eq!(max_abs(&ext, "eps_ps"), 0.0);
    assert_eq!(max_abs(&ext, "eps_bar_ps"), 0.0);
}

#[test]
fn entropic_energy_vanishes_at_s_equal_e() {
    let sys = nh_system(Interactions::free());
    let z = NhState { positions: vec![Vec3::new(0.5, 0.0, 0.0), Vec3::new(-0.5, 0.0, 0.0)], momenta: vec![Vec3::zeros(); 2], s: std::f64::consts::E, p_s: 0.4 }.to_phase();
    let fs = snap(&sys, &[z]);
    assert!(max_abs(&fs, "eps_s") <= 1e-15);
}

#[test]
fn thermostat_energies_and_mass_source_integrate_to_averages() {
    let sys = nh_system(Interactions::pairwise(PairPotential::harmonic(1.0, 1.0).unwrap()));
    let d = InitialDensity {
        positions: PositionScheme::Lattice { spacing: 1.0, jitter: 0.1, center: Vec3::zeros() },
        momenta: MomentumScheme::MaxwellBoltzmann { temperature: 1.0 },
        aux: AuxiliaryScheme { sigma_s: 0.1, sigma_ps: 0.5, ..Default::default() },
        units: Units::default(),
        seed: 17,
    };
    let states = sample_initial(&d, &sys, 40).unwrap();
    let fs = snap(&sys, &states);
    let q = 2.0;
    let ps: Vec<f64> = states.iter().map(|z| NhState::from_phase(z, 2).p_s).collect();
    let m = ps.len() as f64;
    let kin = ps.iter().map(|p| p * p / (2.0 * q)).sum::<f64>() / m;
    assert_abs_diff_eq!(fs.integral("eps_bar_ps", 0).unwrap()[0], kin, epsilon = 1e-6);
    assert_abs_diff_eq!(fs.at("eps_ps", 0, 0).unwrap()[0], kin / 10.0, epsilon = 1e-12);

    let x: Vec<f64> = ps.iter().map(|p| p / q * 2.0).collect();
    let mean = x.iter().sum::<f64>() / m;
    let se = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
    assert!((fs.integral("sigma_rho", 0).unwrap()[0] - mean).abs() <= 2.0 * se);
    assert!((fs.integral("sigma_rho", 0).unwrap()[0] - mean).abs() <= 1e-10);
}

#[test]
fn collective_fields_are_grid_constant() {
    let sys = nh_system(Interactions::pairwise(PairPotential::harmonic(1.0, 1.0).unwrap()));
    let z = NhState { positions: vec![Vec3::new(0.6, 0.0, 0.0), Vec3::new(-0.6, 0.0, 0.0)], momenta: vec![Vec3::new(0.2, 0.0, 0.1), Vec3::zeros()], s: 1.2, p_s: 0.7 }.to_phase();
    let batch = run_batch(&sys, &[z], &ikn_core::dynamics::IntegratorSpec::midpoint(0.01), 20, 10).unwrap();
    let g = GridSpec::cube(3.0, 0.3, 0.0, 0.1, 2).unwrap();
    let fs = compute_fields(&batch, &sys, &g, Clock::Virtual).unwrap();
    for entry in ikn_core::fields::catalog::fields_for(Backend::Nh).filter(|e| e.collective) {
        let f = fs.get(entry.name).unwrap();
        for t in 0..2 {
            let slice = &f.values[t * fs.nodes()..(t + 1) * fs.nodes()];
            let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            assert_eq!(hi - lo, 0.0, "{}", entry.name);
        }
    }
}

fn apr(piola: Mat3) -> System {
    AprSystem::new(ParticleSet::uniform(2, 1.0).unwrap(), Interactions::free(), 5.0, 8.0, piola, AprKinetic::ParrinelloRahman).unwrap().into()
}

fn apr_state(cell: Mat3) -> Vec<f64> {
    AprState { reference: vec![Vec3::new(0.4, 0.0, 0.0), Vec3::new(-0.4, 0.1, 0.0)], momenta: vec![Vec3::zeros(); 2], cell, cell_momentum: Mat3::zeros() }.to_phase()
}

#[test]
fn enthalpic_fields() {
    let sys = apr(Mat3::zeros());
    let batch = snapshot_batch(&sys, &[apr_state(Mat3::identity())]).unwrap();
    let fs = extended_energy_fields_apr(&batch, &sys, &grid()).unwrap();
    assert_eq!(max_abs(&fs, "eps_P"), 0.0);
    assert_eq!(max_abs(&fs, "eps_bar_P"), 0.0);

    let p = 0.35;
    let sys = apr(Mat3::identity() * p);
    let fs = snap(&sys, &[apr_state(Mat3::identity())]);
    assert_abs_diff_eq!(fs.at("eps_P", 0, 7).unwrap()[0], -3.0 * p, epsilon = 1e-14);

    let piola = Mat3::new(0.2, 0.05, 0.0, 0.05, -0.1, 0.02, 0.0, 0.02, 0.1);
    let cell = Mat3::new(1.05, 0.02, 0.0, -0.01, 0.97, 0.03, 0.0, 0.01, 1.02);
    let fs = snap(&apr(piola), &[apr_state(cell)]);
    let expect = -8.0 * piola.component_mul(&cell).sum();
    assert_abs_diff_eq!(fs.integral("eps_bar_P", 0).unwrap()[0], expect, epsilon = 1e-6);
}

#[test]
fn backend_specific_fields_reject_other_backends() {
    let sys = nve(1, Interactions::free());
    let batch = snapshot_batch(&sys, &[at_rest(vec![Vec3::zeros()])]).unwrap();
    assert!(matches!(extended_energy_fields_nh(&batch, &sys, &grid(), Clock::Virtual), Err(Error::BackendMismatch(_))));
    assert!(matches!(extended_energy_fields_apr(&batch, &sys, &grid()), Err(Error::BackendMismatch(_))));
    let fs = source_fields(&batch, &sys, &grid(), Clock::Virtual).unwrap();
    assert_eq!(fs.names().collect::<Vec<_>>(), vec!["sigma_eps_0"]);
}

#[test]
fn particle_outside_padded_box_is_an_error() {
    let sys = nve(1, Interactions::free());
    let batch = snapshot_batch(&sys, &[at_rest(vec![Vec3::new(2.8, 0.0, 0.0)])]).unwrap();
    assert!(matches!(compute_fields(&batch, &sys, &grid(), Clock::Virtual), Err(Error::OutsideGrid { particle: 0, .. })));
}

mod invariants {
    use super::*;
    use proptest::prelude::*;

    fn point() -> impl Strategy<Value = Vec3> {
        (-1.8..1.8f64, -1.8..1.8f64, -1.8..1.8f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn comb_normalisation_and_symmetry(
            pos in prop::collection::vec(point(), 3),
            masses in prop::collection::vec(0.5..2.0f64, 3),
            mom in prop::collection::vec(point(), 3),
        ) {
            let min_sep = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).map(|(i, j)| (pos[i] - pos[j]).norm()).fold(f64::INFINITY, f64::min);
            prop_assume!(min_sep > 0.2);
            let parts = ParticleSet::new(masses.clone()).unwrap();
            let sys: System = NveSystem::new(parts, Interactions::pairwise(PairPotential::harmonic(1.0, 0.8).unwrap())).unwrap().into();
            let fs = snap(&sys, &[NveState { positions: pos.clone(), momenta: mom.clone() }.to_phase()]);
            let total: f64 = masses.iter().sum();
            prop_assert!((fs.integral("rho", 0).unwrap()[0] - total).abs() <= 1e-6 * total);
            prop_assert!((fs.integral("n", 0).unwrap()[0] - 1.0).abs() <= 1e-6);
            let p: Vec3 = mom.iter().sum();
            let got = fs.integral("rho_v", 0).unwrap();
            for c in 0..3 {
                prop_assert!((got[c] - p[c]).abs() <= 1e-10);
            }
            for name in ["T_K", "T_V", "T"] {
                for i in 0..fs.nodes() {
                    let t = mat_from_row_major(fs.at(name, 0, i).unwrap());
                    prop_assert_eq!(t, t.transpose());
                }
            }
        }
    }
}
