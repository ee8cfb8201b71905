use ikn_core::dynamics::{AprKinetic, AprSystem};
use ikn_core::potentials::Interactions;
use ikn_core::state::{physical_momentum_nh, physical_velocity_apr, AprState, NhState, ParticleSet};
use ikn_core::{Mat3, Vec3};
use proptest::prelude::*;

fn adjugate_inverse(f: &Mat3) -> Mat3 {
    let c = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
        let k: Vec<usize> = (0..3).filter(|&x| x != j).collect();
        let minor = f[(r[0], k[0])] * f[(r[1], k[1])] - f[(r[0], k[1])] * f[(r[1], k[0])];
        if (i + j) % 2 == 0 { minor } else { -minor }
    };
    let det = f[(0, 0)] * c(0, 0) + f[(0, 1)] * c(0, 1) + f[(0, 2)] * c(0, 2);
    Mat3::from_fn(|i, j| c(j, i) / det)
}

fn cell() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-0.4..0.4f64).prop_map(|a| Mat3::identity() + Mat3::from_row_slice(&a))
        .prop_filter("positive determinant", |f| f.determinant() > 0.05)
}

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-2.0..2.0f64).prop_map(Vec3::from)
}

proptest! {
    #[test]
    fn apr_velocity_matches_adjugate_inverse(f in cell(), p in vec3(), m in 0.2..5.0f64) {
        let parts = ParticleSet::new(vec![m]).unwrap();
        let st = AprState { reference: vec![Vec3::zeros()], momenta: vec![p], cell: f, cell_momentum: Mat3::zeros() };
        let v = physical_velocity_apr(&st, &parts, 0).unwrap();
        let oracle = adjugate_inverse(&f).transpose() * p;
        prop_assert!((v * m - oracle).norm() <= 1e-12 * oracle.norm().max(1.0));
    }

    #[test]
    fn doubling_s_halves_physical_momentum(p in vec3(), s in 0.01..50.0f64) {
        let mk = |s| NhState { positions: vec![Vec3::zeros()], momenta: vec![p], s, p_s: 0.0 };
        let a = physical_momentum_nh(&mk(s), 0).unwrap();
        let b = physical_momentum_nh(&mk(2.0 * s), 0).unwrap();
        prop_assert_eq!(a * 0.5, b);
    }

    #[test]
    fn exact_momenta_carry_the_lagrangian_velocity(
        f in cell(),
        s in prop::collection::vec(vec3(), 4),
        sdot in prop::collection::vec(vec3(), 4),
        fd in prop::array::uniform9(-0.5..0.5f64),
    ) {
        let fdot = Mat3::from_row_slice(&fd);
        let parts = ParticleSet::new(vec![1.0, 1.5, 0.7, 2.0]).unwrap();
        let sys = AprSystem::new(parts.clone(), Interactions::free(), 1.0, 1.0, Mat3::zeros(), AprKinetic::ExactMinimalNorm).unwrap();
        let z = sys.exact_phase(&s, &f, &sdot, &fdot);
        let st = AprState::from_phase(&z, 4);
        for k in 0..4 {
            let v = physical_velocity_apr(&st, &parts, k).unwrap();
            let expect = f * sdot[k] + fdot * s[k];
            prop_assert!((v - expect).norm() <= 1e-10 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn pr_momenta_with_resting_cell_carry_the_lagrangian_velocity(
        f in cell(),
        s in prop::collection::vec(vec3(), 3),
        p in prop::collection::vec(vec3(), 3),
    ) {
        let parts = ParticleSet::new(vec![1.0, 2.0, 0.5]).unwrap();
        let sys = AprSystem::new(parts.clone(), Interactions::free(), 3.0, 1.0, Mat3::zeros(), AprKinetic::ParrinelloRahman).unwrap();
        let st = AprState { reference: s.clone(), momenta: p, cell: f, cell_momentum: Mat3::zeros() };
        let (sdot, fdot) = sys.velocities(&st.to_phase()).unwrap();
        prop_assert_eq!(fdot, Mat3::zeros());
        for k in 0..3 {
            let v = physical_velocity_apr(&st, &parts, k).unwrap();
            let expect = f * sdot[k] + fdot * s[k];
            prop_assert!((v - expect).norm() <= 1e-10 * expect.norm().max(1.0));
        }
    }
}
