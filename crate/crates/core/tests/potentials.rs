use ikn_core::potentials::{ExternalPotential, Interactions, PairPotential};
use ikn_core::Vec3;
use proptest::prelude::*;

fn cluster(seed: &[f64], n: usize, spacing: f64) -> Vec<Vec3> {
    (0..n)
        .map(|k| {
            let base = Vec3::new((k % 2) as f64, ((k / 2) % 2) as f64, (k / 4) as f64) * spacing;
            base + Vec3::new(seed[3 * k], seed[3 * k + 1], seed[3 * k + 2]) * 0.15
        })
        .collect()
}

fn central_difference_forces(it: &Interactions, r: &[Vec3], step: f64) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); r.len()];
    let mut rr = r.to_vec();
    for k in 0..r.len() {
        for c in 0..3 {
            rr[k][c] = r[k][c] + step;
            let up = it.total_potential(&rr).unwrap();
            rr[k][c] = r[k][c] - step;
            let down = it.total_potential(&rr).unwrap();
            rr[k][c] = r[k][c];
            out[k][c] = -(up - down) / (2.0 * step);
        }
    }
    out
}

#[test]
fn four_particle_lj_matches_brute_force_sum() {
    let r = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.1, 0.05, -0.1),
        Vec3::new(0.1, 1.2, 0.2),
        Vec3::new(0.6, 0.5, 0.95),
    ];
    let mut brute = 0.0;
    for j in 0..4 {
        for k in 0..4 {
            if j != k {
                let d: f64 = (r[j] - r[k]).norm();
                brute += 0.5 * 4.0 * (d.powi(-12) - d.powi(-6));
            }
        }
    }
    let it = Interactions::pairwise(PairPotential::lennard_jones(1.0, 1.0).unwrap());
    assert!((it.total_potential(&r).unwrap() - brute).abs() <= 1e-12);
}

#[test]
fn cutoff_derivative_vanishes_from_below() {
    let lj = PairPotential::lennard_jones_cut(1.0, 1.0).unwrap();
    assert!(lj.derivative(2.5 - 1e-13).unwrap().abs() <= 1e-12);
    assert!(lj.energy(2.5 - 1e-13).unwrap().abs() <= 1e-12);
}

proptest! {
    #[test]
    fn forces_match_finite_differences(seed in prop::collection::vec(-1.0..1.0f64, 15), kappa in 0.0..2.0f64) {
        let r = cluster(&seed, 5, 1.15);
        for pair in [PairPotential::lennard_jones_cut(1.0, 1.0).unwrap(), PairPotential::harmonic(1.7, 0.9).unwrap()] {
            let it = Interactions::pairwise(pair)
                .with_external(ExternalPotential::HarmonicTrap { kappa, center: Vec3::new(0.2, 0.1, -0.3) });
            let analytic = it.forces(&r).unwrap();
            let fd = central_difference_forces(&it, &r, 1e-5);
            let scale = analytic.iter().map(|f| f.norm()).fold(1.0, f64::max);
            for (a, b) in analytic.iter().zip(&fd) {
                prop_assert!((a - b).norm() <= 1e-6 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn internal_forces_sum_to_zero(seed in prop::collection::vec(-1.0..1.0f64, 18)) {
        let r = cluster(&seed, 6, 1.1);
        let it = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0).unwrap());
        let total: Vec3 = it.forces(&r).unwrap().iter().sum();
        prop_assert!(total.norm() <= 1e-12);
    }

    #[test]
    fn pair_forces_are_equal_and_opposite(a in prop::array::uniform3(-1.0..1.0f64), d in 0.8..2.4f64) {
        let it = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0).unwrap());
        let dir = Vec3::from(a) + Vec3::new(0.0, 0.0, 2.0);
        let r = [Vec3::new(0.3, -0.2, 0.1), Vec3::new(0.3, -0.2, 0.1) + dir.normalize() * d];
        let f = it.forces(&r).unwrap();
        prop_assert_eq!(f[0], -f[1]);
    }

    #[test]
    fn potential_is_translation_invariant(seed in prop::collection::vec(-1.0..1.0f64, 12), shift in prop::array::uniform3(-3.0..3.0f64)) {
        let r = cluster(&seed, 4, 1.2);
        let moved: Vec<Vec3> = r.iter().map(|x| x + Vec3::from(shift)).collect();
        let it = Interactions::pairwise(PairPotential::lennard_jones_cut(1.0, 1.0).unwrap());
        let (a, b) = (it.total_potential(&r).unwrap(), it.total_potential(&moved).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn external_gradients_match_finite_differences(p in prop::array::uniform3(-2.0..2.0f64), g in prop::array::uniform3(-2.0..2.0f64)) {
        let p = Vec3::from(p);
        for ext in [
            ExternalPotential::HarmonicTrap { kappa: 1.3, center: Vec3::new(0.1, 0.2, 0.3) },
            ExternalPotential::UniformField { g: Vec3::from(g) },
        ] {
            let grad = ext.gradient(&p);
            for c in 0..3 {
                let mut up = p;
                let mut down = p;
                up[c] += 1e-5;
                down[c] -= 1e-5;
                let fd = (ext.energy(&up) - ext.energy(&down)) / 2e-5;
                prop_assert!((fd - grad[c]).abs() <= 1e-6 * grad.norm().max(1.0));
            }
        }
    }
}
