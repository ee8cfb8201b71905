use ikn_core::checks::*;
use ikn_core::dynamics::AprKinetic;
use ikn_core::Backend;

#[test]
fn gradient_and_divergence_for_every_backend() {
    for (backend, kinetic) in [
        (Backend::Nve, AprKinetic::ParrinelloRahman),
        (Backend::Nh, AprKinetic::ParrinelloRahman),
        (Backend::Apr, AprKinetic::ParrinelloRahman),
        (Backend::Apr, AprKinetic::ExactMinimalNorm),
    ] {
        let sys = fixture(backend, kinetic, 4).unwrap();
        let g = gradient_check(&sys, 30, 1).unwrap();
        let d = divergence_check(&sys, 30, 2).unwrap();
        assert!(g <= 1e-6, "{backend} {kinetic:?}: gradient mismatch {g:e}");
        assert!(d <= 1e-8, "{backend} {kinetic:?}: divergence {d:e}");
    }
}

#[test]
fn phase_volume_is_preserved() {
    for backend in [Backend::Nve, Backend::Nh, Backend::Apr] {
        let sys = fixture(backend, AprKinetic::ParrinelloRahman, 2).unwrap();
        let e = phase_volume_error(&sys, 5, 1e-3, 200).unwrap();
        assert!(e <= 1e-6, "{backend}: {e:e}");
    }
}

#[test]
fn normalisations_hold_on_default_grid() {
    let grid = default_grid(1.0, 1).unwrap();
    let errs = normalization_errors(&grid, 3).unwrap();
    assert!(errs.iter().all(|e| *e <= 1e-6), "{errs:?}");
}

#[test]
fn single_bond_matches_direct_evaluation() {
    let grid = default_grid(1.0, 1).unwrap();
    let (t, q) = two_body_oracle_errors(&grid).unwrap();
    assert!(t <= 1e-8 && q <= 1e-8, "T_V {t:e}, q_V {q:e}");
}

#[test]
fn static_configurations_have_zero_residuals() {
    let r = exact_zero_residual().unwrap();
    assert!(r <= 1e-10, "{r:e}");
}

#[test]
fn reduced_backends_match_classical_bitwise() {
    assert_eq!(backend_reduction_mismatches().unwrap(), 0);
}
