use nalgebra::DMatrix;

use super::fd::rhs_jacobian;
use super::integrator::{step, IntegratorSpec};
use super::EquationsOfMotion;
use crate::error::{Error, Result};

/// Determinant of the accumulated tangent map of the implicit-midpoint flow.
///
/// Each step contributes the exact linearisation `(I − hA/2)⁻¹(I + hA/2)` of the
/// midpoint map, with `A` the finite-difference Jacobian at the midpoint.
pub fn phase_volume_check<E: EquationsOfMotion + ?Sized>(eom: &E, z0: &[f64], dtau: f64, n_steps: usize) -> Result<f64> {
    let spec = IntegratorSpec::midpoint(dtau);
    spec.validate()?;
    let d = z0.len();
    let mut tangent = DMatrix::<f64>::identity(d, d);
    let mut z = z0.to_vec();
    for n in 1..=n_steps {
        let next = step(eom, &z, &spec, n)?;
        let mid: Vec<f64> = z.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let a = rhs_jacobian(eom, &mid, 1e-4)? * (0.5 * dtau);
        let id = DMatrix::<f64>::identity(d, d);
        let lhs = (&id - &a).lu();
        let m = lhs.solve(&(&id + &a)).ok_or(Error::NonConvergence { step: n, iterations: 0, residual: f64::NAN })?;
        tangent = m * tangent;
        z = next;
    }
    Ok(tangent.determinant())
}
