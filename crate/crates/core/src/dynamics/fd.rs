//! Finite-difference probes of a Hamiltonian vector field.

use nalgebra::DMatrix;

use super::EquationsOfMotion;
use crate::error::Result;

fn probe_step(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

/// Fourth-order central-difference gradient of the Hamiltonian.
pub fn hamiltonian_gradient<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64], step: f64) -> Result<Vec<f64>> {
    let mut zz = z.to_vec();
    let mut grad = vec![0.0; z.len()];
    for i in 0..z.len() {
        let h = probe_step(step, z[i]);
        let mut eval = |d: f64| -> Result<f64> {
            zz[i] = z[i] + d;
            let e = eom.hamiltonian(&zz);
            zz[i] = z[i];
            e
        };
        let (p1, m1, p2, m2) = (eval(h)?, eval(-h)?, eval(2.0 * h)?, eval(-2.0 * h)?);
        grad[i] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    }
    Ok(grad)
}

/// `J ∇H` for `z = [q, p]`: `(∂H/∂p, −∂H/∂q)`.
pub fn canonical_pairing(grad: &[f64]) -> Vec<f64> {
    let n = grad.len() / 2;
    let mut out = vec![0.0; grad.len()];
    for i in 0..n {
        out[i] = grad[n + i];
        out[n + i] = -grad[i];
    }
    out
}

/// Relative 2-norm error between the analytic RHS and `J ∇H` from finite differences.
pub fn gradient_mismatch<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64]) -> Result<f64> {
    let mut rhs = vec![0.0; z.len()];
    eom.rhs(z, &mut rhs)?;
    let fd = canonical_pairing(&hamiltonian_gradient(eom, z, 1e-4)?);
    let diff: f64 = rhs.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = rhs.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(diff / norm.max(f64::MIN_POSITIVE))
}

/// Fourth-order central-difference Jacobian of the RHS, column `j` = `∂f/∂z_j`.
pub fn rhs_jacobian<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64], step: f64) -> Result<DMatrix<f64>> {
    let d = z.len();
    let mut jac = DMatrix::zeros(d, d);
    let mut zz = z.to_vec();
    let mut f = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    for j in 0..d {
        let h = probe_step(step, z[j]);
        for (slot, off) in [h, -h, 2.0 * h, -2.0 * h].into_iter().enumerate() {
            zz[j] = z[j] + off;
            eom.rhs(&zz, &mut f[slot])?;
        }
        zz[j] = z[j];
        for i in 0..d {
            jac[(i, j)] = (8.0 * (f[0][i] - f[1][i]) - (f[2][i] - f[3][i])) / (12.0 * h);
        }
    }
    Ok(jac)
}

/// Divergence of the phase-space velocity field, `tr(∂f/∂z)`.
pub fn rhs_divergence<E: EquationsOfMotion + ?Sized>(eom: &E, z: &[f64]) -> Result<f64> {
    Ok(rhs_jacobian(eom, z, 1e-4)?.trace())
}
