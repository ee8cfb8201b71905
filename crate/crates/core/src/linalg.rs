//! Small dense helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::{Mat3, Vec3};

/// Frobenius pairing `A·B = tr(AᵀB)`.
pub fn dot(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

pub fn mat_from_row_major(v: &[f64]) -> Mat3 {
    Mat3::from_row_slice(&v[..9])
}

pub fn write_row_major(m: &Mat3, out: &mut [f64]) {
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = m[(i, j)];
        }
    }
}

pub fn vec_at(v: &[f64], k: usize) -> Vec3 {
    Vec3::new(v[3 * k], v[3 * k + 1], v[3 * k + 2])
}

pub fn write_vec(v: &Vec3, out: &mut [f64], k: usize) {
    out[3 * k] = v.x;
    out[3 * k + 1] = v.y;
    out[3 * k + 2] = v.z;
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
/// Returns the inverse and the numerical rank.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let n = m.ncols();
    let mut pinv = DMatrix::zeros(n, m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            pinv += (vt.row(k).transpose() * u.column(k).transpose()) / s;
        }
    }
    (pinv, rank)
}
