//! Phase-space states for the three backends and the elementary kinematic maps.
//!
//! Phase vectors are flat `[q, p]` arrays:
//! * NVE: `q = (r_1..r_N)`, `p = (p_1..p_N)`
//! * NH:  `q = (r_1..r_N, s)`, `p = (p_1..p_N, p_s)` with virtual momenta
//! * APR: `q = (s_1..s_N, F)`, `p = (p_1..p_N, G)`, tensors row-major

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_from_row_major, vec_at, write_row_major, write_vec};
use crate::{Mat3, Vec3};

/// Determinant threshold below which a cell tensor is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    masses: Vec<f64>,
}

impl ParticleSet {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParameter { name: "masses", reason: "need at least one particle".into() });
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter { name: "masses", reason: format!("mass {m} is not positive") });
        }
        Ok(ParticleSet { masses })
    }

    pub fn uniform(count: usize, mass: f64) -> Result<Self> {
        Self::new(vec![mass; count])
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.masses[k]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

fn check_index(k: usize, n: usize) -> Result<()> {
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, count: n });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NveState {
    pub positions: Vec<Vec3>,
    pub momenta: Vec<Vec3>,
}

impl NveState {
    pub fn to_phase(&self) -> Vec<f64> {
        let n = self.positions.len();
        let mut z = vec![0.0; 6 * n];
        for k in 0..n {
            write_vec(&self.positions[k], &mut z, k);
            write_vec(&self.momenta[k], &mut z[3 * n..], k);
        }
        z
    }

    pub fn from_phase(z: &[f64], n: usize) -> Self {
        NveState {
            positions: (0..n).map(|k| vec_at(z, k)).collect(),
            momenta: (0..n).map(|k| vec_at(&z[3 * n..], k)).collect(),
        }
    }
}

/// Point of the Nosé extended phase space. Momenta are virtual: `p_k = s m_k v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NhState {
    pub positions: Vec<Vec3>,
    pub momenta: Vec<Vec3>,
    pub s: f64,
    pub p_s: f64,
}

impl NhState {
    pub fn to_phase(&self) -> Vec<f64> {
        let n = self.positions.len();
        let half = 3 * n + 1;
        let mut z = vec![0.0; 2 * half];
        for k in 0..n {
            write_vec(&self.positions[k], &mut z, k);
            write_vec(&self.momenta[k], &mut z[half..], k);
        }
        z[3 * n] = self.s;
        z[half + 3 * n] = self.p_s;
        z
    }

    pub fn from_phase(z: &[f64], n: usize) -> Self {
        let half = 3 * n + 1;
        NhState {
            positions: (0..n).map(|k| vec_at(z, k)).collect(),
            momenta: (0..n).map(|k| vec_at(&z[half..], k)).collect(),
            s: z[3 * n],
            p_s: z[half + 3 * n],
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(Error::NonPositiveS(self.s));
        }
        Ok(())
    }
}

/// Point of the APR extended phase space: referential coordinates `s_k`, their
/// conjugate momenta, the cell tensor `F` and its momentum `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct AprState {
    pub reference: Vec<Vec3>,
    pub momenta: Vec<Vec3>,
    pub cell: Mat3,
    pub cell_momentum: Mat3,
}

impl AprState {
    pub fn to_phase(&self) -> Vec<f64> {
        let n = self.reference.len();
        let half = 3 * n + 9;
        let mut z = vec![0.0; 2 * half];
        for k in 0..n {
            write_vec(&self.reference[k], &mut z, k);
            write_vec(&self.momenta[k], &mut z[half..], k);
        }
        write_row_major(&self.cell, &mut z[3 * n..half]);
        write_row_major(&self.cell_momentum, &mut z[half + 3 * n..]);
        z
    }

    pub fn from_phase(z: &[f64], n: usize) -> Self {
        let half = 3 * n + 9;
        AprState {
            reference: (0..n).map(|k| vec_at(z, k)).collect(),
            momenta: (0..n).map(|k| vec_at(&z[half..], k)).collect(),
            cell: mat_from_row_major(&z[3 * n..half]),
            cell_momentum: mat_from_row_major(&z[half + 3 * n..]),
        }
    }

    pub fn check(&self) -> Result<()> {
        let det = self.cell.determinant();
        if !(det > SINGULAR_DET) {
            return Err(Error::SingularCell(det));
        }
        Ok(())
    }

    /// `F⁻ᵀ`, failing on a singular or inverted cell.
    pub fn cell_inverse_transpose(&self) -> Result<Mat3> {
        self.check()?;
        let inv = self.cell.try_inverse().ok_or(Error::SingularCell(self.cell.determinant()))?;
        Ok(inv.transpose())
    }
}

/// Physical momentum `p_k / s` of particle `k`.
pub fn physical_momentum_nh(state: &NhState, k: usize) -> Result<Vec3> {
    check_index(k, state.momenta.len())?;
    state.check()?;
    Ok(state.momenta[k] / state.s)
}

/// `(1/m_k) F⁻ᵀ p_k`, the physical velocity carried by the conjugate momentum.
pub fn physical_velocity_apr(state: &AprState, particles: &ParticleSet, k: usize) -> Result<Vec3> {
    check_index(k, state.momenta.len())?;
    let finv_t = state.cell_inverse_transpose()?;
    Ok(finv_t * state.momenta[k] / particles.mass(k))
}

/// Current positions `r_k = F s_k`.
pub fn current_positions_apr(state: &AprState) -> Result<Vec<Vec3>> {
    state.check()?;
    Ok(state.reference.iter().map(|s| state.cell * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nh(p: Vec3, s: f64) -> NhState {
        NhState { positions: vec![Vec3::zeros()], momenta: vec![p], s, p_s: 0.0 }
    }

    fn apr(cell: Mat3, s: Vec3, p: Vec3) -> AprState {
        AprState { reference: vec![s], momenta: vec![p], cell, cell_momentum: Mat3::zeros() }
    }

    #[test]
    fn nh_physical_momentum() {
        let p = Vec3::new(2.0, 0.0, 0.0);
        assert_eq!(physical_momentum_nh(&nh(p, 1.0), 0).unwrap(), p);
        assert_eq!(physical_momentum_nh(&nh(p, 2.0), 0).unwrap(), Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(physical_momentum_nh(&nh(Vec3::zeros(), 3.7), 0).unwrap(), Vec3::zeros());
        assert!(matches!(physical_momentum_nh(&nh(p, 1.0), 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(physical_momentum_nh(&nh(p, 0.0), 0), Err(Error::NonPositiveS(_))));
    }

    #[test]
    fn nh_physical_momentum_scales_inversely_with_s() {
        let p = Vec3::new(0.3, -1.7, 2.9);
        for s in [0.25, 1.0, 3.0, 17.5] {
            let a = physical_momentum_nh(&nh(p, s), 0).unwrap();
            let b = physical_momentum_nh(&nh(p, 2.0 * s), 0).unwrap();
            assert_eq!(a * 0.5, b);
        }
    }

    #[test]
    fn apr_velocity_examples() {
        let parts = ParticleSet::uniform(1, 1.0).unwrap();
        let v = physical_velocity_apr(&apr(Mat3::identity(), Vec3::zeros(), Vec3::x()), &parts, 0).unwrap();
        assert_eq!(v, Vec3::x());
        let f = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        let v = physical_velocity_apr(&apr(f, Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)), &parts, 0).unwrap();
        assert_relative_eq!(v, Vec3::x(), epsilon = 1e-15);
        let bad = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0));
        assert!(matches!(
            physical_velocity_apr(&apr(bad, Vec3::zeros(), Vec3::x()), &parts, 0),
            Err(Error::SingularCell(_))
        ));
    }

    #[test]
    fn apr_positions_examples() {
        let s = Vec3::new(1.0, 1.0, 1.0);
        assert_eq!(current_positions_apr(&apr(Mat3::identity(), s, Vec3::zeros())).unwrap()[0], s);
        assert_eq!(current_positions_apr(&apr(Mat3::identity() * 2.0, s, Vec3::zeros())).unwrap()[0], s * 2.0);
        let mut shear = Mat3::identity();
        shear[(0, 1)] = 0.5;
        let r = current_positions_apr(&apr(shear, Vec3::new(0.0, 1.0, 0.0), Vec3::zeros())).unwrap();
        assert_eq!(r[0], Vec3::new(0.5, 1.0, 0.0));
    }

    #[test]
    fn phase_round_trip() {
        let st = AprState {
            reference: vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 0.25)],
            momenta: vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.4, 0.5, 0.6)],
            cell: Mat3::new(1.0, 0.1, 0.2, 0.0, 1.1, 0.0, 0.3, 0.0, 0.9),
            cell_momentum: Mat3::new(0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
        };
        assert_eq!(AprState::from_phase(&st.to_phase(), 2), st);
        let nh = NhState { positions: st.reference.clone(), momenta: st.momenta.clone(), s: 1.3, p_s: -0.2 };
        assert_eq!(NhState::from_phase(&nh.to_phase(), 2), nh);
    }
}
