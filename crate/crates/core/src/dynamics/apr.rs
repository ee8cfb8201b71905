use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, mat_from_row_major, pseudo_inverse, vec_at, write_row_major, write_vec};
use crate::potentials::Interactions;
use crate::state::{AprState, ParticleSet, SINGULAR_DET};
use crate::{Mat3, Vec3};

use super::{Backend, EquationsOfMotion};

/// Constraint-set tolerance for the exact kinetic backend.
pub const CONSTRAINT_TOL: f64 = 1e-10;
const PINV_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AprKinetic {
    /// `K = Σ p·C⁻¹p/2m + |G|²/2W` with `C = FᵀF`.
    ParrinelloRahman,
    /// Legendre–Fenchel dual of the degenerate `K_L`, minimal-norm velocities.
    ExactMinimalNorm,
}

/// Cell dynamics `H = K + V(Fs) − ω_ref P·F`.
#[derive(Debug, Clone, PartialEq)]
pub struct AprSystem {
    pub particles: ParticleSet,
    pub interactions: Interactions,
    pub w: f64,
    pub omega_ref: f64,
    pub piola: Mat3,
    pub kinetic: AprKinetic,
    /// Holds `F` and `G` fixed (`Ḟ = Ġ = 0`).
    pub frozen_cell: bool,
}

impl AprSystem {
    pub fn new(particles: ParticleSet, interactions: Interactions, w: f64, omega_ref: f64, piola: Mat3, kinetic: AprKinetic) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter { name: "apr.W", reason: "must be positive".into() });
        }
        if !(omega_ref > 0.0 && omega_ref.is_finite()) {
            return Err(Error::InvalidParameter { name: "apr.omega_ref", reason: "must be positive".into() });
        }
        if piola.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter { name: "apr.P", reason: "must be finite".into() });
        }
        interactions.validate(particles.len())?;
        Ok(AprSystem { particles, interactions, w, omega_ref, piola, kinetic, frozen_cell: false })
    }

    pub fn frozen_cell(mut self, frozen: bool) -> Self {
        self.frozen_cell = frozen;
        self
    }

    fn half(&self) -> usize {
        3 * self.particles.len() + 9
    }

    fn unpack(&self, z: &[f64]) -> Result<(Vec<Vec3>, Mat3)> {
        let n = self.particles.len();
        let f = mat_from_row_major(&z[3 * n..]);
        let det = f.determinant();
        if !(det > SINGULAR_DET) {
            return Err(Error::SingularCell(det));
        }
        Ok(((0..n).map(|k| vec_at(z, k)).collect(), f))
    }

    /// `(ṡ, Ḟ)` from the momenta, for either kinetic form.
    pub fn velocities(&self, z: &[f64]) -> Result<(Vec<Vec3>, Mat3)> {
        let n = self.particles.len();
        let half = self.half();
        let (s, f) = self.unpack(z)?;
        match self.kinetic {
            AprKinetic::ParrinelloRahman => {
                let cinv = (f.transpose() * f).try_inverse().ok_or(Error::SingularCell(f.determinant()))?;
                let sdot = (0..n).map(|k| cinv * vec_at(&z[half..], k) / self.particles.mass(k)).collect();
                Ok((sdot, mat_from_row_major(&z[half + 3 * n..]) / self.w))
            }
            AprKinetic::ExactMinimalNorm => {
                let u = exact_velocities(&self.particles, &s, &f, &z[half..])?;
                Ok(((0..n).map(|k| vec_at(u.as_slice(), k)).collect(), mat_from_row_major(&u.as_slice()[3 * n..])))
            }
        }
    }

    /// Phase vector whose momenta are the image `(mFᵀv_k, Σ m v_k⊗s_k)` of the
    /// velocities `(ṡ, Ḟ)` under the degenerate Legendre map of `K_L`.
    pub fn exact_phase(&self, s: &[Vec3], f: &Mat3, sdot: &[Vec3], fdot: &Mat3) -> Vec<f64> {
        let n = self.particles.len();
        let mut g = Mat3::zeros();
        let mut momenta = Vec::with_capacity(n);
        for k in 0..n {
            let m = self.particles.mass(k);
            let v = f * sdot[k] + fdot * s[k];
            momenta.push(f.transpose() * v * m);
            g += v * s[k].transpose() * m;
        }
        AprState { reference: s.to_vec(), momenta, cell: *f, cell_momentum: g }.to_phase()
    }

    /// Defect `|G − Σ F⁻ᵀp_k ⊗ s_k|` of the exact-kinetic constraint set.
    pub fn constraint_defect(&self, z: &[f64]) -> Result<f64> {
        let st = AprState::from_phase(z, self.particles.len());
        let finv_t = st.cell_inverse_transpose()?;
        let mut g = Mat3::zeros();
        for (p, s) in st.momenta.iter().zip(&st.reference) {
            g += (finv_t * p) * s.transpose();
        }
        Ok((st.cell_momentum - g).norm())
    }
}

/// Linear map `L` with `v_k = F ṡ_k + Ḟ s_k` on `u = (ṡ, Ḟ)`.
fn velocity_map(s: &[Vec3], f: &Mat3) -> DMatrix<f64> {
    let n = s.len();
    let mut l = DMatrix::zeros(3 * n, 3 * n + 9);
    for (k, sk) in s.iter().enumerate() {
        for a in 0..3 {
            for b in 0..3 {
                l[(3 * k + a, 3 * k + b)] = f[(a, b)];
                l[(3 * k + a, 3 * n + 3 * a + b)] = sk[b];
            }
        }
    }
    l
}

struct ExactSolve {
    /// Minimal-norm velocities `u = M⁺p`.
    u: DVector<f64>,
    /// `M⁺u`.
    w: DVector<f64>,
    /// Component of `p` outside the range of `M`.
    r: DVector<f64>,
}

fn exact_solve(particles: &ParticleSet, s: &[Vec3], f: &Mat3, p: &[f64]) -> Result<ExactSolve> {
    let n = s.len();
    let l = velocity_map(s, f);
    let mut ml = l.clone();
    for k in 0..n {
        ml.rows_mut(3 * k, 3).scale_mut(particles.mass(k));
    }
    let mass = l.transpose() * ml;
    let (pinv, rank) = pseudo_inverse(&mass, PINV_RTOL);
    if rank < 3 * n {
        return Err(Error::RankDeficient { rank, expected: 3 * n });
    }
    let p = DVector::from_column_slice(&p[..3 * n + 9]);
    let u = &pinv * &p;
    let w = &pinv * &u;
    let r = &p - &mass * &u;
    Ok(ExactSolve { u, w, r })
}

fn exact_velocities(particles: &ParticleSet, s: &[Vec3], f: &Mat3, p: &[f64]) -> Result<DVector<f64>> {
    Ok(exact_solve(particles, s, f, p)?.u)
}

/// Gradient in `(s, F)` of `Σ m (La)·(Lb)` at fixed `a, b`.
fn bilinear_gradient(particles: &ParticleSet, s: &[Vec3], f: &Mat3, a: &DVector<f64>, b: &DVector<f64>) -> (Vec<Vec3>, Mat3) {
    let n = s.len();
    let (a_f, b_f) = (mat_from_row_major(&a.as_slice()[3 * n..]), mat_from_row_major(&b.as_slice()[3 * n..]));
    let mut grad_f = Mat3::zeros();
    let mut grad_s = Vec::with_capacity(n);
    for k in 0..n {
        let m = particles.mass(k);
        let (a_s, b_s) = (vec_at(a.as_slice(), k), vec_at(b.as_slice(), k));
        let la = f * a_s + a_f * s[k];
        let lb = f * b_s + b_f * s[k];
        grad_f += (la * b_s.transpose() + lb * a_s.transpose()) * m;
        grad_s.push((b_f.transpose() * la + a_f.transpose() * lb) * m);
    }
    (grad_s, grad_f)
}

/// The three terms of `K_L`: `½ C·Σmṡ⊗ṡ`, `½ ḞᵀḞ·Σms⊗s` and the mixed
/// `FᵀḞ·Σmṡ⊗s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactKineticTerms {
    pub reference: f64,
    pub cell: f64,
    pub mixed: f64,
}

impl ExactKineticTerms {
    pub fn total(&self) -> f64 {
        self.reference + self.cell + self.mixed
    }
}

/// `K_L = ½ Σ m_k |F ṡ_k + Ḟ s_k|²` split into its quadratic-form terms.
pub fn kinetic_energy_exact_apr(particles: &ParticleSet, s: &[Vec3], sdot: &[Vec3], f: &Mat3, fdot: &Mat3) -> ExactKineticTerms {
    let mut ss = Mat3::zeros();
    let mut dd = Mat3::zeros();
    let mut ds = Mat3::zeros();
    for k in 0..s.len() {
        let m = particles.mass(k);
        dd += sdot[k] * sdot[k].transpose() * m;
        ss += s[k] * s[k].transpose() * m;
        ds += sdot[k] * s[k].transpose() * m;
    }
    let c = f.transpose() * f;
    ExactKineticTerms {
        reference: 0.5 * dot(&c, &dd),
        cell: 0.5 * dot(&(fdot.transpose() * fdot), &ss),
        mixed: dot(&(f.transpose() * fdot), &ds),
    }
}

/// Right-hand side of the exact-kinetic backend after verifying that the momenta
/// lie on the image of the degenerate Legendre map.
pub fn eom_apr_exact(system: &AprSystem, z: &[f64]) -> Result<Vec<f64>> {
    let mut sys = system.clone();
    sys.kinetic = AprKinetic::ExactMinimalNorm;
    let defect = sys.constraint_defect(z)?;
    let g_norm = mat_from_row_major(&z[sys.half() + 3 * sys.particles.len()..]).norm();
    if defect > CONSTRAINT_TOL * g_norm.max(1.0) {
        return Err(Error::ConstraintViolation { defect });
    }
    let mut out = vec![0.0; sys.dim()];
    sys.rhs(z, &mut out)?;
    Ok(out)
}

impl EquationsOfMotion for AprSystem {
    fn backend(&self) -> Backend {
        Backend::Apr
    }
    fn particles(&self) -> &ParticleSet {
        &self.particles
    }
    fn interactions(&self) -> &Interactions {
        &self.interactions
    }
    fn dim(&self) -> usize {
        2 * self.half()
    }

    fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        let n = self.particles.len();
        let half = self.half();
        let (s, f) = self.unpack(z)?;
        let g = mat_from_row_major(&z[half + 3 * n..]);
        let (v, _, _) = self.interactions.cell_terms(&s, &f)?;
        let kin = match self.kinetic {
            AprKinetic::ParrinelloRahman => {
                let cinv = (f.transpose() * f).try_inverse().ok_or(Error::SingularCell(f.determinant()))?;
                let mut k = g.norm_squared() / (2.0 * self.w);
                for j in 0..n {
                    let p = vec_at(&z[half..], j);
                    k += p.dot(&(cinv * p)) / (2.0 * self.particles.mass(j));
                }
                k
            }
            AprKinetic::ExactMinimalNorm => {
                let u = exact_velocities(&self.particles, &s, &f, &z[half..])?;
                0.5 * u.dot(&DVector::from_column_slice(&z[half..]))
            }
        };
        Ok(kin + v - self.omega_ref * dot(&self.piola, &f))
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.particles.len();
        let half = self.half();
        let (s, f) = self.unpack(z)?;
        let (_, forces, dv_df) = self.interactions.cell_terms(&s, &f)?;
        let ft = f.transpose();
        let mut gdot = self.piola * self.omega_ref - dv_df;
        let fdot;
        match self.kinetic {
            AprKinetic::ParrinelloRahman => {
                let cinv = (ft * f).try_inverse().ok_or(Error::SingularCell(f.determinant()))?;
                for k in 0..n {
                    let m = self.particles.mass(k);
                    let a = cinv * vec_at(&z[half..], k);
                    write_vec(&(a / m), out, k);
                    write_vec(&(ft * forces[k]), &mut out[half..], k);
                    gdot += (f * a) * a.transpose() / m;
                }
                fdot = mat_from_row_major(&z[half + 3 * n..]) / self.w;
            }
            AprKinetic::ExactMinimalNorm => {
                // H = ½ p·M⁺p; off the range of M the pseudo-inverse derivative
                // contributes −∂(w·M r) besides ½ ∂(u·M u).
                let sol = exact_solve(&self.particles, &s, &f, &z[half..])?;
                let (gs_uu, gf_uu) = bilinear_gradient(&self.particles, &s, &f, &sol.u, &sol.u);
                let (gs_wr, gf_wr) = bilinear_gradient(&self.particles, &s, &f, &sol.w, &sol.r);
                fdot = mat_from_row_major(&sol.u.as_slice()[3 * n..]);
                for k in 0..n {
                    write_vec(&vec_at(sol.u.as_slice(), k), out, k);
                    write_vec(&(gs_uu[k] * 0.5 - gs_wr[k] + ft * forces[k]), &mut out[half..], k);
                }
                gdot += gf_uu * 0.5 - gf_wr;
            }
        }
        if self.frozen_cell {
            out[3 * n..half].fill(0.0);
            out[half + 3 * n..].fill(0.0);
        } else {
            write_row_major(&fdot, &mut out[3 * n..half]);
            write_row_major(&gdot, &mut out[half + 3 * n..]);
        }
        Ok(())
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        self.unpack(z).map(|_| ())
    }
}
