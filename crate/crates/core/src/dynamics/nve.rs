use crate::error::Result;
use crate::linalg::{vec_at, write_vec};
use crate::potentials::Interactions;
use crate::state::ParticleSet;
use crate::Vec3;

use super::{Backend, EquationsOfMotion};

/// Classical `H = Σ|p|²/2m + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct NveSystem {
    pub particles: ParticleSet,
    pub interactions: Interactions,
}

impl NveSystem {
    pub fn new(particles: ParticleSet, interactions: Interactions) -> Result<Self> {
        interactions.validate(particles.len())?;
        Ok(NveSystem { particles, interactions })
    }

    fn positions(&self, z: &[f64]) -> Vec<Vec3> {
        (0..self.particles.len()).map(|k| vec_at(z, k)).collect()
    }
}

impl EquationsOfMotion for NveSystem {
    fn backend(&self) -> Backend {
        Backend::Nve
    }
    fn particles(&self) -> &ParticleSet {
        &self.particles
    }
    fn interactions(&self) -> &Interactions {
        &self.interactions
    }
    fn dim(&self) -> usize {
        6 * self.particles.len()
    }

    fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        let n = self.particles.len();
        let mut kin = 0.0;
        for k in 0..n {
            kin += vec_at(&z[3 * n..], k).norm_squared() / (2.0 * self.particles.mass(k));
        }
        Ok(kin + self.interactions.total_potential(&self.positions(z))?)
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.particles.len();
        let forces = self.interactions.forces(&self.positions(z))?;
        for k in 0..n {
            let p = vec_at(&z[3 * n..], k);
            write_vec(&(p / self.particles.mass(k)), out, k);
            write_vec(&forces[k], &mut out[3 * n..], k);
        }
        Ok(())
    }

    fn linear_momentum(&self, z: &[f64]) -> Option<Vec3> {
        let n = self.particles.len();
        Some((0..n).map(|k| vec_at(&z[3 * n..], k)).sum())
    }
}
