use crate::error::{Error, Result};
use crate::linalg::{vec_at, write_vec};
use crate::potentials::Interactions;
use crate::state::ParticleSet;
use crate::units::Units;
use crate::Vec3;

use super::{Backend, EquationsOfMotion};

/// Nosé extended Hamiltonian in virtual time,
/// `H = Σ|p|²/(2ms²) + p_s²/2Q + V + A(ln s − 1)` with `A = (3N+1) k_B T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NhSystem {
    pub particles: ParticleSet,
    pub interactions: Interactions,
    pub q: f64,
    pub temperature: f64,
    pub units: Units,
    /// Cell volume used to normalise the collective observables.
    pub omega_ref: f64,
    /// Holds `s` and `p_s` fixed (`ṡ = ṗ_s = 0`).
    pub frozen: bool,
    a: f64,
}

impl NhSystem {
    pub fn new(particles: ParticleSet, interactions: Interactions, q: f64, temperature: f64, units: Units, omega_ref: f64) -> Result<Self> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if !(q > 0.0 && q.is_finite()) {
            return bad("nh.Q", "must be positive");
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return bad("nh.T_target", "must be positive");
        }
        if !(omega_ref > 0.0) {
            return bad("nh.omega_ref", "must be positive");
        }
        interactions.validate(particles.len())?;
        let a = (3 * particles.len() + 1) as f64 * units.k_b * temperature;
        Ok(NhSystem { particles, interactions, q, temperature, units, omega_ref, frozen: false, a })
    }

    pub fn frozen(mut self, frozen: bool) -> Self {
        self.frozen = frozen;
        self
    }

    /// `A = (3N+1) k_B T`.
    pub fn a(&self) -> f64 {
        self.a
    }

    fn half(&self) -> usize {
        3 * self.particles.len() + 1
    }

    fn s_of(&self, z: &[f64]) -> Result<f64> {
        let s = z[3 * self.particles.len()];
        if !(s > 0.0) {
            return Err(Error::NonPositiveS(s));
        }
        Ok(s)
    }

    fn positions(&self, z: &[f64]) -> Vec<Vec3> {
        (0..self.particles.len()).map(|k| vec_at(z, k)).collect()
    }
}

impl EquationsOfMotion for NhSystem {
    fn backend(&self) -> Backend {
        Backend::Nh
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
        let s = self.s_of(z)?;
        let p_s = z[half + 3 * n];
        let mut kin = 0.0;
        for k in 0..n {
            kin += vec_at(&z[half..], k).norm_squared() / (2.0 * self.particles.mass(k) * s * s);
        }
        let v = self.interactions.total_potential(&self.positions(z))?;
        Ok(kin + p_s * p_s / (2.0 * self.q) + v + self.a * (s.ln() - 1.0))
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.particles.len();
        let half = self.half();
        let s = self.s_of(z)?;
        let p_s = z[half + 3 * n];
        let forces = self.interactions.forces(&self.positions(z))?;
        let mut two_kin = 0.0;
        for k in 0..n {
            let p = vec_at(&z[half..], k);
            let m = self.particles.mass(k);
            write_vec(&(p / (m * s * s)), out, k);
            write_vec(&forces[k], &mut out[half..], k);
            two_kin += p.norm_squared() / m;
        }
        if self.frozen {
            out[3 * n] = 0.0;
            out[half + 3 * n] = 0.0;
        } else {
            out[3 * n] = p_s / self.q;
            out[half + 3 * n] = two_kin / (s * s * s) - self.a / s;
        }
        Ok(())
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        self.s_of(z).map(|_| ())
    }

    fn thermostat_s(&self, z: &[f64]) -> Option<f64> {
        Some(z[3 * self.particles.len()])
    }
}
