//! Pair and external potentials, topology, and their gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Separations below this are treated as coincident particles.
pub const MIN_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairKind {
    LennardJones { epsilon: f64, sigma: f64 },
    Harmonic { k: f64, r0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPotential {
    kind: PairKind,
    cutoff: Option<f64>,
    v_c: f64,
    dv_c: f64,
}

impl PairPotential {
    pub fn new(kind: PairKind, cutoff: Option<f64>) -> Result<Self> {
        match kind {
            PairKind::LennardJones { epsilon, sigma } => {
                if !(epsilon > 0.0 && sigma > 0.0) {
                    return Err(Error::InvalidParameter { name: "pair", reason: "LJ epsilon and sigma must be positive".into() });
                }
            }
            PairKind::Harmonic { k, r0 } => {
                if !(k >= 0.0 && r0 >= 0.0) {
                    return Err(Error::InvalidParameter { name: "pair", reason: "harmonic k and r0 must be non-negative".into() });
                }
            }
        }
        if let Some(rc) = cutoff {
            if !(rc > 0.0 && rc.is_finite()) {
                return Err(Error::InvalidParameter { name: "pair.cutoff", reason: "must be positive".into() });
            }
        }
        let mut p = PairPotential { kind, cutoff, v_c: 0.0, dv_c: 0.0 };
        if let Some(rc) = cutoff {
            let (v, dv) = p.raw(rc);
            p.v_c = v;
            p.dv_c = dv;
        }
        Ok(p)
    }

    /// Unshifted Lennard-Jones.
    pub fn lennard_jones(epsilon: f64, sigma: f64) -> Result<Self> {
        Self::new(PairKind::LennardJones { epsilon, sigma }, None)
    }

    /// Lennard-Jones with energy-and-force shift at `2.5σ`.
    pub fn lennard_jones_cut(epsilon: f64, sigma: f64) -> Result<Self> {
        Self::new(PairKind::LennardJones { epsilon, sigma }, Some(2.5 * sigma))
    }

    pub fn harmonic(k: f64, r0: f64) -> Result<Self> {
        Self::new(PairKind::Harmonic { k, r0 }, None)
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    fn raw(&self, r: f64) -> (f64, f64) {
        match self.kind {
            PairKind::LennardJones { epsilon, sigma } => {
                let sr6 = (sigma / r).powi(6);
                let sr12 = sr6 * sr6;
                (4.0 * epsilon * (sr12 - sr6), -24.0 * epsilon * (2.0 * sr12 - sr6) / r)
            }
            PairKind::Harmonic { k, r0 } => (0.5 * k * (r - r0) * (r - r0), k * (r - r0)),
        }
    }

    /// `(V(r), V'(r))` with the cutoff shift applied.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveSeparation(r));
        }
        match self.cutoff {
            None => Ok(self.raw(r)),
            Some(rc) if r >= rc => Ok((0.0, 0.0)),
            Some(rc) => {
                let (v, dv) = self.raw(r);
                Ok((v - self.v_c - self.dv_c * (r - rc), dv - self.dv_c))
            }
        }
    }

    pub fn energy(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.0)
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ExternalPotential {
    #[default]
    None,
    HarmonicTrap { kappa: f64, center: Vec3 },
    UniformField { g: Vec3 },
}

impl ExternalPotential {
    pub fn energy(&self, r: &Vec3) -> f64 {
        match self {
            ExternalPotential::None => 0.0,
            ExternalPotential::HarmonicTrap { kappa, center } => 0.5 * kappa * (r - center).norm_squared(),
            ExternalPotential::UniformField { g } => g.dot(r),
        }
    }

    pub fn gradient(&self, r: &Vec3) -> Vec3 {
        match self {
            ExternalPotential::None => Vec3::zeros(),
            ExternalPotential::HarmonicTrap { kappa, center } => (r - center) * *kappa,
            ExternalPotential::UniformField { g } => *g,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ExternalPotential::None)
    }
}

/// Explicit interaction between `i` and `j` with separation `r_i - r_j + shift`
/// (in referential coordinates for cell dynamics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    #[serde(default = "zero_shift")]
    pub shift: [f64; 3],
}

fn zero_shift() -> [f64; 3] {
    [0.0; 3]
}

impl Bond {
    pub fn new(i: usize, j: usize) -> Self {
        Bond { i, j, shift: [0.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Topology {
    #[default]
    AllPairs,
    Bonds(Vec<Bond>),
}

/// One evaluated interacting pair. `x = r_i - r_j` (current frame), `x_ref` the
/// corresponding referential separation (equal to `x` without a cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEval {
    pub i: usize,
    pub j: usize,
    pub x: Vec3,
    pub x_ref: Vec3,
    pub r: f64,
    pub v: f64,
    pub dv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interactions {
    pub pair: Option<PairPotential>,
    pub external: ExternalPotential,
    pub topology: Topology,
}

impl Interactions {
    pub fn new(pair: Option<PairPotential>, external: ExternalPotential, topology: Topology) -> Self {
        Interactions { pair, external, topology }
    }

    pub fn pairwise(pair: PairPotential) -> Self {
        Self::new(Some(pair), ExternalPotential::None, Topology::AllPairs)
    }

    pub fn free() -> Self {
        Self::new(None, ExternalPotential::None, Topology::AllPairs)
    }

    pub fn with_external(mut self, ext: ExternalPotential) -> Self {
        self.external = ext;
        self
    }

    pub fn has_periodic_bonds(&self) -> bool {
        match &self.topology {
            Topology::AllPairs => false,
            Topology::Bonds(b) => b.iter().any(|b| b.shift != [0.0; 3]),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Topology::Bonds(bonds) = &self.topology {
            for b in bonds {
                if b.i >= n || b.j >= n {
                    return Err(Error::IndexOutOfRange { index: b.i.max(b.j), count: n });
                }
                if b.i == b.j && b.shift == [0.0; 3] {
                    return Err(Error::InvalidParameter { name: "bonds", reason: format!("self bond on {} without shift", b.i) });
                }
            }
        }
        Ok(())
    }

    /// Evaluates every interacting pair. With `cell = Some(F)` the coordinates are
    /// referential and separations are mapped by `F`.
    pub fn pairs(&self, coords: &[Vec3], cell: Option<&Mat3>) -> Result<Vec<PairEval>> {
        let Some(pot) = &self.pair else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        let mut push = |i: usize, j: usize, shift: Vec3| -> Result<()> {
            let x_ref = coords[i] - coords[j] + shift;
            let x = match cell {
                Some(f) => f * x_ref,
                None => x_ref,
            };
            let r = x.norm();
            if r < MIN_SEPARATION {
                return Err(Error::CoincidentParticles { i, j, separation: r });
            }
            if let Some(rc) = pot.cutoff() {
                if r >= rc {
                    return Ok(());
                }
            }
            let (v, dv) = pot.eval(r)?;
            out.push(PairEval { i, j, x, x_ref, r, v, dv });
            Ok(())
        };
        match &self.topology {
            Topology::AllPairs => {
                for i in 0..coords.len() {
                    for j in i + 1..coords.len() {
                        push(i, j, Vec3::zeros())?;
                    }
                }
            }
            Topology::Bonds(bonds) => {
                for b in bonds {
                    push(b.i, b.j, Vec3::from(b.shift))?;
                }
            }
        }
        Ok(out)
    }

    /// `V = ½ Σ_{j≠k} V_jk + Σ_k V^e_k` at current positions.
    pub fn total_potential(&self, positions: &[Vec3]) -> Result<f64> {
        let mut e = 0.0;
        for p in self.pairs(positions, None)? {
            e += p.v;
        }
        for r in positions {
            e += self.external.energy(r);
        }
        Ok(e)
    }

    /// `-∂V/∂r_k` for every particle.
    pub fn forces(&self, positions: &[Vec3]) -> Result<Vec<Vec3>> {
        let mut f: Vec<Vec3> = positions.iter().map(|r| -self.external.gradient(r)).collect();
        for p in self.pairs(positions, None)? {
            let fij = p.x * (p.dv / p.r);
            f[p.i] -= fij;
            f[p.j] += fij;
        }
        Ok(f)
    }

    pub fn force_on_particle(&self, positions: &[Vec3], k: usize) -> Result<Vec3> {
        if k >= positions.len() {
            return Err(Error::IndexOutOfRange { index: k, count: positions.len() });
        }
        Ok(self.forces(positions)?[k])
    }

    /// Potential of the cell-mapped configuration `r = F s`, the physical forces
    /// at those positions, and `∂V/∂F`.
    pub fn cell_terms(&self, reference: &[Vec3], cell: &Mat3) -> Result<(f64, Vec<Vec3>, Mat3)> {
        let mut energy = 0.0;
        let mut forces = Vec::with_capacity(reference.len());
        let mut dv_df = Mat3::zeros();
        for s in reference {
            let r = cell * s;
            energy += self.external.energy(&r);
            let g = self.external.gradient(&r);
            forces.push(-g);
            dv_df += g * s.transpose();
        }
        for p in self.pairs(reference, Some(cell))? {
            energy += p.v;
            let fij = p.x * (p.dv / p.r);
            forces[p.i] -= fij;
            forces[p.j] += fij;
            dv_df += fij * p.x_ref.transpose();
        }
        Ok((energy, forces, dv_df))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lj_reference_values() {
        let lj = PairPotential::lennard_jones(1.0, 1.0).unwrap();
        let rmin = 2f64.powf(1.0 / 6.0);
        let (v, dv) = lj.eval(rmin).unwrap();
        assert_relative_eq!(v, -1.0, epsilon = 1e-14);
        assert!(dv.abs() < 1e-13);
        assert_eq!(lj.eval(1.0).unwrap(), (0.0, -24.0));
        assert!(matches!(lj.eval(0.0), Err(Error::NonPositiveSeparation(_))));
        assert!(lj.eval(-1.0).is_err());
    }

    #[test]
    fn harmonic_rest_length() {
        let h = PairPotential::harmonic(1.0, 1.0).unwrap();
        assert_eq!(h.eval(1.0).unwrap(), (0.0, 0.0));
        assert_eq!(h.eval(2.0).unwrap(), (0.5, 1.0));
    }

    #[test]
    fn cutoff_is_c1() {
        let lj = PairPotential::lennard_jones_cut(1.0, 1.0).unwrap();
        let rc = 2.5;
        let (v, dv) = lj.eval(rc - 1e-12).unwrap();
        assert!(v.abs() < 1e-12 && dv.abs() < 1e-12);
        assert_eq!(lj.eval(3.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn pair_energy_counted_once_per_pair() {
        let it = Interactions::pairwise(PairPotential::harmonic(1.0, 1.0).unwrap());
        let one = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(it.total_potential(&one).unwrap(), 0.0);
        let two = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)];
        assert_eq!(it.total_potential(&two).unwrap(), 0.5);
        let same = [Vec3::zeros(), Vec3::zeros()];
        assert!(matches!(it.total_potential(&same), Err(Error::CoincidentParticles { .. })));
    }

    #[test]
    fn uniform_field_force_is_minus_g() {
        let it = Interactions::free().with_external(ExternalPotential::UniformField { g: Vec3::new(0.0, 0.0, -1.0) });
        let f = it.force_on_particle(&[Vec3::new(0.3, 0.1, 2.0)], 0).unwrap();
        assert_eq!(f, Vec3::new(0.0, 0.0, 1.0));
        assert!(it.force_on_particle(&[Vec3::zeros()], 1).is_err());
    }

    #[test]
    fn lj_minimum_has_no_mutual_force() {
        let it = Interactions::pairwise(PairPotential::lennard_jones(1.0, 1.0).unwrap());
        let r = 2f64.powf(1.0 / 6.0);
        let f = it.forces(&[Vec3::zeros(), Vec3::new(r, 0.0, 0.0)]).unwrap();
        assert!(f[0].norm() < 1e-13 && f[1].norm() < 1e-13);
    }

    #[test]
    fn cell_terms_match_direct_forces() {
        let it = Interactions::pairwise(PairPotential::harmonic(1.3, 0.8).unwrap())
            .with_external(ExternalPotential::HarmonicTrap { kappa: 0.4, center: Vec3::new(0.1, 0.0, -0.2) });
        let f = Mat3::new(1.1, 0.1, 0.0, -0.05, 0.9, 0.2, 0.0, 0.1, 1.2);
        let s = [Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.0, -0.4, 0.2), Vec3::new(-0.5, 0.7, 0.9)];
        let r: Vec<Vec3> = s.iter().map(|s| f * s).collect();
        let (e, forces, _) = it.cell_terms(&s, &f).unwrap();
        assert_relative_eq!(e, it.total_potential(&r).unwrap(), epsilon = 1e-14);
        let direct = it.forces(&r).unwrap();
        for k in 0..3 {
            assert_relative_eq!(forces[k], direct[k], epsilon = 1e-14);
        }
    }
}
