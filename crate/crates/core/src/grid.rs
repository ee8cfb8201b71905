//! Rectilinear node grid and sample-time axis for field evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub dx: f64,
    /// Kernel support radius.
    pub h: f64,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(lower: [f64; 3], upper: [f64; 3], dx: f64, h: f64, t0: f64, dt: f64, nt: usize) -> Result<Self> {
        let g = GridSpec { lower, upper, dx, h, t0, dt, nt };
        g.validate()?;
        Ok(g)
    }

    /// Cube `[-half, half]³` with `h = 3Δx`.
    pub fn cube(half: f64, dx: f64, t0: f64, dt: f64, nt: usize) -> Result<Self> {
        Self::new([-half; 3], [half; 3], dx, 3.0 * dx, t0, dt, nt)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad("grid.dx", "must be positive");
        }
        if !(self.h >= 2.0 * self.dx) {
            return bad("grid.h", "must be at least 2 dx");
        }
        if (0..3).any(|a| !(self.upper[a] > self.lower[a])) {
            return bad("grid.upper", "must exceed lower on every axis");
        }
        if (0..3).any(|a| self.upper[a] - self.lower[a] < 2.0 * self.h) {
            return Err(Error::GridTooSmall("box narrower than twice the kernel width".into()));
        }
        if self.nt == 0 {
            return bad("grid.nt", "need at least one time sample");
        }
        if self.nt > 1 && !(self.dt > 0.0) {
            return bad("grid.dt", "must be positive");
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 3] {
        let mut s = [0; 3];
        for a in 0..3 {
            s[a] = ((self.upper[a] - self.lower[a]) / self.dx + 1e-9).floor() as usize + 1;
        }
        s
    }

    pub fn node_count(&self) -> usize {
        let s = self.shape();
        s[0] * s[1] * s[2]
    }

    /// Flat index with `x` slowest and `z` fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let s = self.shape();
        (i * s[1] + j) * s[2] + k
    }

    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let s = self.shape();
        [idx / (s[1] * s[2]), (idx / s[2]) % s[1], idx % s[2]]
    }

    pub fn node(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.unflatten(idx);
        Vec3::new(
            self.lower[0] + i as f64 * self.dx,
            self.lower[1] + j as f64 * self.dx,
            self.lower[2] + k as f64 * self.dx,
        )
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dx * self.dx
    }

    pub fn box_volume(&self) -> f64 {
        (0..3).map(|a| self.upper[a] - self.lower[a]).product()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|i| self.t0 + i as f64 * self.dt).collect()
    }

    /// True when the full kernel support around `r` lies inside the box.
    pub fn contains_padded(&self, r: &Vec3) -> bool {
        (0..3).all(|a| r[a] >= self.lower[a] + self.h && r[a] <= self.upper[a] - self.h)
    }

    /// Inclusive node-index range per axis covering the ball of radius `h` around `r`.
    pub fn support_range(&self, r: &Vec3) -> [(usize, usize); 3] {
        let s = self.shape();
        let mut out = [(0, 0); 3];
        for a in 0..3 {
            let lo = ((r[a] - self.h - self.lower[a]) / self.dx).floor().max(0.0) as usize;
            let hi = (((r[a] + self.h - self.lower[a]) / self.dx).ceil() as usize).min(s[a] - 1);
            out[a] = (lo, hi);
        }
        out
    }

    /// Number of node layers at each face excluded from balance residuals.
    pub fn boundary_layers(&self) -> usize {
        (self.h / self.dx - 1e-9).ceil() as usize + 1
    }

    /// Mask of nodes at least `boundary_layers()` away from every face.
    pub fn interior_mask(&self) -> Vec<bool> {
        let s = self.shape();
        let l = self.boundary_layers();
        (0..self.node_count())
            .map(|idx| {
                let ijk = self.unflatten(idx);
                (0..3).all(|a| ijk[a] >= l && ijk[a] + l < s[a])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_nodes() {
        let g = GridSpec::cube(1.0, 0.25, 0.0, 0.1, 3).unwrap();
        assert_eq!(g.shape(), [9, 9, 9]);
        let idx = g.index(8, 0, 4);
        assert_eq!(g.unflatten(idx), [8, 0, 4]);
        assert_eq!(g.node(idx), Vec3::new(1.0, -1.0, 0.0));
        assert_eq!(g.times(), vec![0.0, 0.1, 0.2]);
    }

    #[test]
    fn rejects_narrow_kernel() {
        assert!(GridSpec::new([-1.0; 3], [1.0; 3], 0.2, 0.3, 0.0, 1.0, 1).is_err());
        assert!(GridSpec::new([-1.0; 3], [1.0; 3], -0.2, 0.5, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn interior_mask_excludes_kernel_layers() {
        let g = GridSpec::cube(2.0, 0.25, 0.0, 0.1, 3).unwrap();
        assert_eq!(g.boundary_layers(), 4);
        let n = g.interior_mask().iter().filter(|b| **b).count();
        assert_eq!(n, 9 * 9 * 9);
    }
}
