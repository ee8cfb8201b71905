use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::Vec3;

/// Eight-point Gauss–Legendre rule on `[-1, 1]`.
const GL8_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL8_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Lucy kernel `w(d) = 105/(16πh³) (1 + 3d/h)(1 − d/h)³` on `d ≤ h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub h: f64,
}

impl Kernel {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter { name: "grid.h", reason: "kernel width must be positive".into() });
        }
        Ok(Kernel { h })
    }

    pub fn value(&self, d: f64) -> f64 {
        let q = d / self.h;
        if q >= 1.0 {
            return 0.0;
        }
        let c = 105.0 / (16.0 * PI * self.h.powi(3));
        let t = 1.0 - q;
        c * (1.0 + 3.0 * q) * t * t * t
    }

    /// `4π ∫₀^h w(d) d² dd`, exact for this polynomial kernel.
    pub fn radial_integral(&self) -> f64 {
        let quad = BondQuadrature::gauss_legendre8();
        quad.nodes().map(|(a, wt)| {
            let d = a * self.h;
            4.0 * PI * wt * self.h * self.value(d) * d * d
        })
        .sum()
    }
}

/// Gauss–Legendre rule on `α ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondQuadrature {
    alpha: Vec<f64>,
    weight: Vec<f64>,
}

impl BondQuadrature {
    pub fn gauss_legendre8() -> Self {
        let mut alpha = Vec::with_capacity(8);
        let mut weight = Vec::with_capacity(8);
        for i in (0..4).rev() {
            alpha.push(0.5 * (1.0 - GL8_X[i]));
            weight.push(0.5 * GL8_W[i]);
        }
        for i in 0..4 {
            alpha.push(0.5 * (1.0 + GL8_X[i]));
            weight.push(0.5 * GL8_W[i]);
        }
        BondQuadrature { alpha, weight }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.alpha.iter().copied().zip(self.weight.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes().map(|(a, w)| w * f(a)).sum()
    }
}

/// Discrete kernel weights around one point, renormalised so that
/// `Σ ŵ Δx³ = 1` over the grid nodes.
#[derive(Debug, Clone, Default)]
pub struct Stamp {
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Stamp {
    pub fn fill(&mut self, grid: &GridSpec, kernel: &Kernel, p: &Vec3) -> Result<()> {
        self.nodes.clear();
        self.weights.clear();
        let range = grid.support_range(p);
        let mut total = 0.0;
        for i in range[0].0..=range[0].1 {
            for j in range[1].0..=range[1].1 {
                for k in range[2].0..=range[2].1 {
                    let idx = grid.index(i, j, k);
                    let w = kernel.value((grid.node(idx) - p).norm());
                    if w > 0.0 {
                        self.nodes.push(idx);
                        self.weights.push(w);
                        total += w;
                    }
                }
            }
        }
        if total <= 0.0 {
            return Err(Error::GridTooSmall("kernel support contains no grid node".into()));
        }
        let scale = 1.0 / (total * grid.cell_volume());
        for w in &mut self.weights {
            *w *= scale;
        }
        Ok(())
    }
}
