//! Initial-condition sampling, parallel trajectory batches and ensemble averages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, Backend, ConservationMonitor, EquationsOfMotion, IntegratorSpec, System};
use crate::error::{Error, Result};
use crate::state::{AprState, NhState, NveState, SINGULAR_DET};
use crate::trajectory::{Clock, Trajectory};
use crate::units::Units;
use crate::{Mat3, Vec3};

pub const RETRY_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum PositionScheme {
    /// Simple-cubic sites filled in lexicographic order, centred on `center`,
    /// each displaced by isotropic Gaussian jitter.
    Lattice { spacing: f64, jitter: f64, center: Vec3 },
    Explicit(Vec<Vec3>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentumScheme {
    Zero,
    MaxwellBoltzmann { temperature: f64 },
    /// Physical momenta `m_k v_k`.
    Explicit(Vec<Vec3>),
}

/// Distribution of the extended variables: `s = s0·exp(σ_s ξ)`, `p_s ~ N(0, σ_ps)`,
/// `F = F0 + σ_F Z` (redrawn while `det F ≤ 0`), `G = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryScheme {
    pub s0: f64,
    pub sigma_s: f64,
    pub sigma_ps: f64,
    pub cell0: Mat3,
    pub sigma_f: f64,
}

impl Default for AuxiliaryScheme {
    fn default() -> Self {
        AuxiliaryScheme { s0: 1.0, sigma_s: 0.0, sigma_ps: 0.0, cell0: Mat3::identity(), sigma_f: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    pub positions: PositionScheme,
    pub momenta: MomentumScheme,
    pub aux: AuxiliaryScheme,
    pub units: Units,
    pub seed: u64,
}

/// Simple-cubic lattice sites for `n` particles, centred on `center`.
pub fn lattice_sites(n: usize, spacing: f64, center: Vec3) -> Vec<Vec3> {
    let side = (1..).find(|s| s * s * s >= n).unwrap_or(1);
    let mut sites = Vec::with_capacity(n);
    'outer: for i in 0..side {
        for j in 0..side {
            for k in 0..side {
                if sites.len() == n {
                    break 'outer;
                }
                sites.push(Vec3::new(i as f64, j as f64, k as f64) * spacing);
            }
        }
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for s in &sites {
        lo = lo.inf(s);
        hi = hi.sup(s);
    }
    let shift = center - (lo + hi) * 0.5;
    sites.iter().map(|s| s + shift).collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    let mut g = || -> f64 { rng.sample::<f64, _>(StandardNormal) };
    Vec3::new(g(), g(), g()) * sigma
}

impl InitialDensity {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        match &self.positions {
            PositionScheme::Lattice { spacing, jitter, .. } => {
                if !(*spacing > 0.0 && *jitter >= 0.0) {
                    return bad("ensemble.positions", "lattice spacing must be positive and jitter non-negative");
                }
            }
            PositionScheme::Explicit(p) if p.len() != n => return bad("ensemble.positions", "explicit list length differs from N"),
            _ => {}
        }
        match &self.momenta {
            MomentumScheme::MaxwellBoltzmann { temperature } if !(*temperature >= 0.0) => {
                return bad("ensemble.momenta", "temperature must be non-negative")
            }
            MomentumScheme::Explicit(p) if p.len() != n => return bad("ensemble.momenta", "explicit list length differs from N"),
            _ => {}
        }
        let a = &self.aux;
        if !(a.s0 > 0.0 && a.sigma_s >= 0.0 && a.sigma_ps >= 0.0 && a.sigma_f >= 0.0) {
            return bad("ensemble.aux", "s0 must be positive and spreads non-negative");
        }
        Ok(())
    }

    fn rng(&self, sample: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        rng
    }

    /// Draws the physical configuration `(r_k, m_k v_k)` of sample `index`.
    fn physical(&self, system: &System, rng: &mut ChaCha8Rng) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
        let parts = system.particles();
        let n = parts.len();
        let positions = match &self.positions {
            PositionScheme::Lattice { spacing, jitter, center } => {
                lattice_sites(n, *spacing, *center).into_iter().map(|s| s + gaussian_vec(rng, *jitter)).collect()
            }
            PositionScheme::Explicit(p) => p.clone(),
        };
        let momenta = match &self.momenta {
            MomentumScheme::Zero => vec![Vec3::zeros(); n],
            MomentumScheme::MaxwellBoltzmann { temperature } => (0..n)
                .map(|k| gaussian_vec(rng, (parts.mass(k) * self.units.k_b * temperature).sqrt()))
                .collect(),
            MomentumScheme::Explicit(p) => p.clone(),
        };
        Ok((positions, momenta))
    }

    /// Phase vector of sample `index` for the given backend.
    pub fn sample(&self, system: &System, index: usize) -> Result<Vec<f64>> {
        let mut rng = self.rng(index);
        let (r, pi) = self.physical(system, &mut rng)?;
        let z = match system {
            System::Nve(_) => NveState { positions: r, momenta: pi }.to_phase(),
            System::Nh(_) => {
                let a = &self.aux;
                let s = a.s0 * (a.sigma_s * rng.sample::<f64, _>(StandardNormal)).exp();
                let p_s = if a.sigma_ps > 0.0 {
                    Normal::new(0.0, a.sigma_ps).map_err(|e| Error::InvalidParameter { name: "ensemble.aux", reason: e.to_string() })?.sample(&mut rng)
                } else {
                    0.0
                };
                let momenta = pi.iter().map(|p| p * s).collect();
                NhState { positions: r, momenta, s, p_s }.to_phase()
            }
            System::Apr(_) => {
                let a = &self.aux;
                let mut tries = 0;
                let cell = loop {
                    let mut f = a.cell0;
                    if a.sigma_f > 0.0 {
                        for x in f.iter_mut() {
                            *x += a.sigma_f * rng.sample::<f64, _>(StandardNormal);
                        }
                    }
                    if f.determinant() > SINGULAR_DET {
                        break f;
                    }
                    tries += 1;
                    if tries >= RETRY_CAP {
                        return Err(Error::RetryCapExceeded(RETRY_CAP));
                    }
                    if a.sigma_f == 0.0 {
                        return Err(Error::SingularCell(f.determinant()));
                    }
                };
                let finv = cell.try_inverse().ok_or(Error::SingularCell(cell.determinant()))?;
                let ft = cell.transpose();
                AprState {
                    reference: r.iter().map(|r| finv * r).collect(),
                    momenta: pi.iter().map(|p| ft * p).collect(),
                    cell,
                    cell_momentum: Mat3::zeros(),
                }
                .to_phase()
            }
        };
        system.check_state(&z)?;
        Ok(z)
    }
}

/// `M` independent draws from `density`, deterministic in the seed.
pub fn sample_initial(density: &InitialDensity, system: &System, m: usize) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::EmptyBatch);
    }
    density.validate(system.particles().len())?;
    (0..m)
        .map(|i| density.sample(system, i).map_err(|e| Error::SampleFailed { sample: i, source: Box::new(e) }))
        .collect()
}

#[derive(Debug, Clone)]
pub struct EnsembleBatch {
    pub backend: Backend,
    pub trajectories: Vec<Trajectory>,
    pub monitors: Vec<ConservationMonitor>,
}

impl EnsembleBatch {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn max_drift(&self) -> f64 {
        self.monitors.iter().fold(0.0, |m, c| m.max(c.max_rel_drift))
    }

    /// Common time window covered by every trajectory.
    pub fn span(&self, clock: Clock) -> (f64, f64) {
        self.trajectories.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), t| {
            let (s, e) = t.span(clock);
            (a.max(s), b.min(e))
        })
    }
}

/// Integrates every initial state in parallel. Results are ordered by sample index
/// and independent of the worker count.
pub fn run_batch(system: &System, initial: &[Vec<f64>], spec: &IntegratorSpec, n_steps: usize, record_every: usize) -> Result<EnsembleBatch> {
    if initial.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let runs: Vec<_> = initial
        .par_iter()
        .enumerate()
        .map(|(i, z)| integrate(system, z, n_steps, spec, record_every).map_err(|e| Error::SampleFailed { sample: i, source: Box::new(e) }))
        .collect::<Result<_>>()?;
    let (trajectories, monitors) = runs.into_iter().map(|r| (r.trajectory, r.monitor)).unzip();
    Ok(EnsembleBatch { backend: system.backend(), trajectories, monitors })
}

/// Sample mean and standard error `std/√M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(x: &[f64]) -> Result<Self> {
        let m = x.len();
        if m == 0 {
            return Err(Error::EmptyBatch);
        }
        let mean = x.iter().sum::<f64>() / m as f64;
        if m == 1 {
            return Ok(Estimate { mean, stderr: 0.0 });
        }
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
        Ok(Estimate { mean, stderr: (var / m as f64).sqrt() })
    }
}

/// `⟨ô⟩` at `time`, each trajectory interpolated on its own clock.
pub fn ensemble_average<F>(batch: &EnsembleBatch, observable: F, time: f64, clock: Clock) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let values: Vec<f64> = batch
        .trajectories
        .par_iter()
        .map(|t| t.state_at(time, clock).and_then(|z| observable(&z)))
        .collect::<Result<_>>()?;
    Estimate::from_samples(&values)
}
