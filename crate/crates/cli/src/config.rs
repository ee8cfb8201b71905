//! Run configuration: JSON schema, validation and construction of core objects.

use std::path::Path;

use ikn_core::balance::EnergyMode;
use ikn_core::dynamics::{AprKinetic, AprSystem, IntegratorSpec, NhSystem, NveSystem, Scheme};
use ikn_core::ensemble::{AuxiliaryScheme, InitialDensity, MomentumScheme, PositionScheme};
use ikn_core::linalg::mat_from_row_major;
use ikn_core::potentials::{Bond, ExternalPotential, Interactions, PairKind, PairPotential, Topology};
use ikn_core::trajectory::Clock;
use ikn_core::{Backend, GridSpec, ParticleSet, System, Units, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::output::Manifest;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub backend: Backend,
    pub particles: ParticlesConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nh: Option<NhConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apr: Option<AprConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub balance: BalanceConfig,
    #[serde(default)]
    pub units: UnitsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesConfig {
    pub n: usize,
    /// Per-particle masses; overrides `mass`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub mass: f64,
    pub positions: PositionsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PositionsConfig {
    Lattice {
        spacing: f64,
        /// Gaussian jitter per coordinate.
        #[serde(default)]
        jitter: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Explicit(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairConfig>,
    #[serde(default)]
    pub external: ExternalConfig,
    /// Explicit bond list; all pairs interact when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonds: Option<Vec<Bond>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairConfig {
    LennardJones {
        epsilon: f64,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
    Harmonic {
        k: f64,
        r0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExternalConfig {
    #[default]
    None,
    HarmonicTrap {
        kappa: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    UniformField {
        g: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dtau: f64,
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "midpoint")]
    pub scheme: Scheme,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub members: usize,
    pub seed: u64,
    #[serde(default)]
    pub momenta: MomentaConfig,
    #[serde(default = "one")]
    pub s0: f64,
    #[serde(default)]
    pub sigma_s: f64,
    #[serde(default)]
    pub sigma_ps: f64,
    /// Mean initial cell, row-major.
    #[serde(default = "identity9")]
    pub cell0: [f64; 9],
    #[serde(default)]
    pub sigma_f: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentaConfig {
    #[default]
    Zero,
    MaxwellBoltzmann {
        temperature: f64,
    },
    Explicit(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NhConfig {
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub omega_ref: f64,
    #[serde(default)]
    pub frozen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AprConfig {
    #[serde(rename = "W")]
    pub w: f64,
    pub omega_ref: f64,
    /// First Piola–Kirchhoff stress, row-major.
    #[serde(rename = "P")]
    pub p: [f64; 9],
    #[serde(default = "pr")]
    pub kinetic: AprKinetic,
    #[serde(default)]
    pub frozen_cell: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub dx: f64,
    /// Kernel radius; `3·dx` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default)]
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    #[serde(default)]
    pub clock: Clock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Collective,
    Distributed,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<EnergyMode> {
        match self {
            ModeSelection::Collective => vec![EnergyMode::Collective],
            ModeSelection::Distributed => vec![EnergyMode::Distributed],
            ModeSelection::Both => vec![EnergyMode::Collective, EnergyMode::Distributed],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceConfig {
    #[serde(default)]
    pub mode: ModeSelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    pub k_b: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        UnitsConfig { k_b: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Also write the binary field format next to the CSV files.
    #[serde(default)]
    pub binary: bool,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn midpoint() -> Scheme {
    Scheme::ImplicitMidpoint
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    50
}

fn identity9() -> [f64; 9] {
    [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
}

fn pr() -> AprKinetic {
    AprKinetic::ParrinelloRahman
}

/// Everything a pipeline stage needs, built from a validated config.
pub struct Setup {
    pub system: System,
    pub density: InitialDensity,
    pub integrator: IntegratorSpec,
    pub grid: GridSpec,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config { path: path.into(), reason: reason.into() }
}

fn positive(path: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {x}")))
    }
}

fn non_negative(path: &str, x: f64) -> Result<(), CliError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be non-negative, got {x}")))
    }
}

fn vec3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Reads a run config, or the config echoed in a manifest.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| invalid("", e.to_string()))?;
    let cfg: RunConfig = if value.get("manifest").is_some() {
        let m: Manifest = serde_path_to_error::deserialize(value).map_err(|e| invalid(e.path().to_string(), e.inner().to_string()))?;
        m.config
    } else {
        serde_path_to_error::deserialize(value).map_err(|e| invalid(e.path().to_string(), e.inner().to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != SCHEMA_VERSION {
            return Err(invalid("version", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version)));
        }
        let n = self.particles.n;
        if n == 0 {
            return Err(invalid("particles.n", "need at least one particle"));
        }
        match &self.particles.masses {
            Some(m) if m.len() != n => return Err(invalid("particles.masses", format!("expected {n} entries, got {}", m.len()))),
            Some(m) => {
                for (k, x) in m.iter().enumerate() {
                    positive(&format!("particles.masses[{k}]"), *x)?;
                }
            }
            None => positive("particles.mass", self.particles.mass)?,
        }
        match &self.particles.positions {
            PositionsConfig::Lattice { spacing, jitter, .. } => {
                positive("particles.positions.lattice.spacing", *spacing)?;
                non_negative("particles.positions.lattice.jitter", *jitter)?;
            }
            PositionsConfig::Explicit(x) if x.len() != n => {
                return Err(invalid("particles.positions.explicit", format!("expected {n} positions, got {}", x.len())));
            }
            PositionsConfig::Explicit(_) => {}
        }
        match &self.potential.pair {
            Some(PairConfig::LennardJones { epsilon, sigma, cutoff }) => {
                positive("potential.pair.epsilon", *epsilon)?;
                positive("potential.pair.sigma", *sigma)?;
                if let Some(rc) = cutoff {
                    positive("potential.pair.cutoff", *rc)?;
                }
            }
            Some(PairConfig::Harmonic { k, r0, cutoff }) => {
                non_negative("potential.pair.k", *k)?;
                non_negative("potential.pair.r0", *r0)?;
                if let Some(rc) = cutoff {
                    positive("potential.pair.cutoff", *rc)?;
                }
            }
            None => {}
        }
        if let Some(bonds) = &self.potential.bonds {
            for (k, b) in bonds.iter().enumerate() {
                if b.i >= n || b.j >= n || b.i == b.j {
                    return Err(invalid(format!("potential.bonds[{k}]"), format!("bad particle pair ({}, {}) for N = {n}", b.i, b.j)));
                }
            }
        }
        if let ExternalConfig::HarmonicTrap { kappa, .. } = self.potential.external {
            non_negative("potential.external.kappa", kappa)?;
        }
        let it = &self.integrator;
        positive("integrator.dtau", it.dtau)?;
        positive("integrator.tol", it.tol)?;
        if it.steps == 0 {
            return Err(invalid("integrator.steps", "need at least one step"));
        }
        if it.record_every == 0 {
            return Err(invalid("integrator.record_every", "must be at least 1"));
        }
        if it.max_iter == 0 {
            return Err(invalid("integrator.max_iter", "must be at least 1"));
        }
        let e = &self.ensemble;
        if e.members == 0 {
            return Err(invalid("ensemble.members", "need at least one member"));
        }
        match &e.momenta {
            MomentaConfig::MaxwellBoltzmann { temperature } => positive("ensemble.momenta.maxwell_boltzmann.temperature", *temperature)?,
            MomentaConfig::Explicit(p) if p.len() != n => {
                return Err(invalid("ensemble.momenta.explicit", format!("expected {n} momenta, got {}", p.len())));
            }
            _ => {}
        }
        positive("ensemble.s0", e.s0)?;
        non_negative("ensemble.sigma_s", e.sigma_s)?;
        non_negative("ensemble.sigma_ps", e.sigma_ps)?;
        non_negative("ensemble.sigma_f", e.sigma_f)?;
        positive("units.k_b", self.units.k_b)?;
        match self.backend {
            Backend::Nve => {}
            Backend::Nh => {
                let nh = self.nh.as_ref().ok_or_else(|| invalid("nh", "required for backend nh"))?;
                positive("nh.Q", nh.q)?;
                positive("nh.T", nh.temperature)?;
                positive("nh.omega_ref", nh.omega_ref)?;
            }
            Backend::Apr => {
                let apr = self.apr.as_ref().ok_or_else(|| invalid("apr", "required for backend apr"))?;
                positive("apr.W", apr.w)?;
                positive("apr.omega_ref", apr.omega_ref)?;
                if apr.p.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("apr.P", "entries must be finite"));
                }
            }
        }
        let g = &self.grid;
        positive("grid.dx", g.dx)?;
        if let Some(h) = g.h {
            positive("grid.h", h)?;
        }
        if g.nt == 0 {
            return Err(invalid("grid.nt", "need at least one time sample"));
        }
        if g.nt > 1 {
            positive("grid.dt", g.dt)?;
        }
        Ok(())
    }

    fn interactions(&self) -> Result<Interactions, CliError> {
        let pair = match &self.potential.pair {
            Some(PairConfig::LennardJones { epsilon, sigma, cutoff }) => Some(PairPotential::new(PairKind::LennardJones { epsilon: *epsilon, sigma: *sigma }, *cutoff)?),
            Some(PairConfig::Harmonic { k, r0, cutoff }) => Some(PairPotential::new(PairKind::Harmonic { k: *k, r0: *r0 }, *cutoff)?),
            None => None,
        };
        let external = match self.potential.external {
            ExternalConfig::None => ExternalPotential::None,
            ExternalConfig::HarmonicTrap { kappa, center } => ExternalPotential::HarmonicTrap { kappa, center: vec3(&center) },
            ExternalConfig::UniformField { g } => ExternalPotential::UniformField { g: vec3(&g) },
        };
        let topology = match &self.potential.bonds {
            Some(b) => Topology::Bonds(b.clone()),
            None => Topology::AllPairs,
        };
        let inter = Interactions::new(pair, external, topology);
        inter.validate(self.particles.n)?;
        Ok(inter)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = &self.grid;
        Ok(GridSpec::new(g.lower, g.upper, g.dx, g.h.unwrap_or(3.0 * g.dx), g.t0, g.dt, g.nt)?)
    }

    /// Builds the system, initial density, integrator and grid.
    pub fn setup(&self) -> Result<Setup, CliError> {
        let n = self.particles.n;
        let particles = match &self.particles.masses {
            Some(m) => ParticleSet::new(m.clone())?,
            None => ParticleSet::uniform(n, self.particles.mass)?,
        };
        let units = Units::new(self.units.k_b)?;
        let inter = self.interactions()?;
        let system: System = match self.backend {
            Backend::Nve => NveSystem::new(particles, inter)?.into(),
            Backend::Nh => {
                let c = self.nh.as_ref().ok_or_else(|| invalid("nh", "required for backend nh"))?;
                NhSystem::new(particles, inter, c.q, c.temperature, units, c.omega_ref)?.frozen(c.frozen).into()
            }
            Backend::Apr => {
                let c = self.apr.as_ref().ok_or_else(|| invalid("apr", "required for backend apr"))?;
                AprSystem::new(particles, inter, c.w, c.omega_ref, mat_from_row_major(&c.p), c.kinetic)?.frozen_cell(c.frozen_cell).into()
            }
        };
        let positions = match &self.particles.positions {
            PositionsConfig::Lattice { spacing, jitter, center } => PositionScheme::Lattice { spacing: *spacing, jitter: *jitter, center: vec3(center) },
            PositionsConfig::Explicit(x) => PositionScheme::Explicit(x.iter().map(vec3).collect()),
        };
        let e = &self.ensemble;
        let momenta = match &e.momenta {
            MomentaConfig::Zero => MomentumScheme::Zero,
            MomentaConfig::MaxwellBoltzmann { temperature } => MomentumScheme::MaxwellBoltzmann { temperature: *temperature },
            MomentaConfig::Explicit(p) => MomentumScheme::Explicit(p.iter().map(vec3).collect()),
        };
        let aux = AuxiliaryScheme { s0: e.s0, sigma_s: e.sigma_s, sigma_ps: e.sigma_ps, cell0: mat_from_row_major(&e.cell0), sigma_f: e.sigma_f };
        let density = InitialDensity { positions, momenta, aux, units, seed: e.seed };
        let it = &self.integrator;
        let integrator = IntegratorSpec { scheme: it.scheme, dtau: it.dtau, tol: it.tol, max_iter: it.max_iter };
        integrator.validate()?;
        Ok(Setup { system, density, integrator, grid: self.grid_spec()? })
    }
}
