use serde::{Deserialize, Serialize};

use super::stencil::{central, divergence};
use crate::dynamics::Backend;
use crate::error::{Error, Result};
use crate::fields::{Field, FieldSet};
use crate::trajectory::Clock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnergyMode {
    #[default]
    Collective,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub backend: Backend,
    pub mode: EnergyMode,
}

/// L² norm of one constituent term over the evaluation mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermNorm {
    pub name: String,
    pub l2: f64,
}

/// Residual of one balance law on the interior times and masked nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceEntry {
    pub name: String,
    pub order: u8,
    pub times: Vec<f64>,
    /// `[time][node]` evaluation mask.
    pub mask: Vec<bool>,
    /// `[time][node][component]`, zero outside the mask.
    pub values: Vec<f64>,
    pub l2: f64,
    pub linf: f64,
    pub reference: f64,
    pub relative: f64,
    pub terms: Vec<TermNorm>,
}

impl BalanceEntry {
    pub fn ncomp(&self) -> usize {
        3usize.pow(self.order as u32)
    }

    /// `Σ residual Δx³` over masked nodes, per interior time and component.
    pub fn integral(&self, cell_volume: f64) -> Vec<Vec<f64>> {
        let c = self.ncomp();
        let nodes = self.mask.len() / self.times.len().max(1);
        (0..self.times.len())
            .map(|t| {
                let mut acc = vec![0.0; c];
                for node in 0..nodes {
                    if self.mask[t * nodes + node] {
                        for (i, a) in acc.iter_mut().enumerate() {
                            *a += self.values[(t * nodes + node) * c + i];
                        }
                    }
                }
                acc.into_iter().map(|x| x * cell_volume).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub spec: BalanceSpec,
    pub samples: usize,
    pub entries: Vec<BalanceEntry>,
}

impl BalanceReport {
    pub fn entry(&self, name: &str) -> Option<&BalanceEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn slice<'a>(f: &'a Field, t: usize, nodes: usize) -> &'a [f64] {
    let c = f.ncomp();
    &f.values[t * nodes * c..(t + 1) * nodes * c]
}

struct Ctx<'a> {
    fs: &'a FieldSet,
    nodes: usize,
    weighted: bool,
}

impl<'a> Ctx<'a> {
    fn new(fs: &'a FieldSet, spec: &BalanceSpec) -> Result<Self> {
        if fs.backend != spec.backend {
            return Err(Error::BackendMismatch(format!("fields are {} but balance requested {}", fs.backend, spec.backend)));
        }
        if fs.times.len() < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: fs.times.len() });
        }
        if !(fs.grid.dt > 0.0) {
            return Err(Error::InvalidParameter { name: "grid.dt", reason: "time spacing must be positive".into() });
        }
        let weighted = fs.backend == Backend::Nh;
        if weighted && fs.clock != Clock::Virtual {
            return Err(Error::BackendMismatch("NH balances need fields sampled on the virtual clock".into()));
        }
        Ok(Ctx { fs, nodes: fs.nodes(), weighted })
    }

    fn at(&self, name: &str, t: usize) -> Result<&'a [f64]> {
        Ok(slice(self.fs.get(name)?, t, self.nodes))
    }

    /// Time derivative of a density. For NH this differentiates the
    /// `s`-weighted copy in virtual time.
    fn d_t(&self, name: &str, t: usize) -> Result<Vec<f64>> {
        let key = if self.weighted { format!("{name}@s") } else { name.to_string() };
        let f = self.fs.get(&key)?;
        Ok(central(slice(f, t - 1, self.nodes), slice(f, t + 1, self.nodes), self.fs.grid.dt))
    }

    fn div(&self, values: &[f64], order: u8) -> Result<Vec<f64>> {
        divergence(&self.fs.grid, values, order)
    }

    /// Interior mask. Nodes below the density floor stay in: every field there is
    /// negligible and `v` reads as zero, so fluxes still telescope.
    fn mask(&self) -> Vec<bool> {
        self.fs.grid.interior_mask()
    }
}

type Term = (String, f64, Vec<f64>);

fn finish(name: &str, order: u8, ctx: &Ctx, per_time: Vec<(Vec<bool>, Vec<Term>)>) -> BalanceEntry {
    let c = 3usize.pow(order as u32);
    let nodes = ctx.nodes;
    let nt = per_time.len();
    let weight = ctx.fs.grid.cell_volume() * ctx.fs.grid.dt;
    let mut values = vec![0.0; nt * nodes * c];
    let mut mask = vec![false; nt * nodes];
    let mut names: Vec<String> = Vec::new();
    let mut sq: Vec<f64> = Vec::new();
    let (mut res_sq, mut linf) = (0.0, 0.0f64);
    for (t, (m, terms)) in per_time.iter().enumerate() {
        if names.is_empty() {
            names = terms.iter().map(|x| x.0.clone()).collect();
            sq = vec![0.0; terms.len()];
        }
        for node in 0..nodes {
            if !m[node] {
                continue;
            }
            mask[t * nodes + node] = true;
            for i in 0..c {
                let k = node * c + i;
                let mut r = terms[0].1 * terms[0].2[k];
                for term in &terms[1..] {
                    r += term.1 * term.2[k];
                }
                for (j, term) in terms.iter().enumerate() {
                    sq[j] += term.2[k] * term.2[k];
                }
                values[(t * nodes + node) * c + i] = r;
                res_sq += r * r;
                linf = linf.max(r.abs());
            }
        }
    }
    let l2 = (res_sq * weight).sqrt();
    let terms: Vec<TermNorm> = names.into_iter().zip(sq).map(|(name, s)| TermNorm { name, l2: (s * weight).sqrt() }).collect();
    let reference = terms.iter().fold(0.0f64, |m, t| m.max(t.l2));
    let relative = if l2 == 0.0 { 0.0 } else if reference > 0.0 { l2 / reference } else { f64::INFINITY };
    let times = ctx.fs.times[1..ctx.fs.times.len() - 1].to_vec();
    BalanceEntry { name: name.to_string(), order, times, mask, values, l2, linf, reference, relative, terms }
}

fn interior_times(ctx: &Ctx) -> std::ops::Range<usize> {
    1..ctx.fs.times.len() - 1
}

/// `∂ρ/∂t + div(ρv) − σ_ρ`, with `σ_ρ` only for NH.
pub fn mass_balance_residual(fs: &FieldSet, spec: &BalanceSpec) -> Result<BalanceEntry> {
    let ctx = Ctx::new(fs, spec)?;
    let mut per_time = Vec::new();
    for t in interior_times(&ctx) {
        let mut terms: Vec<Term> = vec![
            ("D_t rho".into(), 1.0, ctx.d_t("rho", t)?),
            ("div(rho v)".into(), 1.0, ctx.div(ctx.at("rho_v", t)?, 1)?),
        ];
        if spec.backend == Backend::Nh {
            terms.push(("sigma_rho".into(), -1.0, ctx.at("sigma_rho", t)?.to_vec()));
        }
        per_time.push((ctx.mask(), terms));
    }
    Ok(finish("mass", 0, &ctx, per_time))
}

/// `∂(ρv)/∂t + div(ρ v⊗v − T) − f^e`.
pub fn momentum_balance_residual(fs: &FieldSet, spec: &BalanceSpec) -> Result<BalanceEntry> {
    let ctx = Ctx::new(fs, spec)?;
    let mut per_time = Vec::new();
    for t in interior_times(&ctx) {
        let (rv, v, tt) = (ctx.at("rho_v", t)?, ctx.at("v", t)?, ctx.at("T", t)?);
        let mut flux = vec![0.0; ctx.nodes * 9];
        for node in 0..ctx.nodes {
            for j in 0..3 {
                for i in 0..3 {
                    flux[node * 9 + 3 * j + i] = rv[node * 3 + j] * v[node * 3 + i] - tt[node * 9 + 3 * j + i];
                }
            }
        }
        let terms: Vec<Term> = vec![
            ("D_t rho_v".into(), 1.0, ctx.d_t("rho_v", t)?),
            ("div(rho v⊗v - T)".into(), 1.0, ctx.div(&flux, 2)?),
            ("f_e".into(), -1.0, ctx.at("f_e", t)?.to_vec()),
        ];
        per_time.push((ctx.mask(), terms));
    }
    Ok(finish("momentum", 1, &ctx, per_time))
}

/// Energy residual for the backend and mode of `spec`.
///
/// Collective thermostat and enthalpic terms are uniform and not convected;
/// distributed ones are convected with `v` and carry their own fluxes. The
/// external-power term `σ_ε^0` is not subtracted because `ε_V` already contains
/// the external potential.
pub fn energy_balance_residual(fs: &FieldSet, spec: &BalanceSpec) -> Result<BalanceEntry> {
    let ctx = Ctx::new(fs, spec)?;
    let distributed = spec.mode == EnergyMode::Distributed;
    let mut per_time = Vec::new();
    for t in interior_times(&ctx) {
        let (ek, ev, v, tt) = (ctx.at("eps_K", t)?, ctx.at("eps_V", t)?, ctx.at("v", t)?, ctx.at("T", t)?);
        let (qk, qv, qt) = (ctx.at("q_K", t)?, ctx.at("q_V", t)?, ctx.at("q_T", t)?);
        let mut extra_eps: Vec<&[f64]> = Vec::new();
        let mut extra_q: Vec<&[f64]> = Vec::new();
        if distributed {
            match spec.backend {
                Backend::Nve => {}
                Backend::Nh => {
                    extra_eps.extend([ctx.at("eps_bar_ps", t)?, ctx.at("eps_bar_s", t)?]);
                    extra_q.extend([ctx.at("q_ps", t)?, ctx.at("q_s", t)?]);
                }
                Backend::Apr => {
                    extra_eps.push(ctx.at("eps_bar_P", t)?);
                    extra_q.push(ctx.at("q_P", t)?);
                }
            }
        }
        let mut flux = vec![0.0; ctx.nodes * 3];
        for node in 0..ctx.nodes {
            let mut eps = ek[node] + ev[node];
            for e in &extra_eps {
                eps += e[node];
            }
            for i in 0..3 {
                let k = node * 3 + i;
                let mut tv = 0.0;
                for j in 0..3 {
                    tv += tt[node * 9 + 3 * j + i] * v[node * 3 + j];
                }
                let mut q = qk[k] + qv[k] + qt[k];
                for e in &extra_q {
                    q += e[k];
                }
                flux[k] = q + eps * v[k] - tv;
            }
        }
        let mut terms: Vec<Term> = vec![("D_t eps_K".into(), 1.0, ctx.d_t("eps_K", t)?), ("D_t eps_V".into(), 1.0, ctx.d_t("eps_V", t)?)];
        let div_flux = ctx.div(&flux, 1)?;
        match (spec.backend, distributed) {
            (Backend::Nve, _) => terms.push(("div(flux)".into(), 1.0, div_flux)),
            (Backend::Nh, false) => {
                terms.push(("div(flux)".into(), 1.0, div_flux));
                for s in ["sigma_eps_K", "sigma_eps_V"] {
                    terms.push((s.into(), -1.0, ctx.at(s, t)?.to_vec()));
                }
                terms.push(("D_t eps_ps".into(), 1.0, ctx.d_t("eps_ps", t)?));
                terms.push(("D_t eps_s".into(), 1.0, ctx.d_t("eps_s", t)?));
                for s in ["sigma_eps_ps", "sigma_eps_s"] {
                    terms.push((s.into(), -1.0, ctx.at(s, t)?.to_vec()));
                }
            }
            (Backend::Nh, true) => {
                terms.push(("D_t eps_bar_ps".into(), 1.0, ctx.d_t("eps_bar_ps", t)?));
                terms.push(("D_t eps_bar_s".into(), 1.0, ctx.d_t("eps_bar_s", t)?));
                terms.push(("div(flux)".into(), 1.0, div_flux));
                for s in ["sigma_eps_K", "sigma_eps_V", "sigma_bar_ps", "sigma_bar_s"] {
                    terms.push((s.into(), -1.0, ctx.at(s, t)?.to_vec()));
                }
            }
            (Backend::Apr, false) => {
                terms.push(("div(flux)".into(), 1.0, div_flux));
                let mut enth = ctx.d_t("eps_P", t)?;
                for (e, s) in enth.iter_mut().zip(ctx.at("sigma_eps_apr", t)?) {
                    *e -= s;
                }
                terms.push(("D_t eps_P - sigma_eps".into(), 1.0, enth));
            }
            (Backend::Apr, true) => {
                terms.push(("div(flux)".into(), 1.0, div_flux));
                terms.push(("D_t eps_bar_P".into(), 1.0, ctx.d_t("eps_bar_P", t)?));
            }
        }
        per_time.push((ctx.mask(), terms));
    }
    let name = if distributed { "energy_distributed" } else { "energy_collective" };
    Ok(finish(name, 0, &ctx, per_time))
}

/// Mass, momentum and energy residuals for `spec`.
pub fn balance_report(fs: &FieldSet, spec: &BalanceSpec) -> Result<BalanceReport> {
    Ok(BalanceReport {
        spec: *spec,
        samples: fs.samples,
        entries: vec![mass_balance_residual(fs, spec)?, momentum_balance_residual(fs, spec)?, energy_balance_residual(fs, spec)?],
    })
}
