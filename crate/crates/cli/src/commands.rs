//! The four pipeline stages.

use std::fs;
use std::path::Path;

use ikn_core::balance::{balance_report, BalanceEntry, BalanceReport, BalanceSpec, EnergyMode, TermNorm};
use ikn_core::checks::{run_suite, CheckOutcome};
use ikn_core::ensemble::{run_batch, sample_initial, EnsembleBatch};
use ikn_core::fields::compute_fields;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, io_err};

/// Outcome of `run`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub members: usize,
    pub samples: usize,
    pub max_drift: f64,
}

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err(out))
}

fn integrate(cfg: &RunConfig) -> Result<EnsembleBatch, CliError> {
    let setup = cfg.setup()?;
    let init = sample_initial(&setup.density, &setup.system, cfg.ensemble.members).map_err(CliError::core("sampling"))?;
    run_batch(&setup.system, &init, &setup.integrator, cfg.integrator.steps, cfg.integrator.record_every).map_err(CliError::core("integration"))
}

/// Integrates the ensemble and stores trajectories and conservation logs.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunSummary, CliError> {
    prepare(out)?;
    let batch = integrate(cfg)?;
    output::write_trajectories(&out.join(output::TRAJECTORIES), &batch)?;
    output::write_conservation(&out.join(output::CONSERVATION), &batch)?;
    output::write_manifest(out, cfg)?;
    Ok(RunSummary { members: batch.len(), samples: batch.trajectories[0].len(), max_drift: batch.max_drift() })
}

/// Stored trajectories when they belong to `cfg`, otherwise a fresh run.
fn trajectories_for(cfg: &RunConfig, out: &Path) -> Result<EnsembleBatch, CliError> {
    let stored = out.join(output::TRAJECTORIES);
    let same = output::read_manifest(out)?.is_some_and(|m| m.config == *cfg);
    if !(same && stored.exists()) {
        cmd_run(cfg, out)?;
    }
    output::read_trajectories(&stored)
}

/// Computes every field of the backend and writes one file per field and time.
pub fn cmd_fields(cfg: &RunConfig, out: &Path) -> Result<usize, CliError> {
    prepare(out)?;
    let batch = trajectories_for(cfg, out)?;
    let setup = cfg.setup()?;
    let fs_ = compute_fields(&batch, &setup.system, &setup.grid, cfg.grid.clock).map_err(CliError::core("fields"))?;
    let count = output::write_fields(out, &fs_, cfg.output.binary)?;
    output::write_manifest(out, cfg)?;
    Ok(count)
}

/// Norms of one balance, without the residual values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub name: String,
    pub order: u8,
    pub times: Vec<f64>,
    pub l2: f64,
    pub linf: f64,
    pub reference: f64,
    pub relative: f64,
    pub terms: Vec<TermNorm>,
}

impl From<&BalanceEntry> for EntrySummary {
    fn from(e: &BalanceEntry) -> Self {
        EntrySummary {
            name: e.name.clone(),
            order: e.order,
            times: e.times.clone(),
            l2: e.l2,
            linf: e.linf,
            reference: e.reference,
            relative: e.relative,
            terms: e.terms.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub spec: BalanceSpec,
    pub samples: usize,
    pub entries: Vec<EntrySummary>,
}

fn mode_name(mode: EnergyMode) -> &'static str {
    match mode {
        EnergyMode::Collective => "collective",
        EnergyMode::Distributed => "distributed",
    }
}

/// Residuals of every balance for the configured energy modes, from stored fields.
/// Residual fields go to `balance/<mode>/<entry>_t<k>.csv`.
pub fn cmd_balance(cfg: &RunConfig, out: &Path) -> Result<Vec<BalanceReport>, CliError> {
    let fs_ = output::read_fields(out)?;
    if fs_.backend != cfg.backend {
        return Err(CliError::Config { path: "backend".into(), reason: format!("stored fields are {} but the config says {}", fs_.backend, cfg.backend) });
    }
    let dir = out.join(output::BALANCE_DIR);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let nodes = fs_.nodes();
    let mut reports = Vec::new();
    for mode in cfg.balance.mode.modes() {
        let rep = balance_report(&fs_, &BalanceSpec { backend: cfg.backend, mode }).map_err(CliError::core("balance"))?;
        let summary = ReportSummary { spec: rep.spec, samples: rep.samples, entries: rep.entries.iter().map(EntrySummary::from).collect() };
        let path = dir.join(format!("report_{}.json", mode_name(mode)));
        fs::write(&path, serde_json::to_string_pretty(&summary).expect("report serialises") + "\n").map_err(io_err(&path))?;
        let sub = dir.join(mode_name(mode));
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        for e in &rep.entries {
            let c = e.ncomp();
            for (t, time) in e.times.iter().enumerate() {
                let path = sub.join(format!("{}.csv", output::field_file(&e.name, t)));
                output::write_field_csv(&path, &fs_.grid, *time, e.order, &e.values[t * nodes * c..(t + 1) * nodes * c], None)?;
            }
        }
        reports.push(rep);
    }
    output::write_manifest(out, cfg)?;
    Ok(reports)
}

/// Runs the built-in verification suite; writes `check.json` when `out` is given.
pub fn cmd_check(out: Option<&Path>) -> Result<Vec<CheckOutcome>, CliError> {
    let outcomes = run_suite().map_err(CliError::core("check"))?;
    if let Some(out) = out {
        prepare(out)?;
        let path = out.join("check.json");
        fs::write(&path, serde_json::to_string_pretty(&outcomes).expect("outcomes serialise") + "\n").map_err(io_err(&path))?;
    }
    Ok(outcomes)
}
