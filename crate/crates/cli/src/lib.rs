//! `ikn`: configuration, pipeline stages and output bundle.
//!
//! ```text
//! ikn run     --config run.json --out out/   # trajectories + conservation log
//! ikn fields  --config run.json --out out/   # one CSV per field and time sample
//! ikn balance --out out/                     # residual reports (config from the manifest)
//! ikn check                                  # verification suite
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "ikn", version, about = "Extended-Hamiltonian ensembles, continuum fields and balance residuals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (JSON), or a manifest from a previous run.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all hardware threads).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Overrides `ensemble.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the ensemble.
    Run,
    /// Compute continuum fields (integrating first when needed).
    Fields,
    /// Evaluate balance residuals from stored fields.
    Balance,
    /// Run the verification suite.
    Check,
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Config { path: flag.into(), reason: "required for this command".into() })
}

/// Config from `--config`, else from the manifest in `--out`; `--seed` applied.
fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.out) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(out)) => match output::read_manifest(out)? {
            Some(m) => {
                m.config.validate()?;
                m.config
            }
            None => return Err(CliError::Config { path: "--config".into(), reason: "required (no manifest in the output directory)".into() }),
        },
        (None, None) => return Err(CliError::Config { path: "--config".into(), reason: "required for this command".into() }),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run => {
            let cfg = load_config(cli)?;
            let s = commands::cmd_run(&cfg, required(&cli.out, "--out")?)?;
            println!("run: {} members, {} samples each, max relative drift {:.3e}", s.members, s.samples, s.max_drift);
        }
        Command::Fields => {
            let cfg = load_config(cli)?;
            let out = required(&cli.out, "--out")?;
            let n = commands::cmd_fields(&cfg, out)?;
            println!("fields: {n} fields written to {}", out.join(output::FIELDS_DIR).display());
        }
        Command::Balance => {
            let cfg = load_config(cli)?;
            let mut shown = Vec::new();
            for rep in commands::cmd_balance(&cfg, required(&cli.out, "--out")?)? {
                for e in &rep.entries {
                    if shown.contains(&e.name) {
                        continue;
                    }
                    shown.push(e.name.clone());
                    println!("{:<20} relative {:.3e}  L2 {:.3e}  Linf {:.3e}", e.name, e.relative, e.l2, e.linf);
                }
            }
        }
        Command::Check => {
            if cli.config.is_some() {
                load_config(cli)?;
            }
            let outcomes = commands::cmd_check(cli.out.as_deref())?;
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if failed > 0 {
                return Err(CliError::CheckFailed(failed));
            }
        }
    }
    Ok(())
}

/// Runs `cli` on a dedicated worker pool.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config { path: "--threads".into(), reason: "must be at least 1".into() });
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config { path: "--threads".into(), reason: e.to_string() })?;
    pool.install(|| dispatch(cli))
}
