//! `rwrs` command-line driver.
//!
//! Every subcommand reads an [`ExperimentConfig`], runs its replicas on a
//! dedicated worker pool and writes `results.csv` and `meta.json` (plus
//! plot-ready CSV artifacts) into the output directory.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use rwrs_core::analysis::write_results;
use rwrs_core::experiment::{derived_exponents, with_workers, ExperimentConfig};
use rwrs_core::limit_process::WALK_CLOCK;

pub use commands::Report;

#[derive(Debug, Parser)]
#[command(name = "rwrs", version, about = "Random walk in random environment and random scenery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file, `key = value` lines or JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `replicas`.
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate walks and Ξ_n at every n and t of the grid.
    Walk,
    /// Build limit bundles and check their self-consistency.
    Limit,
    /// Quantile-slope fits of X_n, Ξ_n, X⋆ and Ξ⋆ against η and μ.
    Exponents,
    /// Joint chf of (Ξ_n(t₁), Ξ_n(t₂)) against the limit formula.
    ChfCompare,
    /// Power functional of the occupation field against ∫|Σ θ L⋆|^β.
    Functional,
    /// Count profile of the occupation field against the limit superlevel measure.
    CountProfile,
    /// Growth exponent of Σ_x Γ²(s, {x}).
    Gamma2,
    /// R_n against the one-sided stable law.
    DiagnoseEnv,
    /// Sampler checks for ϑ_α and ϑ_β.
    DiagnoseSampler,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Walk => "walk",
            Command::Limit => "limit",
            Command::Exponents => "exponents",
            Command::ChfCompare => "chf-compare",
            Command::Functional => "functional",
            Command::CountProfile => "count-profile",
            Command::Gamma2 => "gamma2",
            Command::DiagnoseEnv => "diagnose-env",
            Command::DiagnoseSampler => "diagnose-sampler",
        }
    }
}

/// Config after applying command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()
        .map_err(|(field, reason)| anyhow::anyhow!("field `{field}`: {reason}"))?;
    Ok(cfg)
}

/// Run `command` and return its report without touching the filesystem.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Report> {
    with_workers(cfg.workers, || commands::dispatch(command, cfg))?
}

/// Run `command` and write its outputs under `cfg.output_dir`.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Report> {
    let report = execute(command, cfg)?;
    write_outputs(command, cfg, &report)?;
    Ok(report)
}

fn write_outputs(command: Command, cfg: &ExperimentConfig, report: &Report) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut csv = Vec::new();
    write_results(&report.rows, &mut csv)?;
    write(dir, "results.csv", &csv)?;
    for (name, bytes) in &report.artifacts {
        write(dir, name, bytes)?;
    }
    let meta = json!({
        "command": command.name(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "master_seed": cfg.master_seed,
        "seed_scheme": "replica r uses master_seed ^ mix64(r + 0x9E3779B97F4A7C15); mix64 is the SplitMix64 finalizer",
        "derived": derived_exponents(cfg),
        "walk_clock": WALK_CLOCK,
        "one_sided_laplace_constant": cfg.one_sided().laplace_constant(),
        "artifacts": report.artifacts.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "warnings": report.warnings,
        "details": report.details,
    });
    write(dir, "meta.json", serde_json::to_string_pretty(&meta)?.as_bytes())
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
}
