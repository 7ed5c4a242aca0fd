//! Experiment configuration, derived exponents and replica orchestration.
//!
//! A config is either a flat `key = value` file with dotted keys
//!
//! ```text
//! # comment
//! alpha = 0.5
//! beta = 2
//! n_values = 16, 32, 64
//! grid.steps = 65536
//! ```
//!
//! or the equivalent JSON object. Replica `r` of a run seeded with `m` uses
//! the seed `m ^ mix64(r + 0x9E3779B97F4A7C15)` for every stream it touches.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::FunctionalSpec;
use crate::birth_death::time_scale;
use crate::error::{Error, Result};
use crate::limit_process::LimitConfig;
use crate::rand_fields::{FieldSeed, OneSidedAlpha, StableParams};
use crate::scenery::{classical_delta, kappa};

/// Resolution of the limit-process bundles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub steps: usize,
    pub half_points: usize,
    pub bin_factor: f64,
    pub max_steps: usize,
    pub max_half_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let c = LimitConfig::default();
        Self {
            steps: c.steps,
            half_points: c.half_points,
            bin_factor: c.bin_factor,
            max_steps: c.max_steps,
            max_half_points: c.max_half_points,
        }
    }
}

impl GridConfig {
    pub fn limit_config(&self) -> LimitConfig {
        LimitConfig {
            steps: self.steps,
            half_points: self.half_points,
            bin_factor: self.bin_factor,
            max_steps: self.max_steps,
            max_half_points: self.max_half_points,
            ..LimitConfig::default()
        }
    }
}

/// Coefficients and times of the occupation functional `Σ_i θ_i Γ(τ_i, ·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalConfig {
    pub thetas: Vec<f64>,
    pub taus: Vec<f64>,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            thetas: vec![1.0],
            taus: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    pub n_values: Vec<u64>,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub master_seed: u64,
    pub grid: GridConfig,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    /// Coefficients of the linear functionals (chf grid, power functional).
    pub thetas: Vec<f64>,
    /// Times of the joint chf comparison.
    pub chf_times: Vec<f64>,
    pub functional: FunctionalConfig,
    /// Thresholds of the count profile.
    pub c_grid: Vec<f64>,
    /// Times of the `Σ Γ²` scaling fit.
    pub s_grid: Vec<f64>,
    /// Quantile level of the exponent fits.
    pub quantile: f64,
    /// Size `n` of the environment attraction diagnostic.
    pub env_n: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 2.0,
            a1: 1.0,
            a2: 0.0,
            n_values: vec![64],
            t_grid: vec![0.125, 0.25, 0.5, 1.0],
            replicas: 200,
            master_seed: 1,
            grid: GridConfig::default(),
            output_dir: PathBuf::from("out"),
            workers: None,
            thetas: vec![-1.0, -0.5, 0.5, 1.0],
            chf_times: vec![0.5, 1.0],
            functional: FunctionalConfig::default(),
            c_grid: vec![0.25, 0.5, 1.0, 2.0],
            s_grid: (4..=10).map(|k| f64::from(1u32 << k)).collect(),
            quantile: 0.5,
            env_n: 10_000,
        }
    }
}

fn bad(field: &str, reason: impl std::fmt::Display) -> (String, String) {
    (field.to_string(), reason.to_string())
}

impl ExperimentConfig {
    /// Read a config file; JSON if the first non-blank character is `{`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_kv(text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()
            .map_err(|(field, reason)| Error::Config(format!("field `{field}`: {reason}")))?;
        Ok(cfg)
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut lines: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {lineno}: expected `key = value`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = lines.insert(key.to_string(), lineno) {
                return Err(Error::Config(format!(
                    "line {lineno}: field `{key}` already set on line {prev}"
                )));
            }
            cfg.set(key, value)
                .map_err(|reason| Error::Config(format!("line {lineno}: field `{key}`: {reason}")))?;
        }
        cfg.validate().map_err(|(field, reason)| match lines.get(&field) {
            Some(l) => Error::Config(format!("line {l}: field `{field}`: {reason}")),
            None => Error::Config(format!("field `{field}`: {reason}")),
        })?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "alpha" => self.alpha = scalar(v)?,
            "beta" => self.beta = scalar(v)?,
            "A1" => self.a1 = scalar(v)?,
            "A2" => self.a2 = scalar(v)?,
            "n_values" => self.n_values = list(v)?,
            "t_grid" => self.t_grid = list(v)?,
            "replicas" => self.replicas = scalar(v)?,
            "master_seed" => self.master_seed = seed(v)?,
            "grid.steps" => self.grid.steps = scalar(v)?,
            "grid.half_points" => self.grid.half_points = scalar(v)?,
            "grid.bin_factor" => self.grid.bin_factor = scalar(v)?,
            "grid.max_steps" => self.grid.max_steps = scalar(v)?,
            "grid.max_half_points" => self.grid.max_half_points = scalar(v)?,
            "output_dir" => self.output_dir = PathBuf::from(v.trim_matches('"')),
            "workers" => self.workers = Some(scalar(v)?),
            "thetas" => self.thetas = list(v)?,
            "chf_times" => self.chf_times = list(v)?,
            "functional.thetas" => self.functional.thetas = list(v)?,
            "functional.taus" => self.functional.taus = list(v)?,
            "c_grid" => self.c_grid = list(v)?,
            "s_grid" => self.s_grid = list(v)?,
            "quantile" => self.quantile = scalar(v)?,
            "env_n" => self.env_n = scalar(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Checks every field; the error names the offending field.
    pub fn validate(&self) -> std::result::Result<(), (String, String)> {
        OneSidedAlpha::new(self.alpha).map_err(|e| bad("alpha", e))?;
        if let Err(e) = StableParams::new(self.beta, self.a1, self.a2) {
            let field = match &e {
                Error::InvalidParameter { name, .. } => *name,
                _ => "beta",
            };
            return Err(bad(field, e));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(bad("n_values", "need at least one positive integer"));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("n_values", "must be strictly increasing"));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(bad("t_grid", "need positive finite times"));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("t_grid", "must be strictly increasing"));
        }
        if self.replicas == 0 {
            return Err(bad("replicas", "must be at least 1"));
        }
        self.grid
            .limit_config()
            .validate()
            .map_err(|e| bad("grid", e))?;
        if self.workers == Some(0) {
            return Err(bad("workers", "must be at least 1"));
        }
        if self.thetas.is_empty() || self.thetas.iter().any(|t| !t.is_finite()) {
            return Err(bad("thetas", "need finite coefficients"));
        }
        if self.chf_times.len() != 2 || !(self.chf_times[0] > 0.0 && self.chf_times[1] > self.chf_times[0]) {
            return Err(bad("chf_times", "need two increasing positive times"));
        }
        let f = &self.functional;
        FunctionalSpec::new(f.thetas.clone(), f.taus.clone(), self.beta)
            .map_err(|e| bad("functional.thetas", e))?;
        if f.taus.iter().any(|t| !(*t > 0.0)) {
            return Err(bad("functional.taus", "must be positive"));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c >= 0.0)) {
            return Err(bad("c_grid", "need non-negative thresholds"));
        }
        if self.s_grid.len() < 4 || self.s_grid.windows(2).any(|w| !(w[1] > w[0] && w[0] > 0.0)) {
            return Err(bad("s_grid", "need at least four increasing positive times"));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(bad("quantile", "must lie in (0, 1)"));
        }
        if self.env_n == 0 {
            return Err(bad("env_n", "must be at least 1"));
        }
        Ok(())
    }

    pub fn one_sided(&self) -> OneSidedAlpha {
        OneSidedAlpha::new(self.alpha).expect("validated")
    }

    pub fn functional_spec(&self) -> FunctionalSpec {
        FunctionalSpec::new(self.functional.thetas.clone(), self.functional.taus.clone(), self.beta)
            .expect("validated")
    }

    pub fn stable_params(&self) -> StableParams {
        StableParams::new(self.beta, self.a1, self.a2).expect("validated")
    }
}

fn scalar<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("cannot parse `{v}`: {e}"))
}

fn seed(v: &str) -> std::result::Result<u64, String> {
    match v.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16).map_err(|e| format!("cannot parse `{v}`: {e}")),
        None => scalar(v),
    }
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|s| scalar(s.trim()))
        .collect()
}

/// Exponents and time scales implied by `(α, β, n_values)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// `η = α/(α+1)`.
    pub eta: f64,
    /// `κ = 1/α + 1/β`.
    pub kappa: f64,
    /// `μ = 1 - α/(α+1) + α/((α+1)β)`.
    pub mu: f64,
    /// `δ = 1 - 1/α + 1/(αβ)`.
    pub delta: f64,
    /// `2 - α/(1+α)`, growth exponent of `Σ_x E Γ²(s, {x})`.
    pub gamma_square: f64,
    /// `(n, k_n)` with `k_n = n^{(1+α)/α}`.
    pub k_n: Vec<(u64, f64)>,
}

pub fn exponents(alpha: f64, beta: f64, n_values: &[u64]) -> DerivedExponents {
    let eta = alpha / (alpha + 1.0);
    DerivedExponents {
        eta,
        kappa: kappa(alpha, beta),
        mu: 1.0 - eta + eta / beta,
        delta: classical_delta(alpha, beta),
        gamma_square: 2.0 - eta,
        k_n: n_values.iter().map(|&n| (n, time_scale(n, alpha))).collect(),
    }
}

pub fn derived_exponents(cfg: &ExperimentConfig) -> DerivedExponents {
    exponents(cfg.alpha, cfg.beta, &cfg.n_values)
}

/// Seed of replica `index`.
pub fn replica_seed(master_seed: u64, index: usize) -> u64 {
    FieldSeed::replica_master(master_seed, index as u64)
}

/// `f(index, seed)` for every replica, in replica order regardless of how
/// the work is scheduled.
pub fn map_replicas<T, F>(replicas: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|r| f(r, replica_seed(master_seed, r)))
        .collect()
}

/// Run `op` on a dedicated pool of `workers` threads (all cores if `None`).
pub fn with_workers<R, OP>(workers: Option<usize>, op: OP) -> Result<R>
where
    R: Send,
    OP: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(op))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        let d = exponents(0.5, 2.0, &[4]);
        assert!((d.eta - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.kappa - 2.5).abs() < 1e-15);
        assert!((d.mu - 5.0 / 6.0).abs() < 1e-15);
        assert!((d.k_n[0].1 - 64.0).abs() < 1e-9);
        assert!((exponents(1.0, 1.0, &[1]).mu - 1.0).abs() < 1e-15);
        assert!((exponents(1.0, 2.0, &[1]).mu - 0.75).abs() < 1e-15);
        assert!((exponents(0.5, 1.5, &[1]).mu - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn kv_and_json_agree() {
        let kv = "# demo\nalpha = 0.5\nbeta = 1.5\nA2 = 0.5\nn_values = 8, 16\nreplicas = 3\nmaster_seed = 0x10\ngrid.steps = 1024\n";
        let json = r#"{"alpha": 0.5, "beta": 1.5, "A2": 0.5, "n_values": [8, 16],
            "replicas": 3, "master_seed": 16, "grid": {"steps": 1024}}"#;
        let a = ExperimentConfig::parse(kv).unwrap();
        let b = ExperimentConfig::parse(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.grid.steps, 1024);
        assert_eq!(a.master_seed, 16);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = ExperimentConfig::from_kv("alpha = 0.5\nbeta = 3\n").unwrap_err();
        assert_eq!(
            e.to_string(),
            "line 2: field `beta`: invalid parameter `beta`: 3 not in (0, 2]"
        );
        let e = ExperimentConfig::from_kv("\nalpha = x\n").unwrap_err().to_string();
        assert!(e.starts_with("line 2: field `alpha`"), "{e}");
        let e = ExperimentConfig::from_kv("n_values = 16, 8\n").unwrap_err().to_string();
        assert!(e.starts_with("line 1: field `n_values`"), "{e}");
        let e = ExperimentConfig::from_kv("gamma = 1\n").unwrap_err().to_string();
        assert!(e.contains("unknown key"), "{e}");
        let e = ExperimentConfig::from_kv("beta = 1.5\nA2 = 9\n").unwrap_err().to_string();
        assert!(e.starts_with("line 2: field `A2`"), "{e}");
        assert!(ExperimentConfig::from_json(r#"{"replicas": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"gamma": 0}"#).is_err());
    }

    #[test]
    fn replica_order_is_stable_across_pools() {
        let one = with_workers(Some(1), || map_replicas(16, 9, |r, s| (r, s))).unwrap();
        let many = with_workers(Some(4), || map_replicas(16, 9, |r, s| (r, s))).unwrap();
        assert_eq!(one, many);
        assert_eq!(one[3].1, replica_seed(9, 3));
    }
}
