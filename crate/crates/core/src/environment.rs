//! The random environment `{λ_j}` and its natural scale.
//!
//! Site `j` carries the rate `λ_j` of the edge `(j, j+1)`. Inverse rates are
//! read from the deterministic `Environment` stream, so the field is fixed
//! once the seed is fixed and never has to be stored.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rand_fields::{
    sample_pareto_inverse_rate, site_open_uniform, FieldSeed, OneSidedAlpha, Stream,
};

type InverseRateFn = Arc<dyn Fn(i64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum EnvironmentLaw {
    /// `λ_j^{-1}` i.i.d. Pareto(α) on `[1, ∞)`.
    ParetoAlpha(OneSidedAlpha),
    /// `λ_j^{-1} = f(j, u_j)` with `u_j` the site uniform in `(0, 1)`.
    Custom(InverseRateFn),
}

impl fmt::Debug for EnvironmentLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvironmentLaw::ParetoAlpha(a) => write!(f, "ParetoAlpha({})", a.value()),
            EnvironmentLaw::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawTag {
    ParetoAlpha,
    Custom,
}

#[derive(Debug, Clone)]
pub struct Environment {
    /// Scaling index; `1` means finite-mean (diffusive) inverse rates.
    alpha: f64,
    seed: FieldSeed,
    law: EnvironmentLaw,
}

impl Environment {
    pub fn pareto(alpha: OneSidedAlpha, master_seed: u64) -> Self {
        Self {
            alpha: alpha.value(),
            seed: FieldSeed::new(master_seed, Stream::Environment),
            law: EnvironmentLaw::ParetoAlpha(alpha),
        }
    }

    pub fn custom<F>(alpha: f64, master_seed: u64, inverse_rate: F) -> Result<Self>
    where
        F: Fn(i64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("alpha", format!("{alpha} not in (0, 1]")));
        }
        Ok(Self {
            alpha,
            seed: FieldSeed::new(master_seed, Stream::Environment),
            law: EnvironmentLaw::Custom(Arc::new(inverse_rate)),
        })
    }

    /// `λ_j ≡ rate` everywhere; diffusive scaling.
    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("rate", format!("{rate} must be positive")));
        }
        Self::custom(1.0, 0, move |_, _| 1.0 / rate)
    }

    /// Fixed inverse rates on listed sites, `default` elsewhere.
    pub fn from_inverse_rates(alpha: f64, table: Vec<(i64, f64)>, default: f64) -> Result<Self> {
        Self::custom(alpha, 0, move |j, _| {
            table
                .iter()
                .find(|(site, _)| *site == j)
                .map(|(_, v)| *v)
                .unwrap_or(default)
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> FieldSeed {
        self.seed
    }

    pub fn law_tag(&self) -> LawTag {
        match self.law {
            EnvironmentLaw::ParetoAlpha(_) => LawTag::ParetoAlpha,
            EnvironmentLaw::Custom(_) => LawTag::Custom,
        }
    }

    /// Same law, different seed.
    pub fn reseeded(&self, master_seed: u64) -> Self {
        Self {
            seed: FieldSeed::new(master_seed, Stream::Environment),
            ..self.clone()
        }
    }

    pub fn inverse_rate(&self, j: i64) -> f64 {
        let u = site_open_uniform(self.seed, j, 0);
        match &self.law {
            EnvironmentLaw::ParetoAlpha(a) => {
                sample_pareto_inverse_rate(*a, u).expect("open uniform is a valid Pareto input")
            }
            EnvironmentLaw::Custom(f) => f(j, u),
        }
    }

    /// `λ_j`, the rate of the edge `(j, j+1)`.
    pub fn rate(&self, j: i64) -> f64 {
        1.0 / self.inverse_rate(j)
    }
}

/// Neumaier compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Natural scale `S` of the environment with cached two-sided prefix sums.
///
/// `S(0) = 0`, `S(j) = Σ_{k=0}^{j-1} λ_k^{-1}` for `j > 0` and
/// `S(j) = -Σ_{k=j}^{-1} λ_k^{-1}` for `j < 0`.
#[derive(Debug, Clone)]
pub struct NaturalScale {
    env: Environment,
    /// `pos[k] = S(k)`, `k ≥ 0`.
    pos: Vec<f64>,
    pos_acc: CompensatedSum,
    /// `neg[k] = S(-k)`, `k ≥ 0`.
    neg: Vec<f64>,
    neg_acc: CompensatedSum,
}

impl NaturalScale {
    pub fn new(env: Environment) -> Self {
        Self {
            env,
            pos: vec![0.0],
            pos_acc: CompensatedSum::default(),
            neg: vec![0.0],
            neg_acc: CompensatedSum::default(),
        }
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn value(&mut self, j: i64) -> f64 {
        if j >= 0 {
            let k = j as usize;
            while self.pos.len() <= k {
                let site = self.pos.len() as i64 - 1;
                self.pos_acc.add(self.env.inverse_rate(site));
                self.pos.push(self.pos_acc.value());
            }
            self.pos[k]
        } else {
            let k = j.unsigned_abs() as usize;
            while self.neg.len() <= k {
                let site = -(self.neg.len() as i64);
                self.neg_acc.add(self.env.inverse_rate(site));
                self.neg.push(-self.neg_acc.value());
            }
            self.neg[k]
        }
    }

    /// `S_n(x) = n^{-1/α} S(⌊n x⌋)`.
    pub fn scaled(&mut self, n: u64, x: f64) -> Result<f64> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        let j = (n as f64 * x).floor() as i64;
        Ok((n as f64).powf(-1.0 / self.env.alpha) * self.value(j))
    }
}

/// `replicas` independent draws of `R_n = n^{-1/α} Σ_{j=1}^n λ_j^{-1}`, each on
/// a fresh environment seeded by replica index.
pub fn env_attraction_diagnostic(
    env: &Environment,
    n: u64,
    replicas: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let norm = (n as f64).powf(-1.0 / env.alpha);
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| {
            let e = env.reseeded(FieldSeed::replica_master(master_seed, r as u64));
            let mut acc = CompensatedSum::default();
            for j in 1..=n as i64 {
                acc.add(e.inverse_rate(j));
            }
            norm * acc.value()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> OneSidedAlpha {
        OneSidedAlpha::new(0.5).unwrap()
    }

    #[test]
    fn constant_environment_has_unit_rates() {
        let env = Environment::constant(1.0).unwrap();
        for j in -50..50 {
            assert_eq!(env.rate(j), 1.0);
        }
    }

    #[test]
    fn pareto_rates_lie_in_unit_interval_and_repeat() {
        let env = Environment::pareto(half(), 3);
        for j in -500..500 {
            let r = env.rate(j);
            assert!(r > 0.0 && r <= 1.0);
        }
        assert_eq!(env.rate(7).to_bits(), env.rate(7).to_bits());
    }

    #[test]
    fn natural_scale_cases() {
        let env = Environment::from_inverse_rates(0.5, vec![(-1, 2.0), (-2, 3.0)], 1.0).unwrap();
        let mut ns = NaturalScale::new(env);
        assert_eq!(ns.value(0), 0.0);
        assert_eq!(ns.value(-1), -2.0);
        assert_eq!(ns.value(-2), -5.0);
        assert_eq!(ns.value(3), 3.0);

        let mut unit = NaturalScale::new(Environment::constant(1.0).unwrap());
        for j in -20..20 {
            assert_eq!(unit.value(j), j as f64);
        }
    }

    #[test]
    fn scaled_scale_examples() {
        let env = Environment::from_inverse_rates(0.5, vec![], 1.0).unwrap();
        let mut ns = NaturalScale::new(env);
        assert!((ns.scaled(4, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(ns.scaled(4, 0.2).unwrap(), 0.0);
        assert_eq!(ns.scaled(1, 3.7).unwrap(), 3.0);
        assert!(ns.scaled(0, 1.0).is_err());
    }

    #[test]
    fn diagnostic_n_one_is_single_inverse_rate() {
        let env = Environment::pareto(half(), 0);
        let r = env_attraction_diagnostic(&env, 1, 5, 11).unwrap();
        for (i, v) in r.iter().enumerate() {
            let e = env.reseeded(FieldSeed::replica_master(11, i as u64));
            assert_eq!(*v, e.inverse_rate(1));
            assert!(*v > 0.0);
        }
    }
}
