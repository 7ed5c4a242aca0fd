//! The scenery field `ξ(x)` and the observation functional
//! `Ξ(t) = ∫_0^t ξ(X(s)) ds = Σ_x Γ(t, {x}) ξ(x)`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::birth_death::{time_scale, OccupationMap, WalkPath};
use crate::error::{invalid, Error, Result};
use crate::rand_fields::{sample_stable, site_open_uniform, FieldSeed, StableParams, Stream};

type SceneryFn = Arc<dyn Fn(i64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SceneryLaw {
    Stable(StableParams),
    /// `ξ ≡ value`; test stub.
    Constant(f64),
    /// `ξ(x) = f(x, u1, u2)` with the two site uniforms of `x`.
    Custom(SceneryFn),
}

impl fmt::Debug for SceneryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneryLaw::Stable(p) => write!(f, "Stable({p:?})"),
            SceneryLaw::Constant(v) => write!(f, "Constant({v})"),
            SceneryLaw::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenery {
    beta: f64,
    seed: FieldSeed,
    law: SceneryLaw,
}

impl Scenery {
    pub fn stable(params: StableParams, master_seed: u64) -> Self {
        Self {
            beta: params.beta(),
            seed: FieldSeed::new(master_seed, Stream::Scenery),
            law: SceneryLaw::Stable(params),
        }
    }

    pub fn constant(value: f64, beta: f64) -> Result<Self> {
        Self::with_law(beta, 0, SceneryLaw::Constant(value))
    }

    pub fn custom<F>(beta: f64, master_seed: u64, f: F) -> Result<Self>
    where
        F: Fn(i64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_law(beta, master_seed, SceneryLaw::Custom(Arc::new(f)))
    }

    fn with_law(beta: f64, master_seed: u64, law: SceneryLaw) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(invalid("beta", format!("{beta} not in (0, 2]")));
        }
        Ok(Self {
            beta,
            seed: FieldSeed::new(master_seed, Stream::Scenery),
            law,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn law(&self) -> &SceneryLaw {
        &self.law
    }

    pub fn reseeded(&self, master_seed: u64) -> Self {
        Self {
            seed: FieldSeed::new(master_seed, Stream::Scenery),
            ..self.clone()
        }
    }

    /// `ξ(x)`.
    pub fn value(&self, x: i64) -> f64 {
        match &self.law {
            SceneryLaw::Constant(v) => *v,
            SceneryLaw::Stable(p) => sample_stable(
                p,
                site_open_uniform(self.seed, x, 0),
                site_open_uniform(self.seed, x, 1),
            )
            .expect("open uniforms are valid sampler input"),
            SceneryLaw::Custom(f) => f(
                x,
                site_open_uniform(self.seed, x, 0),
                site_open_uniform(self.seed, x, 1),
            ),
        }
    }

    /// CSV `site,value` over `[from, to]`.
    pub fn write_csv<W: Write>(&self, from: i64, to: i64, mut out: W) -> std::io::Result<()> {
        writeln!(out, "site,value")?;
        for x in from..=to {
            writeln!(out, "{x},{}", self.value(x))?;
        }
        Ok(())
    }
}

/// `ξ(x)`; free-function form.
pub fn scenery_value(sc: &Scenery, x: i64) -> f64 {
    sc.value(x)
}

/// `κ = 1/α + 1/β`.
pub fn kappa(alpha: f64, beta: f64) -> f64 {
    1.0 / alpha + 1.0 / beta
}

/// `δ = 1 - 1/α + 1/(αβ)`, the exponent of the classical-walk regime. Exposed
/// for documentation output only.
pub fn classical_delta(alpha: f64, beta: f64) -> f64 {
    1.0 - 1.0 / alpha + 1.0 / (alpha * beta)
}

/// `Ξ(horizon) = Σ_x Γ(horizon, {x}) ξ(x)` for the snapshot `occ`.
pub fn xi(occ: &OccupationMap, sc: &Scenery) -> f64 {
    occ.iter()
        .filter(|(_, g)| *g > 0.0)
        .map(|(x, g)| g * sc.value(x))
        .sum()
}

/// `Ξ(t)` replayed from a stored path.
pub fn xi_at(path: &WalkPath, sc: &Scenery, t: f64) -> Result<f64> {
    Ok(xi(&path.occupation_until(t)?, sc))
}

/// `Ξ_n(t) = n^{-κ} Ξ(k_n t)`; `occ` must be the snapshot at `k_n t`.
pub fn xi_rescaled(
    occ: &OccupationMap,
    sc: &Scenery,
    n: u64,
    alpha: f64,
    beta: f64,
    t: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let s = time_scale(n, alpha) * t;
    if (s - occ.horizon()).abs() > 1e-9 * s.max(1.0) {
        if s > occ.horizon() {
            return Err(Error::BeyondHorizon {
                requested: s,
                horizon: occ.horizon(),
            });
        }
        return Err(Error::MissingSnapshot(s));
    }
    Ok((n as f64).powf(-kappa(alpha, beta)) * xi(occ, sc))
}

/// Sample truncated moments `E[ξ 1{|ξ| ≤ level}]` and `E[ξ² 1{|ξ| ≤ level}]`
/// with their standard errors, as `(m1, se1, m2, se2)`.
pub fn truncated_moments(sample: &[f64], level: f64) -> Result<(f64, f64, f64, f64)> {
    if sample.len() < 2 {
        return Err(Error::DegenerateSample("need at least two values".into()));
    }
    let n = sample.len() as f64;
    let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
    for &v in sample {
        if v.abs() <= level {
            let v2 = v * v;
            s1 += v;
            s2 += v2;
            s4 += v2 * v2;
        }
    }
    let m1 = s1 / n;
    let m2 = s2 / n;
    let var1 = (s2 / n - m1 * m1).max(0.0);
    let var2 = (s4 / n - m2 * m2).max(0.0);
    Ok((m1, (var1 / (n - 1.0)).sqrt(), m2, (var2 / (n - 1.0)).sqrt()))
}
