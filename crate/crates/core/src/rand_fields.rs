//! Deterministic random primitives.
//!
//! Every random quantity in the crate is a pure function of
//! `(master_seed, stream, index, draw)`. Per-site fields (rates, scenery,
//! subordinator increments) are therefore identical no matter in which order
//! the sites are visited, and replicas can be run on any number of workers
//! without changing their output.
//!
//! Stable laws are produced from two uniforms:
//!
//! * two-sided `ϑ_β` with characteristic function
//!   `ψ(θ) = exp(-|θ|^β (A1 + i A2 sgn θ))` via the Chambers–Mallows–Stuck
//!   transform. `(A1, A2)` maps to scale `σ = A1^{1/β}` and skewness
//!   `s = -A2 / (A1 tan(πβ/2))` of the usual `S_β(σ, s, 0)` family;
//! * one-sided `ϑ_α`, `α ∈ (0, 1)`, via Kanter's representation. The unit
//!   standardization is the one with tail `P(Y > t) ~ t^{-α}`, i.e. Laplace
//!   transform `E[e^{-sY}] = exp(-Γ(1-α) s^α)`. It is the exact limit law of
//!   `n^{-1/α} Σ λ_j^{-1}` for Pareto(α) inverse rates on `[1, ∞)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stream {
    Environment,
    Scenery,
    Walk,
    Brownian,
    SubordinatorPos,
    SubordinatorNeg,
    NoisePos,
    NoiseNeg,
    /// Stand-alone sampler draws and test-point selection.
    Diagnostic,
}

impl Stream {
    fn key(self) -> u64 {
        match self {
            Stream::Environment => 0x243F_6A88_85A3_08D3,
            Stream::Scenery => 0x1319_8A2E_0370_7344,
            Stream::Walk => 0xA409_3822_299F_31D0,
            Stream::Brownian => 0x082E_FA98_EC4E_6C89,
            Stream::SubordinatorPos => 0x4528_21E6_38D0_1377,
            Stream::SubordinatorNeg => 0xBE54_66CF_34E9_0C6C,
            Stream::NoisePos => 0xC0AC_29B7_C97C_50DD,
            Stream::NoiseNeg => 0x3F84_D5B5_B547_0917,
            Stream::Diagnostic => 0x9216_D5D9_8979_FB1B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSeed {
    pub master_seed: u64,
    pub stream: Stream,
}

impl FieldSeed {
    pub fn new(master_seed: u64, stream: Stream) -> Self {
        Self {
            master_seed,
            stream,
        }
    }

    pub fn with_stream(self, stream: Stream) -> Self {
        Self { stream, ..self }
    }

    /// Seed of replica `index`: `master ^ mix64(index + golden)`.
    pub fn replica_master(master_seed: u64, index: u64) -> u64 {
        master_seed ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15))
    }

    fn bits(&self, index: i64, draw: u32) -> u64 {
        let mut h = mix64(self.master_seed ^ self.stream.key());
        h = mix64(h ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        h = mix64(h ^ u64::from(draw).wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03));
        mix64(h)
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform on `[0, 1)`, a pure function of its arguments.
pub fn site_uniform(seed: FieldSeed, index: i64, draw: u32) -> f64 {
    (seed.bits(index, draw) >> 11) as f64 * TWO_POW_M53
}

/// Uniform on the open interval `(0, 1)`; safe input for the samplers below.
pub fn site_open_uniform(seed: FieldSeed, index: i64, draw: u32) -> f64 {
    ((seed.bits(index, draw) >> 11) as f64 + 0.5) * TWO_POW_M53
}

fn check_open(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::DegenerateUniform(u))
    }
}

/// Standard Gaussian from two open uniforms (Box–Muller, cosine branch).
pub fn standard_normal(u1: f64, u2: f64) -> f64 {
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Parameters `(β, A1, A2)` of the two-sided stable law `ϑ_β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    beta: f64,
    a1: f64,
    a2: f64,
}

impl StableParams {
    pub fn new(beta: f64, a1: f64, a2: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(invalid("beta", format!("{beta} not in (0, 2]")));
        }
        if !(a1 > 0.0 && a1.is_finite()) {
            return Err(invalid("A1", format!("{a1} must be positive")));
        }
        if !a2.is_finite() {
            return Err(invalid("A2", "must be finite"));
        }
        if beta == 1.0 || beta == 2.0 {
            if a2 != 0.0 {
                return Err(invalid("A2", format!("must be 0 for beta = {beta}")));
            }
        } else {
            let bound = (FRAC_PI_2 * beta).tan().abs();
            if (a2 / a1).abs() > bound * (1.0 + 1e-12) {
                return Err(invalid(
                    "A2",
                    format!("|A2/A1| = {} exceeds |tan(pi beta/2)| = {bound}", (a2 / a1).abs()),
                ));
            }
        }
        Ok(Self { beta, a1, a2 })
    }

    /// Standard Gaussian scenery law: `β = 2`, variance `2·A1`.
    pub fn gaussian(a1: f64) -> Result<Self> {
        Self::new(2.0, a1, 0.0)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// Scale `σ` and skewness `s` of the equivalent `S_β(σ, s, 0)` law.
    pub fn scale_skew(&self) -> (f64, f64) {
        let sigma = self.a1.powf(1.0 / self.beta);
        let skew = if self.beta == 1.0 || self.beta == 2.0 || self.a2 == 0.0 {
            0.0
        } else {
            (-self.a2 / (self.a1 * (FRAC_PI_2 * self.beta).tan())).clamp(-1.0, 1.0)
        };
        (sigma, skew)
    }

    /// The characteristic function `ψ(θ)`.
    pub fn chf(&self, theta: f64) -> Complex64 {
        let m = theta.abs().powf(self.beta);
        let sgn = if theta > 0.0 {
            1.0
        } else if theta < 0.0 {
            -1.0
        } else {
            0.0
        };
        (-Complex64::new(m * self.a1, m * self.a2 * sgn)).exp()
    }
}

/// Draw from `ϑ_β`. Deterministic in `(params, u1, u2)`.
pub fn sample_stable(params: &StableParams, u1: f64, u2: f64) -> Result<f64> {
    check_open(u1)?;
    check_open(u2)?;
    let beta = params.beta;
    let (sigma, skew) = params.scale_skew();
    let v = PI * (u1 - 0.5);
    if beta == 1.0 {
        // symmetric only
        return Ok(sigma * v.tan());
    }
    let w = -u2.ln();
    let t = skew * (FRAC_PI_2 * beta).tan();
    let b = t.atan() / beta;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * beta));
    let arg = beta * (v + b);
    let x = s * arg.sin() / v.cos().powf(1.0 / beta)
        * ((v - arg).cos() / w).powf((1.0 - beta) / beta);
    Ok(sigma * x)
}

/// Index `α ∈ (0, 1)` of the one-sided stable law `ϑ_α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedAlpha(f64);

impl OneSidedAlpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid("alpha", format!("{alpha} not in (0, 1)")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// `c` in the Laplace transform `exp(-c s^α)`; equals `Γ(1-α)`.
    pub fn laplace_constant(&self) -> f64 {
        gamma(1.0 - self.0)
    }

    pub fn laplace(&self, s: f64) -> f64 {
        (-self.laplace_constant() * s.powf(self.0)).exp()
    }
}

/// Draw from the unit one-sided law `ϑ_α` (strictly positive).
pub fn sample_one_sided(alpha: OneSidedAlpha, u1: f64, u2: f64) -> Result<f64> {
    check_open(u1)?;
    check_open(u2)?;
    let a = alpha.0;
    let v = PI * u1;
    let e = -u2.ln();
    // Kanter: (A(v)/e)^{(1-a)/a} has Laplace transform exp(-s^a)
    let kanter = (a * v).sin().powf(a / (1.0 - a)) * ((1.0 - a) * v).sin()
        / v.sin().powf(1.0 / (1.0 - a));
    let x = (kanter / e).powf((1.0 - a) / a);
    Ok(alpha.laplace_constant().powf(1.0 / a) * x)
}

/// `count` draws of `ϑ_α` from the `Diagnostic` stream.
pub fn one_sided_samples(alpha: OneSidedAlpha, count: usize, master_seed: u64) -> Vec<f64> {
    let seed = FieldSeed::new(master_seed, Stream::Diagnostic);
    (0..count as i64)
        .map(|i| {
            sample_one_sided(alpha, site_open_uniform(seed, i, 0), site_open_uniform(seed, i, 1))
                .expect("open uniforms are valid sampler input")
        })
        .collect()
}

/// `count` draws of `ϑ_β` from the `Diagnostic` stream.
pub fn stable_samples(params: &StableParams, count: usize, master_seed: u64) -> Vec<f64> {
    let seed = FieldSeed::new(master_seed, Stream::Diagnostic);
    (0..count as i64)
        .map(|i| {
            sample_stable(params, site_open_uniform(seed, i, 0), site_open_uniform(seed, i, 1))
                .expect("open uniforms are valid sampler input")
        })
        .collect()
}

/// CDF of the unit `ϑ_{1/2}`: Lévy law with Laplace transform `exp(-√(π s))`,
/// `P(Y ≤ x) = erfc(√(π / (4x)))`.
pub fn one_sided_half_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erfc((PI / (4.0 * x)).sqrt())
    }
}

/// Pareto(α) inverse rate `u^{-1/α}` on `[1, ∞)`.
pub fn sample_pareto_inverse_rate(alpha: OneSidedAlpha, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::DegenerateUniform(u));
    }
    Ok(u.powf(-1.0 / alpha.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniforms_are_deterministic_and_in_range() {
        let s = FieldSeed::new(42, Stream::Environment);
        assert_eq!(site_uniform(s, 5, 0), site_uniform(s, 5, 0));
        assert_ne!(site_uniform(s, 5, 0), site_uniform(s, 5, 1));
        assert_ne!(site_uniform(s, 5, 0), site_uniform(s, -5, 0));
        for i in -1000..1000 {
            let u = site_uniform(s, i, 0);
            assert!((0.0..1.0).contains(&u));
            let v = site_open_uniform(s, i, 3);
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn stable_params_validation() {
        assert!(StableParams::new(0.0, 1.0, 0.0).is_err());
        assert!(StableParams::new(2.1, 1.0, 0.0).is_err());
        assert!(StableParams::new(1.5, 0.0, 0.0).is_err());
        assert!(StableParams::new(1.0, 1.0, 0.1).is_err());
        assert!(StableParams::new(2.0, 1.0, 0.1).is_err());
        // |tan(0.75 pi)| = 1
        assert!(StableParams::new(1.5, 1.0, 1.0).is_ok());
        assert!(StableParams::new(1.5, 1.0, 1.01).is_err());
        assert!(StableParams::new(0.5, 2.0, -2.0).is_ok());
        assert!(StableParams::new(0.5, 2.0, -2.1).is_err());
    }

    #[test]
    fn samplers_reject_degenerate_uniforms() {
        let p = StableParams::new(1.5, 1.0, 0.0).unwrap();
        assert!(sample_stable(&p, 0.0, 0.5).is_err());
        assert!(sample_stable(&p, 0.5, 1.0).is_err());
        let a = OneSidedAlpha::new(0.5).unwrap();
        assert!(sample_one_sided(a, 1.0, 0.5).is_err());
        assert!(sample_one_sided(a, 0.5, 0.0).is_err());
        assert!(sample_pareto_inverse_rate(a, 0.0).is_err());
    }

    #[test]
    fn pareto_boundary_values() {
        let a = OneSidedAlpha::new(0.5).unwrap();
        assert_eq!(sample_pareto_inverse_rate(a, 1.0).unwrap(), 1.0);
        assert!((sample_pareto_inverse_rate(a, 0.25).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_is_positive() {
        let s = FieldSeed::new(7, Stream::SubordinatorPos);
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.95] {
            let a = OneSidedAlpha::new(alpha).unwrap();
            for i in 0..2000 {
                let x = sample_one_sided(a, site_open_uniform(s, i, 0), site_open_uniform(s, i, 1))
                    .unwrap();
                assert!(x > 0.0, "alpha {alpha}: {x}");
            }
        }
    }

    #[test]
    fn chf_at_zero_is_one() {
        let p = StableParams::new(0.7, 1.3, 0.4).unwrap();
        assert_eq!(p.chf(0.0), Complex64::new(1.0, 0.0));
    }
}
