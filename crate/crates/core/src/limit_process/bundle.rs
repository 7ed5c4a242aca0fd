use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::ChfEstimate;
use crate::error::{invalid, Error, Result};
use crate::rand_fields::{
    sample_stable, site_open_uniform, FieldSeed, OneSidedAlpha, StableParams, Stream,
};

use super::brownian::{
    build_brownian, build_time_change, BrownianGrid, LocalTimeField,
    SubordinatorPath,
};
use super::grid::MonotoneGrid;

/// Clock ratio between the walk and the limit objects.
///
/// The walk leaves site `j` at total rate `λ_j + λ_{j-1}`, so its mean holding
/// time is half of what the occupation-density time change `V⋆` charges.
/// Consequently `X_n(t) → X⋆(WALK_CLOCK·t)` and
/// `Γ_n(t, ·) → L⋆(WALK_CLOCK·t, ·) / WALK_CLOCK`. Every walk/limit comparison
/// goes through this constant.
pub const WALK_CLOCK: f64 = 2.0;

/// Resolution of a [`LimitBundle`]. Step and point counts stay fixed while the
/// windows grow, so resolution is relative to the explored range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    /// Brownian steps on `[0, t_max]`.
    pub steps: usize,
    /// Subordinator points per side of the origin.
    pub half_points: usize,
    /// Histogram bin width is `bin_factor·√dt`.
    pub bin_factor: f64,
    /// Windows grow at fixed resolution up to these sizes, then coarsen.
    pub max_steps: usize,
    pub max_half_points: usize,
    /// Cap on window doublings.
    pub max_doublings: u32,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            steps: 1 << 16,
            half_points: 1 << 14,
            bin_factor: 2.0,
            max_steps: 1 << 22,
            max_half_points: 1 << 17,
            max_doublings: 40,
        }
    }
}

impl LimitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 16 || self.steps % 2 != 0 {
            return Err(invalid("steps", "must be even and at least 16"));
        }
        if self.half_points < 16 || self.half_points % 2 != 0 {
            return Err(invalid("half_points", "must be even and at least 16"));
        }
        if !(self.bin_factor > 0.0) {
            return Err(invalid("bin_factor", "must be positive"));
        }
        Ok(())
    }
}

/// One coupled realization of `(B, L, W, V⋆)`.
#[derive(Debug, Clone)]
pub struct LimitBundle {
    brownian: BrownianGrid,
    local: LocalTimeField,
    sub: SubordinatorPath,
    w: MonotoneGrid,
    vstar: MonotoneGrid,
    /// Relative bin of `W(x_i)` for each subordinator grid point.
    w_bins: Vec<Option<u32>>,
    /// `edges[b]` is the first grid point with `W(x_i)` in bin `b` or above.
    edges: Vec<usize>,
    master_seed: u64,
    doublings: u32,
}

impl LimitBundle {
    /// Build a bundle whose time change exceeds `tau_max`. Both windows are
    /// doubled until `W` covers the local-time support and `V⋆(t_max) > tau_max`.
    pub fn build(
        alpha: OneSidedAlpha,
        tau_max: f64,
        master_seed: u64,
        cfg: &LimitConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return Err(invalid("tau_max", "must be positive"));
        }
        let a = alpha.value();
        // V⋆(t) grows like t^{(1+α)/2}
        let t0 = tau_max.powf(2.0 / (1.0 + a));
        let mut brownian = build_brownian(t0, t0 / cfg.steps as f64, master_seed)?;
        let x0 = (3.0 * t0.sqrt()).powf(a);
        let mut sub = SubordinatorPath::new(alpha, cfg.half_points, x0 / cfg.half_points as f64, master_seed);
        let mut doublings = 0u32;
        loop {
            let local = LocalTimeField::new(&brownian, cfg.bin_factor * brownian.dt().sqrt())?;
            let (lo, hi) = local.covered();
            let (w_lo, w_hi) = sub.range();
            if w_lo > lo || w_hi < hi {
                sub = if sub.half < cfg.max_half_points {
                    sub.extended()
                } else {
                    sub.doubled()
                };
            } else {
                let w = sub.grid();
                let (vstar, _) = build_time_change(&brownian, &local, &w)?;
                if vstar.range().1 > tau_max {
                    let w_bins: Vec<Option<u32>> = w
                        .ordinates()
                        .iter()
                        .map(|&y| local.bin_of(y).map(|b| b as u32))
                        .collect();
                    let (lo, _) = local.covered();
                    let below = w.ordinates().partition_point(|&y| y < lo);
                    let edges = (0..=local.n_bins() as u32)
                        .map(|b| below + w_bins[below..].partition_point(|wb| wb.is_some_and(|v| v < b)))
                        .collect();
                    return Ok(Self {
                        brownian,
                        local,
                        sub,
                        w,
                        vstar,
                        w_bins,
                        edges,
                        master_seed,
                        doublings,
                    });
                }
                brownian = if brownian.steps() < cfg.max_steps {
                    brownian.extended()
                } else {
                    brownian.doubled()
                };
            }
            doublings += 1;
            if doublings > cfg.max_doublings {
                return Err(Error::Truncation(format!(
                    "no adequate window after {} doublings",
                    cfg.max_doublings
                )));
            }
        }
    }

    pub fn brownian(&self) -> &BrownianGrid {
        &self.brownian
    }

    pub fn local_time(&self) -> &LocalTimeField {
        &self.local
    }

    pub fn subordinator(&self) -> &MonotoneGrid {
        &self.w
    }

    pub fn vstar(&self) -> &MonotoneGrid {
        &self.vstar
    }

    pub fn doublings(&self) -> u32 {
        self.doublings
    }

    pub fn dx(&self) -> f64 {
        self.sub.dx
    }

    pub fn x_max(&self) -> f64 {
        self.sub.x_max()
    }

    /// Largest `τ` the bundle can answer.
    pub fn tau_max(&self) -> f64 {
        self.vstar.range().1
    }

    /// `V⋆⁻¹(τ)`.
    pub fn vstar_inverse(&self, tau: f64) -> Result<f64> {
        if tau < 0.0 {
            return Err(invalid("tau", "must be non-negative"));
        }
        self.vstar.pseudo_inverse(tau)
    }

    /// `|V⋆(V⋆⁻¹(τ)) - τ|`.
    pub fn roundtrip_error(&self, tau: f64) -> Result<f64> {
        Ok((self.vstar.value(self.vstar_inverse(tau)?)? - tau).abs())
    }

    /// `W⁻¹` at the resolution of the local-time bins.
    ///
    /// The time change only sees the bin measures `m_b`, i.e. the image of
    /// Lebesgue measure under `W` spread evenly over each bin. The matching
    /// scale inverse agrees with `W⁻¹` at bin edges and is linear inside a bin
    /// with slope `m_b / h`. Using it keeps `X⋆` and `L⋆` consistent below bin
    /// resolution.
    pub fn scale_inverse(&self, y: f64) -> Result<f64> {
        let b = self.local.bin_of(y).ok_or_else(|| {
            Error::Truncation(format!("level {y} outside the local-time window"))
        })?;
        let h = self.local.bin_width();
        let frac = ((y - self.local.bin_lower(b)) / h).clamp(0.0, 1.0);
        let (i0, i1) = (self.edges[b], self.edges[b + 1]);
        let dx = self.dx();
        Ok(-self.x_max() + i0 as f64 * dx + frac * (i1 - i0) as f64 * dx)
    }

    /// `X⋆(τ) = W⁻¹(B(V⋆⁻¹(τ)))`, with `B` read at the grid point at or before
    /// `V⋆⁻¹(τ)` and `W⁻¹` as in [`Self::scale_inverse`].
    pub fn x_star(&self, tau: f64) -> Result<f64> {
        let t = self.vstar_inverse(tau)?;
        self.scale_inverse(self.brownian.left_value(t)?)
    }

    /// `L⋆(τ, x_i) = L(V⋆⁻¹(τ), W(x_i))` on the subordinator grid.
    pub fn l_star_field(&self, tau: f64) -> Result<Vec<f64>> {
        let profile = self.local.profile(self.vstar_inverse(tau)?)?;
        Ok(self
            .w_bins
            .iter()
            .map(|b| b.map_or(0.0, |b| profile[b as usize]))
            .collect())
    }

    /// Abscissae of [`Self::l_star_field`].
    pub fn x_grid(&self) -> &[f64] {
        self.w.abscissae()
    }

    /// `L⋆(τ, x)`.
    pub fn l_star(&self, tau: f64, x: f64) -> Result<f64> {
        if x.abs() > self.x_max() {
            return Ok(0.0);
        }
        let t = self.vstar_inverse(tau)?;
        self.local.at(t, self.w.value(x)?)
    }

    /// `(lhs, rhs)` of `Γ⋆(τ, (-∞, x)) = ∫_{-∞}^x L(V⋆⁻¹(τ), W(y)) dy`.
    ///
    /// The left side integrates `1{X⋆(σ) < x}` over `σ ∈ [0, τ]`; on each
    /// Brownian step `X⋆` is constant while `σ` runs through the corresponding
    /// increment of `V⋆`. The right side is a left Riemann sum on the `x` grid.
    pub fn occupation_below(&self, tau: f64, x: f64) -> Result<(f64, f64)> {
        let t = self.vstar_inverse(tau)?;
        let v = self.vstar.ordinates();
        let b = self.brownian.values();
        let dt = self.brownian.dt();
        let full = ((t / dt).floor() as usize).min(self.brownian.steps());
        let mut lhs = 0.0;
        for k in 0..full {
            if self.scale_inverse(b[k])? < x {
                lhs += v[k + 1] - v[k];
            }
        }
        if full < self.brownian.steps() && self.scale_inverse(b[full])? < x {
            lhs += self.vstar.value(t)? - v[full];
        }
        let field = self.l_star_field(tau)?;
        let dx = self.dx();
        let rhs: f64 = self
            .x_grid()
            .iter()
            .zip(&field)
            .filter(|(xi, _)| **xi < x)
            .map(|(_, l)| l * dx)
            .sum();
        Ok((lhs, rhs))
    }

    /// Largest `|lhs - rhs| / τ` of [`Self::occupation_below`] over `pairs`
    /// random points: `τ` uniform on `(tau_max/4, tau_max)` and `x = X⋆(σ)` for
    /// `σ` uniform on `(0, τ)`, so that `x` lies in the visited range.
    ///
    /// The error is at most the occupation of the level bin containing `W(x)`,
    /// whose `x`-extent is of order `h^α`. The grid is sized for `tau_max`, so
    /// much smaller `τ` are not resolved to a few percent.
    pub fn occupation_identity_error(&self, tau_max: f64, pairs: usize, seed: u64) -> Result<f64> {
        let fs = FieldSeed::new(seed, Stream::Diagnostic);
        let mut worst = 0.0f64;
        for i in 0..pairs as i64 {
            let tau = tau_max * (0.25 + 0.75 * site_open_uniform(fs, i, 0));
            let x = self.x_star(tau * site_open_uniform(fs, i, 1))?;
            let (lhs, rhs) = self.occupation_below(tau, x)?;
            worst = worst.max((lhs - rhs).abs() / tau);
        }
        Ok(worst)
    }

    /// Grid quadrature of `∫ L⋆(τ, x) dx`.
    pub fn l_star_mass(&self, tau: f64) -> Result<f64> {
        Ok(self.l_star_field(tau)?.iter().sum::<f64>() * self.dx())
    }

    /// `Σ_i L⋆(τ, x_i) ΔZ(i)`, where `increment(i)` supplies the noise of grid
    /// point `i` (`i` indexes [`Self::x_grid`]).
    pub fn xi_star_integral_with<F: FnMut(usize) -> f64>(&self, tau: f64, mut increment: F) -> Result<f64> {
        let field = self.l_star_field(tau)?;
        Ok(field
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != 0.0)
            .map(|(i, l)| l * increment(i))
            .sum())
    }

    /// Partition sum of
    /// `Ξ⋆(τ) = ∫_0^∞ L⋆(τ, x-) dZ₊(x) + ∫_0^∞ L⋆(τ, -(x-)) dZ₋(x)`.
    ///
    /// Grid point `x_i ≥ 0` carries the `Z₊` increment over `[x_i, x_i + dx)`,
    /// grid point `x_i < 0` the `Z₋` increment over `[|x_i|, |x_i| + dx)`. The
    /// noise is independent of the bundle, so the left-endpoint evaluation is
    /// predictable. Increments are `dx^{1/β} ϑ_β`.
    pub fn xi_star_integral(&self, params: &StableParams, tau: f64) -> Result<f64> {
        let pos = FieldSeed::new(self.master_seed, Stream::NoisePos);
        let neg = FieldSeed::new(self.master_seed, Stream::NoiseNeg);
        let half = self.sub.half;
        let scale = self.dx().powf(1.0 / params.beta());
        self.xi_star_integral_with(tau, |i| {
            let (seed, key) = if i >= half {
                (pos, (i - half) as i64)
            } else {
                (neg, (half - i) as i64)
            };
            let key = ((self.doublings as i64) << 40) | key;
            scale
                * sample_stable(params, site_open_uniform(seed, key, 0), site_open_uniform(seed, key, 1))
                    .expect("open uniforms are valid sampler input")
        })
    }

    /// `(∫|Σ_j θ_j L⋆(τ_j, x)|^β dx, ∫|·|^β sgn(·) dx)` by grid quadrature.
    pub fn power_integrals(&self, thetas: &[f64], taus: &[f64], beta: f64) -> Result<(f64, f64)> {
        if thetas.len() != taus.len() {
            return Err(invalid("thetas", "must match taus in length"));
        }
        let fields = thetas
            .iter()
            .zip(taus)
            .filter(|(th, _)| **th != 0.0)
            .map(|(_, &tau)| self.l_star_field(tau))
            .collect::<Result<Vec<_>>>()?;
        let th: Vec<f64> = thetas.iter().copied().filter(|t| *t != 0.0).collect();
        Ok(combined_power(&fields, &th, beta, self.dx()))
    }

    /// `ℓ{x : |Σ_j θ_j L⋆(τ_j, x)| > c}` for each level in `levels`.
    pub fn superlevel_measure(&self, thetas: &[f64], taus: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
        if thetas.len() != taus.len() {
            return Err(invalid("thetas", "must match taus in length"));
        }
        let mut combo = vec![0.0; self.x_grid().len()];
        for (&th, &tau) in thetas.iter().zip(taus) {
            for (c, l) in combo.iter_mut().zip(self.l_star_field(tau)?) {
                *c += th * l;
            }
        }
        let dx = self.dx();
        Ok(levels
            .iter()
            .map(|&lvl| combo.iter().filter(|c| c.abs() > lvl).count() as f64 * dx)
            .collect())
    }

    /// `X⋆` read on the walk clock: the limit of `X_n(τ)`.
    pub fn walk_position(&self, tau: f64) -> Result<f64> {
        self.x_star(WALK_CLOCK * tau)
    }

    /// `Ξ⋆(WALK_CLOCK·τ) / WALK_CLOCK`, the limit of `Ξ_n(τ)`.
    pub fn walk_xi(&self, params: &StableParams, tau: f64) -> Result<f64> {
        Ok(self.xi_star_integral(params, WALK_CLOCK * tau)? / WALK_CLOCK)
    }

    /// [`Self::power_integrals`] of the walk-clock local time
    /// `L⋆(WALK_CLOCK·τ, ·) / WALK_CLOCK`.
    pub fn walk_power_integrals(&self, thetas: &[f64], taus: &[f64], beta: f64) -> Result<(f64, f64)> {
        let th: Vec<f64> = thetas.iter().map(|t| t / WALK_CLOCK).collect();
        let ts: Vec<f64> = taus.iter().map(|t| t * WALK_CLOCK).collect();
        self.power_integrals(&th, &ts, beta)
    }

    /// [`Self::superlevel_measure`] of the walk-clock local time.
    pub fn walk_superlevel_measure(&self, thetas: &[f64], taus: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
        let ts: Vec<f64> = taus.iter().map(|t| t * WALK_CLOCK).collect();
        let ls: Vec<f64> = levels.iter().map(|l| l * WALK_CLOCK).collect();
        self.superlevel_measure(thetas, &ts, &ls)
    }

    pub fn write_brownian_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,B")?;
        let dt = self.brownian.dt();
        for (k, v) in self.brownian.values().iter().enumerate() {
            writeln!(out, "{},{v}", k as f64 * dt)?;
        }
        Ok(())
    }

    pub fn write_subordinator_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.w.write_csv("x", "W", out)
    }

    pub fn write_vstar_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.vstar.write_csv("t", "Vstar", out)
    }

    /// Grid description for metadata output.
    pub fn grid_summary(&self) -> GridSummary {
        GridSummary {
            dt: self.brownian.dt(),
            t_max: self.brownian.t_max(),
            dx: self.dx(),
            x_max: self.x_max(),
            bin_width: self.local.bin_width(),
            doublings: self.doublings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub dt: f64,
    pub t_max: f64,
    pub dx: f64,
    pub x_max: f64,
    pub bin_width: f64,
    pub doublings: u32,
}

/// `(Σ_i |c_i|^β dx, Σ_i |c_i|^β sgn(c_i) dx)` with `c_i = Σ_j θ_j f_j(i)`, for
/// fields `f_j` sampled on a common grid of spacing `dx`.
pub fn combined_power(fields: &[Vec<f64>], thetas: &[f64], beta: f64, dx: f64) -> (f64, f64) {
    let len = fields.iter().map(Vec::len).max().unwrap_or(0);
    let (mut unsigned, mut signed) = (0.0, 0.0);
    for i in 0..len {
        let c: f64 = fields
            .iter()
            .zip(thetas)
            .map(|(f, th)| th * f.get(i).copied().unwrap_or(0.0))
            .sum();
        if c != 0.0 {
            let p = c.abs().powf(beta);
            unsigned += p;
            signed += p * c.signum();
        }
    }
    (unsigned * dx, signed * dx)
}

/// `E[exp(i Σ θ_j Ξ⋆(τ_j))]` via
/// `E[exp(-A1 ∫|Σθ_j L⋆(τ_j, x)|^β dx - i A2 ∫|·|^β sgn(·) dx)]`, averaged over
/// `bundles`.
pub fn fdd_chf(
    bundles: &[LimitBundle],
    thetas: &[f64],
    taus: &[f64],
    params: &StableParams,
) -> Result<ChfEstimate> {
    if thetas.iter().all(|&t| t == 0.0) && thetas.len() == taus.len() {
        return Ok(ChfEstimate {
            value: Complex64::new(1.0, 0.0),
            stderr: 0.0,
        });
    }
    let terms = bundles
        .iter()
        .map(|b| {
            let (i, j) = b.power_integrals(thetas, taus, params.beta())?;
            Ok((-Complex64::new(params.a1() * i, params.a2() * j)).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    ChfEstimate::from_terms(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(seed: u64, tau_max: f64) -> LimitBundle {
        let cfg = LimitConfig {
            steps: 1 << 12,
            half_points: 1 << 10,
            ..LimitConfig::default()
        };
        LimitBundle::build(OneSidedAlpha::new(0.5).unwrap(), tau_max, seed, &cfg).unwrap()
    }

    #[test]
    fn trivial_values_at_zero() {
        let b = bundle(1, 1.0);
        assert_eq!(b.x_star(0.0).unwrap(), 0.0);
        assert_eq!(b.vstar().value(0.0).unwrap(), 0.0);
        let p = StableParams::gaussian(1.0).unwrap();
        assert_eq!(b.xi_star_integral(&p, 0.0).unwrap(), 0.0);
        assert_eq!(b.l_star_mass(0.0).unwrap(), 0.0);
        let z = fdd_chf(std::slice::from_ref(&b), &[0.0, 0.0], &[0.5, 1.0], &p).unwrap();
        assert_eq!(z.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn local_time_mass_matches_tau() {
        let b = bundle(2, 1.0);
        assert!(b.tau_max() > 1.0);
        for tau in [0.1, 0.5, 1.0] {
            let m = b.l_star_mass(tau).unwrap();
            assert!((m - tau).abs() < 1e-9, "{tau}: {m}");
            assert!(b.roundtrip_error(tau).unwrap() < 1e-9);
            // unit noise reduces the integral to the mass
            let dx = b.dx();
            let v = b.xi_star_integral_with(tau, |_| dx).unwrap();
            assert!((v - tau).abs() < 1e-9);
        }
        assert!(b.x_star(b.tau_max() * 1.01).is_err());
    }

    #[test]
    fn occupation_below_limits() {
        let b = bundle(3, 1.0);
        let (lhs, rhs) = b.occupation_below(1.0, b.x_max() + 1.0).unwrap();
        assert!((lhs - 1.0).abs() < 1e-9 && (rhs - 1.0).abs() < 1e-9);
        let (lhs, rhs) = b.occupation_below(1.0, -b.x_max() - 1.0).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn l_star_monotone_in_tau() {
        let b = bundle(4, 2.0);
        let f1 = b.l_star_field(0.5).unwrap();
        let f2 = b.l_star_field(1.5).unwrap();
        assert!(f1.iter().zip(&f2).all(|(a, c)| a <= c));
        assert_eq!(b.l_star(1.0, 1e9).unwrap(), 0.0);
    }

    #[test]
    fn x_star_within_inverse_range() {
        let b = bundle(5, 1.0);
        let (lo, hi) = b.brownian().range();
        let (xl, xh) = (b.scale_inverse(lo).unwrap(), b.scale_inverse(hi).unwrap());
        for k in 0..=20 {
            let x = b.x_star(k as f64 / 20.0).unwrap();
            assert!(x >= xl && x <= xh);
        }
    }
}
