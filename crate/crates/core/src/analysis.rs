//! Statistical machinery: exponent fits, KS distances, empirical
//! characteristic functions and the occupation functionals of the walk.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birth_death::{simulate_snapshots, time_scale, OccupationMap};
use crate::environment::Environment;
use crate::error::{invalid, Error, Result};
use crate::rand_fields::FieldSeed;

/// Bootstrap resamples used by [`exponent_fit`].
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub t_grid: Vec<f64>,
    /// The fitted ordinates, before taking logs.
    pub statistics: Vec<f64>,
}

impl ExponentFit {
    /// `|slope - target| ≤ max(tol, 3·stderr)`.
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol.max(3.0 * self.stderr)
    }
}

/// Least-squares line through `(xs, ys)`: `(slope, intercept, r², slope stderr)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("fit", "need at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("fit", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let se = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, r2, se))
}

/// `q`-quantile (linear interpolation between order statistics) of a sorted
/// sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(sample: &[f64], q: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

fn abs_quantile(sample: &[f64], q: f64) -> f64 {
    let mut s: Vec<f64> = sample.iter().map(|v| v.abs()).collect();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

fn slope_of(ts: &[f64], stats: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = stats.iter().map(|s| s.ln()).collect();
    Ok(fit_line(&lx, &ly)?.0)
}

fn bootstrap_slopes<F>(samples: &[(f64, Vec<f64>)], seed: u64, stat: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let ts: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    // replicas observed at every time are resampled jointly
    let paired = samples.windows(2).all(|w| w[0].1.len() == w[1].1.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let len0 = samples[0].1.len();
        let idx: Vec<usize> = (0..len0).map(|_| rng.gen_range(0..len0)).collect();
        let mut stats = Vec::with_capacity(samples.len());
        for (_, s) in samples {
            buf.clear();
            if paired {
                buf.extend(idx.iter().map(|&i| s[i]));
            } else {
                buf.extend((0..s.len()).map(|_| s[rng.gen_range(0..s.len())]));
            }
            stats.push(stat(&buf));
        }
        if stats.iter().all(|v| *v > 0.0 && v.is_finite()) {
            slopes.push(slope_of(&ts, &stats)?);
        }
    }
    if slopes.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let m = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let var = slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64;
    Ok(var.sqrt())
}

fn fit_statistic<F>(samples: &[(f64, Vec<f64>)], seed: u64, stat: F) -> Result<ExponentFit>
where
    F: Fn(&[f64]) -> f64,
{
    if samples.len() < 4 {
        return Err(invalid("samples_by_time", "need at least four time points"));
    }
    if samples.iter().any(|(t, s)| !(*t > 0.0) || s.len() < 2) {
        return Err(invalid("samples_by_time", "times must be positive with at least two samples each"));
    }
    let ts: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let stats: Vec<f64> = samples.iter().map(|(_, s)| stat(s)).collect();
    if stats.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateSample(
            "statistic is zero or non-finite at some time".into(),
        ));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = stats.iter().map(|s| s.ln()).collect();
    let (slope, intercept, r_squared, _) = fit_line(&lx, &ly)?;
    let stderr = bootstrap_slopes(samples, seed, &stat)?;
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
        r_squared,
        t_grid: ts,
        statistics: stats,
    })
}

/// Slope of `log(q-quantile of |Y(t)|)` against `log t`, with bootstrap
/// stderr. `seed` drives the bootstrap only.
pub fn exponent_fit(samples_by_time: &[(f64, Vec<f64>)], q: f64, seed: u64) -> Result<ExponentFit> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("q", "quantile level must lie in (0, 1)"));
    }
    fit_statistic(samples_by_time, seed, |s| abs_quantile(s, q))
}

/// Slope of `log E[Y(t)]` against `log t` for positive samples.
pub fn mean_exponent_fit(samples_by_time: &[(f64, Vec<f64>)], seed: u64) -> Result<ExponentFit> {
    fit_statistic(samples_by_time, seed, |s| s.iter().sum::<f64>() / s.len() as f64)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DegenerateSample("KS needs non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov–Smirnov distance against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::DegenerateSample("KS needs a non-empty sample".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    }))
}

/// Monte Carlo estimate of a characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChfEstimate {
    pub value: Complex64,
    /// `sqrt((Var Re + Var Im) / N)`.
    pub stderr: f64,
}

impl ChfEstimate {
    pub fn from_terms(terms: &[Complex64]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::DegenerateSample("no terms".into()));
        }
        let n = terms.len() as f64;
        let mean = terms.iter().sum::<Complex64>() / n;
        let var = if terms.len() > 1 {
            terms.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            value: mean,
            stderr: (var / n).sqrt(),
        })
    }

    /// `3·sqrt(se₁² + se₂²)`.
    pub fn combined_tolerance(&self, other: &Self) -> f64 {
        3.0 * (self.stderr.powi(2) + other.stderr.powi(2)).sqrt()
    }
}

/// `mean exp(iθ·value)` for each `θ`.
pub fn empirical_chf(sample: &[f64], thetas: &[f64]) -> Result<Vec<ChfEstimate>> {
    if sample.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    thetas
        .iter()
        .map(|&th| {
            let terms: Vec<Complex64> = sample
                .iter()
                .map(|&v| Complex64::from_polar(1.0, th * v))
                .collect();
            ChfEstimate::from_terms(&terms)
        })
        .collect()
}

/// Joint empirical chf `mean exp(i Σ_j θ_j v_j)` of vector samples.
pub fn empirical_joint_chf(samples: &[Vec<f64>], thetas: &[f64]) -> Result<ChfEstimate> {
    if samples.iter().any(|s| s.len() != thetas.len()) {
        return Err(invalid("thetas", "must match the sample dimension"));
    }
    let terms: Vec<Complex64> = samples
        .iter()
        .map(|s| Complex64::from_polar(1.0, s.iter().zip(thetas).map(|(v, t)| v * t).sum()))
        .collect();
    ChfEstimate::from_terms(&terms)
}

/// Coefficients and times of a linear occupation functional, and its power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    thetas: Vec<f64>,
    taus: Vec<f64>,
    beta: f64,
}

impl FunctionalSpec {
    pub fn new(thetas: Vec<f64>, taus: Vec<f64>, beta: f64) -> Result<Self> {
        if thetas.len() != taus.len() || thetas.is_empty() {
            return Err(invalid("thetas", "must be non-empty and match taus in length"));
        }
        if taus.iter().any(|t| !(*t >= 0.0)) {
            return Err(invalid("taus", "must be non-negative"));
        }
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(invalid("beta", format!("{beta} not in (0, 2]")));
        }
        Ok(Self { thetas, taus, beta })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Walk times `k_n τ_i`, sorted and deduplicated, for snapshot requests.
    pub fn walk_times(&self, n: u64, alpha: f64) -> Vec<f64> {
        let k = time_scale(n, alpha);
        let mut t: Vec<f64> = self.taus.iter().map(|tau| k * tau).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

fn find_snapshot<'a>(snaps: &'a [OccupationMap], time: f64) -> Result<&'a OccupationMap> {
    snaps
        .iter()
        .find(|o| (o.horizon() - time).abs() <= 1e-9 * time.max(1.0))
        .ok_or(Error::MissingSnapshot(time))
}

/// `x ↦ Σ_i θ_i Γ(k_n τ_i, {x})` on the union of the snapshot windows.
fn combination(
    snaps: &[OccupationMap],
    spec: &FunctionalSpec,
    n: u64,
    alpha: f64,
) -> Result<Vec<f64>> {
    let k = time_scale(n, alpha);
    let chosen = spec
        .taus
        .iter()
        .map(|tau| find_snapshot(snaps, k * tau))
        .collect::<Result<Vec<_>>>()?;
    let lo = chosen.iter().map(|o| o.window().0).min().unwrap_or(0);
    let hi = chosen.iter().map(|o| o.window().1).max().unwrap_or(0);
    Ok((lo..hi)
        .map(|x| {
            chosen
                .iter()
                .zip(&spec.thetas)
                .map(|(o, th)| th * o.at(x))
                .sum()
        })
        .collect())
}

/// `(n^{-1-β/α} Σ_x |Σ_i θ_i Γ(k_n τ_i, {x})|^β, same with sgn weight)`.
pub fn power_functional(
    snaps: &[OccupationMap],
    spec: &FunctionalSpec,
    n: u64,
    alpha: f64,
) -> Result<(f64, f64)> {
    let combo = combination(snaps, spec, n, alpha)?;
    let norm = (n as f64).powf(-1.0 - spec.beta / alpha);
    let (mut u, mut s) = (0.0, 0.0);
    for c in combo {
        if c != 0.0 {
            let p = c.abs().powf(spec.beta);
            u += p;
            s += p * c.signum();
        }
    }
    Ok((norm * u, norm * s))
}

/// `(1/n) card{x : n |Σ_i θ_i Γ_n(τ_i, {x/n})| > c}` for each `c`.
pub fn count_profile(
    snaps: &[OccupationMap],
    n: u64,
    alpha: f64,
    spec: &FunctionalSpec,
    c_grid: &[f64],
) -> Result<Vec<f64>> {
    let combo = combination(snaps, spec, n, alpha)?;
    let scale = n as f64 / time_scale(n, alpha);
    let mut vals: Vec<f64> = combo.iter().map(|c| scale * c.abs()).collect();
    vals.sort_by(f64::total_cmp);
    Ok(c_grid
        .iter()
        .map(|&c| (vals.len() - vals.partition_point(|&v| v <= c)) as f64 / n as f64)
        .collect())
}

/// `Σ_x E[Γ²(s, {x})]` over `replicas` fresh environments and walks, fitted
/// in `log s`. `env` supplies the law; each replica reseeds it.
pub fn gamma_square_scaling(
    env: &Environment,
    s_grid: &[f64],
    replicas: usize,
    master_seed: u64,
) -> Result<ExponentFit> {
    let sums = gamma_square_samples(env, s_grid, replicas, master_seed)?;
    let samples: Vec<(f64, Vec<f64>)> = s_grid
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, sums.iter().map(|r| r[i]).collect()))
        .collect();
    mean_exponent_fit(&samples, master_seed)
}

/// Per replica, `Σ_x Γ²(s, {x})` at every `s` in the sorted `s_grid`.
pub fn gamma_square_samples(
    env: &Environment,
    s_grid: &[f64],
    replicas: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = FieldSeed::replica_master(master_seed, r as u64);
            let e = env.reseeded(seed);
            let snaps = simulate_snapshots(&e, seed, s_grid)?;
            Ok(snaps.iter().map(|s| s.occupation.sum_of_squares()).collect())
        })
        .collect()
}

/// Slope of `log E[(Ξ_n(t₂) - Ξ_n(t₁))²]` against `log(t₂ - t₁)`. Each entry of
/// `pairs` holds `(t₁, t₂, samples of (Ξ_n(t₁), Ξ_n(t₂)))`. Gaussian scenery
/// only.
pub fn increment_moment_check(
    pairs: &[(f64, f64, Vec<(f64, f64)>)],
    beta: f64,
    seed: u64,
) -> Result<ExponentFit> {
    if beta != 2.0 {
        return Err(invalid("beta", "increment moments are only defined for beta = 2"));
    }
    let samples: Vec<(f64, Vec<f64>)> = pairs
        .iter()
        .map(|(t1, t2, s)| (t2 - t1, s.iter().map(|(a, b)| (b - a).powi(2)).collect()))
        .collect();
    if samples.iter().all(|(_, s)| s.iter().all(|v| *v == 0.0)) {
        return Err(Error::DegenerateSample("all increments vanish".into()));
    }
    mean_exponent_fit(&samples, seed)
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub metric: String,
    pub target: Option<f64>,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub n: Option<u64>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub pass: Option<bool>,
}

pub const RESULTS_HEADER: &str = "metric,target,estimate,stderr,n,alpha,beta,pass";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.metric,
            opt(&self.target),
            self.estimate,
            opt(&self.stderr),
            opt(&self.n),
            self.alpha,
            opt(&self.beta),
            opt(&self.pass)
        )
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_power_law_has_exact_slope() {
        let samples: Vec<(f64, Vec<f64>)> = (0..5)
            .map(|k| {
                let t = 2f64.powi(k);
                (t, vec![t; 600])
            })
            .collect();
        let f = exponent_fit(&samples, 0.5, 1).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
        assert!(f.within(1.0, 0.0));
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let zeros: Vec<(f64, Vec<f64>)> = (1..=4).map(|k| (k as f64, vec![0.0; 10])).collect();
        assert!(matches!(
            exponent_fit(&zeros, 0.5, 1),
            Err(Error::DegenerateSample(_))
        ));
        let short: Vec<(f64, Vec<f64>)> = (1..=3).map(|k| (k as f64, vec![1.0; 10])).collect();
        assert!(exponent_fit(&short, 0.5, 1).is_err());
    }

    #[test]
    fn ks_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&a, &[10.0, 11.0]).unwrap(), 1.0);
        assert!((ks_statistic(&[1.0, 2.0], &[1.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ks_statistic(&[], &a).is_err());
        let d = ks_one_sample(&[0.5], |x| x).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chf_at_zero_and_symmetry() {
        let s = [-1.0, 1.0, -2.0, 2.0];
        let c = empirical_chf(&s, &[0.0, 0.7]).unwrap();
        assert_eq!(c[0].value, Complex64::new(1.0, 0.0));
        assert!(c[1].value.im.abs() < 1e-15);
        assert!(c[1].value.norm() <= 1.0);
    }

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[1.0, 2.0], 1.0), 2.0);
    }

    #[test]
    fn result_rows_render() {
        let row = ResultRow {
            metric: "eta".into(),
            target: Some(1.0 / 3.0),
            estimate: 0.3,
            stderr: None,
            n: Some(64),
            alpha: 0.5,
            beta: None,
            pass: Some(true),
        };
        let mut buf = Vec::new();
        write_results(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(RESULTS_HEADER));
        assert!(text.contains("eta,0.3333333333333333,0.3,,64,0.5,,true"));
    }

    #[test]
    fn functional_spec_validation() {
        assert!(FunctionalSpec::new(vec![1.0], vec![1.0, 2.0], 1.0).is_err());
        assert!(FunctionalSpec::new(vec![1.0], vec![-1.0], 1.0).is_err());
        assert!(FunctionalSpec::new(vec![1.0], vec![1.0], 2.5).is_err());
        let s = FunctionalSpec::new(vec![1.0, 2.0], vec![1.0, 0.5], 1.0).unwrap();
        assert_eq!(s.walk_times(2, 1.0), vec![2.0, 4.0]);
    }
}
