use crate::error::{invalid, Error, Result};
use crate::rand_fields::{
    sample_one_sided, site_open_uniform, standard_normal, FieldSeed, OneSidedAlpha, Stream,
};

use super::grid::{Interp, MonotoneGrid};

/// Key of increment `j` generated at refinement level `level`.
fn level_key(level: u32, j: usize) -> i64 {
    ((level as i64) << 40) | j as i64
}

fn gaussian_increment(seed: FieldSeed, level: u32, j: usize, dt: f64) -> f64 {
    let key = level_key(level, j);
    dt.sqrt() * standard_normal(site_open_uniform(seed, key, 0), site_open_uniform(seed, key, 1))
}

fn stable_increment(seed: FieldSeed, alpha: OneSidedAlpha, level: u32, j: usize, dx: f64) -> f64 {
    let key = level_key(level, j);
    let v = sample_one_sided(alpha, site_open_uniform(seed, key, 0), site_open_uniform(seed, key, 1))
        .expect("open uniforms are valid sampler input");
    dx.powf(1.0 / alpha.value()) * v
}

/// Brownian motion sampled at multiples of `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    dt: f64,
    values: Vec<f64>,
    master_seed: u64,
    level: u32,
}

impl BrownianGrid {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t_max(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    /// `B` at the grid point at or before `t`.
    pub fn left_value(&self, t: f64) -> Result<f64> {
        if t > self.t_max() * (1.0 + 1e-12) || t < 0.0 {
            return Err(Error::Truncation(format!("time {t} beyond t_max {}", self.t_max())));
        }
        let k = ((t / self.dt).floor() as usize).min(self.steps());
        Ok(self.values[k])
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Same path on `[0, 2 t_max]` with the same `dt` and twice the steps.
    pub fn extended(&self) -> Self {
        let k = self.steps();
        let seed = FieldSeed::new(self.master_seed, Stream::Brownian);
        let mut values = self.values.clone();
        values.reserve(k);
        for j in k + 1..=2 * k {
            let prev = values[j - 1];
            values.push(prev + gaussian_increment(seed, self.level, j, self.dt));
        }
        Self { values, ..self.clone() }
    }

    /// Same path on `[0, 2 t_max]` with the same number of steps: even grid
    /// points are kept and the extension uses fresh increments.
    pub fn doubled(&self) -> Self {
        let k = self.steps();
        let seed = FieldSeed::new(self.master_seed, Stream::Brownian);
        let level = self.level + 1;
        let dt = 2.0 * self.dt;
        let mut values: Vec<f64> = self.values.iter().step_by(2).copied().collect();
        values.truncate(k / 2 + 1);
        while values.len() <= k {
            let j = values.len();
            let prev = values[j - 1];
            values.push(prev + gaussian_increment(seed, level, j, dt));
        }
        Self {
            dt,
            values,
            master_seed: self.master_seed,
            level,
        }
    }
}

/// Gaussian random walk with `Var B(k dt) = k dt`; `B(0) = 0`.
pub fn build_brownian(t_max: f64, dt: f64, master_seed: u64) -> Result<BrownianGrid> {
    if !(dt > 0.0) || !(t_max >= dt) {
        return Err(invalid("dt", format!("need 0 < dt <= t_max, got dt={dt}, t_max={t_max}")));
    }
    let steps = (t_max / dt).round().max(1.0) as usize;
    let seed = FieldSeed::new(master_seed, Stream::Brownian);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    for j in 1..=steps {
        let prev = values[j - 1];
        values.push(prev + gaussian_increment(seed, 0, j, dt));
    }
    Ok(BrownianGrid {
        dt,
        values,
        master_seed,
        level: 0,
    })
}

/// Occupation-density histogram of a [`BrownianGrid`]: the step
/// `[t_k, t_{k+1})` is charged to the bin of width `h` containing `B(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    dt: f64,
    h: f64,
    first_bin: i64,
    n_bins: usize,
    /// Bin of each step, relative to `first_bin`.
    step_bins: Vec<u32>,
}

impl LocalTimeField {
    pub fn new(b: &BrownianGrid, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("h", "bin width must be positive"));
        }
        let mut raw: Vec<i64> = b.values.iter().map(|&v| (v / h).floor() as i64).collect();
        // the end point only widens the window
        let first_bin = raw.iter().copied().min().unwrap_or(0);
        let last_bin = raw.iter().copied().max().unwrap_or(0);
        raw.pop();
        Ok(Self {
            dt: b.dt,
            h,
            first_bin,
            n_bins: (last_bin - first_bin + 1) as usize,
            step_bins: raw.iter().map(|&r| (r - first_bin) as u32).collect(),
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.h
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn t_max(&self) -> f64 {
        self.dt * self.step_bins.len() as f64
    }

    pub fn step_bins(&self) -> &[u32] {
        &self.step_bins
    }

    /// Lower edge of relative bin `b`.
    pub fn bin_lower(&self, b: usize) -> f64 {
        (self.first_bin + b as i64) as f64 * self.h
    }

    /// Lowest and highest level covered by a visited bin.
    pub fn covered(&self) -> (f64, f64) {
        (self.bin_lower(0), self.bin_lower(self.n_bins))
    }

    /// Relative bin containing level `y`, if it lies in the window.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        let b = (y / self.h).floor() as i64 - self.first_bin;
        if b >= 0 && (b as usize) < self.n_bins {
            Some(b as usize)
        } else {
            None
        }
    }

    fn split(&self, t: f64) -> Result<(usize, f64)> {
        if t < 0.0 || t > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::Truncation(format!("time {t} beyond t_max {}", self.t_max())));
        }
        let full = ((t / self.dt).floor() as usize).min(self.step_bins.len());
        let partial = if full < self.step_bins.len() {
            (t - full as f64 * self.dt).max(0.0)
        } else {
            0.0
        };
        Ok((full, partial))
    }

    /// `L(t, ·)` on every bin.
    pub fn profile(&self, t: f64) -> Result<Vec<f64>> {
        let (full, partial) = self.split(t)?;
        let mut occ = vec![0.0; self.n_bins];
        for &b in &self.step_bins[..full] {
            occ[b as usize] += self.dt;
        }
        if partial > 0.0 {
            occ[self.step_bins[full] as usize] += partial;
        }
        Ok(occ.into_iter().map(|o| o / self.h).collect())
    }

    /// `L(t, x)`.
    pub fn at(&self, t: f64, x: f64) -> Result<f64> {
        let (full, partial) = self.split(t)?;
        let Some(target) = self.bin_of(x) else {
            return Ok(0.0);
        };
        let target = target as u32;
        let mut occ = self.step_bins[..full].iter().filter(|&&b| b == target).count() as f64 * self.dt;
        if partial > 0.0 && self.step_bins[full] == target {
            occ += partial;
        }
        Ok(occ / self.h)
    }
}

/// Default histogram bin width `2√dt`.
pub fn default_bin_width(dt: f64) -> f64 {
    2.0 * dt.sqrt()
}

/// `L(t, x)` with the default bin width.
pub fn local_time(b: &BrownianGrid, t: f64, x: f64) -> Result<f64> {
    LocalTimeField::new(b, default_bin_width(b.dt))?.at(t, x)
}

/// Two-sided one-sided-stable subordinator on `[-x_max, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SubordinatorPath {
    pub(crate) alpha: OneSidedAlpha,
    pub(crate) dx: f64,
    /// Points per side.
    pub(crate) half: usize,
    /// `values[i + half] = W(i dx)`.
    pub(crate) values: Vec<f64>,
    master_seed: u64,
    level: u32,
}

impl SubordinatorPath {
    pub(crate) fn new(alpha: OneSidedAlpha, half: usize, dx: f64, master_seed: u64) -> Self {
        let mut path = Self {
            alpha,
            dx,
            half,
            values: vec![0.0; 2 * half + 1],
            master_seed,
            level: 0,
        };
        path.fill_from(1);
        path
    }

    /// Generate `W(±j dx)` for `j ≥ from` at the current level.
    fn fill_from(&mut self, from: usize) {
        let pos = FieldSeed::new(self.master_seed, Stream::SubordinatorPos);
        let neg = FieldSeed::new(self.master_seed, Stream::SubordinatorNeg);
        let h = self.half;
        for j in from..=h {
            self.values[h + j] =
                self.values[h + j - 1] + stable_increment(pos, self.alpha, self.level, j, self.dx);
            self.values[h - j] =
                self.values[h - j + 1] - stable_increment(neg, self.alpha, self.level, j, self.dx);
        }
    }

    pub(crate) fn x_max(&self) -> f64 {
        self.dx * self.half as f64
    }

    pub(crate) fn range(&self) -> (f64, f64) {
        (self.values[0], self.values[2 * self.half])
    }

    /// Same path on twice the window with the same `dx`.
    pub(crate) fn extended(&self) -> Self {
        let h = self.half;
        let mut values = vec![0.0; 4 * h + 1];
        values[h..3 * h + 1].copy_from_slice(&self.values);
        let mut next = Self {
            half: 2 * h,
            values,
            ..self.clone()
        };
        next.fill_from(h + 1);
        next
    }

    /// Same path on twice the window with the same point count.
    pub(crate) fn doubled(&self) -> Self {
        let h = self.half;
        let mut values = vec![0.0; 2 * h + 1];
        for j in 0..=h / 2 {
            values[h + j] = self.values[h + 2 * j];
            values[h - j] = self.values[h - 2 * j];
        }
        let mut next = Self {
            alpha: self.alpha,
            dx: 2.0 * self.dx,
            half: h,
            values,
            master_seed: self.master_seed,
            level: self.level + 1,
        };
        next.fill_from(h / 2 + 1);
        next
    }

    pub(crate) fn grid(&self) -> MonotoneGrid {
        MonotoneGrid::uniform(-self.x_max(), self.dx, self.values.clone(), Interp::Linear)
            .expect("subordinator path is increasing")
    }
}

/// `W` on the uniform grid of `[-x_max, x_max]`, increments `dx^{1/α} ϑ_α`,
/// `W(0) = 0`, linear between grid points.
pub fn build_subordinator(
    alpha: OneSidedAlpha,
    x_max: f64,
    dx: f64,
    master_seed: u64,
) -> Result<MonotoneGrid> {
    if !(dx > 0.0) || !(x_max >= dx) {
        return Err(invalid("dx", format!("need 0 < dx <= x_max, got dx={dx}, x_max={x_max}")));
    }
    let half = (x_max / dx).round() as usize;
    Ok(SubordinatorPath::new(alpha, half, dx, master_seed).grid())
}

/// `V⋆(t) = ∫ L(t, W(x)) dx` on the Brownian time grid, linear between grid
/// times, together with the bin measures `m_b = dx·#{i : W(x_i) ∈ bin b}`.
///
/// Fails if `W` does not cover every visited bin.
pub fn build_time_change(
    b: &BrownianGrid,
    local: &LocalTimeField,
    w: &MonotoneGrid,
) -> Result<(MonotoneGrid, Vec<f64>)> {
    let (lo, hi) = local.covered();
    let (w_lo, w_hi) = w.range();
    if w_lo > lo || w_hi < hi {
        return Err(Error::Truncation(format!(
            "subordinator range [{w_lo}, {w_hi}] does not cover local-time support [{lo}, {hi}]"
        )));
    }
    let xs = w.abscissae();
    let mut measure = vec![0.0; local.n_bins()];
    for (i, &wv) in w.ordinates().iter().enumerate() {
        if let Some(bin) = local.bin_of(wv) {
            let dx = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { xs[i] - xs[i - 1] };
            measure[bin] += dx;
        }
    }
    let dt = b.dt();
    let h = local.bin_width();
    let mut v = Vec::with_capacity(b.steps() + 1);
    v.push(0.0);
    let mut acc = 0.0;
    for &bin in local.step_bins() {
        acc += dt * measure[bin as usize] / h;
        v.push(acc);
    }
    let vstar = MonotoneGrid::uniform(0.0, dt, v, Interp::Linear)?;
    Ok((vstar, measure))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_starts_at_zero_and_doubles_consistently() {
        let b = build_brownian(1.0, 1.0 / 64.0, 3).unwrap();
        assert_eq!(b.values()[0], 0.0);
        assert_eq!(b.steps(), 64);
        let d = b.doubled();
        assert_eq!(d.steps(), 64);
        assert!((d.t_max() - 2.0).abs() < 1e-12);
        for j in 0..=32 {
            assert_eq!(d.values()[j], b.values()[2 * j]);
        }
        let e = b.extended();
        assert_eq!(e.steps(), 128);
        assert_eq!(&e.values()[..65], b.values());
        assert!(build_brownian(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn local_time_mass_is_elapsed_time() {
        let b = build_brownian(2.0, 1e-3, 5).unwrap();
        let lt = LocalTimeField::new(&b, default_bin_width(b.dt())).unwrap();
        for t in [0.0, 0.3337, 1.0, 2.0] {
            let mass: f64 = lt.profile(t).unwrap().iter().sum::<f64>() * lt.bin_width();
            assert!((mass - t).abs() < 1e-12, "{t}: {mass}");
        }
        assert_eq!(lt.at(1.0, 1e6).unwrap(), 0.0);
        let p = lt.profile(1.5).unwrap();
        let x = b.values()[100];
        let bin = lt.bin_of(x).unwrap();
        assert!((lt.at(1.5, x).unwrap() - p[bin]).abs() < 1e-12);
        assert!(lt.profile(2.1).is_err());
    }

    #[test]
    fn subordinator_is_increasing_through_origin() {
        let a = OneSidedAlpha::new(0.5).unwrap();
        let w = build_subordinator(a, 2.0, 1.0 / 128.0, 1).unwrap();
        assert_eq!(w.value(0.0).unwrap(), 0.0);
        assert!(w.ordinates().windows(2).all(|p| p[1] > p[0]));
        assert_eq!(w.pseudo_inverse(0.0).unwrap(), 0.0);

        let s = SubordinatorPath::new(a, 64, 1.0 / 32.0, 9);
        let d = s.doubled();
        for j in 0..=32 {
            assert_eq!(d.values[64 + j], s.values[64 + 2 * j]);
            assert_eq!(d.values[64 - j], s.values[64 - 2 * j]);
        }
        assert!(d.values.windows(2).all(|p| p[1] > p[0]));
        let e = s.extended();
        assert_eq!(e.half, 128);
        assert_eq!(&e.values[64..193], &s.values[..]);
        assert!(e.values.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn identity_subordinator_gives_identity_time_change() {
        let b = build_brownian(1.0, 1e-4, 2).unwrap();
        let h = default_bin_width(b.dt());
        let lt = LocalTimeField::new(&b, h).unwrap();
        let dx = h / 16.0;
        let half = 8 * 16 * 100;
        let xs: Vec<f64> = (0..=2 * half).map(|i| (i as f64 - half as f64) * dx).collect();
        let w = MonotoneGrid::uniform(-(half as f64) * dx, dx, xs, Interp::Linear).unwrap();
        let (v, _) = build_time_change(&b, &lt, &w).unwrap();
        assert_eq!(v.value(0.0).unwrap(), 0.0);
        for t in [0.1, 0.5, 1.0] {
            // bin edges can gain or lose one grid point to rounding
            assert!((v.value(t).unwrap() - t).abs() < 0.01 * t, "{t}: {}", v.value(t).unwrap());
            let s = v.pseudo_inverse(0.9 * t).unwrap();
            assert!((v.value(s).unwrap() - 0.9 * t).abs() < 1e-12);
        }
        let narrow = MonotoneGrid::uniform(-0.001, 0.001, vec![-0.001, 0.0, 0.001], Interp::Linear)
            .unwrap();
        assert!(matches!(
            build_time_change(&b, &lt, &narrow),
            Err(Error::Truncation(_))
        ));
    }
}
