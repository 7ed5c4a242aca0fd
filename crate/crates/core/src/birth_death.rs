//! Exact event-driven simulation of the birth–death walk.
//!
//! At site `j` the walk waits an exponential time with rate `λ_j + λ_{j-1}`,
//! then steps to `j+1` with probability `λ_j / (λ_j + λ_{j-1})` and to `j-1`
//! otherwise. Randomness for event `k` comes from the `Walk` stream at index
//! `k` (draw 0: holding time, draw 1: direction).

use std::io::Write;

use crate::environment::Environment;
use crate::error::{invalid, Error, Result};
use crate::rand_fields::{site_open_uniform, FieldSeed, Stream};
use crate::site_array::SiteArray;

/// Time-scale exponent `k_n = n^{(1+α)/α}`.
pub fn time_scale(n: u64, alpha: f64) -> f64 {
    (n as f64).powf((1.0 + alpha) / alpha)
}

/// Record of all jumps of one path up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    /// `jump_times[k]` is the time of the `k`-th jump.
    jump_times: Vec<f64>,
    /// `sites[0] = 0`; `sites[k+1]` is the site entered at `jump_times[k]`.
    sites: Vec<i64>,
    horizon: f64,
}

impl WalkPath {
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// `X(t)`, cadlag.
    pub fn position(&self, t: f64) -> Result<i64> {
        if t > self.horizon || t < 0.0 {
            return Err(Error::BeyondHorizon {
                requested: t,
                horizon: self.horizon,
            });
        }
        let jumps = self.jump_times.partition_point(|&s| s <= t);
        Ok(self.sites[jumps])
    }

    /// Occupation measure of `[0, t]` replayed from the jump record.
    pub fn occupation_until(&self, t: f64) -> Result<OccupationMap> {
        if t > self.horizon || t < 0.0 {
            return Err(Error::BeyondHorizon {
                requested: t,
                horizon: self.horizon,
            });
        }
        let mut occ = OccupationMap::empty(t);
        let mut from = 0.0;
        for (k, &jt) in self.jump_times.iter().enumerate() {
            if jt > t {
                break;
            }
            occ.add(self.sites[k], jt - from);
            from = jt;
        }
        let jumps = self.jump_times.partition_point(|&s| s <= t);
        occ.add(self.sites[jumps], t - from);
        Ok(occ)
    }

    /// CSV dump with header `jump_time,site`; the first row is the start
    /// `(0, 0)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "jump_time,site")?;
        writeln!(out, "0,{}", self.sites[0])?;
        for (t, s) in self.jump_times.iter().zip(&self.sites[1..]) {
            writeln!(out, "{t},{s}")?;
        }
        Ok(())
    }
}

/// Exact per-site occupation durations `Γ(horizon, {x})`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMap {
    durations: SiteArray<f64>,
    horizon: f64,
}

impl OccupationMap {
    fn empty(horizon: f64) -> Self {
        Self {
            durations: SiteArray::new(),
            horizon,
        }
    }

    fn add(&mut self, site: i64, dt: f64) {
        if dt > 0.0 {
            *self.durations.get_mut(site) += dt;
        } else {
            self.durations.reserve_site(site);
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `Γ(horizon, {site})`; zero for unvisited sites.
    pub fn at(&self, site: i64) -> f64 {
        self.durations.value(site)
    }

    pub fn total(&self) -> f64 {
        self.durations.values().iter().sum()
    }

    /// Visited window `[first, end)`.
    pub fn window(&self) -> (i64, i64) {
        (self.durations.first_site(), self.durations.end_site())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.durations.iter().map(|(s, v)| (s, *v))
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.durations.values().iter().map(|v| v * v).sum()
    }
}

/// `Γ(τ, {site})`; free-function form.
pub fn occupation_at(occ: &OccupationMap, site: i64) -> f64 {
    occ.at(site)
}

/// `X_n(t) = X(k_n t) / n`.
pub fn rescaled_position(path: &WalkPath, n: u64, alpha: f64, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let s = time_scale(n, alpha) * t;
    Ok(path.position(s)? as f64 / n as f64)
}

/// `Γ_n(τ, x/n) = n^{-(1+α)/α} Γ(k_n τ, {x})`. `occ` must be the snapshot taken
/// at `k_n τ`.
pub fn rescaled_occupation(
    occ: &OccupationMap,
    n: u64,
    alpha: f64,
    tau: f64,
    site: i64,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let k = time_scale(n, alpha);
    let s = k * tau;
    if (s - occ.horizon).abs() > 1e-9 * s.max(1.0) {
        if s > occ.horizon {
            return Err(Error::BeyondHorizon {
                requested: s,
                horizon: occ.horizon,
            });
        }
        return Err(Error::MissingSnapshot(s));
    }
    Ok(occ.at(site) / k)
}

/// Event engine shared by every simulation entry point.
struct Walker<'a> {
    env: &'a Environment,
    seed: FieldSeed,
    site: i64,
    time: f64,
    event: i64,
    rates: SiteArray<f64>,
}

impl<'a> Walker<'a> {
    fn new(env: &'a Environment, master_seed: u64) -> Self {
        Self {
            env,
            seed: FieldSeed::new(master_seed, Stream::Walk),
            site: 0,
            time: 0.0,
            event: 0,
            rates: SiteArray::new(),
        }
    }

    fn rate(&mut self, j: i64) -> Result<f64> {
        let cached = self.rates.get(j).copied().unwrap_or(0.0);
        if cached > 0.0 {
            return Ok(cached);
        }
        let r = self.env.rate(j);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveRate { site: j, rate: r });
        }
        *self.rates.get_mut(j) = r;
        Ok(r)
    }

    /// Time of the next jump and the site it leads to. Does not move the walker.
    fn propose(&mut self) -> Result<(f64, i64)> {
        let up = self.rate(self.site)?;
        let down = self.rate(self.site - 1)?;
        let total = up + down;
        let u_hold = site_open_uniform(self.seed, self.event, 0);
        let u_dir = site_open_uniform(self.seed, self.event, 1);
        let hold = -u_hold.ln() / total;
        let next = if u_dir * total < up {
            self.site + 1
        } else {
            self.site - 1
        };
        Ok((self.time + hold, next))
    }

    fn commit(&mut self, time: f64, site: i64) {
        self.time = time;
        self.site = site;
        self.event += 1;
    }

    /// Run until `horizon`, reporting each holding interval `(site, from, to)`
    /// (the last one truncated) and each jump `(time, new_site)`.
    fn run<H, J>(&mut self, horizon: f64, mut on_hold: H, mut on_jump: J) -> Result<()>
    where
        H: FnMut(i64, f64, f64),
        J: FnMut(f64, i64),
    {
        loop {
            let (t, next) = self.propose()?;
            if t > horizon {
                on_hold(self.site, self.time, horizon);
                return Ok(());
            }
            on_hold(self.site, self.time, t);
            on_jump(t, next);
            self.commit(t, next);
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(invalid("horizon", format!("{horizon} must be positive and finite")))
    }
}

/// Simulate one path on `[0, horizon]`.
pub fn simulate(
    env: &Environment,
    horizon: f64,
    master_seed: u64,
) -> Result<(WalkPath, OccupationMap)> {
    check_horizon(horizon)?;
    let mut jump_times = Vec::new();
    let mut sites = vec![0];
    let mut occ = OccupationMap::empty(horizon);
    Walker::new(env, master_seed).run(
        horizon,
        |site, from, to| occ.add(site, to - from),
        |t, s| {
            jump_times.push(t);
            sites.push(s);
        },
    )?;
    Ok((
        WalkPath {
            jump_times,
            sites,
            horizon,
        },
        occ,
    ))
}

/// `∫_0^horizon f(X(s)) ds` accumulated event by event, without building an
/// occupation map.
pub fn integrate_along<F: Fn(i64) -> f64>(
    env: &Environment,
    horizon: f64,
    master_seed: u64,
    f: F,
) -> Result<f64> {
    check_horizon(horizon)?;
    let mut acc = 0.0;
    Walker::new(env, master_seed).run(horizon, |site, from, to| acc += f(site) * (to - from), |_, _| {})?;
    Ok(acc)
}

/// State of the walk at one observation time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub position: i64,
    pub occupation: OccupationMap,
}

/// Occupation maps and positions at increasing `times`, streamed without
/// storing the path. Same randomness as [`simulate`] for the same seed.
pub fn simulate_snapshots(
    env: &Environment,
    master_seed: u64,
    times: &[f64],
) -> Result<Vec<Snapshot>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return Err(invalid("times", "must be non-negative and sorted"));
    }
    let horizon = *times.last().unwrap();
    let mut out = Vec::with_capacity(times.len());
    let mut occ = OccupationMap::empty(0.0);
    let mut next = 0usize;
    // zero-time snapshots
    while next < times.len() && times[next] == 0.0 {
        out.push(Snapshot {
            time: 0.0,
            position: 0,
            occupation: OccupationMap::empty(0.0),
        });
        next += 1;
    }
    if next == times.len() {
        return Ok(out);
    }
    Walker::new(env, master_seed).run(
        horizon,
        |site, from, to| {
            let mut start = from;
            while next < times.len() && times[next] <= to {
                let t = times[next];
                occ.add(site, t - start);
                start = t;
                let mut snap = occ.clone();
                snap.horizon = t;
                out.push(Snapshot {
                    time: t,
                    position: site,
                    occupation: snap,
                });
                next += 1;
            }
            occ.add(site, to - start);
        },
        |_, _| {},
    )?;
    Ok(out)
}
