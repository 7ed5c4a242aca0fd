use std::fmt::Write as _;

use anyhow::{bail, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use rwrs_core::analysis::{
    count_profile, empirical_chf, empirical_joint_chf, exponent_fit, gamma_square_scaling,
    ks_one_sample, ks_statistic, power_functional, quantile, ChfEstimate, ExponentFit, ResultRow,
};
use rwrs_core::birth_death::{simulate, simulate_snapshots, time_scale};
use rwrs_core::environment::{env_attraction_diagnostic, Environment};
use rwrs_core::experiment::{derived_exponents, map_replicas, ExperimentConfig};
use rwrs_core::limit_process::{LimitBundle, LimitConfig, WALK_CLOCK};
use rwrs_core::rand_fields::{
    one_sided_half_cdf, one_sided_samples, stable_samples, OneSidedAlpha, StableParams,
};
use rwrs_core::scenery::{xi_rescaled, Scenery};
use rwrs_core::Error as CoreError;

use crate::Command;

/// Output of one subcommand.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    /// `(file name, contents)` written next to `results.csv`.
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub warnings: Vec<String>,
    pub details: Value,
}

const THETA_GRID: [f64; 8] = [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0];
const LAPLACE_POINTS: [f64; 3] = [0.5, 1.0, 2.0];
const OCCUPATION_PAIRS: usize = 5;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    alpha: OneSidedAlpha,
    params: StableParams,
    env: Environment,
    scenery: Scenery,
    limit: LimitConfig,
    report: Report,
}

pub(crate) fn dispatch(command: Command, cfg: &ExperimentConfig) -> Result<Report> {
    let alpha = cfg.one_sided();
    let params = cfg.stable_params();
    let mut ctx = Ctx {
        cfg,
        alpha,
        params,
        env: Environment::pareto(alpha, cfg.master_seed),
        scenery: Scenery::stable(params, cfg.master_seed),
        limit: cfg.grid.limit_config(),
        report: Report::default(),
    };
    match command {
        Command::Walk => walk(&mut ctx)?,
        Command::Limit => limit(&mut ctx)?,
        Command::Exponents => exponents(&mut ctx)?,
        Command::ChfCompare => chf_compare(&mut ctx)?,
        Command::Functional => functional(&mut ctx)?,
        Command::CountProfile => profile(&mut ctx)?,
        Command::Gamma2 => gamma2(&mut ctx)?,
        Command::DiagnoseEnv => diagnose_env(&mut ctx)?,
        Command::DiagnoseSampler => diagnose_sampler(&mut ctx)?,
    }
    Ok(ctx.report)
}

fn row(ctx: &Ctx, metric: impl Into<String>, estimate: f64) -> ResultRow {
    ResultRow {
        metric: metric.into(),
        target: None,
        estimate,
        stderr: None,
        n: None,
        alpha: ctx.cfg.alpha,
        beta: Some(ctx.cfg.beta),
        pass: None,
    }
}

impl Ctx<'_> {
    fn push(&mut self, r: ResultRow) {
        self.report.rows.push(r);
    }

    fn artifact(&mut self, name: impl Into<String>, body: Vec<u8>) {
        self.report.artifacts.push((name.into(), body));
    }

    /// Keeps successful replicas; truncated ones become warnings.
    fn usable<T>(&mut self, label: &str, results: Vec<rwrs_core::Result<T>>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(results.len());
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(v) => out.push(v),
                Err(e @ CoreError::Truncation(_)) => {
                    self.report.warnings.push(format!("{label} replica {r}: {e}"))
                }
                Err(e) => return Err(e.into()),
            }
        }
        if out.len() < 2 {
            bail!("{label}: fewer than two usable replicas");
        }
        Ok(out)
    }

    fn largest_n(&self) -> u64 {
        *self.cfg.n_values.last().expect("validated")
    }

    /// Per replica, `(X_n(t), Ξ_n(t))` for each `t` of `taus` and the largest
    /// relative conservation error.
    fn walk_ensemble(&mut self, n: u64, taus: &[f64]) -> Result<Vec<WalkObs>> {
        let a = self.cfg.alpha;
        let beta = self.cfg.beta;
        let k = time_scale(n, a);
        let times: Vec<f64> = taus.iter().map(|t| k * t).collect();
        let (env, sc) = (&self.env, &self.scenery);
        let res = map_replicas(self.cfg.replicas, self.cfg.master_seed, |_, s| {
            let snaps = simulate_snapshots(&env.reseeded(s), s, &times)?;
            let sc = sc.reseeded(s);
            let mut obs = WalkObs::default();
            for (snap, &tau) in snaps.iter().zip(taus) {
                obs.x.push(snap.position as f64 / n as f64);
                obs.xi.push(xi_rescaled(&snap.occupation, &sc, n, a, beta, tau)?);
                let err = (snap.occupation.total() - snap.time).abs() / snap.time;
                obs.conservation = obs.conservation.max(err);
            }
            Ok(obs)
        });
        self.usable("walk", res)
    }

    /// `f` applied to one bundle per replica, each reaching `tau_max`.
    fn limit_ensemble<T, F>(&mut self, tau_max: f64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&LimitBundle, u64) -> rwrs_core::Result<T> + Sync,
    {
        let (alpha, cfg) = (self.alpha, &self.limit);
        let res = map_replicas(self.cfg.replicas, self.cfg.master_seed, |_, s| {
            let b = LimitBundle::build(alpha, tau_max, s, cfg)?;
            f(&b, s)
        });
        self.usable("limit", res)
    }
}

#[derive(Debug, Default)]
struct WalkObs {
    x: Vec<f64>,
    xi: Vec<f64>,
    conservation: f64,
}

fn column<T>(obs: &[T], pick: impl Fn(&T) -> f64) -> Vec<f64> {
    obs.iter().map(pick).collect()
}

fn by_time<T>(taus: &[f64], obs: &[T], pick: impl Fn(&T, usize) -> f64) -> Vec<(f64, Vec<f64>)> {
    taus.iter()
        .enumerate()
        .map(|(i, &t)| (t, obs.iter().map(|o| pick(o, i)).collect()))
        .collect()
}

fn abs_median(sample: &[f64]) -> f64 {
    let a: Vec<f64> = sample.iter().map(|v| v.abs()).collect();
    quantile(&a, 0.5)
}

fn mean_se(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let m = sample.iter().sum::<f64>() / n;
    let v = sample.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn walk(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let mut samples = String::from("n,replica,t,X_n,Xi_n\n");
    for &n in &cfg.n_values {
        let obs = ctx.walk_ensemble(n, &cfg.t_grid)?;
        let worst = obs.iter().map(|o| o.conservation).fold(0.0, f64::max);
        ctx.push(ResultRow {
            target: Some(0.0),
            n: Some(n),
            pass: Some(worst <= 1e-9),
            ..row(ctx, "conservation_max_rel_error", worst)
        });
        for (i, &t) in cfg.t_grid.iter().enumerate() {
            let x = column(&obs, |o| o.x[i]);
            let xi = column(&obs, |o| o.xi[i]);
            ctx.push(ResultRow { n: Some(n), ..row(ctx, format!("median_abs_X_n(t={t})"), abs_median(&x)) });
            ctx.push(ResultRow { n: Some(n), ..row(ctx, format!("median_abs_Xi_n(t={t})"), abs_median(&xi)) });
        }
        for (r, o) in obs.iter().enumerate() {
            for (i, t) in cfg.t_grid.iter().enumerate() {
                writeln!(samples, "{n},{r},{t},{},{}", o.x[i], o.xi[i])?;
            }
        }
    }
    ctx.artifact("walk_samples.csv", samples.into_bytes());

    let n = ctx.largest_n();
    let seed = rwrs_core::experiment::replica_seed(cfg.master_seed, 0);
    let horizon = time_scale(n, cfg.alpha) * cfg.t_grid.last().expect("validated");
    let (path, _) = simulate(&ctx.env.reseeded(seed), horizon, seed)?;
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    ctx.artifact("path.csv", buf);
    let lo = *path.sites().iter().min().unwrap_or(&0);
    let hi = *path.sites().iter().max().unwrap_or(&0);
    let mut buf = Vec::new();
    ctx.scenery.reseeded(seed).write_csv(lo, hi, &mut buf)?;
    ctx.artifact("scenery.csv", buf);
    ctx.report.details = json!({ "path_replica": 0, "path_n": n, "path_horizon": horizon, "path_jumps": path.jump_count() });
    Ok(())
}

struct LimitObs {
    x: Vec<f64>,
    xi: Vec<f64>,
    roundtrip: f64,
    mass: f64,
    occupation: f64,
    doublings: u32,
}

fn limit(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let taus = cfg.t_grid.clone();
    let tau_max = *taus.last().expect("validated");
    let params = ctx.params;
    let obs = ctx.limit_ensemble(tau_max, |b, s| {
        let mut o = LimitObs {
            x: Vec::new(),
            xi: Vec::new(),
            roundtrip: 0.0,
            mass: 0.0,
            occupation: b.occupation_identity_error(tau_max, OCCUPATION_PAIRS, s)?,
            doublings: b.doublings(),
        };
        for &t in &taus {
            o.x.push(b.x_star(t)?);
            o.xi.push(b.xi_star_integral(&params, t)?);
            o.roundtrip = o.roundtrip.max(b.roundtrip_error(t)?);
            o.mass = o.mass.max((b.l_star_mass(t)? - t).abs());
        }
        Ok(o)
    })?;
    let max = |f: &dyn Fn(&LimitObs) -> f64| obs.iter().map(f).fold(0.0, f64::max);
    let (rt, mass, occ) = (max(&|o| o.roundtrip), max(&|o| o.mass), max(&|o| o.occupation));
    ctx.push(ResultRow { target: Some(0.0), pass: Some(rt <= 1e-9 * tau_max), ..row(ctx, "vstar_roundtrip_max_error", rt) });
    ctx.push(ResultRow { target: Some(0.0), pass: Some(mass <= 1e-9 * tau_max), ..row(ctx, "local_time_mass_max_error", mass) });
    ctx.push(ResultRow { target: Some(0.0), pass: Some(occ <= 0.05), ..row(ctx, "occupation_identity_max_rel_error", occ) });
    for (i, &t) in taus.iter().enumerate() {
        let x = column(&obs, |o| o.x[i]);
        let xi = column(&obs, |o| o.xi[i]);
        ctx.push(row(ctx, format!("median_abs_Xstar(tau={t})"), abs_median(&x)));
        ctx.push(row(ctx, format!("median_abs_Xistar(tau={t})"), abs_median(&xi)));
    }
    let mut samples = String::from("replica,tau,Xstar,Xistar\n");
    for (r, o) in obs.iter().enumerate() {
        for (i, t) in taus.iter().enumerate() {
            writeln!(samples, "{r},{t},{},{}", o.x[i], o.xi[i])?;
        }
    }
    ctx.artifact("limit_samples.csv", samples.into_bytes());

    let seed = rwrs_core::experiment::replica_seed(cfg.master_seed, 0);
    let b = LimitBundle::build(ctx.alpha, tau_max, seed, &ctx.limit)?;
    let mut buf = Vec::new();
    b.write_brownian_csv(&mut buf)?;
    ctx.artifact("brownian.csv", buf);
    let mut buf = Vec::new();
    b.write_subordinator_csv(&mut buf)?;
    ctx.artifact("subordinator.csv", buf);
    let mut buf = Vec::new();
    b.write_vstar_csv(&mut buf)?;
    ctx.artifact("vstar.csv", buf);
    ctx.report.details = json!({
        "bundle_replica": 0,
        "grid": b.grid_summary(),
        "max_doublings": obs.iter().map(|o| o.doublings).max(),
    });
    Ok(())
}

fn fit_row(ctx: &Ctx, metric: &str, fit: &ExponentFit, target: f64, tol: f64, n: Option<u64>) -> ResultRow {
    ResultRow {
        target: Some(target),
        stderr: Some(fit.stderr),
        n,
        pass: Some(fit.within(target, tol)),
        ..row(ctx, metric, fit.slope)
    }
}

fn agreement_row(ctx: &Ctx, metric: &str, a: &ExponentFit, b: &ExponentFit, n: u64) -> ResultRow {
    let se = a.stderr.hypot(b.stderr);
    let d = (a.slope - b.slope).abs();
    ResultRow {
        target: Some(0.0),
        stderr: Some(se),
        n: Some(n),
        pass: Some(d <= 3.0 * se),
        ..row(ctx, metric, d)
    }
}

fn exponents(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let d = derived_exponents(cfg);
    ctx.push(ResultRow { target: Some(d.eta), ..row(ctx, "eta_target", d.eta) });
    ctx.push(ResultRow { target: Some(d.mu), ..row(ctx, "mu_target", d.mu) });
    let n = ctx.largest_n();
    let taus = cfg.t_grid.clone();
    let q = cfg.quantile;
    let obs = ctx.walk_ensemble(n, &taus)?;
    let eta_walk = exponent_fit(&by_time(&taus, &obs, |o, i| o.x[i]), q, cfg.master_seed)?;
    let mu_walk = exponent_fit(&by_time(&taus, &obs, |o, i| o.xi[i]), q, cfg.master_seed)?;
    let params = ctx.params;
    let lim = ctx.limit_ensemble(*taus.last().expect("validated") * WALK_CLOCK, |b, _| {
        taus.iter()
            .map(|&t| Ok((b.walk_position(t)?, b.walk_xi(&params, t)?)))
            .collect::<rwrs_core::Result<Vec<_>>>()
    })?;
    let eta_lim = exponent_fit(&by_time(&taus, &lim, |o, i| o[i].0), q, cfg.master_seed)?;
    let mu_lim = exponent_fit(&by_time(&taus, &lim, |o, i| o[i].1), q, cfg.master_seed)?;
    let mu_tol = if cfg.beta == 2.0 { 0.1 } else { 0.12 };
    ctx.push(fit_row(ctx, "eta_walk", &eta_walk, d.eta, 0.08, Some(n)));
    ctx.push(fit_row(ctx, "mu_walk", &mu_walk, d.mu, mu_tol, Some(n)));
    ctx.push(fit_row(ctx, "eta_limit", &eta_lim, d.eta, 0.08, None));
    ctx.push(fit_row(ctx, "mu_limit", &mu_lim, d.mu, mu_tol, None));
    ctx.push(agreement_row(ctx, "eta_walk_minus_limit", &eta_walk, &eta_lim, n));
    ctx.push(agreement_row(ctx, "mu_walk_minus_limit", &mu_walk, &mu_lim, n));
    ctx.push(ResultRow { target: Some(d.kappa), ..row(ctx, "kappa", d.kappa) });
    ctx.push(ResultRow { target: Some(d.delta), ..row(ctx, "delta", d.delta) });
    ctx.report.details = json!({ "derived": d, "quantile": q, "t_grid": taus });
    Ok(())
}

fn chf_row(ctx: &Ctx, metric: String, a: &ChfEstimate, b: &ChfEstimate, floor: f64, n: u64) -> ResultRow {
    let d = (a.value - b.value).norm();
    let se = a.stderr.hypot(b.stderr);
    ResultRow {
        target: Some(0.0),
        stderr: Some(se),
        n: Some(n),
        pass: Some(d <= floor.max(3.0 * se)),
        ..row(ctx, metric, d)
    }
}

fn chf_compare(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let times = cfg.chf_times.clone();
    let n = ctx.largest_n();
    let pairs: Vec<[f64; 2]> = cfg
        .thetas
        .iter()
        .flat_map(|&a| cfg.thetas.iter().map(move |&b| [a, b]))
        .collect();
    let obs = ctx.walk_ensemble(n, &times)?;
    let walk_xi: Vec<Vec<f64>> = obs.iter().map(|o| o.xi.clone()).collect();
    let params = ctx.params;
    let beta = params.beta();
    let lim = ctx.limit_ensemble(times[1] * WALK_CLOCK, |b, _| {
        let xi = [b.walk_xi(&params, times[0])?, b.walk_xi(&params, times[1])?];
        let terms = pairs
            .iter()
            .map(|th| {
                let (i, j) = b.walk_power_integrals(th, &times, beta)?;
                Ok((-Complex64::new(params.a1() * i, params.a2() * j)).exp())
            })
            .collect::<rwrs_core::Result<Vec<_>>>()?;
        Ok((xi, terms))
    })?;
    let lim_xi: Vec<Vec<f64>> = lim.iter().map(|o| o.0.to_vec()).collect();
    for (p, th) in pairs.iter().enumerate() {
        let walk = empirical_joint_chf(&walk_xi, th)?;
        let terms: Vec<_> = lim.iter().map(|o| o.1[p]).collect();
        let formula = ChfEstimate::from_terms(&terms)?;
        let z = empirical_joint_chf(&lim_xi, th)?;
        let label = format!("({}|{})", th[0], th[1]);
        ctx.push(chf_row(ctx, format!("chf_walk_vs_limit{label}"), &walk, &formula, 0.05, n));
        ctx.push(chf_row(ctx, format!("chf_noise_vs_formula{label}"), &z, &formula, 0.0, n));
    }
    ctx.report.details = json!({ "times": times, "thetas": cfg.thetas, "walk_clock": WALK_CLOCK });
    Ok(())
}

fn functional(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let spec = cfg.functional_spec();
    let n = ctx.largest_n();
    let a = cfg.alpha;
    let times = spec.walk_times(n, a);
    let env = ctx.env.clone();
    let walk = map_replicas(cfg.replicas, cfg.master_seed, |_, s| {
        let snaps = simulate_snapshots(&env.reseeded(s), s, &times)?;
        let occ: Vec<_> = snaps.into_iter().map(|s| s.occupation).collect();
        power_functional(&occ, &spec, n, a)
    });
    let walk = ctx.usable("walk", walk)?;
    let tau_max = spec.taus().iter().cloned().fold(0.0, f64::max) * WALK_CLOCK;
    let lim = ctx.limit_ensemble(tau_max, |b, _| b.walk_power_integrals(spec.thetas(), spec.taus(), spec.beta()))?;
    let wu = column(&walk, |v| v.0);
    let lu = column(&lim, |v| v.0);
    let ks = ks_statistic(&wu, &lu)?;
    ctx.push(ResultRow { target: Some(0.0), n: Some(n), pass: Some(ks < 0.08), ..row(ctx, "power_functional_ks", ks) });
    let ks_signed = ks_statistic(&column(&walk, |v| v.1), &column(&lim, |v| v.1))?;
    ctx.push(ResultRow { target: Some(0.0), n: Some(n), ..row(ctx, "signed_power_functional_ks", ks_signed) });
    ctx.push(ResultRow { n: Some(n), ..row(ctx, "power_functional_median_walk", quantile(&wu, 0.5)) });
    ctx.push(row(ctx, "power_functional_median_limit", quantile(&lu, 0.5)));
    if spec.beta() == 1.0 && spec.thetas().len() == 1 {
        let exact = spec.thetas()[0].abs() * spec.taus()[0];
        let err = wu.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
        ctx.push(ResultRow {
            target: Some(0.0),
            n: Some(n),
            pass: Some(err <= 1e-9 * exact.max(1.0)),
            ..row(ctx, "beta1_identity_max_error", err)
        });
    }
    let mut samples = String::from("source,replica,unsigned,signed\n");
    for (r, v) in walk.iter().enumerate() {
        writeln!(samples, "walk,{r},{},{}", v.0, v.1)?;
    }
    for (r, v) in lim.iter().enumerate() {
        writeln!(samples, "limit,{r},{},{}", v.0, v.1)?;
    }
    ctx.artifact("functional_samples.csv", samples.into_bytes());
    ctx.report.details = json!({ "thetas": spec.thetas(), "taus": spec.taus(), "beta": spec.beta() });
    Ok(())
}

fn profile(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let spec = cfg.functional_spec();
    let n = ctx.largest_n();
    let a = cfg.alpha;
    let times = spec.walk_times(n, a);
    let c_grid = cfg.c_grid.clone();
    let env = ctx.env.clone();
    let walk = map_replicas(cfg.replicas, cfg.master_seed, |_, s| {
        let snaps = simulate_snapshots(&env.reseeded(s), s, &times)?;
        let occ: Vec<_> = snaps.into_iter().map(|s| s.occupation).collect();
        count_profile(&occ, n, a, &spec, &c_grid)
    });
    let walk = ctx.usable("walk", walk)?;
    let tau_max = spec.taus().iter().cloned().fold(0.0, f64::max) * WALK_CLOCK;
    let lim = ctx.limit_ensemble(tau_max, |b, _| b.walk_superlevel_measure(spec.thetas(), spec.taus(), &c_grid))?;
    let mut table = String::from("c,walk_mean,walk_se,limit_mean,limit_se\n");
    for (i, &c) in c_grid.iter().enumerate() {
        let (wm, ws) = mean_se(&column(&walk, |v| v[i]));
        let (lm, ls) = mean_se(&column(&lim, |v| v[i]));
        let se = ws.hypot(ls);
        ctx.push(ResultRow {
            target: Some(lm),
            stderr: Some(se),
            n: Some(n),
            pass: Some((wm - lm).abs() <= 0.05f64.max(3.0 * se)),
            ..row(ctx, format!("count_profile(c={c})"), wm)
        });
        writeln!(table, "{c},{wm},{ws},{lm},{ls}")?;
    }
    ctx.artifact("count_profile.csv", table.into_bytes());
    ctx.report.details = json!({ "c_grid": c_grid, "thetas": spec.thetas(), "taus": spec.taus() });
    Ok(())
}

fn gamma2(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let d = derived_exponents(cfg);
    let fit = gamma_square_scaling(&ctx.env, &cfg.s_grid, cfg.replicas, cfg.master_seed)?;
    ctx.push(ResultRow { beta: None, ..fit_row(ctx, "gamma_square_slope", &fit, d.gamma_square, 0.1, None) });
    let mut table = String::from("s,mean_sum_gamma_sq\n");
    for (s, v) in fit.t_grid.iter().zip(&fit.statistics) {
        writeln!(table, "{s},{v}")?;
    }
    ctx.artifact("gamma2.csv", table.into_bytes());
    ctx.report.details = json!({ "s_grid": cfg.s_grid, "r_squared": fit.r_squared });
    Ok(())
}

fn diagnose_env(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let r_n = env_attraction_diagnostic(&ctx.env, cfg.env_n, cfg.replicas, cfg.master_seed)?;
    let unit = one_sided_samples(ctx.alpha, cfg.replicas, cfg.master_seed);
    let ks = ks_statistic(&r_n, &unit)?;
    let crit = 1.36 * (2.0 / cfg.replicas as f64).sqrt();
    ctx.push(ResultRow {
        target: Some(0.0),
        stderr: Some(crit / 1.36),
        n: Some(cfg.env_n),
        beta: None,
        pass: Some(ks < crit.max(0.03)),
        ..row(ctx, "env_attraction_ks", ks)
    });
    let mut table = String::from("replica,R_n,unit\n");
    for (r, (x, y)) in r_n.iter().zip(&unit).enumerate() {
        writeln!(table, "{r},{x},{y}")?;
    }
    ctx.artifact("env_attraction.csv", table.into_bytes());
    ctx.report.details = json!({ "env_n": cfg.env_n, "laplace_constant": ctx.alpha.laplace_constant() });
    Ok(())
}

fn diagnose_sampler(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let count = cfg.replicas;
    let tol = 3.0 / (count as f64).sqrt();
    let ys = one_sided_samples(ctx.alpha, count, cfg.master_seed);
    if cfg.alpha == 0.5 {
        let ks = ks_one_sample(&ys, one_sided_half_cdf)?;
        let crit = 1.36 / (count as f64).sqrt();
        ctx.push(ResultRow { target: Some(0.0), beta: None, pass: Some(ks < crit), ..row(ctx, "one_sided_ks_closed_form", ks) });
    }
    for s in LAPLACE_POINTS {
        let emp = ys.iter().map(|y| (-s * y).exp()).sum::<f64>() / count as f64;
        let exact = ctx.alpha.laplace(s);
        ctx.push(ResultRow {
            target: Some(exact),
            beta: None,
            pass: Some((emp - exact).abs() < tol),
            ..row(ctx, format!("one_sided_laplace(s={s})"), emp)
        });
    }
    let xs = stable_samples(&ctx.params, count, cfg.master_seed);
    let chf = empirical_chf(&xs, &THETA_GRID)?;
    for (th, est) in THETA_GRID.iter().zip(&chf) {
        let d = (est.value - ctx.params.chf(*th)).norm();
        ctx.push(ResultRow {
            target: Some(0.0),
            stderr: Some(est.stderr),
            pass: Some(d < tol),
            ..row(ctx, format!("stable_chf_error(theta={th})"), d)
        });
    }
    let (sigma, skew) = ctx.params.scale_skew();
    ctx.report.details = json!({ "samples": count, "scale": sigma, "skew": skew });
    Ok(())
}
