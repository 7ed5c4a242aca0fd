use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use rwrs_core::analysis::{empirical_chf, ks_one_sample, ks_statistic};
use rwrs_core::rand_fields::{
    one_sided_half_cdf, one_sided_samples, sample_one_sided, sample_pareto_inverse_rate,
    sample_stable, site_open_uniform, site_uniform, stable_samples, FieldSeed, OneSidedAlpha,
    StableParams, Stream,
};

const THETAS: [f64; 8] = [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0];

fn alpha(a: f64) -> OneSidedAlpha {
    OneSidedAlpha::new(a).unwrap()
}

#[test]
fn site_uniforms_pass_chi_square() {
    let seed = FieldSeed::new(17, Stream::Walk);
    let bins = 50;
    let n = 200_000;
    let mut counts = vec![0u32; bins];
    for i in 0..n as i64 {
        counts[(site_uniform(seed, i, 0) * bins as f64) as usize] += 1;
    }
    let expect = n as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 49 degrees of freedom, 99.9% quantile
    assert!(chi2 < 85.4, "chi2 = {chi2}");
}

#[test]
fn streams_and_draws_are_distinct() {
    let a = FieldSeed::new(3, Stream::Scenery);
    let b = a.with_stream(Stream::Environment);
    assert_ne!(site_uniform(a, 5, 0), site_uniform(b, 5, 0));
    assert_ne!(site_uniform(a, 5, 0), site_uniform(a, 5, 1));
    assert_ne!(site_uniform(a, 5, 0), site_uniform(a, -5, 0));
    assert_ne!(FieldSeed::replica_master(1, 0), FieldSeed::replica_master(1, 1));
}

#[test]
fn half_stable_matches_levy_cdf() {
    let n = 100_000;
    let ys = one_sided_samples(alpha(0.5), n, 2);
    let ks = ks_one_sample(&ys, one_sided_half_cdf).unwrap();
    assert!(ks < 1.36 / (n as f64).sqrt(), "ks = {ks}");
}

#[test]
fn one_sided_laplace_transforms() {
    let n = 100_000;
    for a in [0.3, 0.5, 0.75] {
        let al = alpha(a);
        let ys = one_sided_samples(al, n, 4);
        for s in [0.25, 1.0, 4.0] {
            let emp = ys.iter().map(|y| (-s * y).exp()).sum::<f64>() / n as f64;
            let exact = (-statrs::function::gamma::gamma(1.0 - a) * s.powf(a)).exp();
            assert!((emp - exact).abs() < 3.0 / (n as f64).sqrt(), "alpha {a} s {s}: {emp} vs {exact}");
            assert_eq!(al.laplace(s), exact);
        }
    }
}

#[test]
fn one_sided_tail_is_unit() {
    // P(Y > t) ~ t^{-α} for the unit law
    let n = 400_000;
    let ys = one_sided_samples(alpha(0.5), n, 6);
    let t = 400.0;
    let frac = ys.iter().filter(|y| **y > t).count() as f64 / n as f64;
    let target = t.powf(-0.5);
    assert!((frac / target - 1.0).abs() < 0.1, "{frac} vs {target}");
}

#[test]
fn gaussian_scenery_has_variance_two_a1() {
    let n = 100_000;
    let p = StableParams::gaussian(1.0).unwrap();
    let xs = stable_samples(&p, n, 8);
    let normal = Normal::new(0.0, 2f64.sqrt()).unwrap();
    let ks = ks_one_sample(&xs, |x| normal.cdf(x)).unwrap();
    assert!(ks < 1.36 / (n as f64).sqrt(), "ks = {ks}");
}

#[test]
fn cauchy_scenery_matches_closed_form() {
    let n = 100_000;
    let p = StableParams::new(1.0, 2.0, 0.0).unwrap();
    let xs = stable_samples(&p, n, 9);
    let ks = ks_one_sample(&xs, |x| 0.5 + (x / 2.0).atan() / std::f64::consts::PI).unwrap();
    assert!(ks < 1.36 / (n as f64).sqrt(), "ks = {ks}");
}

#[test]
fn pareto_inverse_rates_have_exact_tail() {
    let seed = FieldSeed::new(10, Stream::Environment);
    let n = 100_000;
    let v: Vec<f64> = (0..n)
        .map(|i| sample_pareto_inverse_rate(alpha(0.5), site_open_uniform(seed, i, 0)).unwrap())
        .collect();
    let ks = ks_one_sample(&v, |x| if x < 1.0 { 0.0 } else { 1.0 - x.powf(-0.5) }).unwrap();
    assert!(ks < 1.36 / (n as f64).sqrt(), "ks = {ks}");
    assert!(v.iter().all(|x| *x >= 1.0));
    assert!(sample_pareto_inverse_rate(alpha(0.5), 0.0).is_err());
}

#[test]
fn chf_matches_on_theta_grid() {
    let n = 100_000;
    let tol = 3.0 / (n as f64).sqrt();
    for (k, (b, a1, a2)) in [(2.0, 1.0, 0.0), (1.5, 1.0, 0.8), (1.0, 0.5, 0.0), (0.7, 1.0, -1.5)]
        .into_iter()
        .enumerate()
    {
        let p = StableParams::new(b, a1, a2).unwrap();
        let xs = stable_samples(&p, n, 20 + k as u64);
        for (th, est) in THETAS.iter().zip(empirical_chf(&xs, &THETAS).unwrap()) {
            let d = (est.value - p.chf(*th)).norm();
            assert!(d < tol, "{p:?} theta {th}: {d}");
        }
    }
}

#[test]
fn stability_under_normalized_sums() {
    let n = 20_000;
    let m = 8usize;
    for (k, (b, a2)) in [(1.5, 0.6), (0.8, -1.0), (2.0, 0.0)].into_iter().enumerate() {
        let p = StableParams::new(b, 1.0, a2).unwrap();
        let raw = stable_samples(&p, n * m, 30 + k as u64);
        let sums: Vec<f64> = raw
            .chunks(m)
            .map(|c| (m as f64).powf(1.0 - 1.0 / b) * c.iter().sum::<f64>() / m as f64)
            .collect();
        let single = stable_samples(&p, n, 40 + k as u64);
        let ks = ks_statistic(&sums, &single).unwrap();
        assert!(ks < 2.0 * 1.36 / (n as f64).sqrt(), "beta {b}: ks = {ks}");
    }
}

#[test]
fn parameter_validation() {
    assert!(StableParams::new(2.5, 1.0, 0.0).is_err());
    assert!(StableParams::new(1.5, 0.0, 0.0).is_err());
    assert!(StableParams::new(2.0, 1.0, 0.1).is_err());
    assert!(StableParams::new(1.0, 1.0, 0.1).is_err());
    assert!(StableParams::new(1.5, 1.0, 1.01).is_err());
    assert!(StableParams::new(1.5, 1.0, -1.0).is_ok());
    assert!(OneSidedAlpha::new(1.0).is_err());
    assert!(OneSidedAlpha::new(0.0).is_err());
    let p = StableParams::gaussian(1.0).unwrap();
    assert!(sample_stable(&p, 0.0, 0.5).is_err());
    assert!(sample_one_sided(alpha(0.5), 0.5, 1.0).is_err());
}

proptest! {
    #[test]
    fn samplers_are_pure(u1 in 1e-9f64..1.0 - 1e-9, u2 in 1e-9f64..1.0 - 1e-9,
                         b in 0.3f64..2.0, skew in -1.0f64..1.0, a in 0.05f64..0.95) {
        let bound = (std::f64::consts::FRAC_PI_2 * b).tan().abs();
        let a2 = if (b - 1.0).abs() < 1e-6 { 0.0 } else { skew * bound };
        let p = StableParams::new(b, 1.0, a2).unwrap();
        let x = sample_stable(&p, u1, u2).unwrap();
        prop_assert_eq!(x.to_bits(), sample_stable(&p, u1, u2).unwrap().to_bits());
        let y = sample_one_sided(alpha(a), u1, u2).unwrap();
        prop_assert!(y > 0.0 || y == 0.0 && a < 0.2);
        prop_assert_eq!(y.to_bits(), sample_one_sided(alpha(a), u1, u2).unwrap().to_bits());
    }

    #[test]
    fn open_uniforms_stay_open(seed in any::<u64>(), index in any::<i64>(), draw in 0u32..8) {
        let u = site_open_uniform(FieldSeed::new(seed, Stream::Brownian), index, draw);
        prop_assert!(u > 0.0 && u < 1.0);
        let v = site_uniform(FieldSeed::new(seed, Stream::Brownian), index, draw);
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn chf_has_unit_modulus_bound(b in 0.3f64..2.0, th in -5.0f64..5.0) {
        let p = StableParams::new(b, 1.0, 0.0).unwrap();
        let z = p.chf(th);
        prop_assert!(z.norm() <= 1.0 + 1e-15);
        prop_assert!((z.re - (-th.abs().powf(b)).exp()).abs() < 1e-12);
    }
}
