use proptest::prelude::*;

use rwrs_core::birth_death::{
    integrate_along, rescaled_occupation, rescaled_position, simulate, simulate_snapshots, time_scale,
};
use rwrs_core::environment::Environment;
use rwrs_core::rand_fields::{FieldSeed, OneSidedAlpha};

fn pareto(seed: u64) -> Environment {
    Environment::pareto(OneSidedAlpha::new(0.5).unwrap(), seed)
}

#[test]
fn first_step_and_holding_time_follow_rates() {
    // λ_0 = 1, λ_{-1} = 1/3: up with probability 3/4, mean holding 3/4
    let env = Environment::from_inverse_rates(0.5, vec![(-1, 3.0)], 1.0).unwrap();
    let reps = 20_000u64;
    let (mut ups, mut hold) = (0u64, 0.0);
    for r in 0..reps {
        let (path, _) = simulate(&env, 50.0, FieldSeed::replica_master(5, r)).unwrap();
        ups += (path.sites()[1] == 1) as u64;
        hold += path.jump_times()[0];
    }
    let p = ups as f64 / reps as f64;
    let sd = (0.75 * 0.25 / reps as f64).sqrt();
    assert!((p - 0.75).abs() < 4.0 * sd, "up fraction {p}");
    let mean = hold / reps as f64;
    assert!((mean - 0.75).abs() < 4.0 * 0.75 / (reps as f64).sqrt(), "mean holding {mean}");
}

#[test]
fn up_jump_fraction_matches_rates_along_a_path() {
    let env = pareto(3);
    let (path, _) = simulate(&env, 2e5, 4).unwrap();
    let sites = path.sites();
    let site = sites[sites.len() / 2];
    let (mut visits, mut ups) = (0u64, 0u64);
    for w in sites.windows(2) {
        if w[0] == site {
            visits += 1;
            ups += (w[1] == site + 1) as u64;
        }
    }
    assert!(visits > 200, "only {visits} visits");
    let p = env.rate(site) / (env.rate(site) + env.rate(site - 1));
    let f = ups as f64 / visits as f64;
    let sd = (p * (1.0 - p) / visits as f64).sqrt();
    assert!((f - p).abs() < 4.0 * sd + 1.0 / visits as f64, "site {site}: {f} vs {p}");
}

#[test]
fn diffusive_walk_is_reproducible() {
    let env = Environment::constant(1.0).unwrap();
    let a = simulate(&env, 100.0, 9).unwrap();
    let b = simulate(&env, 100.0, 9).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0, simulate(&env, 100.0, 10).unwrap().0);
}

#[test]
fn snapshots_match_replayed_occupation() {
    let env = pareto(21);
    let times = [0.0, 3.0, 40.0, 40.0, 500.0];
    let snaps = simulate_snapshots(&env, 22, &times).unwrap();
    let (path, occ) = simulate(&env, 500.0, 22).unwrap();
    assert_eq!(snaps[4].occupation.window(), occ.window());
    for (s, &t) in snaps.iter().zip(&times) {
        assert_eq!(s.position, path.position(t).unwrap());
        let replay = path.occupation_until(t).unwrap();
        for (x, g) in replay.iter() {
            assert!((s.occupation.at(x) - g).abs() < 1e-9);
        }
    }
    assert!(simulate_snapshots(&env, 22, &[2.0, 1.0]).is_err());
}

#[test]
fn rescaling_conventions() {
    let env = pareto(30);
    let n = 8;
    let k = time_scale(n, 0.5);
    assert_eq!(k, 512.0);
    let snaps = simulate_snapshots(&env, 31, &[k * 0.5]).unwrap();
    let (path, _) = simulate(&env, k, 31).unwrap();
    let x = rescaled_position(&path, n, 0.5, 0.5).unwrap();
    assert_eq!(x * n as f64, snaps[0].position as f64);
    let g = rescaled_occupation(&snaps[0].occupation, n, 0.5, 0.5, 0).unwrap();
    assert_eq!(g, snaps[0].occupation.at(0) / k);
    assert!(rescaled_occupation(&snaps[0].occupation, n, 0.5, 0.25, 0).is_err());
    assert!(rescaled_position(&path, n, 0.5, 2.0).is_err());
}

#[test]
fn integration_conserves_time() {
    let env = pareto(40);
    let total = integrate_along(&env, 1234.5, 41, |_| 1.0).unwrap();
    assert!((total - 1234.5).abs() < 1e-9 * 1234.5);
    assert!(integrate_along(&env, -1.0, 41, |_| 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_are_valid(env_seed in any::<u64>(), walk_seed in any::<u64>(), horizon in 1.0f64..2000.0) {
        let env = pareto(env_seed);
        let (path, occ) = simulate(&env, horizon, walk_seed).unwrap();
        prop_assert_eq!(path.sites()[0], 0);
        prop_assert_eq!(path.sites().len(), path.jump_count() + 1);
        prop_assert!(path.sites().windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        prop_assert!(path.jump_times().windows(2).all(|w| w[1] > w[0]));
        prop_assert!(path.jump_times().iter().all(|t| *t > 0.0 && *t <= horizon));
        prop_assert!(occ.iter().all(|(_, g)| g >= 0.0));
        prop_assert!(((occ.total() - horizon) / horizon).abs() < 1e-9);
        let (lo, hi) = occ.window();
        let (min, max) = path.sites().iter().fold((0, 0), |(a, b), &s| (a.min(s), b.max(s)));
        prop_assert!(lo <= min && hi > max);
    }
}
