//! Closed-form identities of the continuous star/chain/tree analysis against
//! recursion unrolling and numerical minimization.

use orgscale::continuous::{
    continuous_exponent, continuous_mixing_depth, continuous_optimal_x, star_mse, tree_floor,
    tree_mse, ContinuousAllocation, ContinuousEnv, ContinuousScaling,
};
use orgscale::maps::{CorrelationCoefficient, FanIn};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_env(rng: &mut StdRng) -> ContinuousEnv {
    ContinuousEnv::new(
        rng.random_range(0.01..2.0),
        rng.random_range(0.0..0.5),
        CorrelationCoefficient::new(rng.random_range(0.0..0.95)).unwrap(),
        FanIn::new(3 + 2 * rng.random_range(0..10u64)).unwrap(),
    )
    .unwrap()
}

/// Golden-section minimizer over [lo, hi] for a unimodal objective.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn closed_form_matches_recursion_unrolling() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..50 {
        let env = random_env(&mut rng);
        let a = env.contraction();
        let inject = env.sigma_c2 / env.b.get() as f64;
        let mut v = env.v0;
        for depth in 0..=200u32 {
            let closed = tree_mse(&env, depth);
            assert!(
                (closed - v).abs() < 1e-12 * v.max(1.0),
                "depth {depth}: {closed} vs {v}"
            );
            v = a * v + inject;
        }
    }
}

#[test]
fn floor_identity_exact() {
    let mut rng = StdRng::seed_from_u64(22);
    for _ in 0..50 {
        let env = random_env(&mut rng);
        let floor = tree_floor(&env);
        let a = env.contraction();
        for depth in [0u32, 1, 5, 20, 80] {
            let lhs = tree_mse(&env, depth) - floor;
            let rhs = a.powi(depth as i32) * (env.v0 - floor);
            assert!((lhs - rhs).abs() < 1e-12 * (lhs.abs().max(1.0)));
        }
    }
}

#[test]
fn star_floor_behaviour() {
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..50 {
        let env = random_env(&mut rng);
        let floor = env.rho.get() * env.v0;
        for n in [1u64, 2, 10, 1000] {
            assert!(star_mse(&env, n).unwrap() >= floor - 1e-15);
        }
        let large = star_mse(&env, 1_000_000).unwrap();
        assert!(large - floor <= 2.0 * (env.v0 + env.sigma_c2) / 1e6);
    }
}

#[test]
fn deeper_is_worse_below_floor() {
    let env = ContinuousEnv::new(
        0.001,
        0.05,
        CorrelationCoefficient::new(0.3).unwrap(),
        FanIn::new(5).unwrap(),
    )
    .unwrap();
    assert!(env.v0 < tree_floor(&env));
    let mut prev = tree_mse(&env, 0);
    for depth in 1..60 {
        let v = tree_mse(&env, depth);
        assert!(v >= prev - 1e-15);
        prev = v;
    }
}

#[test]
fn optimal_x_matches_golden_section() {
    let mut rng = StdRng::seed_from_u64(24);
    let mut checked = 0;
    while checked < 50 {
        let beta = rng.random_range(0.05..0.9);
        let t = rng.random_range(0.05..1.0);
        if t <= beta + 0.02 {
            continue;
        }
        let c0 = rng.random_range(1.0..200.0);
        let scaling = ContinuousScaling::new(1.0, beta).unwrap();
        let closed = match continuous_optimal_x(&scaling, t, c0).unwrap() {
            ContinuousAllocation::Interior(x) => x,
            _ => unreachable!(),
        };
        let objective = |x: f64| x.powf(-beta) * (x + c0).powf(t);
        let numeric = golden_min(objective, 1e-6 * c0, 1e6 * c0);
        assert!(
            (closed - numeric).abs() / closed < 1e-6,
            "beta={beta}, t={t}, c0={c0}: {closed} vs {numeric}"
        );
        checked += 1;
    }
}

#[test]
fn mixing_depth_is_minimal() {
    let mut rng = StdRng::seed_from_u64(25);
    let mut checked = 0;
    while checked < 50 {
        let env = random_env(&mut rng);
        let floor = tree_floor(&env);
        if floor <= 0.0 || env.v0 <= floor * 1.01 {
            continue;
        }
        let eps = rng.random_range(0.01..1.0);
        let depth = continuous_mixing_depth(&env, eps).unwrap();
        let bound = (1.0 + eps) * floor;
        assert!(tree_mse(&env, depth) <= bound * (1.0 + 1e-12));
        if depth >= 1 {
            assert!(tree_mse(&env, depth - 1) > bound * (1.0 - 1e-12));
        }
        checked += 1;
    }
}

#[test]
fn exponent_range() {
    let mut rng = StdRng::seed_from_u64(26);
    for _ in 0..100 {
        let b = FanIn::new(3 + 2 * rng.random_range(0..20u64)).unwrap();
        let rho = CorrelationCoefficient::new(rng.random_range(0.0..0.999)).unwrap();
        let t = continuous_exponent(b, rho);
        assert!((0.0..=1.0).contains(&t));
    }
}
