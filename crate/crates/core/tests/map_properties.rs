//! Structural properties of the majority maps against independent oracles.

use orgscale::dynamics::RecursionSpec;
use orgscale::maps::{
    alpha_rho, majority_bias, majority_derivative, majority_derivative_at_zero,
    organization_exponent, BiasValue, ChannelReliability, CorrelationCoefficient, FanIn,
};
use proptest::prelude::*;

fn fan(b: u64) -> FanIn {
    FanIn::new(b).unwrap()
}
fn bias(u: f64) -> BiasValue {
    BiasValue::new(u).unwrap()
}

/// Exhaustive enumeration over all 2^b i.i.d. sign vectors, weighted by
/// (1 +/- u)/2 per vote. Independent of the incomplete-beta path.
fn brute_force_majority(b: u32, u: f64) -> f64 {
    let p_plus = (1.0 + u) / 2.0;
    let mut expectation = 0.0;
    for votes in 0u32..(1 << b) {
        let plus = votes.count_ones();
        let weight = p_plus.powi(plus as i32) * (1.0 - p_plus).powi((b - plus) as i32);
        let sign = if 2 * plus > b { 1.0 } else { -1.0 };
        expectation += weight * sign;
    }
    expectation
}

#[test]
fn brute_force_equivalence() {
    for b in [3u64, 5, 7] {
        for i in 0..=100 {
            let u = -1.0 + 2.0 * i as f64 / 100.0;
            let exact = brute_force_majority(b as u32, u);
            let got = majority_bias(fan(b), bias(u)).get();
            assert!(
                (got - exact).abs() < 1e-12,
                "b={b}, u={u}: {got} vs {exact}"
            );
        }
    }
}

#[test]
fn monotone_on_grid() {
    for b in (3u64..=21).step_by(2) {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..1000 {
            let u = -1.0 + 2.0 * i as f64 / 999.0;
            let v = majority_bias(fan(b), bias(u)).get();
            assert!(v >= prev - 1e-14, "b={b}, u={u}");
            prev = v;
        }
    }
}

#[test]
fn concave_on_unit_interval() {
    for b in (3u64..=21).step_by(2) {
        let n = 500;
        let h = 1.0 / n as f64;
        for i in 1..n {
            let u = i as f64 * h;
            let second = majority_bias(fan(b), bias(u + h)).get()
                - 2.0 * majority_bias(fan(b), bias(u)).get()
                + majority_bias(fan(b), bias(u - h)).get();
            assert!(second <= 1e-10, "b={b}, u={u}: {second}");
        }
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let h = 1e-6;
    for b in (3u64..=21).step_by(2) {
        for i in 0..=198 {
            let u = -0.99 + 1.98 * i as f64 / 198.0;
            let fd = (majority_bias(fan(b), bias(u + h)).get()
                - majority_bias(fan(b), bias(u - h)).get())
                / (2.0 * h);
            let closed = majority_derivative(fan(b), bias(u));
            assert!((closed - fd).abs() <= 1e-5, "b={b}, u={u}: {closed} vs {fd}");
        }
    }
}

#[test]
fn sqrt_b_bound_sample() {
    let mut b = 3u64;
    while b <= 10_001 {
        let d = majority_derivative_at_zero(fan(b));
        assert!(d < (b as f64).sqrt(), "b={b}: {d}");
        b += 1000;
    }
}

proptest! {
    #[test]
    fn oddness(b_idx in 0u64..10, u in -1.0f64..=1.0) {
        let b = fan(3 + 2 * b_idx);
        let pos = majority_bias(b, bias(u)).get();
        let neg = majority_bias(b, bias(-u)).get();
        prop_assert!((pos + neg).abs() < 1e-12);
    }

    #[test]
    fn tangent_dominates_map(
        b_idx in 0u64..10,
        rho in 0.0f64..0.999,
        gamma in 0.05f64..=1.0,
        u in 0.0f64..=1.0,
    ) {
        let b = fan(3 + 2 * b_idx);
        let rho = CorrelationCoefficient::new(rho).unwrap();
        let gamma = ChannelReliability::new(gamma).unwrap();
        let spec = RecursionSpec::new(b, rho, gamma, bias(0.0)).unwrap();
        let alpha = alpha_rho(b, rho, gamma);
        prop_assert!(spec.map(u) <= alpha * u + 1e-12);
    }

    #[test]
    fn exponent_below_half(
        b_idx in 0u64..30,
        rho in 0.0f64..0.999,
        gamma in 0.05f64..=1.0,
    ) {
        let b = fan(3 + 2 * b_idx);
        let rho = CorrelationCoefficient::new(rho).unwrap();
        let gamma = ChannelReliability::new(gamma).unwrap();
        prop_assert!(organization_exponent(b, rho, gamma) <= 0.5);
    }

    #[test]
    fn ratio_nonincreasing(
        b_idx in 0u64..10,
        rho in 0.0f64..0.999,
        gamma in 0.05f64..=1.0,
    ) {
        let b = fan(3 + 2 * b_idx);
        let rho = CorrelationCoefficient::new(rho).unwrap();
        let gamma = ChannelReliability::new(gamma).unwrap();
        let spec = RecursionSpec::new(b, rho, gamma, bias(0.0)).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=200 {
            let u = i as f64 / 200.0;
            let r = spec.map(u) / u;
            prop_assert!(r <= prev + 1e-12);
            prev = r;
        }
    }
}
