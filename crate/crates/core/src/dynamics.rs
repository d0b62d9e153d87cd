//! Depth dynamics of the one-layer recursion mu_{t+1} = T(mu_t):
//! regime classification, fixed points, trajectories, mixing depth, the
//! small-signal band, and the clipped predictor.

use crate::error::{Error, Result};
use crate::maps::{
    alpha_rho, organization_exponent, recursion_map, BiasValue, ChannelReliability,
    CorrelationCoefficient, FanIn,
};
use serde::{Deserialize, Serialize};

/// Default trajectory-length cap.
pub const DEPTH_CAP: u32 = 10_000;
const MAX_BISECTIONS: u32 = 200;
/// Short-circuit threshold for stalled iteration.
const ITER_STALL: f64 = 1e-15;

/// One recursion instance: fan-in, correlation, channel, and leaf bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionSpec {
    pub b: FanIn,
    pub rho: CorrelationCoefficient,
    pub gamma: ChannelReliability,
    pub mu0: BiasValue,
}

impl RecursionSpec {
    pub fn new(
        b: FanIn,
        rho: CorrelationCoefficient,
        gamma: ChannelReliability,
        mu0: BiasValue,
    ) -> Result<Self> {
        if mu0.get() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "leaf bias must be nonnegative, got {}",
                mu0.get()
            )));
        }
        Ok(RecursionSpec { b, rho, gamma, mu0 })
    }

    /// One application of T(u) = f_{b,rho}(gamma u).
    pub fn map(&self, u: f64) -> f64 {
        recursion_map(self.b, self.rho, self.gamma, BiasValue::clamped(u)).get()
    }

    pub fn alpha(&self) -> f64 {
        alpha_rho(self.b, self.rho, self.gamma)
    }

    pub fn exponent(&self) -> f64 {
        organization_exponent(self.b, self.rho, self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Supercritical,
}

/// Outcome of the fixed-point analysis for one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub regime: Regime,
    pub mu_star: f64,
    pub bisections: u32,
    pub residual: f64,
}

/// Classifies the spec by alpha_rho and, when supercritical, locates the
/// unique positive fixed point of T by bisection on h(u) = T(u) - u.
///
/// Subcritical (alpha <= 1) returns mu_star = 0 with no solver call.
/// gamma = 1 returns mu_star = 1 exactly: T(1) = rho + (1-rho) f_b(1) = 1.
pub fn classify_and_solve(spec: &RecursionSpec, tol: f64) -> Result<FixedPointResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let alpha = spec.alpha();
    if alpha <= 1.0 {
        return Ok(FixedPointResult {
            regime: Regime::Subcritical,
            mu_star: 0.0,
            bisections: 0,
            residual: 0.0,
        });
    }
    if spec.gamma.get() == 1.0 {
        return Ok(FixedPointResult {
            regime: Regime::Supercritical,
            mu_star: 1.0,
            bisections: 0,
            residual: (spec.map(1.0) - 1.0).abs(),
        });
    }

    let h = |u: f64| spec.map(u) - u;

    // h(small) > 0 since T'(0) = alpha > 1; shrink the left endpoint until
    // that sign is realized in floating point.
    let mut lo = {
        let mut cand = if spec.mu0.get() > 0.0 {
            spec.mu0.get().min(1e-8)
        } else {
            1e-8
        };
        while h(cand) <= 0.0 && cand > 1e-300 {
            cand *= 0.5;
        }
        cand
    };
    let mut hi = 1.0;
    if h(lo) <= 0.0 || h(hi) > 0.0 {
        return Err(Error::NoConvergence(0));
    }

    let mut n = 0;
    while hi - lo > tol && n < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        n += 1;
    }
    let mu_star = 0.5 * (lo + hi);
    Ok(FixedPointResult {
        regime: Regime::Supercritical,
        mu_star,
        bisections: n,
        residual: h(mu_star).abs(),
    })
}

/// Exact iteration (mu_0, ..., mu_L) of the recursion. Ground-truth oracle
/// for the Monte Carlo estimators.
pub fn iterate_depth(spec: &RecursionSpec, depth: u32) -> Result<Vec<f64>> {
    if depth > DEPTH_CAP {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} exceeds cap {DEPTH_CAP}"
        )));
    }
    let mut out = Vec::with_capacity(depth as usize + 1);
    let mut mu = spec.mu0.get();
    out.push(mu);
    for _ in 0..depth {
        mu = spec.map(mu);
        out.push(mu);
    }
    Ok(out)
}

/// Empirical mixing-depth report for a supercritical spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub epsilon: f64,
    /// First L with mu_L >= (1 - epsilon) * mu_star.
    pub empirical_depth: u32,
    pub mu_star: f64,
    pub trajectory: Vec<f64>,
}

/// Iterates until the bias reaches a (1 - epsilon) fraction of mu_star.
///
/// The theoretical O(log(1/mu0) + log(1/eps)) scaling is not computed; the
/// depth here is the exact empirical count, which is tighter.
pub fn mixing_depth(spec: &RecursionSpec, epsilon: f64) -> Result<MixingReport> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be in (0,1), got {epsilon}"
        )));
    }
    if spec.mu0.get() <= 0.0 {
        return Err(Error::InvalidParameter(
            "mixing depth requires mu0 > 0".into(),
        ));
    }
    let fp = classify_and_solve(spec, 1e-14)?;
    if fp.regime == Regime::Subcritical {
        return Err(Error::SubcriticalMixing);
    }
    let target = (1.0 - epsilon) * fp.mu_star;
    let mut trajectory = vec![spec.mu0.get()];
    let mut mu = spec.mu0.get();
    let mut depth = 0u32;
    while mu < target {
        if depth >= DEPTH_CAP {
            return Err(Error::NoConvergence(DEPTH_CAP));
        }
        let next = spec.map(mu);
        if (next - mu).abs() < ITER_STALL {
            return Err(Error::NoConvergence(depth));
        }
        mu = next;
        trajectory.push(mu);
        depth += 1;
    }
    Ok(MixingReport {
        epsilon,
        empirical_depth: depth,
        mu_star: fp.mu_star,
        trajectory,
    })
}

/// Clipped predictor min{mu_star, mu0 * alpha^L}. Subcritical specs clip at 0.
pub fn clipped_prediction(spec: &RecursionSpec, depth: u32) -> Result<f64> {
    let fp = classify_and_solve(spec, 1e-12)?;
    let growth = spec.mu0.get() * spec.alpha().powi(depth as i32);
    Ok(fp.mu_star.min(growth))
}

/// Numerical witness delta(eta) for the small-signal band: the largest u such
/// that T(u) >= (1 - eta) * alpha * u on (0, u].
///
/// Uses the fact that T(u)/u is nonincreasing on (0, 1], so a single sign
/// change separates the band from its complement.
pub fn estimate_linear_band(spec: &RecursionSpec, eta: f64) -> Result<f64> {
    if !(0.0 < eta && eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be in (0,1), got {eta}"
        )));
    }
    let alpha = spec.alpha();
    let target = (1.0 - eta) * alpha;
    let ratio = |u: f64| spec.map(u) / u;
    if ratio(1.0) >= target {
        return Ok(1.0);
    }
    let mut lo = 1e-12;
    let mut hi = 1.0;
    if ratio(lo) < target {
        // The band is empty at floating-point resolution.
        return Ok(lo);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
