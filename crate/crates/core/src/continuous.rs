//! Closed-form mean-squared-error analysis of star, chain, and tree
//! organizations for continuous estimates under equal-correlation residuals
//! and additive per-hop distortion.

use crate::error::{Error, Result};
use crate::maps::{CorrelationCoefficient, FanIn};
use serde::{Deserialize, Serialize};

/// Continuous environment: leaf MSE, per-hop distortion variance, residual
/// correlation, and fan-in of averaging groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousEnv {
    pub v0: f64,
    pub sigma_c2: f64,
    pub rho: CorrelationCoefficient,
    pub b: FanIn,
}

impl ContinuousEnv {
    pub fn new(v0: f64, sigma_c2: f64, rho: CorrelationCoefficient, b: FanIn) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "leaf MSE must be positive, got {v0}"
            )));
        }
        if !(sigma_c2 >= 0.0) || !sigma_c2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "distortion variance must be nonnegative, got {sigma_c2}"
            )));
        }
        Ok(ContinuousEnv { v0, sigma_c2, rho, b })
    }

    /// Per-level contraction a = rho + (1-rho)/b.
    pub fn contraction(&self) -> f64 {
        let r = self.rho.get();
        r + (1.0 - r) / self.b.get() as f64
    }
}

/// Leaf-quality power law v0(x) ~ c * x^(-beta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousScaling {
    pub c: f64,
    pub beta: f64,
}

impl ContinuousScaling {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling constants must be positive, got c={c}, beta={beta}"
            )));
        }
        Ok(ContinuousScaling { c, beta })
    }
}

/// MSE of an N-leaf star: v0 (1 + (N-1) rho)/N + sigma_c^2 / N.
pub fn star_mse(env: &ContinuousEnv, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("star needs N >= 1".into()));
    }
    let nf = n as f64;
    let r = env.rho.get();
    Ok(env.v0 * (1.0 + (nf - 1.0) * r) / nf + env.sigma_c2 / nf)
}

/// MSE after an L-hop relay chain: v0 + L * sigma_c^2.
pub fn chain_mse(env: &ContinuousEnv, hops: u32) -> f64 {
    env.v0 + hops as f64 * env.sigma_c2
}

/// MSE at the root of a depth-L averaging tree:
/// a^L v0 + (sigma_c^2 / b) * (1 - a^L)/(1 - a).
pub fn tree_mse(env: &ContinuousEnv, depth: u32) -> f64 {
    let a = env.contraction();
    let al = a.powi(depth as i32);
    let geom = if (1.0 - a).abs() < 1e-9 {
        // near a = 1 the closed form cancels badly; sum the L terms directly
        (0..depth).map(|j| a.powi(j as i32)).sum::<f64>()
    } else {
        (1.0 - al) / (1.0 - a)
    };
    al * env.v0 + env.sigma_c2 / env.b.get() as f64 * geom
}

/// Limiting error floor v* = sigma_c^2 / ((b-1)(1-rho)).
pub fn tree_floor(env: &ContinuousEnv) -> f64 {
    env.sigma_c2 / ((env.b.get() as f64 - 1.0) * (1.0 - env.rho.get()))
}

/// Least depth with v_L <= (1 + epsilon) v*, from the exact identity
/// v_L - v* = a^L (v0 - v*).
pub fn continuous_mixing_depth(env: &ContinuousEnv, epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let floor = tree_floor(env);
    if env.v0 <= floor {
        return Err(Error::BelowFloor { v0: env.v0, floor });
    }
    if floor == 0.0 {
        return Err(Error::InvalidParameter(
            "mixing depth undefined for a zero floor (lossless channel)".into(),
        ));
    }
    let a = env.contraction();
    let raw = ((env.v0 - floor) / (epsilon * floor)).ln() / (1.0 / a).ln();
    Ok(raw.ceil().max(0.0) as u32)
}

/// Continuous organization exponent t = -ln(a)/ln(b); 1 at rho = 0, -> 0 as rho -> 1.
pub fn continuous_exponent(b: FanIn, rho: CorrelationCoefficient) -> f64 {
    let a = rho.get() + (1.0 - rho.get()) / b.get() as f64;
    -a.ln() / (b.get() as f64).ln()
}

/// Result of the continuous compute-allocation trade-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContinuousAllocation {
    /// Unique interior optimum x* = beta/(t-beta) * c0.
    Interior(f64),
    /// t <= beta: spend the budget on fewer, stronger agents instead.
    NoInteriorOptimum,
}

/// Minimizer of x^(-beta) (x + c0)^t over x > 0, when it exists.
pub fn continuous_optimal_x(
    scaling: &ContinuousScaling,
    t: f64,
    c0: f64,
) -> Result<ContinuousAllocation> {
    if !(t > 0.0) || !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t and c0 must be positive, got t={t}, c0={c0}"
        )));
    }
    if t > scaling.beta {
        Ok(ContinuousAllocation::Interior(
            scaling.beta / (t - scaling.beta) * c0,
        ))
    } else {
        Ok(ContinuousAllocation::NoInteriorOptimum)
    }
}
