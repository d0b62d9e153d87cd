//! Majority aggregation maps on the bias scale, their derivatives, and the
//! effective per-layer gain of one aggregation-plus-communication step.
//!
//! A vote with accuracy (1+u)/2 has bias u. One noiseless majority over b
//! independent votes of bias u yields bias `f_b(u) = 2 Pr(Bin(b, (1+u)/2) >= (b+1)/2) - 1`.
//! Correlated inputs mix the identity map in with weight rho, and a lossy
//! channel attenuates the incoming bias by gamma.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// Odd fan-in b >= 3 of a majority gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FanIn(u32);

impl FanIn {
    pub fn new(b: u64) -> Result<Self> {
        if b < 3 || b % 2 == 0 || b > u32::MAX as u64 {
            return Err(Error::InvalidFanIn(b));
        }
        Ok(FanIn(b as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u64> for FanIn {
    type Error = Error;
    fn try_from(b: u64) -> Result<Self> {
        FanIn::new(b)
    }
}

impl From<FanIn> for u64 {
    fn from(b: FanIn) -> u64 {
        b.0 as u64
    }
}

/// Signed bias u in [-1, 1]; accuracy = (1+u)/2, chance level is u = 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BiasValue(f64);

impl BiasValue {
    pub fn new(u: f64) -> Result<Self> {
        if !u.is_finite() || !(-1.0..=1.0).contains(&u) {
            return Err(Error::InvalidBias(u));
        }
        Ok(BiasValue(u))
    }

    /// Clamps small floating-point overshoot back into [-1, 1].
    pub(crate) fn clamped(u: f64) -> Self {
        BiasValue(u.clamp(-1.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for BiasValue {
    type Error = Error;
    fn try_from(u: f64) -> Result<Self> {
        BiasValue::new(u)
    }
}

impl From<BiasValue> for f64 {
    fn from(u: BiasValue) -> f64 {
        u.0
    }
}

/// Effective bit-channel reliability gamma in (0, 1]; flip probability (1-gamma)/2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ChannelReliability(f64);

impl ChannelReliability {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 || gamma > 1.0 {
            return Err(Error::InvalidReliability(gamma));
        }
        Ok(ChannelReliability(gamma))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ChannelReliability {
    type Error = Error;
    fn try_from(g: f64) -> Result<Self> {
        ChannelReliability::new(g)
    }
}

impl From<ChannelReliability> for f64 {
    fn from(g: ChannelReliability) -> f64 {
        g.0
    }
}

/// Shared-failure correlation rho in [0, 1). rho = 1 is rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CorrelationCoefficient(f64);

impl CorrelationCoefficient {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidCorrelation(rho));
        }
        Ok(CorrelationCoefficient(rho))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CorrelationCoefficient {
    type Error = Error;
    fn try_from(r: f64) -> Result<Self> {
        CorrelationCoefficient::new(r)
    }
}

impl From<CorrelationCoefficient> for f64 {
    fn from(r: CorrelationCoefficient) -> f64 {
        r.0
    }
}

/// Upper tail F(p) = Pr(Bin(b, p) >= (b+1)/2).
///
/// Evaluated through the regularized incomplete beta identity
/// F(p) = I_p(k, b-k+1) with k = (b+1)/2, which stays accurate and monotone
/// for fan-ins well beyond 10,000.
pub fn binomial_tail(b: FanIn, p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let k = (b.get() as f64 + 1.0) / 2.0;
    let nk = b.get() as f64 - k + 1.0;
    Ok(beta_reg(k, nk, p))
}

/// Majority map f_b(u) = 2 F((1+u)/2) - 1. Odd, increasing, concave on [0, 1].
pub fn majority_bias(b: FanIn, u: BiasValue) -> BiasValue {
    // Evaluate on |u| and restore the sign, so oddness (and f_b(0) = 0)
    // holds exactly rather than up to incomplete-beta rounding.
    let mag = u.get().abs();
    if mag == 0.0 {
        return BiasValue::clamped(0.0);
    }
    let p = ((1.0 + mag) / 2.0).clamp(0.0, 1.0);
    // p is in [0,1] by the type invariant, so the tail cannot fail.
    let tail = binomial_tail(b, p).expect("p in range");
    BiasValue::clamped(u.get().signum() * (2.0 * tail - 1.0))
}

/// ln of the central prefactor b * C(b-1, (b-1)/2) / 2^(b-1).
fn ln_central_prefactor(b: FanIn) -> f64 {
    let n = (b.get() - 1) as f64;
    let h = n / 2.0;
    (b.get() as f64).ln() + ln_gamma(n + 1.0) - 2.0 * ln_gamma(h + 1.0) - n * 2.0_f64.ln()
}

/// Small-signal gain f_b'(0) = b * C(b-1, (b-1)/2) / 2^(b-1), in log space.
pub fn majority_derivative_at_zero(b: FanIn) -> f64 {
    ln_central_prefactor(b).exp()
}

/// Closed-form derivative f_b'(u) = f_b'(0) * (1 - u^2)^((b-1)/2).
pub fn majority_derivative(b: FanIn, u: BiasValue) -> f64 {
    let one_minus_u2 = 1.0 - u.get() * u.get();
    if one_minus_u2 <= 0.0 {
        return 0.0;
    }
    let half = (b.get() - 1) as f64 / 2.0;
    (ln_central_prefactor(b) + half * one_minus_u2.ln()).exp()
}

/// Correlated majority map f_{b,rho}(u) = rho*u + (1-rho)*f_b(u).
///
/// Under the rho-shared model, a gate acts as the identity with probability
/// rho (all children cast one common vote) and as an independent majority
/// with probability 1-rho.
pub fn correlated_majority_bias(b: FanIn, rho: CorrelationCoefficient, u: BiasValue) -> BiasValue {
    let r = rho.get();
    BiasValue::clamped(r * u.get() + (1.0 - r) * majority_bias(b, u).get())
}

/// One-layer recursion map T(u) = f_{b,rho}(gamma * u): channel attenuation
/// followed by correlated majority aggregation.
pub fn recursion_map(
    b: FanIn,
    rho: CorrelationCoefficient,
    gamma: ChannelReliability,
    u: BiasValue,
) -> BiasValue {
    let attenuated = BiasValue::clamped(gamma.get() * u.get());
    correlated_majority_bias(b, rho, attenuated)
}

/// Effective per-layer gain alpha_rho = gamma * (rho + (1-rho) * f_b'(0)).
///
/// This is T'(0): weak signal is multiplied by alpha_rho per layer, so
/// alpha_rho > 1 amplifies and alpha_rho <= 1 collapses toward chance.
pub fn alpha_rho(b: FanIn, rho: CorrelationCoefficient, gamma: ChannelReliability) -> f64 {
    let r = rho.get();
    gamma.get() * (r + (1.0 - r) * majority_derivative_at_zero(b))
}

/// Organization exponent s = ln(alpha_rho) / ln(b).
///
/// Bias grows as N^s in the leaf count during the pre-saturation regime;
/// s <= 1/2 universally for one-bit majority hierarchies.
pub fn organization_exponent(
    b: FanIn,
    rho: CorrelationCoefficient,
    gamma: ChannelReliability,
) -> f64 {
    alpha_rho(b, rho, gamma).ln() / (b.get() as f64).ln()
}
