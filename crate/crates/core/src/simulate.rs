//! Seeded Monte Carlo validation of the binary recursion: the rho-shared
//! gate sampler, level-wise deep-tree estimation, a small full-tree oracle,
//! and pairwise correlation estimators.
//!
//! Deep trees are estimated level-wise (propagating the empirical bias), so
//! depth 30 costs Theta(n * L * b) instead of b^30 nodes. The recursion is
//! defined on per-level marginal bias, so both estimators target the same
//! mean; the explicit tree exists as a small-instance oracle.

use crate::error::{Error, Result};
use crate::maps::{BiasValue, ChannelReliability, CorrelationCoefficient, FanIn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Replicates per deterministic RNG stream; the chunk index, not the thread,
/// selects the stream, so results are independent of scheduling.
const CHUNK: u64 = 4096;

/// One simulation setup. Outputs are bit-identical for a fixed config and
/// seed, regardless of thread count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub b: FanIn,
    pub depth: u32,
    pub gamma: ChannelReliability,
    pub rho: CorrelationCoefficient,
    pub mu0: BiasValue,
    pub n: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::InvalidParameter("depth must be >= 1".into()));
        }
        if self.n < 1 {
            return Err(Error::InvalidParameter("replicate count must be >= 1".into()));
        }
        if self.mu0.get() < 0.0 {
            return Err(Error::InvalidParameter("mu0 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Bias estimate with its binomial standard error on the bias scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mu_hat: f64,
    pub stderr: f64,
    pub n: u64,
}

impl SimResult {
    fn from_positive_count(positives: u64, n: u64) -> Self {
        let p_hat = positives as f64 / n as f64;
        SimResult {
            mu_hat: 2.0 * p_hat - 1.0,
            stderr: 2.0 * (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
            n,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-(domain, level, chunk) stream derivation.
fn stream(seed: u64, domain: u64, level: u64, chunk: u64) -> ChaCha8Rng {
    let mut state = seed;
    let a = splitmix64(&mut state);
    let mut state2 = a ^ domain.wrapping_mul(0xD1342543DE82EF95) ^ level;
    let b = splitmix64(&mut state2);
    let mut state3 = b ^ chunk;
    ChaCha8Rng::seed_from_u64(splitmix64(&mut state3))
}

#[inline]
fn draw_signed(rng: &mut ChaCha8Rng, bias: f64) -> i8 {
    if rng.random::<f64>() < (1.0 + bias) / 2.0 {
        1
    } else {
        -1
    }
}

/// One majority-gate output under the rho-shared model over a lossy channel.
///
/// With probability rho the gate sees one shared received vote (bias
/// gamma * child_bias); otherwise it takes the majority of b independent
/// received votes. The output expectation equals recursion_map(child_bias).
pub fn sample_gate(
    b: FanIn,
    rho: CorrelationCoefficient,
    gamma: ChannelReliability,
    child_bias: f64,
    rng: &mut ChaCha8Rng,
) -> i8 {
    let received = (gamma.get() * child_bias).clamp(-1.0, 1.0);
    if rng.random::<f64>() < rho.get() {
        draw_signed(rng, received)
    } else {
        let mut positives = 0u32;
        for _ in 0..b.get() {
            if draw_signed(rng, received) > 0 {
                positives += 1;
            }
        }
        if 2 * positives > b.get() {
            1
        } else {
            -1
        }
    }
}

/// Per-level estimates mu_hat_0..mu_hat_L, propagating the empirical bias.
pub fn levelwise_estimate(cfg: &SimConfig) -> Result<Vec<SimResult>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.depth as usize + 1);
    out.push(SimResult { mu_hat: cfg.mu0.get(), stderr: 0.0, n: cfg.n });
    let mut mu = cfg.mu0.get();
    for level in 0..cfg.depth {
        let chunks = cfg.n.div_ceil(CHUNK);
        let partial: Vec<u64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(cfg.seed, 1, level as u64, c);
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(cfg.n);
                let mut positives = 0u64;
                for _ in lo..hi {
                    if sample_gate(cfg.b, cfg.rho, cfg.gamma, mu, &mut rng) > 0 {
                        positives += 1;
                    }
                }
                positives
            })
            .collect();
        let positives: u64 = partial.iter().sum();
        let res = SimResult::from_positive_count(positives, cfg.n);
        mu = res.mu_hat;
        out.push(res);
    }
    Ok(out)
}

/// Leaf-count guard for the explicit tree oracle.
const FULLTREE_MAX_LEAVES: u64 = 100_000;

/// Samples n replicates of the explicit depth-L tree and estimates the root
/// bias. Exactness oracle for the level-wise method on small instances.
pub fn fulltree_estimate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let leaves = (cfg.b.get() as u64)
        .checked_pow(cfg.depth)
        .filter(|&n| n <= FULLTREE_MAX_LEAVES)
        .ok_or_else(|| {
            Error::SizeGuard(format!(
                "full tree needs b^L <= {FULLTREE_MAX_LEAVES}, got b={}, L={}",
                cfg.b.get(),
                cfg.depth
            ))
        })?;
    let _ = leaves;
    let chunks = cfg.n.div_ceil(CHUNK);
    let partial: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(cfg.seed, 2, 0, c);
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(cfg.n);
            let mut positives = 0u64;
            for _ in lo..hi {
                if sample_subtree(cfg, cfg.depth, &mut rng) > 0 {
                    positives += 1;
                }
            }
            positives
        })
        .collect();
    let positives: u64 = partial.iter().sum();
    Ok(SimResult::from_positive_count(positives, cfg.n))
}

/// Recursively samples one node at the given height (0 = leaf).
fn sample_subtree(cfg: &SimConfig, height: u32, rng: &mut ChaCha8Rng) -> i8 {
    if height == 0 {
        return draw_signed(rng, cfg.mu0.get());
    }
    let shared = rng.random::<f64>() < cfg.rho.get();
    let flip = |v: i8, rng: &mut ChaCha8Rng| -> i8 {
        // channel: flip with probability (1 - gamma)/2
        if rng.random::<f64>() < (1.0 - cfg.gamma.get()) / 2.0 {
            -v
        } else {
            v
        }
    };
    if shared {
        // the model correlates received votes: one child subtree, one
        // channel draw, all b slots share it
        let v = sample_subtree(cfg, height - 1, rng);
        flip(v, rng)
    } else {
        let mut positives = 0u32;
        for _ in 0..cfg.b.get() {
            let v = sample_subtree(cfg, height - 1, rng);
            if flip(v, rng) > 0 {
                positives += 1;
            }
        }
        if 2 * positives > cfg.b.get() {
            1
        } else {
            -1
        }
    }
}

/// Mean pairwise Pearson correlation across agent rows; None when every pair
/// is degenerate (zero variance).
fn mean_pairwise_pearson(rows: &[Vec<f64>]) -> Result<Option<f64>> {
    let agents = rows.len();
    if agents < 2 {
        return Err(Error::TooFewSamples { agents, tasks: rows.first().map_or(0, Vec::len) });
    }
    let tasks = rows[0].len();
    if tasks < 2 {
        return Err(Error::TooFewSamples { agents, tasks });
    }
    if rows.iter().any(|r| r.len() != tasks) {
        return Err(Error::RaggedMatrix);
    }
    let t = tasks as f64;
    let stats: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            let mean = r.iter().sum::<f64>() / t;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
            (mean, var)
        })
        .collect();
    let mut total = 0.0;
    let mut used = 0usize;
    for i in 0..agents {
        for j in (i + 1)..agents {
            if stats[i].1 <= 0.0 || stats[j].1 <= 0.0 {
                continue;
            }
            let cov = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - stats[i].0) * (b - stats[j].0))
                .sum::<f64>()
                / t;
            total += cov / (stats[i].1 * stats[j].1).sqrt();
            used += 1;
        }
    }
    if used == 0 {
        Ok(None)
    } else {
        Ok(Some(total / used as f64))
    }
}

/// Standard error of each level-wise estimate against the exact recursion
/// trajectory. The per-level stderr in SimResult is conditional on the
/// empirical bias fed into that level; sampling error compounds through the
/// recursion, so the marginal error propagates by the delta method with the
/// local map derivative as the per-level gain.
pub fn propagate_stderr(cfg: &SimConfig, levels: &[SimResult]) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels.len());
    let mut acc = 0.0f64;
    out.push(0.0);
    for t in 1..levels.len() {
        let prev = levels[t - 1].mu_hat;
        let received = BiasValue::clamped(cfg.gamma.get() * prev);
        let gain = cfg.gamma.get()
            * (cfg.rho.get()
                + (1.0 - cfg.rho.get()) * crate::maps::majority_derivative(cfg.b, received));
        acc = ((gain * acc).powi(2) + levels[t].stderr.powi(2)).sqrt();
        out.push(acc);
    }
    out
}

/// Mean pairwise correlation of signed-correctness rows (+1/-1 entries).
pub fn estimate_rho(signed_correctness: &[Vec<i8>]) -> Result<Option<f64>> {
    let rows: Vec<Vec<f64>> = signed_correctness
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    mean_pairwise_pearson(&rows)
}

/// Mean pairwise correlation of continuous residual rows.
pub fn estimate_residual_correlation(residuals: &[Vec<f64>]) -> Result<Option<f64>> {
    mean_pairwise_pearson(residuals)
}

/// Synthetic signed-correctness logs from the rho-shared model: M agents by
/// T tasks, each task shared with probability rho. Test/data generator.
pub fn generate_shared_logs(
    agents: usize,
    tasks: usize,
    rho: CorrelationCoefficient,
    bias: BiasValue,
    seed: u64,
) -> Vec<Vec<i8>> {
    let mut rng = stream(seed, 3, 0, 0);
    let mut rows = vec![vec![0i8; tasks]; agents];
    for task in 0..tasks {
        if rng.random::<f64>() < rho.get() {
            let v = draw_signed(&mut rng, bias.get());
            for row in rows.iter_mut() {
                row[task] = v;
            }
        } else {
            for row in rows.iter_mut() {
                row[task] = draw_signed(&mut rng, bias.get());
            }
        }
    }
    rows
}
