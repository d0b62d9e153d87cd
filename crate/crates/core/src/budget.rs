//! Budget and context accounting: cost models, growth-regime compute
//! allocation, synergy thresholds, regime classification, and the
//! star/tree/single topology comparison.

use crate::dynamics::{mixing_depth, RecursionSpec};
use crate::error::{Error, Result};
use crate::maps::{
    alpha_rho, organization_exponent, recursion_map, BiasValue, ChannelReliability,
    CorrelationCoefficient, FanIn,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Message-length fidelity curve gamma(m), nondecreasing with range in (0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityCurve {
    /// gamma(m) = 1 - 2 e0 exp(-m / tau), e0 in (0, 1/2], tau > 0.
    Parametric { e0: f64, tau: f64 },
    /// Step function over tabulated (m, gamma) points, nondecreasing.
    Tabulated(Vec<(u32, f64)>),
}

impl FidelityCurve {
    pub fn validate(&self) -> Result<()> {
        match self {
            FidelityCurve::Parametric { e0, tau } => {
                if !(*e0 > 0.0 && *e0 <= 0.5) || !(*tau > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "fidelity curve needs e0 in (0,1/2] and tau > 0, got e0={e0}, tau={tau}"
                    )));
                }
            }
            FidelityCurve::Tabulated(points) => {
                if points.is_empty() {
                    return Err(Error::InvalidParameter("empty fidelity table".into()));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 || w[1].1 < w[0].1 {
                        return Err(Error::InvalidParameter(
                            "fidelity table must be increasing in m and nondecreasing in gamma"
                                .into(),
                        ));
                    }
                }
                for &(_, g) in points {
                    ChannelReliability::new(g)?;
                }
            }
        }
        Ok(())
    }

    /// Effective reliability for an m-token message.
    pub fn gamma(&self, m: u32) -> ChannelReliability {
        let g = match self {
            FidelityCurve::Parametric { e0, tau } => 1.0 - 2.0 * e0 * (-(m as f64) / tau).exp(),
            FidelityCurve::Tabulated(points) => {
                let mut g = points[0].1;
                for &(mm, gg) in points {
                    if mm <= m {
                        g = gg;
                    } else {
                        break;
                    }
                }
                g
            }
        };
        ChannelReliability::new(g).expect("validated curve stays in (0,1]")
    }
}

/// Continuous distortion curve sigma_c^2(m), nonincreasing and nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionCurve {
    /// sigma_c^2(m) = s0 * exp(-m / tau).
    Parametric { s0: f64, tau: f64 },
    Tabulated(Vec<(u32, f64)>),
}

impl DistortionCurve {
    pub fn sigma_c2(&self, m: u32) -> f64 {
        match self {
            DistortionCurve::Parametric { s0, tau } => s0 * (-(m as f64) / tau).exp(),
            DistortionCurve::Tabulated(points) => {
                let mut v = points[0].1;
                for &(mm, vv) in points {
                    if mm <= m {
                        v = vv;
                    } else {
                        break;
                    }
                }
                v
            }
        }
    }
}

/// Edge cost accounting; an m-token message on one edge costs
/// edge_multiplier * m tokens (sender production plus receiver reading).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub edge_multiplier: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { edge_multiplier: 2.0 }
    }
}

impl CostModel {
    /// Per-leaf coordination cost c0(b, m) = edge_multiplier * m * b/(b-1).
    pub fn c0(&self, b: FanIn, m: u32) -> f64 {
        self.edge_multiplier * m as f64 * b.get() as f64 / (b.get() as f64 - 1.0)
    }
}

/// Measurable environment interface: scaling constants, correlation, fidelity
/// curve, context window, and total budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    /// Single-agent scaling exponent.
    pub beta: f64,
    /// Binary scaling constant k in g(x) ~ k x^beta.
    pub k_bin: f64,
    /// Continuous scaling constant c in v0(x) ~ c x^(-beta).
    pub c_cont: f64,
    pub rho: CorrelationCoefficient,
    pub gamma_curve: FidelityCurve,
    pub sigma_curve: Option<DistortionCurve>,
    /// Context window in tokens.
    pub w: u32,
    /// Total budget in tokens.
    pub budget: f64,
    #[serde(default)]
    pub cost: CostModel,
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !(self.k_bin > 0.0) || !(self.c_cont > 0.0) {
            return Err(Error::InvalidParameter(
                "beta, k_bin and c_cont must be positive".into(),
            ));
        }
        if self.w == 0 || !(self.budget > 0.0) {
            return Err(Error::InvalidParameter(
                "context window and budget must be positive".into(),
            ));
        }
        if !(self.cost.edge_multiplier > 0.0) {
            return Err(Error::InvalidParameter(
                "edge multiplier must be positive".into(),
            ));
        }
        self.gamma_curve.validate()
    }

    /// Single-agent leaf bias g(x) = k x^beta, clamped at 1.
    /// Returns (bias, clamped?) since the power law is a small-signal fit.
    pub fn leaf_bias(&self, x: f64) -> (f64, bool) {
        if x <= 0.0 {
            return (0.0, false);
        }
        let raw = self.k_bin * x.powf(self.beta);
        if raw > 1.0 {
            (1.0, true)
        } else {
            (raw, false)
        }
    }
}

/// One (b, m) design candidate with its derived scalars and feasibility flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCandidate {
    pub b: FanIn,
    pub m: u32,
    pub alpha: f64,
    pub s: f64,
    pub c0: f64,
    pub x_star: GrowthAllocation,
    pub context_ok: bool,
    pub supercritical: bool,
    pub synergy: bool,
}

impl DesignCandidate {
    pub fn evaluate(env: &EnvironmentParams, b: FanIn, m: u32) -> Self {
        let gamma = env.gamma_curve.gamma(m);
        let alpha = alpha_rho(b, env.rho, gamma);
        let s = organization_exponent(b, env.rho, gamma);
        let c0 = env.cost.c0(b, m);
        DesignCandidate {
            b,
            m,
            alpha,
            s,
            c0,
            x_star: growth_optimal_x(env.beta, s, c0),
            context_ok: b.get() as u64 * m as u64 <= env.w as u64,
            supercritical: alpha > 1.0,
            synergy: s > env.beta,
        }
    }

    pub fn gamma(&self, env: &EnvironmentParams) -> ChannelReliability {
        env.gamma_curve.gamma(self.m)
    }
}

/// Star cost C_star(N, x, m) = N (x + edge_multiplier * m).
pub fn star_cost(n: u64, x: f64, m: u32, cm: &CostModel) -> f64 {
    n as f64 * (x + cm.edge_multiplier * m as f64)
}

/// Exact tree cost N x + edge_multiplier * m * b (N-1)/(b-1) with N = b^L.
pub fn tree_cost(b: FanIn, depth: u32, x: f64, m: u32, cm: &CostModel) -> Result<f64> {
    let n = checked_tree_leaves(b, depth)?;
    let bf = b.get() as f64;
    Ok(n as f64 * x + cm.edge_multiplier * m as f64 * bf * (n as f64 - 1.0) / (bf - 1.0))
}

/// Per-leaf approximation N (x + c0); overstates the exact form by exactly
/// one root-edge worth of cost, edge_multiplier * m * b/(b-1).
pub fn tree_cost_per_leaf(b: FanIn, depth: u32, x: f64, m: u32, cm: &CostModel) -> Result<f64> {
    let n = checked_tree_leaves(b, depth)?;
    Ok(n as f64 * (x + cm.c0(b, m)))
}

/// b^L with an overflow guard.
pub fn checked_tree_leaves(b: FanIn, depth: u32) -> Result<u64> {
    if depth < 1 {
        return Err(Error::InvalidParameter("tree depth must be >= 1".into()));
    }
    (b.get() as u64)
        .checked_pow(depth)
        .filter(|&n| n < (1u64 << 53))
        .ok_or(Error::TreeOverflow { b: b.get() as u64, depth })
}

/// Context cap on star fan-in: floor(W / m).
pub fn star_fanin_cap(w: u32, m: u32) -> Result<u64> {
    if m < 1 {
        return Err(Error::InvalidParameter("message length must be >= 1".into()));
    }
    Ok(w as u64 / m as u64)
}

/// Bias after an L-hop relay chain: gamma^L * mu0.
pub fn chain_bias(mu0: BiasValue, gamma: ChannelReliability, hops: u32) -> BiasValue {
    BiasValue::clamped(gamma.get().powi(hops as i32) * mu0.get())
}

/// Growth-regime compute split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GrowthAllocation {
    /// x* = beta/(s-beta) * c0, the interior maximizer.
    Interior(f64),
    /// s <= beta: the growth surrogate favors scale up.
    ScaleUpPreferred,
}

/// Maximizer of x^beta (B/(x+c0))^s over x, when s > beta.
pub fn growth_optimal_x(beta: f64, s: f64, c0: f64) -> GrowthAllocation {
    if s > beta {
        GrowthAllocation::Interior(beta / (s - beta) * c0)
    } else {
        GrowthAllocation::ScaleUpPreferred
    }
}

/// kappa(s, beta) = beta^beta (s-beta)^(s-beta) s^(-s), in log space.
pub fn kappa(s: f64, beta: f64) -> Result<f64> {
    if !(s > beta) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa needs s > beta > 0, got s={s}, beta={beta}"
        )));
    }
    let d = s - beta;
    Ok((beta * beta.ln() + d * d.ln() - s * s.ln()).exp())
}

/// Growth surrogate k x^beta (B/(x + c0))^s.
pub fn growth_prediction(env: &EnvironmentParams, cand: &DesignCandidate, x: f64) -> f64 {
    growth_value(env.k_bin, env.beta, cand.s, cand.c0, env.budget, x)
}

pub fn growth_value(k: f64, beta: f64, s: f64, c0: f64, budget: f64, x: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    k * x.powf(beta) * (budget / (x + c0)).powf(s)
}

/// Budget threshold B_crit = c0 * kappa(s, beta)^(-1/(s-beta)) beyond which
/// the optimized growth prediction exceeds single-agent scaling.
pub fn budget_threshold(beta: f64, s: f64, c0: f64) -> Result<f64> {
    let k = kappa(s, beta)?;
    Ok(c0 * k.powf(-1.0 / (s - beta)))
}

/// Scale-out regime at fixed (b, rho, gamma, beta).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeClass {
    /// alpha <= 1: depth collapses bias toward chance.
    Collapse,
    /// 1 < alpha <= b^beta: depth amplifies but cannot beat scale-up.
    AmplifyNoSynergy,
    /// alpha > b^beta (s > beta): budgeted scale-out synergy.
    Synergy,
}

/// Boundary points resolve to the weaker region (strict inequalities).
pub fn classify_regime(
    b: FanIn,
    rho: CorrelationCoefficient,
    gamma: ChannelReliability,
    beta: f64,
) -> RegimeClass {
    let alpha = alpha_rho(b, rho, gamma);
    if alpha <= 1.0 {
        RegimeClass::Collapse
    } else if alpha > (b.get() as f64).powf(beta) {
        RegimeClass::Synergy
    } else {
        RegimeClass::AmplifyNoSynergy
    }
}

/// Leaf count, depth, and budget slack for one synergy-feasible candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub x_star: f64,
    pub n_star: u64,
    pub l_star: u32,
    /// Budget left over after floor(N*) leaves; discarded, reported for audit.
    pub slack: f64,
}

/// N* = floor(B/(x*+c0)), L* = floor(log_b N*), with L* additionally capped
/// at the empirical mixing depth for `mixing_eps`.
pub fn allocate(
    env: &EnvironmentParams,
    cand: &DesignCandidate,
    mixing_eps: f64,
) -> Result<Allocation> {
    let x_star = match cand.x_star {
        GrowthAllocation::Interior(x) => x,
        GrowthAllocation::ScaleUpPreferred => {
            return Err(Error::Infeasible(
                "candidate is not synergy-feasible (s <= beta)".into(),
            ))
        }
    };
    if !cand.supercritical {
        return Err(Error::Infeasible("candidate is subcritical".into()));
    }
    let per_leaf = x_star + cand.c0;
    let n_star = (env.budget / per_leaf).floor() as u64;
    if n_star < cand.b.get() as u64 {
        return Err(Error::Infeasible(format!(
            "budget supports {} leaves, fewer than one gate of fan-in {}",
            n_star,
            cand.b.get()
        )));
    }
    let mut l_star = ((n_star as f64).ln() / (cand.b.get() as f64).ln()).floor() as u32;
    // Cap depth at the empirical mixing depth: deeper layers only track mu*.
    let (leaf, _) = env.leaf_bias(x_star);
    if leaf > 0.0 {
        let spec = RecursionSpec::new(cand.b, env.rho, cand.gamma(env), BiasValue::clamped(leaf))?;
        if let Ok(rep) = mixing_depth(&spec, mixing_eps) {
            l_star = l_star.min(rep.empirical_depth);
        }
    }
    let used = n_star as f64 * per_leaf;
    Ok(Allocation {
        x_star,
        n_star,
        l_star,
        slack: env.budget - used,
    })
}

/// Chosen star configuration in a topology comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarChoice {
    pub n: u64,
    pub m: u32,
    pub x: f64,
    pub bias: f64,
}

/// Chosen tree configuration in a topology comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeChoice {
    pub b: u32,
    pub m: u32,
    pub x: f64,
    pub n: u64,
    pub depth: u32,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyLabel {
    Single,
    Star,
    Tree,
}

/// One budget point of the star/tree/single comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRow {
    pub budget: f64,
    pub single: f64,
    pub single_clamped: bool,
    pub star: Option<StarChoice>,
    pub tree: Option<TreeChoice>,
    pub winner: TopologyLabel,
}

/// Minimum per-leaf compute granted to a star leaf.
const STAR_X_MIN: f64 = 1.0;
/// Cap on the odd fan-ins enumerated for trees.
pub const DEFAULT_B_MAX: u32 = 101;

/// Sweeps star and tree designs at each budget and compares them against the
/// single-agent baseline. Rows are in input order; grid points evaluate in
/// parallel with no shared state.
pub fn compare_topologies(env: &EnvironmentParams, budgets: &[f64]) -> Result<Vec<TopologyRow>> {
    env.validate()?;
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("empty budget grid".into()));
    }
    budgets
        .par_iter()
        .map(|&budget| compare_at(env, budget))
        .collect()
}

fn compare_at(env: &EnvironmentParams, budget: f64) -> Result<TopologyRow> {
    let local = EnvironmentParams { budget, ..env.clone() };
    let (single, single_clamped) = local.leaf_bias(budget);

    let star = best_star(&local);
    let tree = best_tree(&local)?;

    let star_bias = star.map(|s| s.bias).unwrap_or(f64::NEG_INFINITY);
    let tree_bias = tree.map(|t| t.bias).unwrap_or(f64::NEG_INFINITY);
    let winner = if tree_bias > single && tree_bias > star_bias {
        TopologyLabel::Tree
    } else if star_bias > single {
        TopologyLabel::Star
    } else {
        TopologyLabel::Single
    };
    Ok(TopologyRow {
        budget,
        single,
        single_clamped,
        star,
        tree,
        winner,
    })
}

/// Best single-gate star over message length and odd fan-in, modeled as a
/// depth-1 tree with fan-in N over channel-attenuated leaf bias.
fn best_star(env: &EnvironmentParams) -> Option<StarChoice> {
    let mut best: Option<StarChoice> = None;
    for m in 1..=env.w {
        let n_cap = env.w as u64 / m as u64;
        if n_cap < 3 {
            break;
        }
        let gamma = env.gamma_curve.gamma(m);
        // largest odd N within both the context cap and the budget
        let mut n = if n_cap % 2 == 0 { n_cap - 1 } else { n_cap };
        while n >= 3 {
            let x = env.budget / n as f64 - env.cost.edge_multiplier * m as f64;
            if x >= STAR_X_MIN {
                let (leaf, _) = env.leaf_bias(x);
                let fan = FanIn::new(n).ok()?;
                let bias =
                    recursion_map(fan, env.rho, gamma, BiasValue::clamped(leaf)).get();
                if best.map(|b| bias > b.bias).unwrap_or(true) {
                    best = Some(StarChoice { n, m, x, bias });
                }
            }
            n -= 2;
        }
    }
    best
}

/// Best synergy-feasible tree by the clipped prediction.
fn best_tree(env: &EnvironmentParams) -> Result<Option<TreeChoice>> {
    let mut best: Option<TreeChoice> = None;
    let mut b = 3u32;
    while b <= DEFAULT_B_MAX.min(env.w) {
        let fan = FanIn::new(b as u64)?;
        let m_max = env.w / b;
        for m in 1..=m_max {
            let cand = DesignCandidate::evaluate(env, fan, m);
            if !cand.supercritical || !cand.synergy {
                continue;
            }
            let alloc = match allocate(env, &cand, 0.05) {
                Ok(a) => a,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            if alloc.l_star < 1 {
                continue;
            }
            let (leaf, _) = env.leaf_bias(alloc.x_star);
            let spec =
                RecursionSpec::new(fan, env.rho, cand.gamma(env), BiasValue::clamped(leaf))?;
            let bias = crate::dynamics::clipped_prediction(&spec, alloc.l_star)?;
            let n = (b as u64).pow(alloc.l_star);
            if best.map(|t| bias > t.bias).unwrap_or(true) {
                best = Some(TreeChoice {
                    b,
                    m,
                    x: alloc.x_star,
                    n,
                    depth: alloc.l_star,
                    bias,
                });
            }
        }
        b += 2;
    }
    Ok(best)
}
