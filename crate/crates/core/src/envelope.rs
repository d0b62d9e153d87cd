//! Monotone message-length design curves: candidate screening, linear-time
//! upper-envelope construction over log-budget lines, and the end-to-end
//! design pipeline with per-budget diagnostics.

use crate::budget::{allocate, kappa, DesignCandidate, EnvironmentParams};
use crate::dynamics::{classify_and_solve, RecursionSpec, Regime};
use crate::error::{Error, Result};
use crate::maps::{BiasValue, FanIn};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Tolerance below which two slopes count as duplicates (tabulated fidelity
/// curves can plateau and produce exactly equal slopes).
const SLOPE_TOL: f64 = 1e-12;

/// One screened candidate as a line in t = ln B:
/// l(t) = slope * t + intercept with slope = s_{b,m} and
/// intercept q_b(m) = ln k + ln kappa(s, beta) + (beta - s) ln c0(b, m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeLine {
    pub m: u32,
    pub slope: f64,
    pub intercept: f64,
}

impl EnvelopeLine {
    pub fn eval(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }
}

/// Segment of the upper envelope; the line is optimal on the half-open
/// interval (activation_t, next activation_t].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSegment {
    pub line: EnvelopeLine,
    pub activation_t: f64,
}

/// Upper envelope of the screened lines, with push/pop instrumentation for
/// the linear-time contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub segments: Vec<EnvelopeSegment>,
    pub pushes: usize,
    pub pops: usize,
}

impl Envelope {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Enumerates m = 1..floor(W/b), keeps supercritical synergy candidates
/// (alpha > 1 and s > beta), and collapses equal-slope duplicates onto the
/// larger intercept. Output is sorted by m with strictly increasing slopes
/// whenever gamma(m) is nondecreasing.
pub fn screen_candidates(env: &EnvironmentParams, b: FanIn) -> Result<Vec<EnvelopeLine>> {
    let m_max = env.w / b.get();
    if m_max < 1 {
        return Err(Error::InvalidParameter(format!(
            "no feasible message length: b={} exceeds context window {}",
            b.get(),
            env.w
        )));
    }
    let mut lines: Vec<EnvelopeLine> = Vec::new();
    for m in 1..=m_max {
        let cand = DesignCandidate::evaluate(env, b, m);
        if !cand.supercritical || !cand.synergy {
            continue;
        }
        let q = env.k_bin.ln() + kappa(cand.s, env.beta)?.ln() + (env.beta - cand.s) * cand.c0.ln();
        let line = EnvelopeLine { m, slope: cand.s, intercept: q };
        match lines.last_mut() {
            Some(last) if (line.slope - last.slope).abs() <= SLOPE_TOL => {
                if line.intercept > last.intercept {
                    *last = line;
                }
            }
            _ => lines.push(line),
        }
    }
    Ok(lines)
}

/// Stack construction of the upper envelope. Each line is pushed once and
/// popped at most once.
pub fn build_envelope(lines: &[EnvelopeLine]) -> Result<Envelope> {
    for w in lines.windows(2) {
        if w[1].slope - w[0].slope <= SLOPE_TOL {
            return Err(Error::UnsortedSlopes);
        }
    }
    let mut segments: Vec<EnvelopeSegment> = Vec::with_capacity(lines.len());
    let mut pushes = 0usize;
    let mut pops = 0usize;
    for &line in lines {
        loop {
            match segments.last() {
                None => {
                    segments.push(EnvelopeSegment { line, activation_t: f64::NEG_INFINITY });
                    pushes += 1;
                    break;
                }
                Some(top) => {
                    let t_star =
                        (top.line.intercept - line.intercept) / (line.slope - top.line.slope);
                    if t_star <= top.activation_t {
                        segments.pop();
                        pops += 1;
                    } else {
                        segments.push(EnvelopeSegment { line, activation_t: t_star });
                        pushes += 1;
                        break;
                    }
                }
            }
        }
    }
    Ok(Envelope { segments, pushes, pops })
}

/// Message length active at budget B. At an exact breakpoint the smaller m
/// wins (half-open activation intervals).
pub fn query_m_star(env: &Envelope, budget: f64) -> Result<u32> {
    if env.is_empty() {
        return Err(Error::EmptyEnvelope);
    }
    if !(budget > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget must be positive, got {budget}"
        )));
    }
    let t = budget.ln();
    let idx = env.segments.partition_point(|seg| seg.activation_t < t);
    Ok(env.segments[idx.saturating_sub(1).min(env.segments.len() - 1)].line.m)
}

/// Answers a sorted ascending budget sequence with one forward pointer pass.
pub fn query_sorted(env: &Envelope, budgets: &[f64]) -> Result<Vec<u32>> {
    if env.is_empty() {
        return Err(Error::EmptyEnvelope);
    }
    let mut out = Vec::with_capacity(budgets.len());
    let mut idx = 0usize;
    for &budget in budgets {
        if !(budget > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "budget must be positive, got {budget}"
            )));
        }
        let t = budget.ln();
        while idx + 1 < env.segments.len() && env.segments[idx + 1].activation_t < t {
            idx += 1;
        }
        out.push(env.segments[idx].line.m);
    }
    Ok(out)
}

/// Why a budget point fell short of a synergy recommendation, or which
/// constraint shapes the recommended design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagnostic {
    /// No feasible gate fits the context window or budget.
    ContextCap,
    /// Every candidate has alpha <= 1.
    Subcritical,
    /// Some candidate amplifies, but none has s > beta.
    ExponentMismatch,
    /// The clipped prediction is pinned at mu*.
    Saturation,
    None,
}

/// Per-budget recommendation from the design pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub budget: f64,
    /// None means "no feasible hierarchy": run a single agent.
    pub b: Option<u32>,
    pub m: Option<u32>,
    pub x_star: Option<f64>,
    pub n_star: Option<u64>,
    pub l_star: Option<u32>,
    pub regime: Regime,
    /// Clipped bias prediction of the recommendation (single-agent bias when
    /// no hierarchy is feasible).
    pub mu_hat: f64,
    pub diagnostic: Diagnostic,
}

/// Per-fan-in envelope report for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub b: u32,
    pub lines: Vec<EnvelopeLine>,
    pub envelope: Envelope,
}

/// Screens every odd fan-in, builds its envelope, queries m*_b(B) across the
/// budget grid, and selects the best (b, m) per budget by the clipped
/// prediction. Ties resolve to smaller b, then smaller m.
pub fn design_pipeline(
    env: &EnvironmentParams,
    budgets: &[f64],
    b_max: u32,
) -> Result<(Vec<EnvelopeReport>, Vec<DesignRow>)> {
    env.validate()?;
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("empty budget grid".into()));
    }
    let mut reports = Vec::new();
    let mut any_supercritical = false;
    let mut b = 3u32;
    while b <= b_max.min(env.w) {
        let fan = FanIn::new(b as u64)?;
        if env.w / b >= 1 {
            let lines = screen_candidates(env, fan)?;
            if !any_supercritical {
                any_supercritical = (1..=env.w / b)
                    .any(|m| DesignCandidate::evaluate(env, fan, m).supercritical);
            }
            let envelope = build_envelope(&lines)?;
            reports.push(EnvelopeReport { b, lines, envelope });
        }
        b += 2;
    }

    // mu* is the dominant cost in dense sweeps; memoize per (b, m).
    let mut mu_star_cache: HashMap<(u32, u32, u64), f64> = HashMap::new();

    let mut rows = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let local = EnvironmentParams { budget, ..env.clone() };
        let (single, _) = local.leaf_bias(budget);
        let mut best: Option<(DesignRow, f64)> = None;
        let mut any_alloc_infeasible = false;
        for report in &reports {
            if report.envelope.is_empty() {
                continue;
            }
            let m = query_m_star(&report.envelope, budget)?;
            let fan = FanIn::new(report.b as u64)?;
            let cand = DesignCandidate::evaluate(&local, fan, m);
            let alloc = match allocate(&local, &cand, 0.05) {
                Ok(a) => a,
                Err(Error::Infeasible(_)) => {
                    any_alloc_infeasible = true;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (leaf, _) = local.leaf_bias(alloc.x_star);
            let spec = RecursionSpec::new(fan, local.rho, cand.gamma(&local), BiasValue::clamped(leaf))?;
            let mu_star = match mu_star_cache.entry((report.b, m, leaf.to_bits())) {
                std::collections::hash_map::Entry::Occupied(e) => *e.get(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    let fp = classify_and_solve(&spec, 1e-12)?;
                    *e.insert(fp.mu_star)
                }
            };
            let growth = leaf * cand.alpha.powi(alloc.l_star as i32);
            let mu_hat = mu_star.min(growth);
            let diagnostic = if growth >= mu_star {
                Diagnostic::Saturation
            } else {
                Diagnostic::None
            };
            let row = DesignRow {
                budget,
                b: Some(report.b),
                m: Some(m),
                x_star: Some(alloc.x_star),
                n_star: Some(alloc.n_star),
                l_star: Some(alloc.l_star),
                regime: Regime::Supercritical,
                mu_hat,
                diagnostic,
            };
            let better = match &best {
                None => true,
                Some((_, best_mu)) => mu_hat > *best_mu,
            };
            if better {
                best = Some((row, mu_hat));
            }
        }
        let row = match best {
            Some((row, _)) => row,
            None => {
                let diagnostic = if reports.iter().any(|r| !r.envelope.is_empty()) {
                    // candidates exist but no gate fits this budget
                    debug_assert!(any_alloc_infeasible || budgets.is_empty());
                    Diagnostic::ContextCap
                } else if any_supercritical {
                    Diagnostic::ExponentMismatch
                } else {
                    Diagnostic::Subcritical
                };
                DesignRow {
                    budget,
                    b: None,
                    m: None,
                    x_star: None,
                    n_star: None,
                    l_star: None,
                    regime: Regime::Subcritical,
                    mu_hat: single,
                    diagnostic,
                }
            }
        };
        rows.push(row);
    }
    Ok((reports, rows))
}
