//! Subcommand implementations. Each command resolves its config, runs the
//! library analysis, and emits one (or for design, three) output tables.

use crate::config::{
    ContinuousConfig, EnvConfig, MapsConfig, PhaseDiagramConfig, SimulateConfig,
};
use crate::output::{self, Format, Section};
use crate::Tripwire;
use anyhow::{bail, Context, Result};
use orgscale::budget::{classify_regime, compare_topologies, RegimeClass, TopologyLabel};
use orgscale::continuous::{
    continuous_exponent, continuous_mixing_depth, continuous_optimal_x, tree_floor, tree_mse,
    ContinuousAllocation, ContinuousEnv, ContinuousScaling,
};
use orgscale::dynamics::{iterate_depth, RecursionSpec};
use orgscale::envelope::{design_pipeline, Diagnostic};
use orgscale::maps::{
    alpha_rho, correlated_majority_bias, majority_bias, majority_derivative_at_zero,
    organization_exponent, recursion_map, BiasValue, ChannelReliability, CorrelationCoefficient,
    FanIn,
};
use orgscale::simulate::{levelwise_estimate, propagate_stderr, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

fn emit(
    out: Option<PathBuf>,
    stem: &str,
    format: Format,
    hash: &str,
    meta: &[(String, String)],
    sections: &[Section<'_>],
) -> Result<PathBuf> {
    let path = output::resolve_out(out, stem, format);
    let bytes = output::render(hash, meta, sections, format)?;
    output::write_atomic(&path, &bytes)?;
    Ok(path)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MapsRow {
    pub u: f64,
    pub majority: f64,
    pub correlated: f64,
    pub recursion: f64,
}

pub fn cmd_maps(cfg: &MapsConfig, out: Option<PathBuf>, format: Format) -> Result<()> {
    if cfg.u_steps < 1 {
        bail!("u_steps must be >= 1");
    }
    if !(cfg.u_min <= cfg.u_max) {
        bail!("u grid must satisfy u_min <= u_max");
    }
    let b = FanIn::new(cfg.fan_in)?;
    let rho = CorrelationCoefficient::new(cfg.rho_dimensionless)?;
    let gamma = ChannelReliability::new(cfg.gamma_dimensionless)?;
    let deriv0 = majority_derivative_at_zero(b);
    let alpha = alpha_rho(b, rho, gamma);
    let s = organization_exponent(b, rho, gamma);

    let n = cfg.u_steps as usize;
    let rows: Vec<MapsRow> = (0..n)
        .map(|i| {
            let u = if n == 1 {
                cfg.u_min
            } else {
                cfg.u_min + (cfg.u_max - cfg.u_min) * i as f64 / (n - 1) as f64
            };
            let uv = BiasValue::new(u)?;
            Ok(MapsRow {
                u,
                majority: majority_bias(b, uv).get(),
                correlated: correlated_majority_bias(b, rho, uv).get(),
                recursion: recursion_map(b, rho, gamma, uv).get(),
            })
        })
        .collect::<Result<_>>()?;

    let hash = output::config_hash(cfg)?;
    let meta = vec![
        ("alpha".into(), format!("{alpha}")),
        ("organization_exponent".into(), format!("{s}")),
        ("derivative_at_zero".into(), format!("{deriv0}")),
    ];
    let path = emit(out, "maps", format, &hash, &meta, &[output::section("rows", &rows)?])?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PhaseCell {
    pub rho: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub s: f64,
    pub regime: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundaryPoint {
    pub rho: f64,
    pub gamma: f64,
}

pub fn cmd_phase_diagram(cfg: &PhaseDiagramConfig, out: Option<PathBuf>, format: Format) -> Result<()> {
    if cfg.rho_steps < 1 || cfg.gamma_steps < 1 {
        bail!("grid resolutions must be >= 1");
    }
    let b = FanIn::new(cfg.fan_in)?;
    if !(cfg.beta_dimensionless > 0.0) {
        bail!("beta must be positive");
    }
    let deriv0 = majority_derivative_at_zero(b);

    let mut cells = Vec::with_capacity((cfg.rho_steps * cfg.gamma_steps) as usize);
    for i in 0..cfg.rho_steps {
        // rho in [0, 1), gamma in (0, 1]
        let rho_v = i as f64 / cfg.rho_steps as f64;
        let rho = CorrelationCoefficient::new(rho_v)?;
        for j in 0..cfg.gamma_steps {
            let gamma_v = (j + 1) as f64 / cfg.gamma_steps as f64;
            let gamma = ChannelReliability::new(gamma_v)?;
            let regime = match classify_regime(b, rho, gamma, cfg.beta_dimensionless) {
                RegimeClass::Collapse => "collapse",
                RegimeClass::AmplifyNoSynergy => "amplify-no-synergy",
                RegimeClass::Synergy => "synergy",
            };
            cells.push(PhaseCell {
                rho: rho_v,
                gamma: gamma_v,
                alpha: alpha_rho(b, rho, gamma),
                s: organization_exponent(b, rho, gamma),
                regime: regime.into(),
            });
        }
    }

    let boundary = |level: f64| -> Vec<BoundaryPoint> {
        (0..cfg.rho_steps)
            .map(|i| {
                let rho = i as f64 / cfg.rho_steps as f64;
                BoundaryPoint {
                    rho,
                    gamma: level / (rho + (1.0 - rho) * deriv0),
                }
            })
            .collect()
    };
    let collapse_boundary = boundary(1.0);
    let synergy_boundary = boundary((b.get() as f64).powf(cfg.beta_dimensionless));

    let hash = output::config_hash(cfg)?;
    let path = emit(
        out,
        "phase-diagram",
        format,
        &hash,
        &[],
        &[
            output::section("cells", &cells)?,
            output::section("collapse_boundary", &collapse_boundary)?,
            output::section("synergy_boundary", &synergy_boundary)?,
        ],
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SimulateRow {
    pub rho: f64,
    pub depth: u32,
    pub mu_recursion: f64,
    pub mu_hat: f64,
    pub stderr: f64,
}

pub fn cmd_simulate(
    cfg: &SimulateConfig,
    out: Option<PathBuf>,
    format: Format,
    seed_flag: Option<u64>,
) -> Result<()> {
    if cfg.rho_steps < 1 {
        bail!("rho_steps must be >= 1");
    }
    if cfg.depths.is_empty() {
        bail!("depths must be nonempty");
    }
    let seed = seed_flag.unwrap_or(cfg.seed);
    let b = FanIn::new(cfg.fan_in)?;
    let gamma = ChannelReliability::new(cfg.gamma_dimensionless)?;
    let mu0 = BiasValue::new(cfg.mu0_dimensionless)?;
    let max_depth = *cfg.depths.iter().max().unwrap();
    if max_depth < 1 {
        bail!("depths must be >= 1");
    }

    // analytic threshold from alpha_rho = 1
    let deriv0 = majority_derivative_at_zero(b);
    let rho_star = (deriv0 - 1.0 / gamma.get()) / (deriv0 - 1.0);

    let mut rows = Vec::new();
    let mut worst_ratio = 0.0f64;
    for i in 0..cfg.rho_steps {
        let rho_v = if cfg.rho_steps == 1 {
            cfg.rho_min
        } else {
            cfg.rho_min
                + (cfg.rho_max - cfg.rho_min) * i as f64 / (cfg.rho_steps - 1) as f64
        };
        let rho = CorrelationCoefficient::new(rho_v)?;
        let sim = SimConfig {
            b,
            depth: max_depth,
            gamma,
            rho,
            mu0,
            n: cfg.replicates,
            seed,
        };
        let levels = levelwise_estimate(&sim)?;
        let propagated = propagate_stderr(&sim, &levels);
        let spec = RecursionSpec::new(b, rho, gamma, mu0)?;
        let exact = iterate_depth(&spec, max_depth)?;
        for &depth in &cfg.depths {
            let est = levels[depth as usize];
            let stderr = propagated[depth as usize];
            let diff = (est.mu_hat - exact[depth as usize]).abs();
            if stderr > 0.0 {
                worst_ratio = worst_ratio.max(diff / stderr);
            }
            rows.push(SimulateRow {
                rho: rho_v,
                depth,
                mu_recursion: exact[depth as usize],
                mu_hat: est.mu_hat,
                stderr,
            });
        }
    }

    let mut resolved = cfg.clone();
    resolved.seed = seed;
    let hash = output::config_hash(&resolved)?;
    let meta = vec![("rho_star".into(), format!("{rho_star}"))];
    let path = emit(out, "simulate", format, &hash, &meta, &[output::section("rows", &rows)?])?;
    println!("rho_star = {rho_star}");
    println!("wrote {}", path.display());
    if worst_ratio > 6.0 {
        return Err(Tripwire {
            detail: format!(
                "simulation deviates from the recursion by {worst_ratio:.2} standard errors"
            ),
        }
        .into());
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EnvelopeRow {
    pub b: u32,
    pub m: u32,
    pub slope: f64,
    pub intercept: f64,
    /// ln B where this segment becomes active; empty for the first segment.
    pub activation_ln_budget: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RecommendationRow {
    pub budget: f64,
    pub b: Option<u32>,
    pub m: Option<u32>,
    pub x_star: Option<f64>,
    pub n_star: Option<u64>,
    pub l_star: Option<u32>,
    pub regime: String,
    pub mu_hat: f64,
    pub diagnostic: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TopologyCsvRow {
    pub budget: f64,
    pub single: f64,
    pub single_clamped: bool,
    pub star_n: Option<u64>,
    pub star_m: Option<u32>,
    pub star_x: Option<f64>,
    pub star_bias: Option<f64>,
    pub tree_b: Option<u32>,
    pub tree_m: Option<u32>,
    pub tree_x: Option<f64>,
    pub tree_n: Option<u64>,
    pub tree_depth: Option<u32>,
    pub tree_bias: Option<f64>,
    pub winner: String,
}

fn diagnostic_name(d: Diagnostic) -> &'static str {
    match d {
        Diagnostic::ContextCap => "context-cap",
        Diagnostic::Subcritical => "subcritical",
        Diagnostic::ExponentMismatch => "exponent-mismatch",
        Diagnostic::Saturation => "saturation",
        Diagnostic::None => "",
    }
}

fn topology_rows(env: &orgscale::budget::EnvironmentParams, budgets: &[f64]) -> Result<Vec<TopologyCsvRow>> {
    let rows = compare_topologies(env, budgets)?;
    Ok(rows
        .into_iter()
        .map(|r| TopologyCsvRow {
            budget: r.budget,
            single: r.single,
            single_clamped: r.single_clamped,
            star_n: r.star.map(|s| s.n),
            star_m: r.star.map(|s| s.m),
            star_x: r.star.map(|s| s.x),
            star_bias: r.star.map(|s| s.bias),
            tree_b: r.tree.map(|t| t.b),
            tree_m: r.tree.map(|t| t.m),
            tree_x: r.tree.map(|t| t.x),
            tree_n: r.tree.map(|t| t.n),
            tree_depth: r.tree.map(|t| t.depth),
            tree_bias: r.tree.map(|t| t.bias),
            winner: match r.winner {
                TopologyLabel::Single => "single",
                TopologyLabel::Star => "star",
                TopologyLabel::Tree => "tree",
            }
            .into(),
        })
        .collect())
}

pub fn cmd_design(cfg: &EnvConfig, out: Option<PathBuf>, format: Format) -> Result<()> {
    let env = cfg.to_env()?;
    let budgets = cfg.budgets()?;
    let (reports, rows) = design_pipeline(&env, &budgets, cfg.fan_in_max)?;

    let envelope_rows: Vec<EnvelopeRow> = reports
        .iter()
        .flat_map(|rep| {
            rep.envelope.segments.iter().enumerate().map(move |(i, seg)| EnvelopeRow {
                b: rep.b,
                m: seg.line.m,
                slope: seg.line.slope,
                intercept: seg.line.intercept,
                activation_ln_budget: (i > 0).then_some(seg.activation_t),
            })
        })
        .collect();

    let recommendation_rows: Vec<RecommendationRow> = rows
        .iter()
        .map(|r| RecommendationRow {
            budget: r.budget,
            b: r.b,
            m: r.m,
            x_star: r.x_star,
            n_star: r.n_star,
            l_star: r.l_star,
            regime: format!("{:?}", r.regime).to_lowercase(),
            mu_hat: r.mu_hat,
            diagnostic: diagnostic_name(r.diagnostic).into(),
        })
        .collect();

    let topology = topology_rows(&env, &budgets)?;

    let hash = output::config_hash(cfg)?;
    let path = emit(
        out,
        "design",
        format,
        &hash,
        &[],
        &[
            output::section("envelopes", &envelope_rows)?,
            output::section("recommendations", &recommendation_rows)?,
            output::section("topology", &topology)?,
        ],
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_compare(cfg: &EnvConfig, out: Option<PathBuf>, format: Format) -> Result<()> {
    let env = cfg.to_env()?;
    let budgets = cfg.budgets()?;
    let topology = topology_rows(&env, &budgets)?;
    let hash = output::config_hash(cfg)?;
    let path = emit(out, "compare", format, &hash, &[], &[output::section("rows", &topology)?])?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ContinuousRow {
    pub depth: u32,
    pub mse: f64,
}

pub fn cmd_continuous(cfg: &ContinuousConfig, out: Option<PathBuf>, format: Format) -> Result<()> {
    let b = FanIn::new(cfg.fan_in)?;
    let rho = CorrelationCoefficient::new(cfg.rho_dimensionless)?;
    let env = ContinuousEnv::new(cfg.v0_dimensionless, cfg.sigma_c2_dimensionless, rho, b)?;
    let floor = tree_floor(&env);
    let deeper_is_worse = env.v0 <= floor;
    let mixing = if deeper_is_worse {
        None
    } else {
        continuous_mixing_depth(&env, cfg.epsilon_dimensionless).ok()
    };
    let t = continuous_exponent(b, rho);
    // the scale constant cancels in the compute split; only beta matters
    let scaling = ContinuousScaling::new(1.0, cfg.beta_dimensionless)
        .context("invalid continuous scaling")?;
    let x_star = match continuous_optimal_x(&scaling, t, cfg.coordination_cost_tokens)? {
        ContinuousAllocation::Interior(x) => Some(x),
        ContinuousAllocation::NoInteriorOptimum => None,
    };

    let rows: Vec<ContinuousRow> = (0..=cfg.depth_max)
        .map(|depth| ContinuousRow { depth, mse: tree_mse(&env, depth) })
        .collect();

    let hash = output::config_hash(cfg)?;
    let mut meta = vec![
        ("floor".into(), format!("{floor}")),
        ("contraction".into(), format!("{}", env.contraction())),
        ("exponent_t".into(), format!("{t}")),
        ("deeper_is_worse".into(), format!("{deeper_is_worse}")),
    ];
    if let Some(depth) = mixing {
        meta.push(("mixing_depth".into(), format!("{depth}")));
    }
    match x_star {
        Some(x) => meta.push(("x_star_tokens".into(), format!("{x}"))),
        None => meta.push(("x_star_tokens".into(), "no-interior-optimum".into())),
    }
    let path = emit(out, "continuous", format, &hash, &meta, &[output::section("rows", &rows)?])?;
    println!("wrote {}", path.display());
    Ok(())
}
