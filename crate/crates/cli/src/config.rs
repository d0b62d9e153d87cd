//! Flat TOML run configs. Keys carry explicit units (tokens, dimensionless);
//! unknown keys are rejected; `--set key=value` flags override file values.

use anyhow::{anyhow, bail, Context, Result};
use orgscale::budget::{CostModel, EnvironmentParams, FidelityCurve};
use orgscale::maps::CorrelationCoefficient;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Loads the optional config file, applies `--set` overrides, and
/// deserializes into the command-specific record.
pub fn resolve<T: serde::de::DeserializeOwned>(
    config_path: Option<&Path>,
    overrides: &[String],
) -> Result<T> {
    let mut table: toml::Table = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            text.parse().context("config is not valid TOML")?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("override must be key=value, got {item:?}"))?;
        let mut doc: toml::Table = format!("v = {value}")
            .parse()
            .or_else(|_| format!("v = \"{value}\"").parse())
            .map_err(|e| anyhow!("cannot parse override value {value:?}: {e}"))?;
        let parsed = doc.remove("v").expect("override value just inserted");
        table.insert(key.trim().to_string(), parsed);
    }
    T::deserialize(table).map_err(|e| anyhow!("invalid config: {e}"))
}

fn default_fan_in() -> u64 {
    5
}
fn default_u_steps() -> u32 {
    101
}
fn default_one() -> f64 {
    1.0
}
fn default_grid_steps() -> u32 {
    50
}
fn default_beta() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.6
}
fn default_mu0() -> f64 {
    0.05
}
fn default_rho_max() -> f64 {
    0.8
}
fn default_rho_steps() -> u32 {
    17
}
fn default_depths() -> Vec<u32> {
    vec![10, 30]
}
fn default_replicates() -> u64 {
    50_000
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsConfig {
    #[serde(default = "default_fan_in")]
    pub fan_in: u64,
    #[serde(default)]
    pub rho_dimensionless: f64,
    #[serde(default = "default_one")]
    pub gamma_dimensionless: f64,
    #[serde(default)]
    pub u_min: f64,
    #[serde(default = "default_one")]
    pub u_max: f64,
    #[serde(default = "default_u_steps")]
    pub u_steps: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    #[serde(default = "default_fan_in")]
    pub fan_in: u64,
    #[serde(default = "default_beta")]
    pub beta_dimensionless: f64,
    #[serde(default = "default_grid_steps")]
    pub rho_steps: u32,
    #[serde(default = "default_grid_steps")]
    pub gamma_steps: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_fan_in")]
    pub fan_in: u64,
    #[serde(default = "default_gamma")]
    pub gamma_dimensionless: f64,
    #[serde(default = "default_mu0")]
    pub mu0_dimensionless: f64,
    #[serde(default)]
    pub rho_min: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_rho_steps")]
    pub rho_steps: u32,
    #[serde(default = "default_depths")]
    pub depths: Vec<u32>,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_k_bin() -> f64 {
    0.02
}
fn default_window() -> u32 {
    400
}
fn default_budget_min() -> f64 {
    1e3
}
fn default_budget_max() -> f64 {
    1e8
}
fn default_budget_steps() -> u32 {
    26
}
fn default_edge_multiplier() -> f64 {
    2.0
}
fn default_fan_in_max() -> u32 {
    21
}
fn default_gamma_e0() -> f64 {
    0.5
}
fn default_gamma_tau() -> f64 {
    20.0
}

/// Shared measurable-environment block for design and compare.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    #[serde(default = "default_beta")]
    pub beta_dimensionless: f64,
    #[serde(default = "default_k_bin")]
    pub k_bin_dimensionless: f64,
    #[serde(default = "default_one")]
    pub c_cont_dimensionless: f64,
    #[serde(default)]
    pub rho_dimensionless: f64,
    #[serde(default = "default_window")]
    pub context_window_tokens: u32,
    #[serde(default = "default_budget_min")]
    pub budget_tokens_min: f64,
    #[serde(default = "default_budget_max")]
    pub budget_tokens_max: f64,
    #[serde(default = "default_budget_steps")]
    pub budget_steps: u32,
    #[serde(default = "default_edge_multiplier")]
    pub edge_cost_multiplier_dimensionless: f64,
    #[serde(default = "default_fan_in_max")]
    pub fan_in_max: u32,
    #[serde(default = "default_gamma_e0")]
    pub gamma_e0_dimensionless: f64,
    #[serde(default = "default_gamma_tau")]
    pub gamma_tau_tokens: f64,
    /// Tabulated (message tokens, gamma) pairs; overrides the parametric
    /// fidelity curve when present.
    #[serde(default)]
    pub gamma_table: Option<Vec<(u32, f64)>>,
}

impl EnvConfig {
    pub fn to_env(&self) -> Result<EnvironmentParams> {
        let gamma_curve = match &self.gamma_table {
            Some(points) => FidelityCurve::Tabulated(points.clone()),
            None => FidelityCurve::Parametric {
                e0: self.gamma_e0_dimensionless,
                tau: self.gamma_tau_tokens,
            },
        };
        let env = EnvironmentParams {
            beta: self.beta_dimensionless,
            k_bin: self.k_bin_dimensionless,
            c_cont: self.c_cont_dimensionless,
            rho: CorrelationCoefficient::new(self.rho_dimensionless)?,
            gamma_curve,
            sigma_curve: None,
            w: self.context_window_tokens,
            budget: self.budget_tokens_max,
            cost: CostModel {
                edge_multiplier: self.edge_cost_multiplier_dimensionless,
            },
        };
        env.validate()?;
        Ok(env)
    }

    /// Log-spaced budget grid from min to max inclusive.
    pub fn budgets(&self) -> Result<Vec<f64>> {
        if !(self.budget_tokens_min > 0.0) || self.budget_tokens_max < self.budget_tokens_min {
            bail!("budget range must satisfy 0 < min <= max");
        }
        if self.budget_steps < 1 {
            bail!("budget_steps must be >= 1");
        }
        if self.budget_steps == 1 {
            return Ok(vec![self.budget_tokens_min]);
        }
        let lo = self.budget_tokens_min.ln();
        let hi = self.budget_tokens_max.ln();
        let n = self.budget_steps as usize;
        Ok((0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect())
    }
}

fn default_v0() -> f64 {
    0.1
}
fn default_sigma_c2() -> f64 {
    0.01
}
fn default_depth_max() -> u32 {
    20
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_c0_tokens() -> f64 {
    25.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousConfig {
    #[serde(default = "default_v0")]
    pub v0_dimensionless: f64,
    #[serde(default = "default_sigma_c2")]
    pub sigma_c2_dimensionless: f64,
    #[serde(default = "default_fan_in")]
    pub fan_in: u64,
    #[serde(default)]
    pub rho_dimensionless: f64,
    #[serde(default = "default_depth_max")]
    pub depth_max: u32,
    #[serde(default = "default_epsilon")]
    pub epsilon_dimensionless: f64,
    #[serde(default = "default_beta")]
    pub beta_dimensionless: f64,
    #[serde(default = "default_c0_tokens")]
    pub coordination_cost_tokens: f64,
}
