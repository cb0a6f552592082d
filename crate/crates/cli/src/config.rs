//! TOML run configuration and its translation into library types.

use std::path::PathBuf;

use serde::Deserialize;

use ofa_core::game::{AuctionConfig, BidSpread, BuilderParams};
use ofa_core::stake::{PaymentRule, RewardModel, StakeConfig};

use crate::ConfigError;

/// Top-level configuration file. Sections are optional; each subcommand
/// checks for the ones it needs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub game: Option<GameSpec>,
    pub stakes: Option<StakesSpec>,
    pub sweep: Option<SweepSpec>,
    pub simulate: Option<SimulateSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub mu: f64,
    pub epsilon: Option<f64>,
    /// Common scale for builders given as `v_weight`.
    pub v_base: Option<f64>,
    /// Common capability ratio for builders without their own `f_over_v`.
    pub f_over_v: Option<f64>,
    pub builders: Vec<BuilderSpec>,
}

/// One builder, either absolute (`f_bar`/`v_bar`) or relative
/// (`v_weight` scaled by `game.v_base`, times an `f_over_v` ratio).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderSpec {
    pub f_bar: Option<f64>,
    pub v_bar: Option<f64>,
    pub v_weight: Option<f64>,
    pub f_over_v: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// One of `f_over_v`, `v_base`, `game.mu`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StakesSpec {
    pub initial_stakes: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub reward: RewardSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    pub mu: f64,
    pub beta_v: f64,
    pub bids: Vec<f64>,
    /// Half-width of a uniform spread of realized bids around their means;
    /// omitted means point-mass bids.
    pub spread_delta: Option<f64>,
    /// `mu` (default) or `one_minus_mu`.
    pub payment_rule: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub replications: usize,
    #[serde(default)]
    pub emit_trajectories: bool,
    pub histogram_bins: Option<usize>,
}

impl GameSpec {
    /// Resolve into library parameters, applying `v_base`/`f_over_v`
    /// defaults to relative builders.
    pub fn resolve(&self) -> anyhow::Result<AuctionConfig> {
        let mut builders = Vec::with_capacity(self.builders.len());
        for (i, spec) in self.builders.iter().enumerate() {
            let v_bar = match (spec.v_bar, spec.v_weight) {
                (Some(v), None) => v,
                (None, Some(w)) => w * self.v_base.unwrap_or(1.0),
                _ => {
                    return Err(ConfigError(format!(
                        "builder {i}: specify exactly one of v_bar or v_weight"
                    ))
                    .into())
                }
            };
            let f_bar = match (spec.f_bar, spec.f_over_v.or(self.f_over_v)) {
                (Some(f), None) => f,
                (None, Some(ratio)) => ratio * v_bar,
                (Some(_), Some(_)) => {
                    return Err(ConfigError(format!(
                        "builder {i}: f_bar conflicts with an f_over_v ratio"
                    ))
                    .into())
                }
                (None, None) => {
                    return Err(ConfigError(format!(
                        "builder {i}: specify f_bar or an f_over_v ratio"
                    ))
                    .into())
                }
            };
            builders.push(
                BuilderParams::from_means(f_bar, v_bar)
                    .map_err(|e| ConfigError(format!("builder {i}: {e}")))?,
            );
        }
        let config = match self.epsilon {
            Some(epsilon) => AuctionConfig::new(self.mu, epsilon, builders),
            None => AuctionConfig::with_default_epsilon(self.mu, builders),
        };
        Ok(config.map_err(|e| ConfigError(e.to_string()))?)
    }

    /// Copy of the spec with the swept parameter overridden.
    pub fn with_override(&self, parameter: &str, value: f64) -> anyhow::Result<GameSpec> {
        let mut spec = self.clone();
        match parameter {
            "f_over_v" => spec.f_over_v = Some(value),
            "v_base" => spec.v_base = Some(value),
            "game.mu" => spec.mu = value,
            other => {
                return Err(ConfigError(format!(
                    "unknown sweep parameter {other:?}; expected f_over_v, v_base, or game.mu"
                ))
                .into())
            }
        }
        Ok(spec)
    }
}

impl StakesSpec {
    pub fn resolve(&self) -> anyhow::Result<StakeConfig> {
        let r = &self.reward;
        let payment_rule = match r.payment_rule.as_deref() {
            None | Some("mu") => PaymentRule::Mu,
            Some("one_minus_mu") => PaymentRule::OneMinusMu,
            Some(other) => {
                return Err(ConfigError(format!(
                    "unknown payment_rule {other:?}; expected mu or one_minus_mu"
                ))
                .into())
            }
        };
        let spread = match r.spread_delta {
            None => BidSpread::PointMass,
            Some(delta) => BidSpread::Uniform { delta },
        };
        let supports = r
            .bids
            .iter()
            .map(|&h| match r.spread_delta {
                None => (h, h),
                Some(delta) => ((h - delta).max(f64::MIN_POSITIVE), h + delta),
            })
            .collect();
        let reward = RewardModel::new(r.mu, r.beta_v, r.bids.clone(), supports, spread, payment_rule)
            .map_err(|e| ConfigError(e.to_string()))?;
        Ok(StakeConfig::new(
            self.initial_stakes.clone(),
            self.alpha,
            self.gamma,
            reward,
            self.horizon,
        )
        .map_err(|e| ConfigError(e.to_string()))?)
    }
}

pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
    Ok(toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?)
}
