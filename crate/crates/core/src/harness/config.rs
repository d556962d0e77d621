//! Experiment configuration: TOML schema, validation, and named presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, HarnessResult};
use crate::bounds::BoundParams;
use crate::env::{BanditEnvSpec, RegressionEnvSpec, ThetaPath};

/// What a config runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Regression,
    Bandit,
    Nonstationary,
    BoundsTable,
}

impl ExperimentKind {
    /// Label used in the `kind` CSV column.
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Regression => "regression",
            ExperimentKind::Bandit => "bandit",
            ExperimentKind::Nonstationary => "nonstationary",
            ExperimentKind::BoundsTable => "bounds_table",
        }
    }
}

/// Algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoKind {
    Ridge,
    Forward,
    UnregularizedForward,
    Oful,
    OfulForward,
    Dlinucb,
    DlinucbForward,
}

impl AlgoKind {
    /// Label used in the `algo` CSV column.
    pub fn label(self) -> &'static str {
        match self {
            AlgoKind::Ridge => "ridge",
            AlgoKind::Forward => "forward",
            AlgoKind::UnregularizedForward => "unregularized_forward",
            AlgoKind::Oful => "oful",
            AlgoKind::OfulForward => "oful_forward",
            AlgoKind::Dlinucb => "dlinucb",
            AlgoKind::DlinucbForward => "dlinucb_forward",
        }
    }

    pub fn is_regression(self) -> bool {
        matches!(
            self,
            AlgoKind::Ridge | AlgoKind::Forward | AlgoKind::UnregularizedForward
        )
    }

    pub fn is_stationary_bandit(self) -> bool {
        matches!(self, AlgoKind::Oful | AlgoKind::OfulForward)
    }

    pub fn is_discounted_bandit(self) -> bool {
        matches!(self, AlgoKind::Dlinucb | AlgoKind::DlinucbForward)
    }
}

/// One algorithm entry: the estimator plus its regularization, and for
/// discounted agents the discount and (optionally) the analysis window used
/// by the bound overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algo: AlgoKind,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
}

impl AlgoConfig {
    /// `gamma` rendered for the CSV column: empty for undiscounted algos.
    pub fn gamma_label(&self) -> String {
        match self.gamma {
            Some(g) => format!("{g}"),
            None => String::new(),
        }
    }
}

/// The environment half of a config; which variant is legal depends on the
/// experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvConfig {
    Regression(RegressionEnvSpec),
    Bandit(BanditEnvSpec),
}

impl EnvConfig {
    pub fn dim(&self) -> usize {
        match self {
            EnvConfig::Regression(s) => s.dim,
            EnvConfig::Bandit(s) => s.dim,
        }
    }

    pub fn horizon(&self) -> u64 {
        match self {
            EnvConfig::Regression(s) => s.horizon,
            EnvConfig::Bandit(s) => s.horizon,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            EnvConfig::Regression(s) => s.sigma,
            EnvConfig::Bandit(s) => s.sigma,
        }
    }

    pub fn x_bound(&self) -> f64 {
        match self {
            EnvConfig::Regression(s) => s.x_bound(),
            EnvConfig::Bandit(s) => s.x_bound(),
        }
    }
}

/// Constants fed to the bound evaluators when they are not implied by the
/// environment. `s_bound` defaults to 1 (unit-ball targets); `x_bound` and
/// `sigma` default to the environment's values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundOverrides {
    pub s_bound: f64,
    pub x_bound: Option<f64>,
    pub sigma: Option<f64>,
}

impl Default for BoundOverrides {
    fn default() -> Self {
        Self {
            s_bound: 1.0,
            x_bound: None,
            sigma: None,
        }
    }
}

/// Optional output location recorded in the config (the CLI `--out` flag
/// overrides it).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub replicates: u32,
    pub master_seed: u64,
    pub delta: f64,
    #[serde(default)]
    pub record_diagnostics: bool,
    pub env: EnvConfig,
    pub algos: Vec<AlgoConfig>,
    #[serde(default)]
    pub bounds: BoundOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> HarnessResult<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> HarnessResult<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.replicates == 0 {
            return Err(HarnessError::Config("replicates must be at least 1".into()));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(HarnessError::Config(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        match &self.env {
            EnvConfig::Regression(s) => s.validate()?,
            EnvConfig::Bandit(s) => s.validate()?,
        }
        if self.algos.is_empty() {
            return Err(HarnessError::Config("no algorithms configured".into()));
        }
        if !self.bounds.s_bound.is_finite() || self.bounds.s_bound < 0.0 {
            return Err(HarnessError::Config(format!(
                "bounds.s_bound = {} must be finite and nonnegative",
                self.bounds.s_bound
            )));
        }
        for algo in &self.algos {
            self.validate_algo(algo)?;
        }
        self.validate_kind_pairing()
    }

    fn validate_algo(&self, algo: &AlgoConfig) -> HarnessResult<()> {
        let label = algo.algo.label();
        if algo.algo == AlgoKind::UnregularizedForward {
            if algo.lambda != 0.0 {
                return Err(HarnessError::Config(format!(
                    "{label} runs without regularization; set lambda = 0 (got {})",
                    algo.lambda
                )));
            }
        } else if !algo.lambda.is_finite() || algo.lambda <= 0.0 {
            return Err(HarnessError::Config(format!(
                "{label} requires lambda > 0 (got {})",
                algo.lambda
            )));
        }
        match algo.gamma {
            Some(g) if !algo.algo.is_discounted_bandit() => {
                return Err(HarnessError::Config(format!(
                    "{label} does not take a discount (gamma = {g})"
                )));
            }
            Some(g) if !(g.is_finite() && 0.0 < g && g <= 1.0) => {
                return Err(HarnessError::Config(format!(
                    "{label} needs gamma in (0, 1] (got {g})"
                )));
            }
            None if algo.algo.is_discounted_bandit() => {
                return Err(HarnessError::Config(format!(
                    "{label} needs an explicit gamma"
                )));
            }
            _ => {}
        }
        if algo.window.is_some() && !algo.algo.is_discounted_bandit() {
            return Err(HarnessError::Config(format!(
                "{label} does not take an analysis window"
            )));
        }
        if algo.window == Some(0) {
            return Err(HarnessError::Config(format!(
                "{label} window must be at least 1"
            )));
        }
        Ok(())
    }

    fn validate_kind_pairing(&self) -> HarnessResult<()> {
        let env_is_regression = matches!(self.env, EnvConfig::Regression(_));
        let env_drifts = matches!(
            &self.env,
            EnvConfig::Bandit(s)
                if matches!(s.theta_path, ThetaPath::Abrupt | ThetaPath::SlowRotation)
        );
        let algo_mismatch = |want: fn(AlgoKind) -> bool| {
            self.algos
                .iter()
                .find(|a| !want(a.algo))
                .map(|a| a.algo.label())
        };
        match self.kind {
            ExperimentKind::Regression => {
                if !env_is_regression {
                    return Err(HarnessError::Config(
                        "regression experiments need a regression env".into(),
                    ));
                }
                if let Some(bad) = algo_mismatch(AlgoKind::is_regression) {
                    return Err(HarnessError::Config(format!(
                        "{bad} is not a regression algorithm"
                    )));
                }
            }
            ExperimentKind::Bandit => {
                if env_is_regression || env_drifts {
                    return Err(HarnessError::Config(
                        "bandit experiments need a bandit env with a constant target".into(),
                    ));
                }
                if let Some(bad) = algo_mismatch(AlgoKind::is_stationary_bandit) {
                    return Err(HarnessError::Config(format!(
                        "{bad} is not a stationary bandit algorithm"
                    )));
                }
            }
            ExperimentKind::Nonstationary => {
                if !env_drifts {
                    return Err(HarnessError::Config(
                        "nonstationary experiments need a drifting bandit env".into(),
                    ));
                }
                if let Some(bad) = algo_mismatch(AlgoKind::is_discounted_bandit) {
                    return Err(HarnessError::Config(format!(
                        "{bad} is not a discounted bandit algorithm"
                    )));
                }
            }
            // The table evaluates closed forms for whatever algos are listed;
            // any env supplies the constants.
            ExperimentKind::BoundsTable => {}
        }
        Ok(())
    }

    /// Bound-evaluator constants for one algorithm entry, or `None` when no
    /// closed-form bound applies (the unregularized estimator).
    pub fn bound_params(&self, algo: &AlgoConfig) -> Option<BoundParams> {
        if algo.algo == AlgoKind::UnregularizedForward {
            return None;
        }
        BoundParams::new(
            self.bounds.sigma.unwrap_or_else(|| self.env.sigma()),
            self.bounds.s_bound,
            self.bounds.x_bound.unwrap_or_else(|| self.env.x_bound()),
            algo.lambda,
            self.delta,
            self.env.dim(),
        )
        .ok()
    }
}

/// Names accepted by [`preset`], in documentation order.
pub const PRESET_NAMES: [&str; 5] = ["fig1", "fig2", "fig3", "abrupt", "slow"];

/// Load one of the built-in experiment presets.
pub fn preset(name: &str) -> HarnessResult<ExperimentConfig> {
    let text = match name {
        "fig1" => include_str!("../../presets/fig1.toml"),
        "fig2" => include_str!("../../presets/fig2.toml"),
        "fig3" => include_str!("../../presets/fig3.toml"),
        "abrupt" => include_str!("../../presets/abrupt.toml"),
        "slow" => include_str!("../../presets/slow.toml"),
        other => {
            return Err(HarnessError::Config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )));
        }
    };
    ExperimentConfig::from_toml_str(text)
}
