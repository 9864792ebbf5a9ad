//! Experiment configuration as read from JSON and command-line flags.

use std::path::Path;

use bayes_ldp::accounting::FilterMode;
use bayes_ldp::mechanisms::{RegressionKind, RegressionParams};
use bayes_ldp::{BoxDomain, Candidate, DiscreteDomain};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    RrCompose,
    WalkExpected,
    LinregCompose,
    LogregCompose,
    Healthcare,
    Meanvar,
    EstimatorCompare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainConfig {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Discrete { candidates: Vec<Candidate> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub kind: RegressionKind,
    pub theta: Vec<f64>,
    pub intercept: f64,
    pub out_low: f64,
    pub out_high: f64,
    pub epsilon: f64,
}

impl RegressionConfig {
    pub fn params(&self) -> Result<RegressionParams, ConfigError> {
        RegressionParams::new(self.theta.clone(), self.intercept, self.out_low, self.out_high)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

fn default_budget() -> f64 {
    1.0
}
fn default_query_eps() -> f64 {
    0.1
}
fn default_trials() -> usize {
    50
}
fn default_group() -> usize {
    10
}
fn default_delta() -> f64 {
    0.01
}
fn default_m() -> usize {
    2
}
fn default_k() -> u32 {
    3
}
fn default_mode() -> FilterMode {
    FilterMode::Bayesian
}
fn default_max_queries() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_budget")]
    pub budget_eps: f64,
    #[serde(default = "default_query_eps")]
    pub per_query_eps: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_group")]
    pub group_size: usize,
    #[serde(default = "default_delta")]
    pub bnb_delta: f64,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub regressions: Vec<RegressionConfig>,
    /// True object value; defaults to the domain centre (first candidate when discrete).
    #[serde(default)]
    pub true_value: Option<Vec<f64>>,
    /// Universe size for randomized-response scenarios.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Budget multiplier for walk and estimator scenarios.
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_mode")]
    pub filter_mode: FilterMode,
    /// Safety cap on queries per trial.
    #[serde(default = "default_max_queries")]
    pub max_queries: usize,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        let mut c: Self = serde_json::from_value(serde_json::json!({ "scenario": scenario }))
            .expect("defaults deserialize");
        match scenario {
            Scenario::RrCompose | Scenario::WalkExpected => c.per_query_eps = 1.0,
            Scenario::Healthcare => c.budget_eps = 4.0,
            Scenario::LinregCompose | Scenario::LogregCompose => c.domain = Some(default_box(9)),
            _ => {}
        }
        c
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if !(self.budget_eps > 0.0 && self.budget_eps.is_finite()) {
            return bad(format!("budget_eps must be positive, got {}", self.budget_eps));
        }
        if !(self.per_query_eps > 0.0 && self.per_query_eps.is_finite()) {
            return bad(format!("per_query_eps must be positive, got {}", self.per_query_eps));
        }
        if self.group_size < 1 {
            return bad("group_size must be at least 1".into());
        }
        if !(self.bnb_delta > 0.0 && self.bnb_delta.is_finite()) {
            return bad(format!("bnb_delta must be positive, got {}", self.bnb_delta));
        }
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if self.max_queries < 1 {
            return bad("max_queries must be at least 1".into());
        }
        for r in &self.regressions {
            r.params()?;
            if !(r.epsilon > 0.0 && r.epsilon.is_finite()) {
                return bad(format!("regression epsilon must be positive, got {}", r.epsilon));
            }
        }
        match &self.domain {
            Some(DomainConfig::Box { .. }) => {
                let d = self.box_domain()?;
                if let Some(x) = &self.true_value {
                    if !d.contains(x, 1e-12) {
                        return bad("true_value lies outside the domain".into());
                    }
                }
                if let Some(r) = self.regressions.iter().find(|r| r.theta.len() != d.dim()) {
                    return bad(format!("regression has {} coefficients, domain has dimension {}", r.theta.len(), d.dim()));
                }
            }
            Some(DomainConfig::Discrete { candidates }) => {
                DiscreteDomain::new(candidates.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            None => {}
        }
        Ok(())
    }

    pub fn box_domain(&self) -> Result<BoxDomain, ConfigError> {
        match &self.domain {
            Some(DomainConfig::Box { lower, upper }) => {
                BoxDomain::new(lower.clone(), upper.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            Some(DomainConfig::Discrete { .. }) => Err(ConfigError::Invalid("scenario needs a box domain".into())),
            None => BoxDomain::new(vec![-1.0; 9], vec![1.0; 9]).map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    pub fn true_point(&self) -> Result<Vec<f64>, ConfigError> {
        match &self.true_value {
            Some(x) => Ok(x.clone()),
            None => Ok(self.box_domain()?.center()),
        }
    }
}

pub fn default_box(dim: usize) -> DomainConfig {
    DomainConfig::Box {
        lower: vec![-1.0; dim],
        upper: vec![1.0; dim],
    }
}
