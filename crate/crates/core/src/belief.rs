//! Priors, posteriors and statements over a discrete candidate universe.

use serde::{Deserialize, Serialize};

use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;
use crate::num::log_sum_exp;

const NORM_TOL: f64 = 1e-12;

/// Log-weights `log Q(x)` aligned with the candidate order of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    log_weights: Vec<f64>,
}

impl Belief {
    /// Builds a belief from unnormalized log-weights and normalizes it.
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::Construction("belief over an empty universe".into()));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::Construction("belief log-weights must be finite or -inf".into()));
        }
        let z = log_sum_exp(&log_weights);
        if z == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence);
        }
        Ok(Self {
            log_weights: log_weights.into_iter().map(|w| w - z).collect(),
        })
    }

    /// Builds a belief from nonnegative (unnormalized) probabilities.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Construction("probabilities must be finite and nonnegative".into()));
        }
        Self::from_log_weights(probs.iter().map(|p| p.ln()).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_log_weights(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn is_normalized(&self) -> bool {
        (self.probs().iter().sum::<f64>() - 1.0).abs() <= NORM_TOL
    }

    /// Bayes update with a likelihood vector `log Pr(y | x)`.
    pub fn update(&self, log_likelihood: &[f64]) -> Result<Self> {
        if log_likelihood.len() != self.len() {
            return Err(Error::Domain(format!(
                "likelihood has {} entries, belief has {}",
                log_likelihood.len(),
                self.len()
            )));
        }
        let joint: Vec<f64> = self
            .log_weights
            .iter()
            .zip(log_likelihood)
            .map(|(w, l)| w + l)
            .collect();
        Self::from_log_weights(joint)
    }
}

/// Correctness function `f: X -> [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    correctness: Vec<f64>,
}

impl Statement {
    pub fn new(correctness: Vec<f64>) -> Result<Self> {
        if correctness.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Construction("statement values must lie in [0, 1]".into()));
        }
        if !correctness.iter().any(|v| *v > 0.0) {
            return Err(Error::Construction("statement must be positive somewhere".into()));
        }
        Ok(Self { correctness })
    }

    /// Indicator of a single candidate.
    pub fn indicator(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::Domain(format!("indicator index {at} out of range {n}")));
        }
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Self::new(v)
    }

    pub fn correctness(&self) -> &[f64] {
        &self.correctness
    }
}

/// Posterior `Q(x | y)` proportional to `Pr(y | x) Q(x)`.
pub fn posterior_belief(
    prior: &Belief,
    mech: &MechanismSpec,
    domain: &DiscreteDomain,
    output: usize,
) -> Result<Belief> {
    let ll = mech.log_likelihood_vector(domain, output)?;
    prior.update(&ll)
}

/// `Q(f) = sum_x f(x) Q(x)`.
pub fn statement_confidence(belief: &Belief, stmt: &Statement) -> Result<f64> {
    if belief.len() != stmt.correctness.len() {
        return Err(Error::Domain("statement and belief sizes differ".into()));
    }
    let c: f64 = belief
        .log_weights
        .iter()
        .zip(&stmt.correctness)
        .map(|(w, f)| f * w.exp())
        .sum();
    Ok(c.clamp(0.0, 1.0))
}

/// Ratio `Q(f | y) / Q(f)`.
pub fn knowledge_gain(
    prior: &Belief,
    stmt: &Statement,
    mech: &MechanismSpec,
    domain: &DiscreteDomain,
    output: usize,
) -> Result<f64> {
    let before = statement_confidence(prior, stmt)?;
    if before <= 0.0 {
        return Err(Error::ZeroConfidence);
    }
    let post = posterior_belief(prior, mech, domain, output)?;
    Ok(statement_confidence(&post, stmt)? / before)
}
