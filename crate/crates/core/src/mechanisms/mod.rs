//! LDP queries: randomized response, discretize-and-perturb and regressions.

pub mod dc;
pub mod perturb;
pub mod regression;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Candidate, DiscreteDomain};
use crate::error::{Error, Result};
use crate::num::log_sum_exp;

pub use dc::{AffineMap, DcTerm, TermShape};
pub use perturb::{mean_estimate, perturb_continuous, HighLow};
pub use regression::{dc_decompose, regression_log_likelihood, RegressionKind, RegressionParams};

/// `log Pr(y | x)` for `m`-ary randomized response.
pub fn rr_log_likelihood(m: usize, epsilon: f64, y: usize, x: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("randomized response needs m >= 2, got {m}")));
    }
    if y >= m || x >= m {
        return Err(Error::Domain(format!("index out of range: y={y}, x={x}, m={m}")));
    }
    let denom = crate::num::log_add_exp(((m - 1) as f64).ln(), epsilon);
    Ok(if y == x { epsilon - denom } else { -denom })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MechanismKind {
    /// Output index equals candidate index with boosted probability.
    RandomizedResponse { m: usize },
    /// A regression over numeric candidates; outputs `{low, high}`.
    Regression { kind: RegressionKind, params: RegressionParams },
    /// Explicit `log_probs[output][candidate]`.
    Table { log_probs: Vec<Vec<f64>> },
}

/// A query with a declared DP bound. Outputs are identified by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub id: String,
    pub epsilon: f64,
    pub kind: MechanismKind,
}

/// The true value of the protected object, as seen by `sample`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObjectValue<'a> {
    Index(usize),
    Point(&'a [f64]),
}

impl MechanismSpec {
    fn check_eps(epsilon: f64) -> Result<()> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(())
        } else {
            Err(Error::Construction(format!("epsilon must be positive and finite, got {epsilon}")))
        }
    }

    pub fn randomized_response(id: impl Into<String>, m: usize, epsilon: f64) -> Result<Self> {
        Self::check_eps(epsilon)?;
        if m < 2 {
            return Err(Error::Construction(format!("randomized response needs m >= 2, got {m}")));
        }
        Ok(Self {
            id: id.into(),
            epsilon,
            kind: MechanismKind::RandomizedResponse { m },
        })
    }

    pub fn regression(id: impl Into<String>, kind: RegressionKind, params: RegressionParams, epsilon: f64) -> Result<Self> {
        Self::check_eps(epsilon)?;
        params.validate()?;
        Ok(Self {
            id: id.into(),
            epsilon,
            kind: MechanismKind::Regression { kind, params },
        })
    }

    /// Explicit likelihood table; each candidate column must sum to one.
    pub fn table(id: impl Into<String>, epsilon: f64, log_probs: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_eps(epsilon)?;
        if log_probs.is_empty() {
            return Err(Error::Construction("table needs at least one output".into()));
        }
        let n = log_probs[0].len();
        if n == 0 || log_probs.iter().any(|r| r.len() != n) {
            return Err(Error::Construction("table rows must be non-empty and of equal length".into()));
        }
        if log_probs.iter().flatten().any(|v| v.is_nan() || *v > 1e-12) {
            return Err(Error::Construction("table entries must be log-probabilities".into()));
        }
        for c in 0..n {
            let col: Vec<f64> = log_probs.iter().map(|r| r[c]).collect();
            if log_sum_exp(&col).abs() > 1e-9 {
                return Err(Error::Construction(format!("column {c} does not sum to one")));
            }
        }
        Ok(Self {
            id: id.into(),
            epsilon,
            kind: MechanismKind::Table { log_probs },
        })
    }

    pub fn num_outputs(&self) -> usize {
        match &self.kind {
            MechanismKind::RandomizedResponse { m } => *m,
            MechanismKind::Regression { .. } => 2,
            MechanismKind::Table { log_probs } => log_probs.len(),
        }
    }

    /// Reported value of an output: the candidate index for randomized
    /// response and tables, `a`/`b` for linear kinds, `0`/`1` for logistic.
    pub fn output_value(&self, output: usize) -> Result<f64> {
        if output >= self.num_outputs() {
            return Err(Error::Domain(format!("output {output} not in range of {}", self.id)));
        }
        Ok(match &self.kind {
            MechanismKind::Regression { kind, params } => match (kind, output) {
                (RegressionKind::Logistic, o) => o as f64,
                (_, 0) => params.out_low,
                _ => params.out_high,
            },
            _ => output as f64,
        })
    }

    pub fn is_regression(&self) -> bool {
        matches!(self.kind, MechanismKind::Regression { .. })
    }

    /// `log Pr(output | x)` at a numeric point; regression kinds only.
    pub fn log_likelihood_point(&self, output: usize, x: &[f64]) -> Result<f64> {
        match &self.kind {
            MechanismKind::Regression { kind, params } => {
                regression_log_likelihood(*kind, params, self.epsilon, HighLow::from_index(output)?, x)
            }
            _ => Err(Error::Domain(format!("{} is not defined on numeric points", self.id))),
        }
    }

    /// `log Pr(output | candidate i)`.
    pub fn log_likelihood(&self, domain: &DiscreteDomain, output: usize, i: usize) -> Result<f64> {
        if output >= self.num_outputs() {
            return Err(Error::Domain(format!("output {output} not in range of {}", self.id)));
        }
        let cand = domain
            .get(i)
            .ok_or_else(|| Error::Domain(format!("candidate {i} out of range")))?;
        match &self.kind {
            MechanismKind::RandomizedResponse { m } => {
                if domain.len() != *m {
                    return Err(Error::Domain(format!(
                        "randomized response over {m} values applied to a domain of {}",
                        domain.len()
                    )));
                }
                rr_log_likelihood(*m, self.epsilon, output, i)
            }
            MechanismKind::Regression { .. } => match cand {
                Candidate::Point(p) => self.log_likelihood_point(output, p),
                Candidate::Label(_) => Err(Error::Domain("regression needs numeric candidates".into())),
            },
            MechanismKind::Table { log_probs } => {
                if domain.len() != log_probs[0].len() {
                    return Err(Error::Domain("table width differs from domain size".into()));
                }
                Ok(log_probs[output][i])
            }
        }
    }

    pub fn log_likelihood_vector(&self, domain: &DiscreteDomain, output: usize) -> Result<Vec<f64>> {
        (0..domain.len()).map(|i| self.log_likelihood(domain, output, i)).collect()
    }

    /// Output distribution at the true value, as log-probabilities.
    pub fn output_log_probs(&self, domain: Option<&DiscreteDomain>, x: ObjectValue<'_>) -> Result<Vec<f64>> {
        (0..self.num_outputs())
            .map(|o| match x {
                ObjectValue::Point(p) if self.is_regression() => self.log_likelihood_point(o, p),
                ObjectValue::Index(i) => {
                    let d = domain.ok_or_else(|| Error::Domain("candidate index without a domain".into()))?;
                    self.log_likelihood(d, o, i)
                }
                ObjectValue::Point(_) => Err(Error::Domain(format!("{} needs a candidate index", self.id))),
            })
            .collect()
    }

    /// Draws an output index at the true value.
    pub fn sample<R: Rng + ?Sized>(&self, domain: Option<&DiscreteDomain>, x: ObjectValue<'_>, rng: &mut R) -> Result<usize> {
        let lp = self.output_log_probs(domain, x)?;
        Ok(sample_log_probs(&lp, rng))
    }

    /// The difference-of-convex split of `log Pr(output | x)`; regression kinds only.
    pub fn dc_terms(&self, output: usize) -> Result<(Vec<DcTerm>, Vec<DcTerm>)> {
        match &self.kind {
            MechanismKind::Regression { kind, params } => {
                dc_decompose(*kind, params, self.epsilon, HighLow::from_index(output)?)
            }
            _ => Err(Error::Domain(format!("{} has no difference-of-convex form", self.id))),
        }
    }
}

/// Inverse-CDF draw from unnormalized log-probabilities.
pub fn sample_log_probs<R: Rng + ?Sized>(log_probs: &[f64], rng: &mut R) -> usize {
    let z = log_sum_exp(log_probs);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, lp) in log_probs.iter().enumerate() {
        let p = (lp - z).exp();
        if p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rr_values() {
        assert!((rr_log_likelihood(2, 3f64.ln(), 1, 1).unwrap() - 0.75f64.ln()).abs() < 1e-15);
        assert!((rr_log_likelihood(3, 2f64.ln(), 2, 2).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((rr_log_likelihood(3, 2f64.ln(), 0, 2).unwrap() - 0.25f64.ln()).abs() < 1e-15);
        for m in 2..7 {
            let e = 0.37 * m as f64;
            let d = rr_log_likelihood(m, e, 1, 1).unwrap() - rr_log_likelihood(m, e, 0, 1).unwrap();
            assert!((d - e).abs() < 1e-12);
        }
        assert!(rr_log_likelihood(2, 1.0, 2, 0).is_err());
        assert!(rr_log_likelihood(1, 1.0, 0, 0).is_err());
    }

    #[test]
    fn rr_sampling_frequency() {
        let m = MechanismSpec::randomized_response("rr", 2, 3f64.ln()).unwrap();
        let d = DiscreteDomain::indexed(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| m.sample(Some(&d), ObjectValue::Index(1), &mut rng).unwrap() == 1)
            .count();
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.002);
    }

    #[test]
    fn large_epsilon_is_nearly_deterministic() {
        let m = MechanismSpec::randomized_response("rr", 2, 40.0).unwrap();
        let d = DiscreteDomain::indexed(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..1000).all(|_| m.sample(Some(&d), ObjectValue::Index(1), &mut rng).unwrap() == 1));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let m = MechanismSpec::randomized_response("rr", 4, 1.0).unwrap();
        let d = DiscreteDomain::indexed(4).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| m.sample(Some(&d), ObjectValue::Index(2), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn table_validation() {
        assert!(MechanismSpec::table("t", 1.0, vec![vec![0.5f64.ln()], vec![0.4f64.ln()]]).is_err());
        assert!(MechanismSpec::table("t", 1.0, vec![vec![0.5f64.ln()], vec![0.5f64.ln()]]).is_ok());
    }

    #[test]
    fn output_values() {
        let p = RegressionParams::new(vec![1.0], 0.0, -2.0, 3.0).unwrap();
        let m = MechanismSpec::regression("r", RegressionKind::TruncatedLinear, p.clone(), 1.0).unwrap();
        assert_eq!(m.output_value(0).unwrap(), -2.0);
        assert_eq!(m.output_value(1).unwrap(), 3.0);
        let l = MechanismSpec::regression("l", RegressionKind::Logistic, p, 1.0).unwrap();
        assert_eq!(l.output_value(1).unwrap(), 1.0);
        assert!(l.output_value(2).is_err());
    }
}
