//! Accumulated likelihood `P(x)` over a discrete universe, kept in log domain.

use serde::{Deserialize, Serialize};

use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::num::log_spread;

/// One accepted query: which mechanism ran and which output it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub mechanism_id: String,
    pub output: usize,
}

/// `log P(x)` per candidate, shifted so the smallest finite entry is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodState {
    domain: DiscreteDomain,
    log_p: Vec<f64>,
    query_log: Vec<QueryRecord>,
}

impl LikelihoodState {
    pub fn new(domain: DiscreteDomain) -> Self {
        let n = domain.len();
        Self {
            domain,
            log_p: vec![0.0; n],
            query_log: Vec::new(),
        }
    }

    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn log_p(&self) -> &[f64] {
        &self.log_p
    }

    pub fn query_log(&self) -> &[QueryRecord] {
        &self.query_log
    }

    pub fn num_queries(&self) -> usize {
        self.query_log.len()
    }

    /// `log L = max log P - min log P`; `+inf` once any candidate is ruled out.
    pub fn log_loss(&self) -> f64 {
        log_spread(&self.log_p)
    }

    /// The log-loss the state would have after folding `log_likelihood`, without mutating it.
    pub fn log_loss_after(&self, log_likelihood: &[f64]) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (p, l) in self.log_p.iter().zip(log_likelihood) {
            let v = p + l;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi == f64::NEG_INFINITY {
            // every candidate ruled out: the output cannot occur
            return f64::INFINITY;
        }
        if lo == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            hi - lo
        }
    }

    /// Multiplies `P` by the likelihood of an observed output and renormalizes.
    pub fn fold(&mut self, mechanism_id: &str, output: usize, log_likelihood: &[f64]) -> Result<()> {
        if log_likelihood.len() != self.log_p.len() {
            return Err(Error::Domain(format!(
                "likelihood has {} entries, domain has {}",
                log_likelihood.len(),
                self.log_p.len()
            )));
        }
        if log_likelihood.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::Domain("log-likelihood must be finite or -inf".into()));
        }
        let next: Vec<f64> = self.log_p.iter().zip(log_likelihood).map(|(p, l)| p + l).collect();
        if next.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::DegenerateEvidence);
        }
        let shift = next
            .iter()
            .cloned()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        self.log_p = next.into_iter().map(|v| v - shift).collect();
        self.query_log.push(QueryRecord {
            mechanism_id: mechanism_id.to_string(),
            output,
        });
        Ok(())
    }
}
