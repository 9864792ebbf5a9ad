//! Certified realized-loss bounds for queries on a continuous object.

use serde::{Deserialize, Serialize};

use super::bnb::{branch_and_bound_min, BnbOptions};
use super::objective::DcObjective;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::mechanisms::{DcTerm, MechanismSpec};

/// The observed output of one query, as its `f - g` split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryTerms {
    pub id: String,
    pub f_terms: Vec<DcTerm>,
    pub g_terms: Vec<DcTerm>,
}

impl QueryTerms {
    pub fn from_mechanism(mech: &MechanismSpec, output: usize) -> Result<Self> {
        let (f_terms, g_terms) = mech.dc_terms(output)?;
        Ok(Self {
            id: mech.id.clone(),
            f_terms,
            g_terms,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let f: f64 = self.f_terms.iter().map(|t| t.eval(x)).sum();
        let g: f64 = self.g_terms.iter().map(|t| t.eval(x)).sum();
        f - g
    }
}

/// Sum of several queries' log-likelihoods as one objective.
pub fn combined_objective(queries: &[QueryTerms], domain: &BoxDomain) -> Result<DcObjective> {
    let f = queries.iter().flat_map(|q| q.f_terms.iter().cloned()).collect();
    let g = queries.iter().flat_map(|q| q.g_terms.iter().cloned()).collect();
    DcObjective::new(f, g, domain.clone())
}

/// Bounds on `max log P` and `min log P` of one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRange {
    pub max_lb: f64,
    pub max_ub: f64,
    pub min_lb: f64,
    pub min_ub: f64,
    pub converged: bool,
    pub nodes: usize,
    pub argmax: Vec<f64>,
    pub argmin: Vec<f64>,
}

impl GroupRange {
    /// Certified upper bound on `max log P - min log P`.
    pub fn range_ub(&self) -> f64 {
        (self.max_ub - self.min_lb).max(0.0)
    }
}

pub fn group_log_range(queries: &[QueryTerms], domain: &BoxDomain, opts: &BnbOptions) -> Result<GroupRange> {
    if queries.is_empty() {
        let c = domain.center();
        return Ok(GroupRange {
            max_lb: 0.0,
            max_ub: 0.0,
            min_lb: 0.0,
            min_ub: 0.0,
            converged: true,
            nodes: 0,
            argmax: c.clone(),
            argmin: c,
        });
    }
    let obj = combined_objective(queries, domain)?;
    let lo = branch_and_bound_min(&obj, opts)?;
    let hi = branch_and_bound_min(&obj.negated(), opts)?;
    Ok(GroupRange {
        max_lb: -hi.ub,
        max_ub: -hi.lb,
        min_lb: lo.lb,
        min_ub: lo.ub,
        converged: lo.converged && hi.converged,
        nodes: lo.nodes + hi.nodes,
        argmax: hi.argmin,
        argmin: lo.argmin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBounds {
    pub log_lb: f64,
    pub log_ub: f64,
    pub converged: bool,
    pub groups: Vec<GroupRange>,
}

impl LossBounds {
    pub fn loss_lb(&self) -> f64 {
        self.log_lb.exp()
    }

    pub fn loss_ub(&self) -> f64 {
        self.log_ub.exp()
    }
}

/// Realized loss bracket with queries bounded in consecutive groups of `group_size`.
pub fn realized_loss_bounds(
    queries: &[QueryTerms],
    domain: &BoxDomain,
    group_size: usize,
    delta: f64,
) -> Result<LossBounds> {
    realized_loss_bounds_with(queries, domain, group_size, &BnbOptions::with_delta(delta))
}

pub fn realized_loss_bounds_with(
    queries: &[QueryTerms],
    domain: &BoxDomain,
    group_size: usize,
    opts: &BnbOptions,
) -> Result<LossBounds> {
    if group_size == 0 {
        return Err(Error::Domain("group size must be at least 1".into()));
    }
    if queries.is_empty() {
        return Ok(LossBounds {
            log_lb: 0.0,
            log_ub: 0.0,
            converged: true,
            groups: vec![],
        });
    }
    let groups = queries
        .chunks(group_size)
        .map(|g| group_log_range(g, domain, opts))
        .collect::<Result<Vec<_>>>()?;
    let log_ub = groups.iter().map(|g| g.max_ub).sum::<f64>() - groups.iter().map(|g| g.min_lb).sum::<f64>();
    // any two points witness a lower bound on the exact spread
    let total = |x: &[f64]| queries.iter().map(|q| q.eval(x)).sum::<f64>();
    let vals: Vec<f64> = groups
        .iter()
        .flat_map(|g| [total(&g.argmax), total(&g.argmin)])
        .collect();
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LossBounds {
        log_lb: (hi - lo).max(0.0),
        log_ub: log_ub.max(0.0),
        converged: groups.iter().all(|g| g.converged),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{RegressionKind, RegressionParams};

    #[test]
    fn empty_is_unit() {
        let d = BoxDomain::cube(2, -1.0, 1.0).unwrap();
        let b = realized_loss_bounds(&[], &d, 10, 0.01).unwrap();
        assert_eq!((b.loss_lb(), b.loss_ub()), (1.0, 1.0));
        assert!(realized_loss_bounds(&[], &d, 0, 0.01).is_err());
    }

    #[test]
    fn single_full_range_linear_query_realizes_epsilon() {
        let eps = 0.8;
        let d = BoxDomain::cube(1, -1.0, 1.0).unwrap();
        let p = RegressionParams::new(vec![1.0], 0.0, -1.0, 1.0).unwrap();
        let m = MechanismSpec::regression("q", RegressionKind::Linear, p, eps).unwrap();
        for o in 0..2 {
            let q = QueryTerms::from_mechanism(&m, o).unwrap();
            let b = realized_loss_bounds(&[q], &d, 10, 0.01).unwrap();
            assert!(b.log_lb <= eps + 1e-9 && b.log_ub >= eps - 1e-9);
            assert!(b.log_ub - eps <= 0.02);
            assert!(b.converged);
        }
    }
}
