//! Bayesian and simplified privacy filters with a dry-run/execute contract.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{OdometerReading, TraceRecord, TIE_SLACK};
use crate::dcopt::{group_log_range, BnbOptions, DcObjective, GroupRange, QueryTerms};
use crate::domain::{BoxDomain, DiscreteDomain};
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodState;
use crate::mechanisms::{MechanismSpec, ObjectValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Accept iff every output keeps the realized loss within budget.
    Bayesian,
    /// Accept iff current log-loss plus the declared epsilon fits the budget.
    Simplified,
}

/// Settings for objects living in a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousConfig {
    pub domain: BoxDomain,
    pub group_size: usize,
    pub bnb: BnbOptions,
}

impl ContinuousConfig {
    pub fn new(domain: BoxDomain, group_size: usize, delta: f64) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::Construction("group size must be at least 1".into()));
        }
        Ok(Self {
            domain,
            group_size,
            bnb: BnbOptions::with_delta(delta),
        })
    }
}

#[derive(Clone, Debug)]
struct ContinuousState {
    cfg: ContinuousConfig,
    closed: Vec<GroupRange>,
    closed_sum: f64,
    open: Vec<QueryTerms>,
    open_range: Option<GroupRange>,
    /// Declared epsilons of the open group; no group can lose more than their sum.
    open_eps: f64,
    nonconverged: usize,
}

impl ContinuousState {
    fn open_ub(&self) -> f64 {
        self.open_range.as_ref().map_or(0.0, |g| g.range_ub().min(self.open_eps))
    }

    fn log_loss(&self) -> f64 {
        self.closed_sum + self.open_ub()
    }

    /// Bound after appending `q`: `(projected log-loss, range of the resulting open group, starts new group)`.
    fn project(&self, q: QueryTerms, eps: f64) -> Result<(f64, GroupRange, bool)> {
        let fresh = self.open.len() >= self.cfg.group_size;
        let (base, group, cap) = if fresh {
            (self.closed_sum + self.open_ub(), vec![q], eps)
        } else {
            let mut g = self.open.clone();
            g.push(q);
            (self.closed_sum, g, self.open_eps + eps)
        };
        let r = group_log_range(&group, &self.cfg.domain, &self.cfg.bnb)?;
        Ok((base + r.range_ub().min(cap), r, fresh))
    }
}

#[derive(Clone, Debug)]
enum Backend {
    Discrete(LikelihoodState),
    Continuous(ContinuousState),
}

/// Permission to execute one query, valid only for the state that issued it.
#[derive(Clone, Debug, PartialEq)]
pub struct Admission {
    version: u64,
    mechanism_id: String,
    /// Projected log-loss per output, when computed by the check.
    projected: Vec<Option<f64>>,
    ranges: Vec<Option<(GroupRange, bool)>>,
}

impl Admission {
    pub fn mechanism_id(&self) -> &str {
        &self.mechanism_id
    }

    /// Worst projected log-loss over outputs, if the check computed it.
    pub fn worst_projected(&self) -> Option<f64> {
        let v: Option<Vec<f64>> = self.projected.iter().cloned().collect();
        v.map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub reason: String,
    /// The log-loss that triggered the rejection.
    pub log_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    Accept(Admission),
    Reject(Rejection),
}

impl Decision {
    pub fn is_accept(&self) -> bool {
        matches!(self, Decision::Accept(_))
    }
}

/// Budget, accumulated evidence and the record of decisions for one object.
#[derive(Clone, Debug)]
pub struct FilterState {
    budget_eps: f64,
    mode: FilterMode,
    backend: Backend,
    halted: bool,
    version: u64,
    trace: Vec<TraceRecord>,
}

impl FilterState {
    fn check_budget(budget_eps: f64) -> Result<()> {
        if budget_eps > 0.0 && budget_eps.is_finite() {
            Ok(())
        } else {
            Err(Error::Construction(format!("budget must be positive and finite, got {budget_eps}")))
        }
    }

    pub fn discrete(domain: DiscreteDomain, budget_eps: f64, mode: FilterMode) -> Result<Self> {
        Self::check_budget(budget_eps)?;
        Ok(Self {
            budget_eps,
            mode,
            backend: Backend::Discrete(LikelihoodState::new(domain)),
            halted: false,
            version: 0,
            trace: Vec::new(),
        })
    }

    pub fn continuous(cfg: ContinuousConfig, budget_eps: f64, mode: FilterMode) -> Result<Self> {
        Self::check_budget(budget_eps)?;
        Ok(Self {
            budget_eps,
            mode,
            backend: Backend::Continuous(ContinuousState {
                cfg,
                closed: Vec::new(),
                closed_sum: 0.0,
                open: Vec::new(),
                open_range: None,
                open_eps: 0.0,
                nonconverged: 0,
            }),
            halted: false,
            version: 0,
            trace: Vec::new(),
        })
    }

    pub fn budget_eps(&self) -> f64 {
        self.budget_eps
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn halt(&mut self) {
        self.halted = true;
        self.version += 1;
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn num_accepted(&self) -> usize {
        match &self.backend {
            Backend::Discrete(s) => s.num_queries(),
            Backend::Continuous(c) => c.closed.len() * c.cfg.group_size + c.open.len(),
        }
    }

    /// The discrete likelihood state, if this filter tracks one.
    pub fn likelihood(&self) -> Option<&LikelihoodState> {
        match &self.backend {
            Backend::Discrete(s) => Some(s),
            Backend::Continuous(_) => None,
        }
    }

    /// Number of continuous-domain bound computations that hit the node budget.
    pub fn nonconverged_bounds(&self) -> usize {
        match &self.backend {
            Backend::Discrete(_) => 0,
            Backend::Continuous(c) => c.nonconverged,
        }
    }

    /// `log L` of the accepted outputs: exact for discrete objects, a certified upper bound otherwise.
    pub fn log_loss(&self) -> f64 {
        match &self.backend {
            Backend::Discrete(s) => s.log_loss(),
            Backend::Continuous(c) => c.log_loss(),
        }
    }

    pub fn odometer(&self) -> OdometerReading {
        let l = self.log_loss();
        OdometerReading {
            log_loss: l,
            headroom: self.budget_eps - l,
        }
    }

    fn within(&self, log_loss: f64) -> bool {
        log_loss <= self.budget_eps + TIE_SLACK
    }

    /// Dry run using the filter's configured mode.
    pub fn check(&self, mech: &MechanismSpec) -> Result<Decision> {
        match self.mode {
            FilterMode::Bayesian => self.check_bayesian(mech),
            FilterMode::Simplified => self.check_simplified(mech),
        }
    }

    fn halted_decision(&self) -> Decision {
        Decision::Reject(Rejection {
            reason: "filter is halted".into(),
            log_loss: self.log_loss(),
        })
    }

    pub fn check_bayesian(&self, mech: &MechanismSpec) -> Result<Decision> {
        if self.halted {
            return Ok(self.halted_decision());
        }
        let k = mech.num_outputs();
        let mut projected = Vec::with_capacity(k);
        let mut ranges = Vec::with_capacity(k);
        let mut worst = 0.0f64;
        for o in 0..k {
            let (p, r) = match &self.backend {
                Backend::Discrete(s) => (s.log_loss_after(&mech.log_likelihood_vector(s.domain(), o)?), None),
                Backend::Continuous(c) => match c.project(QueryTerms::from_mechanism(mech, o)?, mech.epsilon) {
                    Ok((p, r, fresh)) => (p, Some((r, fresh))),
                    Err(Error::Construction(msg)) => {
                        return Ok(Decision::Reject(Rejection {
                            reason: format!("output {o} cannot be bounded: {msg}"),
                            log_loss: f64::INFINITY,
                        }))
                    }
                    Err(e) => return Err(e),
                },
            };
            worst = worst.max(p);
            if !self.within(p) {
                return Ok(Decision::Reject(Rejection {
                    reason: format!("output {o} would raise log-loss to {p}"),
                    log_loss: p,
                }));
            }
            projected.push(Some(p));
            ranges.push(r);
        }
        Ok(Decision::Accept(Admission {
            version: self.version,
            mechanism_id: mech.id.clone(),
            projected,
            ranges,
        }))
    }

    pub fn check_simplified(&self, mech: &MechanismSpec) -> Result<Decision> {
        if self.halted {
            return Ok(self.halted_decision());
        }
        if let Backend::Continuous(c) = &self.backend {
            for o in 0..mech.num_outputs() {
                let q = QueryTerms::from_mechanism(mech, o)?;
                if let Err(Error::Construction(msg)) = DcObjective::new(q.f_terms, q.g_terms, c.cfg.domain.clone()) {
                    return Ok(Decision::Reject(Rejection {
                        reason: format!("output {o} cannot be bounded: {msg}"),
                        log_loss: f64::INFINITY,
                    }));
                }
            }
        }
        let p = self.log_loss() + mech.epsilon;
        if !self.within(p) {
            return Ok(Decision::Reject(Rejection {
                reason: format!("log-loss {} plus epsilon {} exceeds budget", self.log_loss(), mech.epsilon),
                log_loss: p,
            }));
        }
        Ok(Decision::Accept(self.admit_unchecked(mech)))
    }

    /// An admission with no precomputed projections.
    pub(crate) fn admit_unchecked(&self, mech: &MechanismSpec) -> Admission {
        let k = mech.num_outputs();
        Admission {
            version: self.version,
            mechanism_id: mech.id.clone(),
            projected: vec![None; k],
            ranges: vec![None; k],
        }
    }

    /// Samples an output at the true value and folds it into the state.
    pub fn execute<R: Rng + ?Sized>(
        &mut self,
        admission: &Admission,
        mech: &MechanismSpec,
        x: ObjectValue<'_>,
        rng: &mut R,
    ) -> Result<usize> {
        if admission.version != self.version || admission.mechanism_id != mech.id {
            return Err(Error::ContractViolation(format!(
                "admission for '{}' (state {}) does not match '{}' at state {}",
                admission.mechanism_id, admission.version, mech.id, self.version
            )));
        }
        if admission.ranges.len() != mech.num_outputs() {
            return Err(Error::ContractViolation("admission was issued for a different output set".into()));
        }
        let domain = match &self.backend {
            Backend::Discrete(s) => Some(s.domain().clone()),
            Backend::Continuous(_) => None,
        };
        let y = mech.sample(domain.as_ref(), x, rng)?;
        self.fold(admission, mech, y)?;
        Ok(y)
    }

    fn fold(&mut self, admission: &Admission, mech: &MechanismSpec, y: usize) -> Result<()> {
        match &mut self.backend {
            Backend::Discrete(s) => {
                let ll = mech.log_likelihood_vector(s.domain(), y)?;
                s.fold(&mech.id, y, &ll)?;
            }
            Backend::Continuous(c) => {
                let q = QueryTerms::from_mechanism(mech, y)?;
                let (range, fresh) = match &admission.ranges[y] {
                    Some(r) => r.clone(),
                    None => {
                        let (_, r, fresh) = c.project(q.clone(), mech.epsilon)?;
                        (r, fresh)
                    }
                };
                if !range.converged {
                    c.nonconverged += 1;
                }
                if fresh {
                    c.closed_sum += c.open_ub();
                    let prev = c.open_range.take().expect("full group has a range");
                    c.closed.push(prev);
                    c.open.clear();
                    c.open_eps = 0.0;
                }
                c.open.push(q);
                c.open_eps += mech.epsilon;
                c.open_range = Some(range);
            }
        }
        self.version += 1;
        let rec = TraceRecord {
            query_id: mech.id.clone(),
            epsilon: mech.epsilon,
            decision: "accept".into(),
            output: Some(mech.output_value(y)?),
            log_loss_after: self.log_loss(),
        };
        self.trace.push(rec);
        Ok(())
    }

    /// Records a rejected query in the trace without changing the evidence.
    pub fn record_rejection(&mut self, mech: &MechanismSpec) {
        let rec = TraceRecord {
            query_id: mech.id.clone(),
            epsilon: mech.epsilon,
            decision: "reject".into(),
            output: None,
            log_loss_after: self.log_loss(),
        };
        self.trace.push(rec);
    }

    /// Check, then execute on acceptance. Returns the output index or `None` on rejection.
    pub fn submit<R: Rng + ?Sized>(
        &mut self,
        mech: &MechanismSpec,
        x: ObjectValue<'_>,
        rng: &mut R,
    ) -> Result<Option<usize>> {
        match self.check(mech)? {
            Decision::Accept(a) => self.execute(&a, mech, x, rng).map(Some),
            Decision::Reject(_) => {
                self.record_rejection(mech);
                Ok(None)
            }
        }
    }

    /// Folds a given output without sampling; used to replay known traces.
    pub fn observe(&mut self, admission: &Admission, mech: &MechanismSpec, output: usize) -> Result<()> {
        if admission.version != self.version || admission.mechanism_id != mech.id {
            return Err(Error::ContractViolation("stale admission".into()));
        }
        if output >= mech.num_outputs() {
            return Err(Error::Domain(format!("output {output} not in range of {}", mech.id)));
        }
        self.fold(admission, mech, output)
    }
}

pub fn bayesian_filter_check(fs: &FilterState, mech: &MechanismSpec) -> Result<Decision> {
    fs.check_bayesian(mech)
}

pub fn simplified_filter_check(fs: &FilterState, mech: &MechanismSpec) -> Result<Decision> {
    fs.check_simplified(mech)
}

pub fn filter_execute<R: Rng + ?Sized>(
    fs: &mut FilterState,
    admission: &Admission,
    mech: &MechanismSpec,
    x: ObjectValue<'_>,
    rng: &mut R,
) -> Result<usize> {
    fs.execute(admission, mech, x, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{RegressionKind, RegressionParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rr(id: &str, m: usize, eps: f64) -> MechanismSpec {
        MechanismSpec::randomized_response(id, m, eps).unwrap()
    }

    fn accept(d: Decision) -> Admission {
        match d {
            Decision::Accept(a) => a,
            Decision::Reject(r) => panic!("rejected: {}", r.reason),
        }
    }

    #[test]
    fn second_rr_rejected_in_both_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [FilterMode::Bayesian, FilterMode::Simplified] {
            let mut fs = FilterState::discrete(DiscreteDomain::indexed(2).unwrap(), 1.0, mode).unwrap();
            let q = rr("q1", 2, 1.0);
            let a = accept(fs.check(&q).unwrap());
            fs.execute(&a, &q, ObjectValue::Index(0), &mut rng).unwrap();
            assert!((fs.odometer().log_loss - 1.0).abs() < 1e-12);
            assert!(!fs.check(&rr("q2", 2, 1.0)).unwrap().is_accept());
        }
    }

    #[test]
    fn check_is_dry_run() {
        let fs = FilterState::discrete(DiscreteDomain::indexed(3).unwrap(), 2.0, FilterMode::Bayesian).unwrap();
        let before = fs.likelihood().unwrap().clone();
        let _ = fs.check(&rr("q", 3, 0.5)).unwrap();
        assert_eq!(fs.likelihood().unwrap(), &before);
    }

    #[test]
    fn stale_admission_is_a_contract_violation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut fs = FilterState::discrete(DiscreteDomain::indexed(2).unwrap(), 3.0, FilterMode::Bayesian).unwrap();
        let q = rr("q", 2, 0.5);
        let a = accept(fs.check(&q).unwrap());
        fs.execute(&a, &q, ObjectValue::Index(1), &mut rng).unwrap();
        let err = fs.execute(&a, &q, ObjectValue::Index(1), &mut rng);
        assert!(matches!(err, Err(Error::ContractViolation(_))));
        let other = rr("other", 2, 0.5);
        let a2 = accept(fs.check(&q).unwrap());
        assert!(matches!(fs.execute(&a2, &other, ObjectValue::Index(1), &mut rng), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn zero_probability_output_is_rejected() {
        let d = DiscreteDomain::indexed(2).unwrap();
        let fs = FilterState::discrete(d, 50.0, FilterMode::Bayesian).unwrap();
        let t = MechanismSpec::table("t", 1.0, vec![vec![0.0, f64::NEG_INFINITY], vec![f64::NEG_INFINITY, 0.0]]).unwrap();
        assert!(!fs.check(&t).unwrap().is_accept());
    }

    #[test]
    fn simplified_boundaries() {
        let d = DiscreteDomain::indexed(2).unwrap();
        let mut fs = FilterState::discrete(d.clone(), 1.0, FilterMode::Simplified).unwrap();
        // drive log-loss to 0.9 with a table query
        let e = 0.9f64;
        let p = e.exp() / (1.0 + e.exp());
        let t = MechanismSpec::table("t", e, vec![vec![p.ln(), (1.0 - p).ln()], vec![(1.0 - p).ln(), p.ln()]]).unwrap();
        let a = accept(fs.check(&t).unwrap());
        fs.observe(&a, &t, 0).unwrap();
        assert!((fs.log_loss() - 0.9).abs() < 1e-12);
        assert!(!fs.check_simplified(&rr("a", 2, 0.2)).unwrap().is_accept());
        assert!(fs.check_simplified(&rr("b", 2, 0.1)).unwrap().is_accept());
        let fresh = FilterState::discrete(d, 1.0, FilterMode::Simplified).unwrap();
        assert!(fresh.check_simplified(&rr("c", 2, 1.0)).unwrap().is_accept());
    }

    #[test]
    fn odometer_after_identical_outputs() {
        let d = DiscreteDomain::indexed(2).unwrap();
        let mut fs = FilterState::discrete(d, 10.0, FilterMode::Bayesian).unwrap();
        let q = rr("q", 2, 0.3);
        for j in 1..=5 {
            let a = accept(fs.check(&q).unwrap());
            fs.observe(&a, &q, 1).unwrap();
            assert!((fs.odometer().log_loss - 0.3 * j as f64).abs() < 1e-12);
        }
        let r = fs.odometer();
        assert!((r.headroom - (10.0 - 1.5)).abs() < 1e-12);
    }

    #[test]
    fn continuous_filter_accepts_within_budget() {
        let cfg = ContinuousConfig::new(BoxDomain::cube(2, -1.0, 1.0).unwrap(), 10, 0.01).unwrap();
        let mut fs = FilterState::continuous(cfg, 1.0, FilterMode::Bayesian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = [0.0, 0.0];
        let mut n = 0;
        for i in 0..40 {
            let p = RegressionParams::new(vec![0.5, -0.25], 0.25 * (i % 3) as f64 - 0.25, -1.0, 1.0).unwrap();
            let m = MechanismSpec::regression(format!("q{i}"), RegressionKind::Linear, p, 0.1).unwrap();
            match fs.submit(&m, ObjectValue::Point(&x), &mut rng).unwrap() {
                Some(_) => n += 1,
                None => break,
            }
            assert!(fs.log_loss() <= 1.0 + 1e-9);
        }
        assert!(n >= 10, "accepted only {n}");
        assert_eq!(fs.num_accepted(), n);
    }

    #[test]
    fn unboundable_truncated_query_is_rejected_in_both_modes() {
        // the raw ramp goes negative near x = -1, outputs clamp but the decomposition cannot be bounded
        let p = RegressionParams::new(vec![3.0, 0.0], 0.0, -0.5, 0.5).unwrap();
        let m = MechanismSpec::regression("t", RegressionKind::TruncatedLinear, p, 0.5).unwrap();
        for mode in [FilterMode::Bayesian, FilterMode::Simplified] {
            let cfg = ContinuousConfig::new(BoxDomain::cube(2, -1.0, 1.0).unwrap(), 10, 0.01).unwrap();
            let mut fs = FilterState::continuous(cfg, 2.0, mode).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            assert_eq!(fs.submit(&m, ObjectValue::Point(&[0.0, 0.0]), &mut rng).unwrap(), None);
            assert_eq!(fs.log_loss(), 0.0);
        }
    }
}
