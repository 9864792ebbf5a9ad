//! `(eps, delta)` filter: an output-independent filter first, the Bayesian filter after it halts.

use rand::Rng;

use super::filter::{Admission, Decision, FilterState, Rejection};
use super::TIE_SLACK;
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismSpec, ObjectValue};

/// A filter whose decisions ignore outputs. It either accepts or halts for good.
pub trait OutputIndependentFilter: std::fmt::Debug + Send {
    /// Accepts (and charges) `epsilon`, or halts.
    fn offer(&mut self, epsilon: f64) -> bool;
    fn is_halted(&self) -> bool;
}

/// Accepts while the running sum of epsilons stays within budget.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicComposition {
    budget: f64,
    spent: f64,
    halted: bool,
}

impl BasicComposition {
    pub fn new(budget: f64) -> Self {
        Self {
            budget,
            spent: 0.0,
            halted: false,
        }
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }
}

impl OutputIndependentFilter for BasicComposition {
    fn offer(&mut self, epsilon: f64) -> bool {
        if self.halted {
            return false;
        }
        if self.spent + epsilon <= self.budget + TIE_SLACK {
            self.spent += epsilon;
            true
        } else {
            self.halted = true;
            false
        }
    }

    fn is_halted(&self) -> bool {
        self.halted
    }
}

#[derive(Debug)]
pub struct ApproxFilterState {
    eps_g: f64,
    delta_g: f64,
    f0: Box<dyn OutputIndependentFilter>,
    bayes: FilterState,
}

impl ApproxFilterState {
    /// `bayes` must be a Bayesian-mode filter with budget `eps_g`.
    pub fn new(eps_g: f64, delta_g: f64, f0: Box<dyn OutputIndependentFilter>, bayes: FilterState) -> Result<Self> {
        if !(0.0..1.0).contains(&delta_g) {
            return Err(Error::Construction(format!("delta must lie in [0, 1), got {delta_g}")));
        }
        if (bayes.budget_eps() - eps_g).abs() > 1e-12 {
            return Err(Error::Construction("Bayesian filter budget differs from eps_g".into()));
        }
        Ok(Self { eps_g, delta_g, f0, bayes })
    }

    /// The basic-composition baseline as `f0`.
    pub fn with_basic_composition(eps_g: f64, delta_g: f64, bayes: FilterState) -> Result<Self> {
        Self::new(eps_g, delta_g, Box::new(BasicComposition::new(eps_g)), bayes)
    }

    pub fn delta_g(&self) -> f64 {
        self.delta_g
    }

    pub fn f0_halted(&self) -> bool {
        self.f0.is_halted()
    }

    pub fn bayes(&self) -> &FilterState {
        &self.bayes
    }

    /// Offers the query to `f0` while it runs (which charges it on acceptance);
    /// afterwards rejects once the loss is over budget, else asks the Bayesian filter.
    pub fn check(&mut self, mech: &MechanismSpec) -> Result<Decision> {
        if !self.f0.is_halted() && self.f0.offer(mech.epsilon) {
            return Ok(Decision::Accept(self.bayes.admit_unchecked(mech)));
        }
        let l = self.bayes.log_loss();
        if l > self.eps_g + TIE_SLACK {
            return Ok(Decision::Reject(Rejection {
                reason: "realized loss already exceeds the budget".into(),
                log_loss: l,
            }));
        }
        self.bayes.check_bayesian(mech)
    }

    pub fn execute<R: Rng + ?Sized>(
        &mut self,
        admission: &Admission,
        mech: &MechanismSpec,
        x: ObjectValue<'_>,
        rng: &mut R,
    ) -> Result<usize> {
        self.bayes.execute(admission, mech, x, rng)
    }

    pub fn observe(&mut self, admission: &Admission, mech: &MechanismSpec, output: usize) -> Result<()> {
        self.bayes.observe(admission, mech, output)
    }
}

pub fn approx_filter_check(afs: &mut ApproxFilterState, mech: &MechanismSpec) -> Result<Decision> {
    afs.check(mech)
}
