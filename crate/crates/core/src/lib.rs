//! Realized privacy loss accounting for local differential privacy.
//!
//! The crate measures privacy loss as the Bayesian knowledge gain an observer
//! actually obtains from released outputs, and enforces budgets with privacy
//! filters over fully adaptive compositions.
//!
//! * [`belief`] and [`likelihood`] hold the discrete Bayesian bookkeeping.
//! * [`mechanisms`] implements randomized response, discretize-and-perturb and
//!   LDP-wrapped regressions together with their difference-of-convex forms.
//! * [`accounting`] provides realized loss, privacy filters and the odometer.
//! * [`dcopt`] bounds the likelihood over box domains by branch-and-bound.
//! * [`analysis`] covers random-walk expectations for composed randomized
//!   responses and the composition estimator comparison.

pub mod accounting;
pub mod analysis;
pub mod belief;
pub mod dcopt;
pub mod domain;
pub mod error;
pub mod likelihood;
pub mod mechanisms;
pub mod num;

pub use domain::{BoxDomain, Candidate, DiscreteDomain};
pub use error::{Error, Result};
