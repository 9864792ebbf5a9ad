//! Difference-of-convex bounding of `log P(x)` over box domains.

mod barrier;
pub mod bnb;
pub mod envelope;
mod hull;
mod linalg;
pub mod loss;
pub mod objective;
pub mod subproblem;

pub use bnb::{branch, branch_and_bound_min, BnbNode, BnbOptions, BnbResult, Split};
pub use envelope::{concave_envelope, Secant};
pub use loss::{group_log_range, realized_loss_bounds, realized_loss_bounds_with, GroupRange, LossBounds, QueryTerms};
pub use objective::{DcObjective, YBox};
pub use subproblem::{dca_local_minimize, solve_convex_subproblem, ConvexSolution, DcaResult};
