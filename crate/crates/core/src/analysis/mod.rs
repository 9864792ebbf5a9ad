//! Random-walk expectations for composed randomized responses and the
//! single-response versus composition estimator comparison.

mod estimator;
mod walk;

pub use estimator::{
    composition_estimator, covariance_ratio, estimator_compare, inverse_probability_matrix, rr_probability_matrix,
    single_response_variance, EstimatorReport,
};
pub use walk::{
    expected_queries_closed_form, expected_queries_fixed_budget, expected_queries_markov, markov_expectation,
    simulate_walk, simulate_walk_responses, MarkovExpectation, TransitionModel, WalkConfig, WalkStats,
    MAX_DENSE_STATES, MAX_ITERATIONS, MAX_STATES,
};
