//! Discretize-and-perturb for bounded scalars, and its frequency inversion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two outputs of a binary mechanism. `Low` is index 0, `High` index 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HighLow {
    Low,
    High,
}

impl HighLow {
    pub fn index(self) -> usize {
        match self {
            HighLow::Low => 0,
            HighLow::High => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(HighLow::Low),
            1 => Ok(HighLow::High),
            _ => Err(Error::Domain(format!("binary output index {i} out of range"))),
        }
    }
}

/// `(alpha, beta)` such that `Pr(b | y) = alpha y + beta` on `[a, b]`.
pub fn ramp_coefficients(a: f64, b: f64, epsilon: f64) -> (f64, f64) {
    let t = (epsilon / 2.0).tanh();
    let lo = 1.0 / (epsilon.exp() + 1.0);
    let alpha = t / (b - a);
    (alpha, lo - alpha * a)
}

pub fn prob_high(y: f64, a: f64, b: f64, epsilon: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("empty range [{a}, {b}]")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(a..=b).contains(&y) {
        return Err(Error::Domain(format!("{y} outside [{a}, {b}]")));
    }
    let (alpha, beta) = ramp_coefficients(a, b, epsilon);
    Ok(alpha * y + beta)
}

/// Reports `b` with probability rising linearly from `1/(e^eps+1)` at `a` to `e^eps/(e^eps+1)` at `b`.
pub fn perturb_continuous<R: Rng + ?Sized>(y: f64, a: f64, b: f64, epsilon: f64, rng: &mut R) -> Result<f64> {
    let p = prob_high(y, a, b, epsilon)?;
    Ok(if rng.gen::<f64>() < p { b } else { a })
}

/// Unbiased mean from the observed frequency of `b`. Not clamped to `[a, b]`.
pub fn mean_estimate(freq_b: f64, a: f64, b: f64, epsilon: f64) -> f64 {
    let e = epsilon.exp();
    a + (b - a) * ((e + 1.0) * freq_b - 1.0) / (e - 1.0)
}
