//! LDP-wrapped regressions: a regression value `Y = theta . x + c` pushed
//! through discretize-and-perturb, with exact difference-of-convex forms.

use serde::{Deserialize, Serialize};

use super::dc::{AffineMap, DcTerm, TermShape};
use super::perturb::{ramp_coefficients, HighLow};
use crate::error::{Error, Result};
use crate::num::log_add_exp;

/// Tolerance for the linear kind's requirement `a <= Y <= b`.
const RANGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionKind {
    Linear,
    TruncatedLinear,
    Logistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    pub theta: Vec<f64>,
    pub intercept: f64,
    pub out_low: f64,
    pub out_high: f64,
}

impl RegressionParams {
    pub fn new(theta: Vec<f64>, intercept: f64, out_low: f64, out_high: f64) -> Result<Self> {
        let p = Self {
            theta,
            intercept,
            out_low,
            out_high,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::Construction("regression needs at least one coefficient".into()));
        }
        if self.theta.iter().any(|t| !t.is_finite()) || !self.intercept.is_finite() {
            return Err(Error::Construction("regression coefficients must be finite".into()));
        }
        if !(self.out_low < self.out_high) {
            return Err(Error::Construction(format!(
                "output range [{}, {}] is empty",
                self.out_low, self.out_high
            )));
        }
        Ok(())
    }

    pub fn map(&self) -> AffineMap {
        AffineMap::new(self.theta.clone(), self.intercept)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.map().eval(x)
    }
}

/// Range of the discretized output fed to the ramp: `[a, b]`, or `[0, 1]` for logistic.
fn ramp_range(kind: RegressionKind, p: &RegressionParams) -> (f64, f64) {
    match kind {
        RegressionKind::Logistic => (0.0, 1.0),
        _ => (p.out_low, p.out_high),
    }
}

/// `(alpha, beta)` with `Pr(output | Y) = alpha Y + beta` on the unclamped ramp.
pub fn output_affine(kind: RegressionKind, p: &RegressionParams, epsilon: f64, output: HighLow) -> (f64, f64) {
    let (a, b) = ramp_range(kind, p);
    let (alpha, beta) = ramp_coefficients(a, b, epsilon);
    match output {
        HighLow::High => (alpha, beta),
        HighLow::Low => (-alpha, 1.0 - beta),
    }
}

fn lo_hi(epsilon: f64) -> (f64, f64) {
    let lo = 1.0 / (epsilon.exp() + 1.0);
    (lo, 1.0 - lo)
}

/// `log Pr(output | Y)` as a function of the regression value.
pub fn log_likelihood_of_value(
    kind: RegressionKind,
    p: &RegressionParams,
    epsilon: f64,
    output: HighLow,
    y: f64,
) -> Result<f64> {
    let (lo, hi) = lo_hi(epsilon);
    match kind {
        RegressionKind::Linear => {
            if y < p.out_low - RANGE_TOL || y > p.out_high + RANGE_TOL {
                return Err(Error::Construction(format!(
                    "linear regression value {y} outside [{}, {}]",
                    p.out_low, p.out_high
                )));
            }
            let (alpha, beta) = output_affine(kind, p, epsilon, output);
            Ok((alpha * y + beta).clamp(lo, hi).ln())
        }
        RegressionKind::TruncatedLinear => {
            let (alpha, beta) = output_affine(kind, p, epsilon, output);
            Ok((alpha * y + beta).clamp(lo, hi).ln())
        }
        RegressionKind::Logistic => {
            let num = match output {
                HighLow::High => log_add_exp(hi.ln() + y, lo.ln()),
                HighLow::Low => log_add_exp(lo.ln() + y, hi.ln()),
            };
            Ok(num - log_add_exp(y, 0.0))
        }
    }
}

pub fn regression_log_likelihood(
    kind: RegressionKind,
    p: &RegressionParams,
    epsilon: f64,
    output: HighLow,
    x: &[f64],
) -> Result<f64> {
    if x.len() != p.theta.len() {
        return Err(Error::Domain(format!(
            "point has dimension {}, regression expects {}",
            x.len(),
            p.theta.len()
        )));
    }
    log_likelihood_of_value(kind, p, epsilon, output, p.value(x))
}

/// Splits `log Pr(output | x)` into convex parts `f - g`.
pub fn dc_decompose(
    kind: RegressionKind,
    p: &RegressionParams,
    epsilon: f64,
    output: HighLow,
) -> Result<(Vec<DcTerm>, Vec<DcTerm>)> {
    p.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Construction(format!("epsilon must be positive, got {epsilon}")));
    }
    let (lo, hi) = lo_hi(epsilon);
    let map = p.map();
    match kind {
        RegressionKind::Linear => {
            let (alpha, beta) = output_affine(kind, p, epsilon, output);
            Ok((vec![], vec![DcTerm::new(TermShape::NegLog { alpha, beta }, map)]))
        }
        RegressionKind::TruncatedLinear => {
            // log clamp(u) = log lo - log min{lo, u} + log min{hi, u}
            let (alpha, beta) = output_affine(kind, p, epsilon, output);
            let f = DcTerm::new(TermShape::NegLogMin { alpha, beta, cap: lo }, map.clone()).with_constant(lo.ln());
            let g = DcTerm::new(TermShape::NegLogMin { alpha, beta, cap: hi }, map);
            Ok((vec![f], vec![g]))
        }
        RegressionKind::Logistic => {
            let (fa, fb) = match output {
                HighLow::High => (hi, lo),
                HighLow::Low => (lo, hi),
            };
            let f = DcTerm::new(TermShape::LogSumExp { alpha: fa, beta: fb }, map.clone());
            let g = DcTerm::new(TermShape::LogSumExp { alpha: 1.0, beta: 1.0 }, map);
            Ok((vec![f], vec![g]))
        }
    }
}
