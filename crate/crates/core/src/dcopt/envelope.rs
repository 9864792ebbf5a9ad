//! Secant over-estimators of convex terms on an interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::DcTerm;

/// Degenerate-interval threshold.
pub const DEGENERATE_WIDTH: f64 = 1e-12;

/// `H(Y) = slope * Y + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Secant {
    pub slope: f64,
    pub intercept: f64,
}

impl Secant {
    pub fn eval(&self, y: f64) -> f64 {
        self.slope * y + self.intercept
    }
}

/// Affine function through `(a, F(a))` and `(b, F(b))`; `F >= H` fails only outside `[a, b]`.
pub fn concave_envelope(term: &DcTerm, a: f64, b: f64) -> Result<Secant> {
    if !(a <= b) {
        return Err(Error::Envelope(format!("interval [{a}, {b}] is empty")));
    }
    let fa = term.eval_y(a);
    let fb = term.eval_y(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Envelope(format!("term is infinite at an endpoint of [{a}, {b}]")));
    }
    if b - a < DEGENERATE_WIDTH {
        return Ok(Secant {
            slope: 0.0,
            intercept: fa,
        });
    }
    let slope = (fb - fa) / (b - a);
    Ok(Secant {
        slope,
        intercept: fa - slope * a,
    })
}
