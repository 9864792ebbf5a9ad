//! Convex-of-affine building blocks `F(theta . x + c)`.

use serde::{Deserialize, Serialize};

use crate::num::log_add_exp;

/// `Y = direction . x + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub direction: Vec<f64>,
    pub offset: f64,
}

impl AffineMap {
    pub fn new(direction: Vec<f64>, offset: f64) -> Self {
        Self { direction, offset }
    }

    /// The identity on coordinate `i` of a `dim`-dimensional point.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[i] = 1.0;
        Self::new(d, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset + self.direction.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Scalar convex function of `Y`. Coefficient names follow `alpha * Y + beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TermShape {
    /// `-log(alpha Y + beta)`
    NegLog { alpha: f64, beta: f64 },
    /// `-log(min{cap, alpha Y + beta})`
    NegLogMin { alpha: f64, beta: f64, cap: f64 },
    /// `log(alpha e^Y + beta)`, `alpha, beta >= 0`
    LogSumExp { alpha: f64, beta: f64 },
    /// `slope Y`
    Affine { slope: f64 },
    /// `coeff Y^2`, `coeff >= 0`
    Square { coeff: f64 },
    /// `sign log(a Y^2 + b) + shift Y^2`; convex only for suitable coefficients
    QuadLog { a: f64, b: f64, sign: f64, shift: f64 },
}

impl TermShape {
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            TermShape::NegLog { alpha, beta } => neg_log(alpha * y + beta),
            TermShape::NegLogMin { alpha, beta, cap } => neg_log((alpha * y + beta).min(cap)),
            TermShape::LogSumExp { alpha, beta } => log_add_exp(alpha.ln() + y, beta.ln()),
            TermShape::Affine { slope } => slope * y,
            TermShape::Square { coeff } => coeff * y * y,
            TermShape::QuadLog { a, b, sign, shift } => {
                let u = a * y * y + b;
                let l = if u > 0.0 { u.ln() } else { f64::NEG_INFINITY };
                sign * l + shift * y * y
            }
        }
    }

    /// First derivative; at a kink the derivative of the uncapped branch.
    pub fn d1(&self, y: f64) -> f64 {
        match *self {
            TermShape::NegLog { alpha, beta } => -alpha / (alpha * y + beta),
            TermShape::NegLogMin { alpha, beta, cap } => {
                let u = alpha * y + beta;
                if u < cap {
                    -alpha / u
                } else {
                    0.0
                }
            }
            TermShape::LogSumExp { alpha, beta } => {
                // alpha e^y / (alpha e^y + beta)
                let la = alpha.ln() + y;
                (la - log_add_exp(la, beta.ln())).exp()
            }
            TermShape::Affine { slope } => slope,
            TermShape::Square { coeff } => 2.0 * coeff * y,
            TermShape::QuadLog { a, b, sign, shift } => {
                sign * 2.0 * a * y / (a * y * y + b) + 2.0 * shift * y
            }
        }
    }

    pub fn d2(&self, y: f64) -> f64 {
        match *self {
            TermShape::NegLog { alpha, beta } => {
                let u = alpha * y + beta;
                alpha * alpha / (u * u)
            }
            TermShape::NegLogMin { alpha, beta, cap } => {
                let u = alpha * y + beta;
                if u < cap {
                    alpha * alpha / (u * u)
                } else {
                    0.0
                }
            }
            TermShape::LogSumExp { .. } => {
                let s = self.d1(y);
                s * (1.0 - s)
            }
            TermShape::Affine { .. } => 0.0,
            TermShape::Square { coeff } => 2.0 * coeff,
            TermShape::QuadLog { a, b, sign, shift } => {
                let u = a * y * y + b;
                sign * 2.0 * a * (b - a * y * y) / (u * u) + 2.0 * shift
            }
        }
    }

    /// `Y` at which a capped shape switches branch, if any.
    pub fn kink(&self) -> Option<f64> {
        match *self {
            TermShape::NegLogMin { alpha, beta, cap } if alpha != 0.0 => Some((cap - beta) / alpha),
            _ => None,
        }
    }

    /// True when the shape is finite on the whole closed interval.
    pub fn finite_on(&self, lo: f64, hi: f64) -> bool {
        match *self {
            TermShape::NegLog { alpha, beta } | TermShape::NegLogMin { alpha, beta, .. } => {
                alpha * lo + beta > 0.0 && alpha * hi + beta > 0.0
            }
            TermShape::LogSumExp { alpha, beta } => alpha >= 0.0 && beta >= 0.0 && (alpha > 0.0 || beta > 0.0),
            TermShape::Affine { .. } | TermShape::Square { .. } => true,
            TermShape::QuadLog { a, b, .. } => {
                let m = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
                let big = lo.abs().max(hi.abs());
                a * m * m + b > 0.0 && a * big * big + b > 0.0
            }
        }
    }
}

fn neg_log(u: f64) -> f64 {
    if u > 0.0 {
        -u.ln()
    } else {
        f64::INFINITY
    }
}

/// `shape(map(x)) + constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcTerm {
    pub shape: TermShape,
    pub map: AffineMap,
    pub constant: f64,
}

impl DcTerm {
    pub fn new(shape: TermShape, map: AffineMap) -> Self {
        Self { shape, map, constant: 0.0 }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_y(self.map.eval(x))
    }

    pub fn eval_y(&self, y: f64) -> f64 {
        self.shape.value(y) + self.constant
    }
}

/// `sum f(x) - sum g(x)`.
pub fn eval_difference(f: &[DcTerm], g: &[DcTerm], x: &[f64]) -> f64 {
    let a: f64 = f.iter().map(|t| t.eval(x)).sum();
    let b: f64 = g.iter().map(|t| t.eval(x)).sum();
    a - b
}
