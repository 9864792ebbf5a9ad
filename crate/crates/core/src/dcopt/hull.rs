//! Convex envelopes of one-inflection scalar functions on an interval.
//!
//! A map carrying exactly one `LogSumExp` f-term and one `LogSumExp` g-term
//! contributes `h(Y) = log(A e^Y + B) - log(C e^Y + D)`, which changes
//! curvature once, at `p = ln(BD / AC) / 2`. Its convex envelope on
//! `[lo, hi]` is `h` on one side of a tangent point and a line on the other.

use crate::mechanisms::{DcTerm, TermShape};

const BISECT_ITERS: usize = 100;

/// `h = f - g` on one map, with its curvature split.
#[derive(Clone, Debug)]
pub(crate) struct Inflected {
    pub f: DcTerm,
    pub g: DcTerm,
    /// Inflection point; may be infinite.
    pub p: f64,
    /// Convex on `(-inf, p]` and concave after when true, the reverse otherwise.
    pub convex_left: bool,
}

impl Inflected {
    /// Recognizes `LogSumExp - LogSumExp` with positive coefficients.
    pub fn from_pair(f: &DcTerm, g: &DcTerm) -> Option<Self> {
        let (a, b) = match f.shape {
            TermShape::LogSumExp { alpha, beta } => (alpha, beta),
            _ => return None,
        };
        let (c, d) = match g.shape {
            TermShape::LogSumExp { alpha, beta } => (alpha, beta),
            _ => return None,
        };
        if !(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0) {
            return None;
        }
        let p = 0.5 * ((b.ln() + d.ln()) - (a.ln() + c.ln()));
        if !p.is_finite() {
            return None;
        }
        let convex_left = a * d > b * c;
        let p = if a * d == b * c { f64::INFINITY } else { p };
        Some(Self {
            f: f.clone(),
            g: g.clone(),
            p,
            convex_left: convex_left || a * d == b * c,
        })
    }

    pub fn value(&self, y: f64) -> f64 {
        self.f.eval_y(y) - self.g.eval_y(y)
    }

    pub fn d1(&self, y: f64) -> f64 {
        self.f.shape.d1(y) - self.g.shape.d1(y)
    }

    pub fn d2(&self, y: f64) -> f64 {
        self.f.shape.d2(y) - self.g.shape.d2(y)
    }

    /// Largest convex minorant on `[lo, hi]`, up to the bisection tolerance (always a minorant).
    pub fn envelope(&self, lo: f64, hi: f64) -> Hull {
        let chord = || {
            let slope = if hi > lo { (self.value(hi) - self.value(lo)) / (hi - lo) } else { 0.0 };
            (slope, self.value(lo) - slope * lo)
        };
        let tangent = |t: f64| {
            let s = self.d1(t);
            (s, self.value(t) - s * t)
        };
        if self.convex_left {
            if hi <= self.p {
                return Hull::exact(self.clone());
            }
            if lo >= self.p {
                return Hull::line(self.clone(), chord());
            }
            // tangent from (t, h(t)) through or below (hi, h(hi)); increasing in t
            let phi = |t: f64| self.value(t) + self.d1(t) * (hi - t) - self.value(hi);
            if phi(lo) >= 0.0 {
                return Hull::line(self.clone(), chord());
            }
            let (mut a, mut b) = (lo, self.p);
            for _ in 0..BISECT_ITERS {
                let m = 0.5 * (a + b);
                if phi(m) <= 0.0 {
                    a = m;
                } else {
                    b = m;
                }
                if b - a <= 1e-13 * (1.0 + a.abs()) {
                    break;
                }
            }
            let (slope, intercept) = tangent(a);
            Hull {
                h: self.clone(),
                t: a,
                curve_left: true,
                slope,
                intercept,
            }
        } else {
            if lo >= self.p {
                return Hull::exact(self.clone());
            }
            if hi <= self.p {
                return Hull::line(self.clone(), chord());
            }
            // tangent at t passing through or below (lo, h(lo)); decreasing in t
            let psi = |t: f64| self.value(t) + self.d1(t) * (lo - t) - self.value(lo);
            if psi(hi) >= 0.0 {
                return Hull::line(self.clone(), chord());
            }
            let (mut a, mut b) = (self.p, hi);
            for _ in 0..BISECT_ITERS {
                let m = 0.5 * (a + b);
                if psi(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
                if b - a <= 1e-13 * (1.0 + b.abs()) {
                    break;
                }
            }
            let (slope, intercept) = tangent(b);
            Hull {
                h: self.clone(),
                t: b,
                curve_left: false,
                slope,
                intercept,
            }
        }
    }
}

/// `h` on the curved side of `t`, `slope Y + intercept` on the other.
#[derive(Clone, Debug)]
pub(crate) struct Hull {
    h: Inflected,
    t: f64,
    curve_left: bool,
    slope: f64,
    intercept: f64,
}

impl Hull {
    fn exact(h: Inflected) -> Self {
        Self {
            h,
            t: f64::INFINITY,
            curve_left: true,
            slope: 0.0,
            intercept: 0.0,
        }
    }

    fn line(h: Inflected, (slope, intercept): (f64, f64)) -> Self {
        Self {
            h,
            t: f64::NEG_INFINITY,
            curve_left: true,
            slope,
            intercept,
        }
    }

    fn curved(&self, y: f64) -> bool {
        if self.curve_left {
            y < self.t
        } else {
            y > self.t
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        if self.curved(y) {
            self.h.value(y)
        } else {
            self.slope * y + self.intercept
        }
    }

    pub fn d1(&self, y: f64) -> f64 {
        if self.curved(y) {
            self.h.d1(y)
        } else {
            self.slope
        }
    }

    pub fn d2(&self, y: f64) -> f64 {
        if self.curved(y) {
            self.h.d2(y).max(0.0)
        } else {
            0.0
        }
    }
}
