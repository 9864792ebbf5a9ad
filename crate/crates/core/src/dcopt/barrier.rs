//! Log-barrier interior point method with damped Newton steps.
//!
//! Problems live in normalized coordinates `xi in [-1, 1]^n` and have the form
//!
//! ```text
//! min  sum_k F_k(w_k . xi + c_k) + sum_j max(-ln cap_j, -ln(alpha_j Y_j + beta_j)) + lin . xi
//! s.t. a_r . xi + b_r > 0
//! ```
//!
//! Capped terms are handled through epigraph variables `s_j` with the two
//! constraints `s_j + ln cap_j > 0` and `s_j + ln(alpha_j Y_j + beta_j) > 0`.

use super::hull::Hull;
use super::linalg::solve_spd;
use crate::mechanisms::TermShape;

const NEWTON_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 80;
const MU: f64 = 20.0;
const THIN: f64 = 1e-11;

/// Smooth convex scalar function of `Y`.
#[derive(Clone, Debug)]
pub(crate) enum Curve {
    Shape(TermShape),
    Hull(Hull),
}

impl Curve {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Curve::Shape(s) => s.value(y),
            Curve::Hull(h) => h.value(y),
        }
    }

    pub fn d1(&self, y: f64) -> f64 {
        match self {
            Curve::Shape(s) => s.d1(y),
            Curve::Hull(h) => h.d1(y),
        }
    }

    pub fn d2(&self, y: f64) -> f64 {
        match self {
            Curve::Shape(s) => s.d2(y),
            Curve::Hull(h) => h.d2(y),
        }
    }
}

impl From<TermShape> for Curve {
    fn from(s: TermShape) -> Self {
        Curve::Shape(s)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SmoothTerm {
    pub shape: Curve,
    pub w: Vec<f64>,
    pub c: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct KinkTerm {
    pub alpha: f64,
    pub beta: f64,
    pub cap: f64,
    pub w: Vec<f64>,
    pub c: f64,
}

impl KinkTerm {
    fn u(&self, xi: &[f64]) -> f64 {
        self.alpha * (dot(&self.w, xi) + self.c) + self.beta
    }

    fn value(&self, xi: &[f64]) -> f64 {
        let u = self.u(xi);
        if u <= 0.0 {
            return f64::INFINITY;
        }
        -(u.min(self.cap)).ln()
    }
}

/// `a . xi + b > 0`, with `|a| = 1` by convention.
#[derive(Clone, Debug)]
pub(crate) struct LinCon {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct BarrierProblem {
    pub n: usize,
    pub smooth: Vec<SmoothTerm>,
    pub kinks: Vec<KinkTerm>,
    pub lin: Vec<f64>,
    pub constant: f64,
    pub cons: Vec<LinCon>,
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub xi: Vec<f64>,
    /// True objective at `xi`.
    pub value: f64,
    /// Certified lower bound on the constrained minimum.
    pub lower_bound: f64,
}

#[derive(Clone, Debug)]
pub(crate) enum Outcome {
    Infeasible,
    Solved(Solution),
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

trait Barrier {
    fn dim(&self) -> usize;
    /// Barrier objective at `z`, `None` outside the open domain.
    fn eval(&self, z: &[f64], t: f64) -> Option<f64>;
    fn grad_hess(&self, z: &[f64], t: f64, g: &mut [f64], h: &mut [f64]);
}

/// Damped Newton centering. Returns true when the Newton decrement converged.
fn center<B: Barrier>(p: &B, z: &mut Vec<f64>, t: f64) -> bool {
    let d = p.dim();
    let mut g = vec![0.0; d];
    let mut h = vec![0.0; d * d];
    let mut phi = match p.eval(z, t) {
        Some(v) => v,
        None => return false,
    };
    for _ in 0..MAX_NEWTON {
        g.iter_mut().for_each(|v| *v = 0.0);
        h.iter_mut().for_each(|v| *v = 0.0);
        p.grad_hess(z, t, &mut g, &mut h);
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let step = match solve_spd(&h, &neg, d) {
            Some(s) => s,
            None => return false,
        };
        let lambda2 = -dot(&g, &step);
        if !lambda2.is_finite() {
            return false;
        }
        if lambda2 * 0.5 <= NEWTON_TOL {
            return true;
        }
        let mut s = 1.0;
        let mut trial = z.clone();
        loop {
            for i in 0..d {
                trial[i] = z[i] + s * step[i];
            }
            if let Some(v) = p.eval(&trial, t) {
                if v <= phi - 0.25 * s * lambda2 {
                    phi = v;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-16 {
                // no progress possible at this precision
                return lambda2 * 0.5 <= 1e-6;
            }
        }
        std::mem::swap(z, &mut trial);
    }
    false
}

struct PhaseOne<'a> {
    p: &'a BarrierProblem,
}

impl<'a> PhaseOne<'a> {
    fn slacks(&self, xi: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for v in xi {
            m = m.min(1.0 - v).min(1.0 + v);
        }
        for c in &self.p.cons {
            m = m.min(dot(&c.a, xi) + c.b);
        }
        m
    }

    fn rows(&self) -> usize {
        2 * self.p.n + self.p.cons.len()
    }
}

impl<'a> Barrier for PhaseOne<'a> {
    fn dim(&self) -> usize {
        self.p.n + 1
    }

    fn eval(&self, z: &[f64], t: f64) -> Option<f64> {
        let n = self.p.n;
        let sigma = z[n];
        let mut acc = -t * sigma;
        for i in 0..n {
            let a = 1.0 - z[i] - sigma;
            let b = 1.0 + z[i] - sigma;
            if a <= 0.0 || b <= 0.0 {
                return None;
            }
            acc -= a.ln() + b.ln();
        }
        for c in &self.p.cons {
            let r = dot(&c.a, &z[..n]) + c.b - sigma;
            if r <= 0.0 {
                return None;
            }
            acc -= r.ln();
        }
        Some(acc)
    }

    fn grad_hess(&self, z: &[f64], t: f64, g: &mut [f64], h: &mut [f64]) {
        let n = self.p.n;
        let d = n + 1;
        let sigma = z[n];
        g[n] -= t;
        for i in 0..n {
            let a = 1.0 - z[i] - sigma;
            let b = 1.0 + z[i] - sigma;
            // -ln(a): grad wrt xi_i = 1/a, wrt sigma = 1/a
            g[i] += 1.0 / a - 1.0 / b;
            g[n] += 1.0 / a + 1.0 / b;
            let (ia2, ib2) = (1.0 / (a * a), 1.0 / (b * b));
            h[i * d + i] += ia2 + ib2;
            h[i * d + n] += ia2 - ib2;
            h[n * d + i] += ia2 - ib2;
            h[n * d + n] += ia2 + ib2;
        }
        for c in &self.p.cons {
            let r = dot(&c.a, &z[..n]) + c.b - sigma;
            let ir = 1.0 / r;
            let ir2 = ir * ir;
            // gradient of r: (a, -1)
            for i in 0..n {
                g[i] -= c.a[i] * ir;
            }
            g[n] += ir;
            for i in 0..n {
                for j in 0..n {
                    h[i * d + j] += c.a[i] * c.a[j] * ir2;
                }
                h[i * d + n] -= c.a[i] * ir2;
                h[n * d + i] -= c.a[i] * ir2;
            }
            h[n * d + n] += ir2;
        }
    }
}

enum PhaseOneResult {
    Interior(Vec<f64>),
    Thin(Vec<f64>),
    Infeasible,
}

fn phase_one(p: &BarrierProblem, start: &[f64]) -> PhaseOneResult {
    let ph = PhaseOne { p };
    let n = p.n;
    let mut xi: Vec<f64> = start.iter().map(|v| v.clamp(-0.999, 0.999)).collect();
    let s0 = ph.slacks(&xi);
    if s0 >= 1e-3 {
        return PhaseOneResult::Interior(xi);
    }
    let mut z = xi.clone();
    z.push(s0 - 1.0);
    let m = ph.rows() as f64;
    let mut t = 1.0;
    for _ in 0..40 {
        let ok = center(&ph, &mut z, t);
        let sigma = z[n];
        let ub = sigma + m / t;
        if ok {
            if sigma > 0.0 && sigma >= 0.25 * ub {
                xi.copy_from_slice(&z[..n]);
                return PhaseOneResult::Interior(xi);
            }
            if ub < 0.0 {
                return PhaseOneResult::Infeasible;
            }
            if ub < THIN {
                xi.copy_from_slice(&z[..n]);
                return PhaseOneResult::Thin(xi);
            }
        }
        t *= MU;
        if t > 1e16 {
            break;
        }
    }
    xi.copy_from_slice(&z[..n]);
    if z[n] > 0.0 {
        PhaseOneResult::Interior(xi)
    } else if z[n] > -1e-9 {
        PhaseOneResult::Thin(xi)
    } else {
        PhaseOneResult::Infeasible
    }
}

struct Main<'a> {
    p: &'a BarrierProblem,
}

impl<'a> Main<'a> {
    /// Smooth objective with epigraph variables in place of capped terms.
    fn objective(&self, z: &[f64]) -> f64 {
        let n = self.p.n;
        let xi = &z[..n];
        let mut v = self.p.constant + dot(&self.p.lin, xi);
        for s in &self.p.smooth {
            v += s.shape.value(dot(&s.w, xi) + s.c);
        }
        v + z[n..].iter().sum::<f64>()
    }

    fn rows(&self) -> usize {
        2 * self.p.n + self.p.cons.len() + 2 * self.p.kinks.len()
    }
}

impl<'a> Barrier for Main<'a> {
    fn dim(&self) -> usize {
        self.p.n + self.p.kinks.len()
    }

    fn eval(&self, z: &[f64], t: f64) -> Option<f64> {
        let n = self.p.n;
        let xi = &z[..n];
        let mut acc = 0.0;
        for v in xi {
            let a = 1.0 - v;
            let b = 1.0 + v;
            if a <= 0.0 || b <= 0.0 {
                return None;
            }
            acc -= a.ln() + b.ln();
        }
        for c in &self.p.cons {
            let r = dot(&c.a, xi) + c.b;
            if r <= 0.0 {
                return None;
            }
            acc -= r.ln();
        }
        for (j, k) in self.p.kinks.iter().enumerate() {
            let s = z[n + j];
            let u = k.u(xi);
            if u <= 0.0 {
                return None;
            }
            let h1 = s + k.cap.ln();
            let h2 = s + u.ln();
            if h1 <= 0.0 || h2 <= 0.0 {
                return None;
            }
            acc -= h1.ln() + h2.ln();
        }
        let obj = self.objective(z);
        if !obj.is_finite() {
            return None;
        }
        Some(t * obj + acc)
    }

    fn grad_hess(&self, z: &[f64], t: f64, g: &mut [f64], h: &mut [f64]) {
        let n = self.p.n;
        let d = self.dim();
        let xi = &z[..n];
        for i in 0..n {
            g[i] += t * self.p.lin[i];
        }
        for s in &self.p.smooth {
            let y = dot(&s.w, xi) + s.c;
            let d1 = t * s.shape.d1(y);
            let d2 = t * s.shape.d2(y);
            for i in 0..n {
                if s.w[i] == 0.0 {
                    continue;
                }
                g[i] += d1 * s.w[i];
                for j in 0..n {
                    h[i * d + j] += d2 * s.w[i] * s.w[j];
                }
            }
        }
        for i in 0..n {
            let a = 1.0 - xi[i];
            let b = 1.0 + xi[i];
            g[i] += 1.0 / a - 1.0 / b;
            h[i * d + i] += 1.0 / (a * a) + 1.0 / (b * b);
        }
        for c in &self.p.cons {
            let r = dot(&c.a, xi) + c.b;
            let ir = 1.0 / r;
            let ir2 = ir * ir;
            for i in 0..n {
                if c.a[i] == 0.0 {
                    continue;
                }
                g[i] -= c.a[i] * ir;
                for j in 0..n {
                    h[i * d + j] += c.a[i] * c.a[j] * ir2;
                }
            }
        }
        for (j, k) in self.p.kinks.iter().enumerate() {
            let sj = n + j;
            let s = z[sj];
            g[sj] += t;
            let h1 = s + k.cap.ln();
            g[sj] -= 1.0 / h1;
            h[sj * d + sj] += 1.0 / (h1 * h1);
            // h2 = s + ln(u), grad = (alpha w / u, 1), hess_xx = -(alpha/u)^2 w w^T
            let u = k.u(xi);
            let h2 = s + u.ln();
            let q = k.alpha / u;
            let ih2 = 1.0 / h2;
            let ih22 = ih2 * ih2;
            g[sj] -= ih2;
            h[sj * d + sj] += ih22;
            for i in 0..n {
                if k.w[i] == 0.0 {
                    continue;
                }
                let gi = q * k.w[i];
                g[i] -= gi * ih2;
                h[i * d + sj] += gi * ih22;
                h[sj * d + i] += gi * ih22;
                for l in 0..n {
                    let gl = q * k.w[l];
                    h[i * d + l] += gi * gl * ih22 + q * q * k.w[i] * k.w[l] * ih2;
                }
            }
        }
    }
}

impl BarrierProblem {
    /// True objective at `xi`.
    pub fn value(&self, xi: &[f64]) -> f64 {
        let mut v = self.constant + dot(&self.lin, xi);
        for s in &self.smooth {
            v += s.shape.value(dot(&s.w, xi) + s.c);
        }
        for k in &self.kinks {
            v += k.value(xi);
        }
        v
    }

    fn feasible_within(&self, xi: &[f64], tol: f64) -> bool {
        xi.iter().all(|v| v.abs() <= 1.0 + tol) && self.cons.iter().all(|c| dot(&c.a, xi) + c.b >= -tol)
    }

    /// Relaxes every general constraint by `tau`.
    fn relaxed(&self, tau: f64) -> Self {
        let mut p = self.clone();
        for c in &mut p.cons {
            c.b += tau;
        }
        p
    }

    pub fn solve(&self, start: &[f64], gap_tol: f64) -> Outcome {
        if self.n == 0 {
            let xi: Vec<f64> = vec![];
            if !self.feasible_within(&xi, 1e-9) {
                return Outcome::Infeasible;
            }
            let v = self.value(&xi);
            return Outcome::Solved(Solution {
                xi,
                value: v,
                lower_bound: v,
            });
        }
        match phase_one(self, start) {
            PhaseOneResult::Infeasible => Outcome::Infeasible,
            PhaseOneResult::Interior(xi) => self.solve_from(xi, gap_tol, 0.0),
            PhaseOneResult::Thin(_) => {
                // measure-zero polytope: solve a slightly relaxed copy
                let tau = 1e-9;
                let r = self.relaxed(tau);
                match phase_one(&r, start) {
                    PhaseOneResult::Interior(xi) => r.solve_from(xi, gap_tol, 1e-6),
                    PhaseOneResult::Thin(xi) => {
                        let v = self.value(&xi);
                        Outcome::Solved(Solution {
                            xi,
                            value: v,
                            lower_bound: f64::NEG_INFINITY,
                        })
                    }
                    PhaseOneResult::Infeasible => Outcome::Infeasible,
                }
            }
        }
    }

    fn solve_from(&self, xi: Vec<f64>, gap_tol: f64, extra_slack: f64) -> Outcome {
        let main = Main { p: self };
        let n = self.n;
        let mut z = xi.clone();
        for k in &self.kinks {
            let v = k.value(&xi);
            if !v.is_finite() {
                return Outcome::Infeasible;
            }
            // strictly above both epigraph constraints
            z.push(v.max(-k.cap.ln()) + 1.0);
        }
        let m = main.rows() as f64;
        let mut t = 1.0;
        let mut best_lb = f64::NEG_INFINITY;
        loop {
            if center(&main, &mut z, t) {
                let f = main.objective(&z);
                let lb = f - m / t - 1e-9 * (1.0 + f.abs()) - extra_slack;
                best_lb = best_lb.max(lb);
            }
            if m / t < gap_tol || t > 1e14 {
                break;
            }
            t *= MU;
        }
        let xi = z[..n].to_vec();
        let value = self.value(&xi);
        Outcome::Solved(Solution {
            xi,
            value,
            lower_bound: best_lb.min(value),
        })
    }
}
