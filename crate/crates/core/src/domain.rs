//! Candidate universes for the protected object.
//!
//! A [`DiscreteDomain`] enumerates every value the object may take and backs
//! the exact likelihood bookkeeping. A [`BoxDomain`] describes a continuous
//! object through per-dimension bounds and is handled by the `dcopt` module.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single candidate value of a discrete object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Candidate {
    Point(Vec<f64>),
    Label(String),
}

impl Candidate {
    pub fn as_point(&self) -> Option<&[f64]> {
        match self {
            Candidate::Point(p) => Some(p),
            Candidate::Label(_) => None,
        }
    }

    fn key(&self) -> String {
        match self {
            Candidate::Label(s) => format!("L:{s}"),
            Candidate::Point(p) => {
                let bits: Vec<String> = p.iter().map(|v| format!("{:x}", v.to_bits())).collect();
                format!("P:{}", bits.join(","))
            }
        }
    }
}

/// Ordered, duplicate-free, non-empty set of candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDomain {
    candidates: Vec<Candidate>,
}

impl DiscreteDomain {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Construction("discrete domain must be non-empty".into()));
        }
        let mut seen = HashSet::with_capacity(candidates.len());
        for c in &candidates {
            if let Candidate::Point(p) = c {
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Construction("candidate point has a non-finite coordinate".into()));
                }
            }
            if !seen.insert(c.key()) {
                return Err(Error::Construction(format!("duplicate candidate {c:?}")));
            }
        }
        Ok(Self { candidates })
    }

    /// Labels `"0"`, `"1"`, ..., `"m-1"`; the usual universe for randomized response.
    pub fn indexed(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| Candidate::Label(i.to_string())).collect())
    }

    /// Scalar points on a regular grid covering `[lo, hi]` with `n` points.
    pub fn grid_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) {
            return Err(Error::Construction("grid needs n >= 2 and lo < hi".into()));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| Candidate::Point(vec![lo + step * i as f64])).collect())
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn get(&self, i: usize) -> Option<&Candidate> {
        self.candidates.get(i)
    }

    pub fn index_of(&self, c: &Candidate) -> Option<usize> {
        self.candidates.iter().position(|x| x == c)
    }
}

/// Axis-aligned box `lower[i] <= x[i] <= upper[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Construction("box domain needs dimension >= 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Construction(format!(
                "bound lengths differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(Error::Construction(format!("invalid bounds in dimension {i}: [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Range of `direction . x + offset` over the box.
    pub fn affine_range(&self, direction: &[f64], offset: f64) -> (f64, f64) {
        let mut lo = offset;
        let mut hi = offset;
        for ((d, l), u) in direction.iter().zip(&self.lower).zip(&self.upper) {
            let a = d * l;
            let b = d * u;
            lo += a.min(b);
            hi += a.max(b);
        }
        (lo, hi)
    }
}
