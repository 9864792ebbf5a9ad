//! `log P(x) = sum f_i(x) - sum g_i(x)` over a box, and the Y-space boxes
//! the branch-and-bound works on.

use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::mechanisms::{AffineMap, DcTerm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcObjective {
    pub f_terms: Vec<DcTerm>,
    pub g_terms: Vec<DcTerm>,
    pub domain: BoxDomain,
}

impl DcObjective {
    pub fn new(f_terms: Vec<DcTerm>, g_terms: Vec<DcTerm>, domain: BoxDomain) -> Result<Self> {
        let obj = Self {
            f_terms,
            g_terms,
            domain,
        };
        obj.validate()?;
        Ok(obj)
    }

    fn validate(&self) -> Result<()> {
        let d = self.domain.dim();
        for t in self.f_terms.iter().chain(&self.g_terms) {
            if t.map.dim() != d {
                return Err(Error::Construction(format!(
                    "term direction has dimension {}, domain has {d}",
                    t.map.dim()
                )));
            }
            let (lo, hi) = self.domain.affine_range(&t.map.direction, t.map.offset);
            if !t.shape.finite_on(lo, hi) {
                return Err(Error::Construction(format!(
                    "term {:?} is not finite on its range [{lo}, {hi}] over the box",
                    t.shape
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let f: f64 = self.f_terms.iter().map(|t| t.eval(x)).sum();
        let g: f64 = self.g_terms.iter().map(|t| t.eval(x)).sum();
        f - g
    }

    /// `-(f - g) = g - f`: minimizing it maximizes the original.
    pub fn negated(&self) -> Self {
        Self {
            f_terms: self.g_terms.clone(),
            g_terms: self.f_terms.clone(),
            domain: self.domain.clone(),
        }
    }

    /// Distinct affine maps among the g-terms, and the map index of every g-term.
    pub fn g_maps(&self) -> (Vec<AffineMap>, Vec<usize>) {
        let mut maps: Vec<AffineMap> = Vec::new();
        let mut idx = Vec::with_capacity(self.g_terms.len());
        for t in &self.g_terms {
            match maps.iter().position(|m| same_map(m, &t.map)) {
                Some(i) => idx.push(i),
                None => {
                    maps.push(t.map.clone());
                    idx.push(maps.len() - 1);
                }
            }
        }
        (maps, idx)
    }

    /// Interval image of the box under each distinct g-map.
    pub fn root_ybox(&self) -> YBox {
        let (maps, _) = self.g_maps();
        YBox {
            intervals: maps
                .iter()
                .map(|m| self.domain.affine_range(&m.direction, m.offset))
                .collect(),
        }
    }
}

pub(crate) fn same_map(a: &AffineMap, b: &AffineMap) -> bool {
    a.offset.to_bits() == b.offset.to_bits()
        && a.direction.len() == b.direction.len()
        && a.direction.iter().zip(&b.direction).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Intervals `[a_i, b_i]` bounding `Y_i = theta_i . x + c_i` for each distinct g-map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YBox {
    pub intervals: Vec<(f64, f64)>,
}

impl YBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|(a, b)| !(a <= b)) {
            return Err(Error::Construction("y-box interval with a > b".into()));
        }
        Ok(Self { intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lengths relative to a reference box; zero where the reference is degenerate.
    pub fn relative_lengths(&self, root: &YBox) -> Vec<f64> {
        self.intervals
            .iter()
            .zip(&root.intervals)
            .map(|((a, b), (ra, rb))| {
                let w = rb - ra;
                if w > 0.0 {
                    (b - a) / w
                } else {
                    0.0
                }
            })
            .collect()
    }
}
