//! Convex subproblems over `{x in box, Y_i(x) in [a_i, b_i]}` and the DCA local search.

use super::barrier::{dot, BarrierProblem, Curve, KinkTerm, LinCon, Outcome, SmoothTerm};
use super::envelope::concave_envelope;
use super::hull::Inflected;
use super::objective::{same_map, DcObjective, YBox};
use crate::error::{Error, Result};
use crate::mechanisms::{DcTerm, TermShape};

/// A g-map expressed in normalized coordinates.
#[derive(Clone, Debug)]
pub(crate) struct MapXi {
    pub w: Vec<f64>,
    pub c: f64,
    pub norm: f64,
    /// Range over the whole box.
    pub lo: f64,
    pub hi: f64,
}

/// Objective data precomputed once per search.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    pub obj: DcObjective,
    free: Vec<usize>,
    mid: Vec<f64>,
    half: Vec<f64>,
    smooth: Vec<SmoothTerm>,
    kinks: Vec<KinkTerm>,
    f_const: f64,
    /// f-terms left over once inflected pairs are taken out.
    unpaired: Vec<SmoothTerm>,
    unpaired_const: f64,
    pub maps: Vec<MapXi>,
    /// g-terms grouped by map index.
    pub g_by_map: Vec<Vec<DcTerm>>,
    /// Maps whose f and g parts combine into one inflected function.
    inflected: Vec<Option<Inflected>>,
    pub root: YBox,
}

impl Prepared {
    pub fn new(obj: &DcObjective) -> Self {
        let d = obj.dim();
        let lower = obj.domain.lower();
        let upper = obj.domain.upper();
        let mid: Vec<f64> = (0..d).map(|i| 0.5 * (lower[i] + upper[i])).collect();
        let half: Vec<f64> = (0..d).map(|i| 0.5 * (upper[i] - lower[i])).collect();
        let free: Vec<usize> = (0..d).filter(|&i| half[i] > 0.0).collect();
        let to_xi = |dir: &[f64], off: f64| -> (Vec<f64>, f64) {
            let w: Vec<f64> = free.iter().map(|&i| dir[i] * half[i]).collect();
            let c = off + (0..d).map(|i| dir[i] * mid[i]).sum::<f64>();
            (w, c)
        };
        let (gmaps, gidx) = obj.g_maps();
        let mut g_by_map = vec![Vec::new(); gmaps.len()];
        for (t, &j) in obj.g_terms.iter().zip(&gidx) {
            g_by_map[j].push(t.clone());
        }
        let mut inflected = vec![None; gmaps.len()];
        let mut paired = vec![false; obj.f_terms.len()];
        for (j, m) in gmaps.iter().enumerate() {
            let on_map: Vec<usize> = (0..obj.f_terms.len()).filter(|&i| same_map(&obj.f_terms[i].map, m)).collect();
            if let ([i], [g]) = (on_map.as_slice(), g_by_map[j].as_slice()) {
                if let Some(h) = Inflected::from_pair(&obj.f_terms[*i], g) {
                    inflected[j] = Some(h);
                    paired[*i] = true;
                }
            }
        }
        let mut smooth = Vec::new();
        let mut unpaired = Vec::new();
        let mut kinks = Vec::new();
        let mut f_const = 0.0;
        let mut unpaired_const = 0.0;
        for (t, &pair) in obj.f_terms.iter().zip(&paired) {
            let (w, c) = to_xi(&t.map.direction, t.map.offset);
            f_const += t.constant;
            match t.shape {
                TermShape::NegLogMin { alpha, beta, cap } => kinks.push(KinkTerm { alpha, beta, cap, w, c }),
                ref s => {
                    let term = SmoothTerm { shape: s.clone().into(), w, c };
                    if !pair {
                        unpaired.push(term.clone());
                    }
                    smooth.push(term);
                }
            }
            if !pair {
                unpaired_const += t.constant;
            }
        }
        let maps = gmaps
            .iter()
            .map(|m| {
                let (w, c) = to_xi(&m.direction, m.offset);
                let norm = dot(&w, &w).sqrt();
                let (lo, hi) = obj.domain.affine_range(&m.direction, m.offset);
                MapXi { w, c, norm, lo, hi }
            })
            .collect();
        Self {
            root: obj.root_ybox(),
            obj: obj.clone(),
            free,
            mid,
            half,
            smooth,
            kinks,
            f_const,
            unpaired,
            unpaired_const,
            maps,
            g_by_map,
            inflected,
        }
    }

    pub fn n(&self) -> usize {
        self.free.len()
    }

    pub fn to_x(&self, xi: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.mid.clone();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = (self.mid[i] + self.half[i] * xi[k]).clamp(self.obj.domain.lower()[i], self.obj.domain.upper()[i]);
        }
        x
    }

    /// Feasible-set constraints for a y-box; `None` when a constant map misses its interval.
    fn constraints(&self, ybox: &YBox) -> Option<Vec<LinCon>> {
        let mut cons = Vec::new();
        for (m, &(a, b)) in self.maps.iter().zip(&ybox.intervals) {
            let scale = 1e-12 * (1.0 + m.lo.abs().max(m.hi.abs()));
            if m.norm == 0.0 {
                if m.c < a - scale || m.c > b + scale {
                    return None;
                }
                continue;
            }
            if a > m.lo + scale {
                cons.push(LinCon {
                    a: m.w.iter().map(|v| v / m.norm).collect(),
                    b: (m.c - a) / m.norm,
                });
            }
            if b < m.hi - scale {
                cons.push(LinCon {
                    a: m.w.iter().map(|v| -v / m.norm).collect(),
                    b: (b - m.c) / m.norm,
                });
            }
        }
        Some(cons)
    }

    fn base(&self, cons: Vec<LinCon>) -> BarrierProblem {
        BarrierProblem {
            n: self.n(),
            smooth: self.smooth.clone(),
            kinks: self.kinks.clone(),
            lin: vec![0.0; self.n()],
            constant: self.f_const,
            cons,
        }
    }

    /// `f - sum H_j` with secant envelopes of the g-terms on the y-box; inflected maps use their convex envelope.
    pub fn envelope_problem(&self, ybox: &YBox) -> Result<Option<BarrierProblem>> {
        let cons = match self.constraints(ybox) {
            Some(c) => c,
            None => return Ok(None),
        };
        let mut p = self.base(cons);
        p.smooth = self.unpaired.clone();
        p.constant = self.unpaired_const;
        for (((m, terms), &(a, b)), inf) in self.maps.iter().zip(&self.g_by_map).zip(&ybox.intervals).zip(&self.inflected) {
            if let Some(h) = inf {
                p.smooth.push(SmoothTerm {
                    shape: Curve::Hull(h.envelope(a, b)),
                    w: m.w.clone(),
                    c: m.c,
                });
                continue;
            }
            let mut slope = 0.0;
            let mut intercept = 0.0;
            for t in terms {
                let h = concave_envelope(t, a, b)?;
                slope += h.slope;
                intercept += h.intercept;
            }
            for (l, w) in p.lin.iter_mut().zip(&m.w) {
                *l -= slope * w;
            }
            p.constant -= slope * m.c + intercept;
        }
        Ok(Some(p))
    }

    /// `f - (g(x0) + grad g(x0) . (x - x0))`, the DCA model at `xi0`.
    fn linearized_problem(&self, ybox: &YBox, xi0: &[f64]) -> Option<BarrierProblem> {
        let cons = self.constraints(ybox)?;
        let mut p = self.base(cons);
        for (m, terms) in self.maps.iter().zip(&self.g_by_map) {
            let y0 = dot(&m.w, xi0) + m.c;
            let mut slope = 0.0;
            let mut val = 0.0;
            for t in terms {
                slope += t.shape.d1(y0);
                val += t.eval_y(y0);
            }
            for (l, w) in p.lin.iter_mut().zip(&m.w) {
                *l -= slope * w;
            }
            p.constant -= val + slope * (m.c - y0);
        }
        Some(p)
    }

    /// Analytic center of the node polytope, a feasible starting point.
    fn center_point(&self, ybox: &YBox) -> Option<Vec<f64>> {
        let cons = self.constraints(ybox)?;
        let p = BarrierProblem {
            n: self.n(),
            smooth: vec![],
            kinks: vec![],
            lin: vec![0.0; self.n()],
            constant: 0.0,
            cons,
        };
        match p.solve(&vec![0.0; self.n()], 1.0) {
            Outcome::Solved(s) => Some(s.xi),
            Outcome::Infeasible => None,
        }
    }

    /// DCA from `xi0`; returns the best point found and its objective value.
    pub fn dca(&self, ybox: &YBox, xi0: Vec<f64>, iters: usize, history: Option<&mut Vec<f64>>) -> (Vec<f64>, f64) {
        let mut best_xi = xi0;
        let mut best = self.obj.eval(&self.to_x(&best_xi));
        let mut hist = Vec::new();
        hist.push(best);
        for _ in 0..iters {
            let p = match self.linearized_problem(ybox, &best_xi) {
                Some(p) => p,
                None => break,
            };
            let sol = match p.solve(&best_xi, 1e-7) {
                Outcome::Solved(s) => s,
                Outcome::Infeasible => break,
            };
            let v = self.obj.eval(&self.to_x(&sol.xi));
            if !(v < best) {
                break;
            }
            let rel = (best - v) / best.abs().max(1e-300);
            best = v;
            best_xi = sol.xi;
            hist.push(best);
            if rel < 1e-9 {
                break;
            }
        }
        if let Some(h) = history {
            *h = hist;
        }
        (best_xi, best)
    }
}

/// Solution of the envelope subproblem of a node.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSolution {
    pub x: Vec<f64>,
    /// Subproblem objective `f(x) - sum H_i(x)` at `x`.
    pub value: f64,
    /// Certified lower bound on the subproblem minimum.
    pub lower_bound: f64,
}

/// Minimizes `f - sum H_i` over the polytope defined by the box and the y-box.
pub fn solve_convex_subproblem(obj: &DcObjective, ybox: &YBox, tol: f64) -> Result<ConvexSolution> {
    let prep = Prepared::new(obj);
    if ybox.len() != prep.maps.len() {
        return Err(Error::Domain(format!(
            "y-box has {} intervals, objective has {} g-maps",
            ybox.len(),
            prep.maps.len()
        )));
    }
    let p = prep
        .envelope_problem(ybox)?
        .ok_or_else(|| Error::Infeasible("empty polytope".into()))?;
    match p.solve(&vec![0.0; prep.n()], tol) {
        Outcome::Solved(s) => Ok(ConvexSolution {
            x: prep.to_x(&s.xi),
            value: s.value,
            lower_bound: s.lower_bound,
        }),
        Outcome::Infeasible => Err(Error::Infeasible("empty polytope".into())),
    }
}

/// Result of a DCA run.
#[derive(Clone, Debug, PartialEq)]
pub struct DcaResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective value after each accepted iterate, non-increasing.
    pub history: Vec<f64>,
}

/// Difference-of-convex local search inside the node polytope.
pub fn dca_local_minimize(obj: &DcObjective, ybox: &YBox, iters: usize) -> Result<DcaResult> {
    let prep = Prepared::new(obj);
    if ybox.len() != prep.maps.len() {
        return Err(Error::Domain("y-box does not match the objective".into()));
    }
    let start = prep
        .center_point(ybox)
        .ok_or_else(|| Error::Infeasible("no feasible starting point".into()))?;
    let mut history = Vec::new();
    let (xi, value) = prep.dca(ybox, start, iters, Some(&mut history));
    Ok(DcaResult {
        x: prep.to_x(&xi),
        value,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoxDomain;
    use crate::mechanisms::AffineMap;

    #[test]
    fn affine_objective_over_box() {
        let dom = BoxDomain::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 5.0]).unwrap();
        let f = vec![DcTerm::new(TermShape::Affine { slope: 1.0 }, AffineMap::new(vec![2.0, -1.0, 0.5], 0.3))];
        let obj = DcObjective::new(f, vec![], dom).unwrap();
        let s = solve_convex_subproblem(&obj, &YBox::new(vec![]).unwrap(), 1e-9).unwrap();
        let want = 0.3 - 2.0 - 3.0 + 1.0;
        assert!((s.value - want).abs() < 1e-6);
        assert!(s.lower_bound <= want);
        assert!((s.x[0] + 1.0).abs() < 1e-5 && (s.x[1] - 3.0).abs() < 1e-5 && (s.x[2] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn squared_norm_minimum() {
        let d = 4;
        let dom = BoxDomain::cube(d, -1.0, 1.0).unwrap();
        let f = (0..d)
            .map(|i| DcTerm::new(TermShape::Square { coeff: 1.0 }, AffineMap::coordinate(d, i)))
            .collect();
        let obj = DcObjective::new(f, vec![], dom).unwrap();
        let s = solve_convex_subproblem(&obj, &YBox::new(vec![]).unwrap(), 1e-9).unwrap();
        assert!(s.value.abs() < 1e-7 && s.lower_bound <= s.value);
        assert!(s.x.iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn fixed_dimensions_are_eliminated() {
        let dom = BoxDomain::new(vec![0.5, -1.0], vec![0.5, 1.0]).unwrap();
        let f = vec![DcTerm::new(TermShape::Square { coeff: 1.0 }, AffineMap::new(vec![1.0, 1.0], 0.0))];
        let obj = DcObjective::new(f, vec![], dom).unwrap();
        let s = solve_convex_subproblem(&obj, &YBox::new(vec![]).unwrap(), 1e-9).unwrap();
        assert!(s.value.abs() < 1e-7);
        assert!((s.x[0] - 0.5).abs() < 1e-15 && (s.x[1] + 0.5).abs() < 1e-3);
    }

    #[test]
    fn dca_pure_convex_matches_subproblem() {
        let dom = BoxDomain::cube(2, -1.0, 1.0).unwrap();
        let f = vec![
            DcTerm::new(TermShape::LogSumExp { alpha: 1.0, beta: 2.0 }, AffineMap::new(vec![1.0, -0.5], 0.2)),
            DcTerm::new(TermShape::Square { coeff: 0.3 }, AffineMap::coordinate(2, 1)),
        ];
        let obj = DcObjective::new(f, vec![], dom).unwrap();
        let yb = YBox::new(vec![]).unwrap();
        let s = solve_convex_subproblem(&obj, &yb, 1e-9).unwrap();
        let d = dca_local_minimize(&obj, &yb, 50).unwrap();
        assert!((d.value - s.value).abs() < 1e-6);
        assert!(d.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn infeasible_y_interval() {
        let dom = BoxDomain::cube(1, -1.0, 1.0).unwrap();
        let g = vec![DcTerm::new(TermShape::Square { coeff: 1.0 }, AffineMap::coordinate(1, 0))];
        let obj = DcObjective::new(vec![], g, dom).unwrap();
        let err = solve_convex_subproblem(&obj, &YBox::new(vec![(2.0, 3.0)]).unwrap(), 1e-8);
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }
}
