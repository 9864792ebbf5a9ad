//! Best-first branch-and-bound over boxes of the g-term values.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::barrier::Outcome;
use super::envelope::DEGENERATE_WIDTH;
use super::objective::{DcObjective, YBox};
use super::subproblem::Prepared;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    pub delta: f64,
    pub max_nodes: usize,
    /// Duality-gap target of each convex subproblem.
    pub subproblem_tol: f64,
    pub dca_iters: usize,
    pub record_history: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            delta: 0.01,
            max_nodes: 100_000,
            subproblem_tol: 1e-7,
            dca_iters: 50,
            record_history: false,
        }
    }
}

impl BnbOptions {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbNode {
    pub ybox: YBox,
    pub lb: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Split {
    Children(BnbNode, BnbNode),
    /// Every interval is degenerate; the node cannot be refined.
    Terminal,
}

/// Halves the interval with the largest length relative to `root`; ties go to the lowest index.
pub fn branch(node: &BnbNode, root: &YBox) -> Split {
    let rel = node.ybox.relative_lengths(root);
    let mut best: Option<usize> = None;
    for (i, r) in rel.iter().enumerate() {
        let (a, b) = node.ybox.intervals[i];
        if b - a < DEGENERATE_WIDTH || *r <= 0.0 {
            continue;
        }
        if best.map_or(true, |j| *r > rel[j]) {
            best = Some(i);
        }
    }
    match best {
        None => Split::Terminal,
        Some(i) => {
            let (a, b) = node.ybox.intervals[i];
            let m = 0.5 * (a + b);
            let mut left = node.ybox.clone();
            let mut right = node.ybox.clone();
            left.intervals[i].1 = m;
            right.intervals[i].0 = m;
            Split::Children(
                BnbNode { ybox: left, lb: node.lb },
                BnbNode { ybox: right, lb: node.lb },
            )
        }
    }
}

/// Solver record of one search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbResult {
    pub lb: f64,
    pub ub: f64,
    pub converged: bool,
    pub nodes: usize,
    pub gap: f64,
    pub wall_time_secs: f64,
    /// Best point found; `ub` is the objective there.
    pub argmin: Vec<f64>,
    /// Global `(lb, ub)` after every expansion when requested.
    pub history: Vec<(f64, f64)>,
}

struct Entry {
    lb: f64,
    id: u64,
    ybox: YBox,
    xi: Vec<f64>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // max-heap: smallest lb first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    prep: &'a Prepared,
    opts: &'a BnbOptions,
    ub: f64,
    best_xi: Vec<f64>,
}

impl<'a> Search<'a> {
    /// Bounds a node; `None` if its polytope is empty.
    fn bound(&mut self, ybox: &YBox, warm: &[f64], run_dca: bool) -> Result<Option<(f64, Vec<f64>)>> {
        let p = match self.prep.envelope_problem(ybox)? {
            Some(p) => p,
            None => return Ok(None),
        };
        let sol = match p.solve(warm, self.opts.subproblem_tol) {
            Outcome::Solved(s) => s,
            Outcome::Infeasible => return Ok(None),
        };
        let x = self.prep.to_x(&sol.xi);
        let v = self.prep.obj.eval(&x);
        if v < self.ub || run_dca {
            let improved = v < self.ub;
            if improved {
                self.ub = v;
                self.best_xi = sol.xi.clone();
            }
            if (improved || run_dca) && self.opts.dca_iters > 0 {
                let (xi, dv) = self.prep.dca(ybox, sol.xi.clone(), self.opts.dca_iters, None);
                if dv < self.ub {
                    self.ub = dv;
                    self.best_xi = xi;
                }
            }
        }
        Ok(Some((sol.lower_bound, sol.xi)))
    }
}

/// Global minimum of `f - g` over the box, bracketed to within `delta` unless the node budget runs out.
pub fn branch_and_bound_min(obj: &DcObjective, opts: &BnbOptions) -> Result<BnbResult> {
    if !(opts.delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {}", opts.delta)));
    }
    let start = Instant::now();
    let prep = Prepared::new(obj);
    let root = prep.root.clone();
    let n = prep.n();
    let mut s = Search {
        prep: &prep,
        opts,
        ub: f64::INFINITY,
        best_xi: vec![0.0; n],
    };
    let (root_lb, root_xi) = s
        .bound(&root, &vec![0.0; n], true)?
        .ok_or_else(|| Error::Infeasible("root polytope is empty".into()))?;

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(Entry {
        lb: root_lb,
        id: next_id,
        ybox: root.clone(),
        xi: root_xi,
    });
    next_id += 1;
    let mut nodes = 1usize;
    let mut set_aside = f64::INFINITY; // pruned and terminal nodes
    let mut terminal_open = false;
    let mut history = Vec::new();
    let mut converged = false;

    let global_lb = |heap: &BinaryHeap<Entry>, aside: f64, ub: f64| -> f64 {
        heap.peek().map_or(f64::INFINITY, |e| e.lb).min(aside).min(ub)
    };

    loop {
        if opts.record_history {
            history.push((global_lb(&heap, set_aside, s.ub), s.ub));
        }
        let top_lb = match heap.peek() {
            None => {
                converged = !terminal_open;
                break;
            }
            Some(e) => e.lb,
        };
        if top_lb >= s.ub - opts.delta {
            converged = !terminal_open;
            break;
        }
        if nodes >= opts.max_nodes {
            break;
        }
        let e = heap.pop().expect("peeked");
        let node = BnbNode { ybox: e.ybox, lb: e.lb };
        match branch(&node, &root) {
            Split::Terminal => {
                set_aside = set_aside.min(node.lb);
                terminal_open = true;
            }
            Split::Children(l, r) => {
                for child in [l, r] {
                    nodes += 1;
                    if let Some((lb, xi)) = s.bound(&child.ybox, &e.xi, false)? {
                        let lb = lb.max(node.lb);
                        if lb >= s.ub - opts.delta {
                            set_aside = set_aside.min(lb);
                        } else {
                            heap.push(Entry {
                                lb,
                                id: next_id,
                                ybox: child.ybox,
                                xi,
                            });
                            next_id += 1;
                        }
                    }
                }
            }
        }
    }
    let lb = global_lb(&heap, set_aside, s.ub);
    let ub = s.ub;
    if opts.record_history {
        history.push((lb, ub));
    }
    Ok(BnbResult {
        lb,
        ub,
        converged,
        nodes,
        gap: ub - lb,
        wall_time_secs: start.elapsed().as_secs_f64(),
        argmin: prep.to_x(&s.best_xi),
        history,
    })
}
