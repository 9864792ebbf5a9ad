//! Expected number of identical randomized responses a simplified filter accepts.
//!
//! With `P(x_j) = e^{a_j eps}` the state is the exponent tuple `a`, shifted so its
//! minimum is 0. A query raises the true value's exponent with probability
//! `e^eps / (e^eps + m - 1)` and each other exponent with `1 / (e^eps + m - 1)`.
//! The walk stops once an exponent reaches `k`.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state space the Markov computation will enumerate.
pub const MAX_STATES: usize = 1_000_000;
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Largest state space [`TransitionModel::dense_matrix`] will materialize.
pub const MAX_DENSE_STATES: usize = 4096;

/// `E(0)` for `m = 2`, written as `k tanh(k eps / 2) / tanh(eps / 2)`.
pub fn expected_queries_closed_form(k: u32, eps: f64) -> f64 {
    if k == 1 {
        return 1.0;
    }
    let k = k as f64;
    k * (k * eps / 2.0).tanh() / (eps / 2.0).tanh()
}

/// `E(0)` when the budget `eps_total` is split evenly over `k` queries.
pub fn expected_queries_fixed_budget(k: u32, eps_total: f64) -> f64 {
    expected_queries_closed_form(k, eps_total / k as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub m: usize,
    pub k: u32,
    pub eps: f64,
    pub theta: f64,
}

impl WalkConfig {
    pub fn new(m: usize, k: u32, eps: f64) -> Result<Self> {
        Self::with_theta(m, k, eps, 1e-9)
    }

    pub fn with_theta(m: usize, k: u32, eps: f64, theta: f64) -> Result<Self> {
        let c = Self { m, k, eps, theta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Construction(format!("universe size must be at least 2, got {}", self.m)));
        }
        if self.k < 1 {
            return Err(Error::Construction("k must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Construction(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.theta > 0.0 && self.theta <= 1e-3) {
            return Err(Error::Construction(format!("theta must lie in (0, 1e-3], got {}", self.theta)));
        }
        Ok(())
    }

    /// `k^m - (k-1)^m + m (k^{m-1} - (k-1)^{m-1})`, saturating.
    pub fn state_count(&self) -> u128 {
        let k = self.k as u128;
        let m = self.m as u32;
        let pow = |b: u128, e: u32| b.checked_pow(e).unwrap_or(u128::MAX);
        pow(k, m)
            .saturating_sub(pow(k - 1, m))
            .saturating_add((self.m as u128).saturating_mul(pow(k, m - 1).saturating_sub(pow(k - 1, m - 1))))
    }

    fn step_probs(&self) -> (f64, f64) {
        let z = self.eps.exp() + (self.m as f64 - 1.0);
        (self.eps.exp() / z, 1.0 / z)
    }
}

/// The walk's states with sparse outgoing transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    pub config: WalkConfig,
    pub states: Vec<Vec<u16>>,
    /// `(target, probability)` per state; terminal states loop to themselves.
    pub successors: Vec<Vec<(usize, f64)>>,
    pub terminal: Vec<bool>,
}

impl TransitionModel {
    pub fn build(cfg: WalkConfig) -> Result<Self> {
        cfg.validate()?;
        let count = cfg.state_count();
        if count > MAX_STATES as u128 {
            return Err(Error::SizeLimit(format!(
                "walk with m={}, k={} has {count} states (limit {MAX_STATES})",
                cfg.m, cfg.k
            )));
        }
        if cfg.k > u16::MAX as u32 - 1 {
            return Err(Error::SizeLimit("k too large".into()));
        }
        let k = cfg.k as u16;
        let (p_true, p_other) = cfg.step_probs();
        let mut index: HashMap<Vec<u16>, usize> = HashMap::with_capacity(count as usize);
        let mut states = vec![vec![0u16; cfg.m]];
        index.insert(states[0].clone(), 0);
        let mut successors: Vec<Vec<(usize, f64)>> = Vec::with_capacity(count as usize);
        let mut terminal = Vec::with_capacity(count as usize);
        let mut i = 0;
        while i < states.len() {
            let s = states[i].clone();
            let done = s.iter().any(|&a| a >= k);
            terminal.push(done);
            if done {
                successors.push(vec![(i, 1.0)]);
            } else {
                let mut out: Vec<(usize, f64)> = Vec::with_capacity(cfg.m);
                for j in 0..cfg.m {
                    let mut t = s.clone();
                    t[j] += 1;
                    let lo = *t.iter().min().expect("m >= 2");
                    t.iter_mut().for_each(|a| *a -= lo);
                    let id = match index.get(&t) {
                        Some(&id) => id,
                        None => {
                            let id = states.len();
                            index.insert(t.clone(), id);
                            states.push(t);
                            id
                        }
                    };
                    let p = if j == 0 { p_true } else { p_other };
                    match out.iter_mut().find(|(d, _)| *d == id) {
                        Some(e) => e.1 += p,
                        None => out.push((id, p)),
                    }
                }
                successors.push(out);
            }
            i += 1;
        }
        Ok(Self {
            config: cfg,
            states,
            successors,
            terminal,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &[u16]) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Column-stochastic matrix: entry `[to][from]`.
    pub fn dense_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        if n > MAX_DENSE_STATES {
            return Err(Error::SizeLimit(format!("{n} states exceed the dense limit {MAX_DENSE_STATES}")));
        }
        let mut a = vec![vec![0.0; n]; n];
        for (from, out) in self.successors.iter().enumerate() {
            for &(to, p) in out {
                a[to][from] += p;
            }
        }
        Ok(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovExpectation {
    pub value: f64,
    pub iterations: usize,
    pub absorbed_mass: f64,
    /// The iteration cap was hit before the threshold was met.
    pub capped: bool,
    pub states: usize,
}

/// Iterates the state distribution until no entry moves by more than `theta`.
pub fn markov_expectation(cfg: WalkConfig) -> Result<MarkovExpectation> {
    let model = TransitionModel::build(cfg)?;
    let n = model.len();
    let mut s = vec![0.0; n];
    s[0] = 1.0;
    let mut next = vec![0.0; n];
    let mut absorbed = 0.0;
    let mut value = 0.0;
    let mut step = 0;
    let mut capped = true;
    while step < MAX_ITERATIONS {
        step += 1;
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, out) in model.successors.iter().enumerate() {
            let m = s[i];
            if m == 0.0 {
                continue;
            }
            for &(j, p) in out {
                next[j] += m * p;
            }
        }
        let now: f64 = next.iter().zip(&model.terminal).filter(|(_, t)| **t).map(|(v, _)| v).sum();
        value += step as f64 * (now - absorbed);
        absorbed = now;
        let change = s.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut s, &mut next);
        if change <= cfg.theta {
            capped = false;
            break;
        }
    }
    Ok(MarkovExpectation {
        value,
        iterations: step,
        absorbed_mass: absorbed,
        capped,
        states: n,
    })
}

pub fn expected_queries_markov(cfg: WalkConfig) -> Result<f64> {
    markov_expectation(cfg).map(|e| e.value)
}

/// Output indices of one simulated walk against true value 0.
pub fn simulate_walk_responses<R: Rng + ?Sized>(cfg: &WalkConfig, rng: &mut R) -> Vec<usize> {
    let (p_true, _) = cfg.step_probs();
    let k = cfg.k as u64;
    let mut a = vec![0u64; cfg.m];
    let mut out = Vec::new();
    loop {
        let j = if rng.gen::<f64>() < p_true {
            0
        } else {
            rng.gen_range(1..cfg.m)
        };
        out.push(j);
        a[j] += 1;
        let lo = *a.iter().min().expect("m >= 2");
        a.iter_mut().for_each(|v| *v -= lo);
        if a[j] >= k {
            return out;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkStats {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of the expected walk length.
pub fn simulate_walk<R: Rng + ?Sized>(cfg: &WalkConfig, trials: usize, rng: &mut R) -> Result<WalkStats> {
    cfg.validate()?;
    if trials < 2 {
        return Err(Error::Domain("need at least 2 trials".into()));
    }
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..trials {
        let n = simulate_walk_responses(cfg, rng).len() as f64;
        sum += n;
        sq += n * n;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sq - t * mean * mean) / (t - 1.0);
    Ok(WalkStats {
        mean,
        std_err: (var.max(0.0) / t).sqrt(),
        trials,
    })
}
