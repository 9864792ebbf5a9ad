//! Frequency estimation from one randomized response versus a composition of weaker ones.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::walk::{expected_queries_markov, simulate_walk_responses, WalkConfig};
use crate::error::{Error, Result};

fn check(m: usize, eps: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::Construction(format!("universe size must be at least 2, got {m}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Construction(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// `Pr(y | x)` as `[y][x]`.
pub fn rr_probability_matrix(m: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    check(m, eps)?;
    let z = eps.exp() + m as f64 - 1.0;
    Ok((0..m)
        .map(|y| (0..m).map(|x| if x == y { eps.exp() / z } else { 1.0 / z }).collect())
        .collect())
}

pub fn inverse_probability_matrix(m: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    check(m, eps)?;
    // P = ((e^eps - 1) I + J) / z with z = e^eps + m - 1, so P^{-1} = (z I - J) / (e^eps - 1)
    let d = eps.exp_m1();
    let diag = (eps.exp() + m as f64 - 2.0) / d;
    let off = -1.0 / d;
    Ok((0..m)
        .map(|i| (0..m).map(|j| if i == j { diag } else { off }).collect())
        .collect())
}

/// Mean of `P^{-1} v_y` over the responses, `v_y` the indicator of `y`.
pub fn composition_estimator(responses: &[usize], m: usize, eps_per_query: f64) -> Result<Vec<f64>> {
    if responses.is_empty() {
        return Err(Error::Domain("no responses".into()));
    }
    let inv = inverse_probability_matrix(m, eps_per_query)?;
    let mut counts = vec![0usize; m];
    for &y in responses {
        if y >= m {
            return Err(Error::Domain(format!("response {y} outside universe of size {m}")));
        }
        counts[y] += 1;
    }
    let n = responses.len() as f64;
    Ok((0..m)
        .map(|i| counts.iter().enumerate().map(|(y, &c)| inv[i][y] * c as f64).sum::<f64>() / n)
        .collect())
}

/// Total variance (covariance trace) of the single-response estimator at `eps`, exact.
pub fn single_response_variance(m: usize, eps: f64) -> Result<f64> {
    let p = rr_probability_matrix(m, eps)?;
    let inv = inverse_probability_matrix(m, eps)?;
    // unbiased, so the variance is E || P^{-1} v_Y - e_0 ||^2 with X = 0
    Ok((0..m)
        .map(|y| {
            let d: f64 = (0..m)
                .map(|i| {
                    let t = if i == 0 { 1.0 } else { 0.0 };
                    (inv[i][y] - t).powi(2)
                })
                .sum();
            p[y][0] * d
        })
        .sum())
}

/// `k^2 / E[n]`, with `E[n]` the expected accepted count at `eps_total / k` per query.
pub fn covariance_ratio(m: usize, k: u32, eps_total: f64) -> Result<f64> {
    if k == 1 {
        return Ok(1.0);
    }
    let e = expected_queries_markov(WalkConfig::new(m, k, eps_total / k as f64)?)?;
    Ok((k as f64).powi(2) / e)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub m: usize,
    pub k: u32,
    pub eps_total: f64,
    pub expected_n: f64,
    pub analytic_ratio: f64,
    pub mc_ratio: f64,
    pub mc_mean_n: f64,
    pub trials: usize,
}

/// Compares the analytic ratio with the Monte Carlo variance of the stopped composition.
pub fn estimator_compare<R: Rng + ?Sized>(
    m: usize,
    k: u32,
    eps_total: f64,
    trials: usize,
    rng: &mut R,
) -> Result<EstimatorReport> {
    if trials < 2 {
        return Err(Error::Domain("need at least 2 trials".into()));
    }
    let eps = eps_total / k as f64;
    let cfg = WalkConfig::new(m, k, eps)?;
    let expected_n = if k == 1 { 1.0 } else { expected_queries_markov(cfg)? };
    let single = single_response_variance(m, eps_total)?;
    let mut sum = vec![0.0; m];
    let mut sq = vec![0.0; m];
    let mut total_n = 0usize;
    for _ in 0..trials {
        let r = simulate_walk_responses(&cfg, rng);
        total_n += r.len();
        let est = composition_estimator(&r, m, eps)?;
        for i in 0..m {
            sum[i] += est[i];
            sq[i] += est[i] * est[i];
        }
    }
    let t = trials as f64;
    let var: f64 = (0..m).map(|i| (sq[i] - sum[i] * sum[i] / t) / (t - 1.0)).sum();
    Ok(EstimatorReport {
        m,
        k,
        eps_total,
        expected_n,
        analytic_ratio: (k as f64).powi(2) / expected_n,
        mc_ratio: var / single,
        mc_mean_n: total_n as f64 / t,
        trials,
    })
}
