//! Composition experiments and the fixed scenarios behind the subcommands.

use std::io::Write;

use bayes_ldp::accounting::{FilterMode, FilterState, ContinuousConfig};
use bayes_ldp::analysis::{
    estimator_compare, expected_queries_closed_form, expected_queries_markov, simulate_walk, EstimatorReport,
    WalkConfig,
};
use bayes_ldp::dcopt::{realized_loss_bounds, QueryTerms};
use bayes_ldp::mechanisms::{MechanismSpec, ObjectValue, RegressionKind, RegressionParams};
use bayes_ldp::num::percentile_sorted;
use bayes_ldp::{BoxDomain, DiscreteDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, DomainConfig, ExperimentConfig, RegressionConfig, Scenario};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] bayes_ldp::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Per-trial generator: the stream depends only on `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial: usize,
    pub query_index: usize,
    pub epsilon: f64,
    pub decision: String,
    pub output: Option<f64>,
    pub log_loss_ub: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositionRun {
    pub rows: Vec<TraceRow>,
    /// Bound computations that hit the node budget.
    pub nonconverged: usize,
}

impl CompositionRun {
    /// Accepted queries per trial, in trial order.
    pub fn accepted_counts(&self, trials: usize) -> Vec<usize> {
        let mut n = vec![0; trials];
        for r in self.rows.iter().filter(|r| r.decision == "accept") {
            n[r.trial] += 1;
        }
        n
    }
}

/// Random regression with `dim` features: coefficients and intercept drawn together.
pub fn random_regression<R: Rng + ?Sized>(
    kind: RegressionKind,
    dim: usize,
    id: String,
    eps: f64,
    rng: &mut R,
) -> Result<MechanismSpec> {
    let (range, normalize) = match kind {
        RegressionKind::Logistic => (10.0, false),
        _ => (1.0, true),
    };
    let mut w: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-range..=range)).collect();
    if normalize {
        let s: f64 = w.iter().map(|v| v.abs()).sum();
        w.iter_mut().for_each(|v| *v /= s);
    }
    let (lo, hi) = match kind {
        RegressionKind::Logistic => (0.0, 1.0),
        _ => (-1.0, 1.0),
    };
    let c = w.pop().expect("dim + 1 entries");
    Ok(MechanismSpec::regression(id, kind, RegressionParams::new(w, c, lo, hi)?, eps)?)
}

fn fixed_regressions(regs: &[RegressionConfig]) -> Result<Vec<MechanismSpec>> {
    regs.iter()
        .enumerate()
        .map(|(i, r)| Ok(MechanismSpec::regression(format!("r{i}"), r.kind, r.params()?, r.epsilon)?))
        .collect()
}

fn run_trial(cfg: &ExperimentConfig, trial: usize, rows: &mut Vec<TraceRow>) -> Result<usize> {
    let mut rng = trial_rng(cfg.seed, trial);
    let fixed = fixed_regressions(&cfg.regressions)?;
    let (mut fs, point, index) = match cfg.scenario {
        Scenario::RrCompose => {
            let d = match &cfg.domain {
                Some(DomainConfig::Discrete { candidates }) => DiscreteDomain::new(candidates.clone())?,
                _ => DiscreteDomain::indexed(cfg.m)?,
            };
            (FilterState::discrete(d, cfg.budget_eps, cfg.filter_mode)?, vec![], 0)
        }
        Scenario::LinregCompose | Scenario::LogregCompose => {
            let c = ContinuousConfig::new(cfg.box_domain()?, cfg.group_size, cfg.bnb_delta)?;
            (FilterState::continuous(c, cfg.budget_eps, cfg.filter_mode)?, cfg.true_point()?, 0)
        }
        s => {
            return Err(ConfigError::Invalid(format!("{s:?} is not a composition scenario")).into());
        }
    };
    let dim = point.len();
    let m = fs.likelihood().map_or(0, |s| s.domain().len());
    for q in 0..cfg.max_queries {
        let id = format!("q{q}");
        let mech = match cfg.scenario {
            Scenario::RrCompose => MechanismSpec::randomized_response(id, m, cfg.per_query_eps)?,
            _ if !fixed.is_empty() => match fixed.get(q) {
                Some(f) => f.clone(),
                None => break,
            },
            Scenario::LinregCompose => random_regression(RegressionKind::Linear, dim, id, cfg.per_query_eps, &mut rng)?,
            _ => random_regression(RegressionKind::Logistic, dim, id, cfg.per_query_eps, &mut rng)?,
        };
        let x = if point.is_empty() {
            ObjectValue::Index(index)
        } else {
            ObjectValue::Point(&point)
        };
        let out = fs.submit(&mech, x, &mut rng)?;
        let rec = fs.trace().last().expect("submit records a decision");
        rows.push(TraceRow {
            trial,
            query_index: q,
            epsilon: rec.epsilon,
            decision: rec.decision.clone(),
            output: rec.output,
            log_loss_ub: rec.log_loss_after,
        });
        if out.is_none() {
            break;
        }
    }
    Ok(fs.nonconverged_bounds())
}

/// Streams queries at the true value until the first rejection, for every trial.
pub fn run_composition_experiment(cfg: &ExperimentConfig) -> Result<CompositionRun> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut nonconverged = 0;
    for t in 0..cfg.trials {
        nonconverged += run_trial(cfg, t, &mut rows)?;
    }
    Ok(CompositionRun { rows, nonconverged })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub eps: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

/// Accepted-query count reached when the realized loss first passes `eps`, linearly interpolated.
fn count_at(points: &[(f64, f64)], eps: f64) -> f64 {
    for w in points.windows(2) {
        let ((l0, n0), (l1, n1)) = (w[0], w[1]);
        if l1 > eps {
            if l1 <= l0 {
                return n0;
            }
            return n0 + (n1 - n0) * ((eps - l0) / (l1 - l0)).clamp(0.0, 1.0);
        }
    }
    points.last().map_or(0.0, |p| p.1)
}

pub fn percentile_curve(rows: &[TraceRow], eps_grid: &[f64]) -> Result<Vec<CurveRow>> {
    let trials: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.trial).collect();
    if trials.len() < 2 {
        return Err(bayes_ldp::Error::Domain("percentile curve needs at least two trials".into()).into());
    }
    let per_trial: Vec<Vec<(f64, f64)>> = trials
        .iter()
        .map(|t| {
            let mut pts = vec![(0.0, 0.0)];
            let mut running = 0.0f64;
            for r in rows.iter().filter(|r| r.trial == *t && r.decision == "accept") {
                // the count is read off the loss ceiling reached so far
                running = running.max(r.log_loss_ub);
                pts.push((running, pts.len() as f64));
            }
            pts
        })
        .collect();
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            let mut c: Vec<f64> = per_trial.iter().map(|p| count_at(p, eps)).collect();
            c.sort_by(|a, b| a.total_cmp(b));
            CurveRow {
                eps,
                p10: percentile_sorted(&c, 0.1),
                p50: percentile_sorted(&c, 0.5),
                p90: percentile_sorted(&c, 0.9),
            }
        })
        .collect())
}

/// Health checkup regressions: heart disease, stroke, sleep duration (truncated to [0, 12]) and diabetes,
/// over age 10-100, sex 0/1, blood pressure 50-200 and BMI 10-50.
pub fn healthcare_defaults() -> (BoxDomain, Vec<RegressionConfig>) {
    let d = BoxDomain::new(vec![10.0, 0.0, 50.0, 10.0], vec![100.0, 1.0, 200.0, 50.0]).expect("valid box");
    let r = |kind, theta: [f64; 4], intercept, out_high| RegressionConfig {
        kind,
        theta: theta.to_vec(),
        intercept,
        out_low: 0.0,
        out_high,
        epsilon: 1.0,
    };
    let regs = vec![
        r(RegressionKind::Logistic, [-0.059, -1.456, -0.0134, 0.0], 6.177, 1.0),
        r(RegressionKind::Logistic, [0.0761, 0.0952, 0.0, 0.0163], -7.989, 1.0),
        r(RegressionKind::TruncatedLinear, [0.0855, 0.4617, -0.07, 0.0], 12.323, 12.0),
        r(RegressionKind::Logistic, [0.0491, 0.0, -0.0091, 0.1039], -5.07, 1.0),
    ];
    (d, regs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HealthRow {
    pub o1: f64,
    pub o2: f64,
    pub o3: f64,
    pub o4: f64,
    pub log_loss_lb: f64,
    pub log_loss_ub: f64,
    pub converged: bool,
}

/// Certified log realized loss for every output combination of four binary regressions.
pub fn healthcare_scenario(cfg: &ExperimentConfig) -> Result<Vec<HealthRow>> {
    let (domain, regs) = if cfg.regressions.is_empty() {
        healthcare_defaults()
    } else {
        (cfg.box_domain()?, cfg.regressions.clone())
    };
    if regs.len() != 4 {
        return Err(ConfigError::Invalid(format!("healthcare needs 4 regressions, got {}", regs.len())).into());
    }
    let mechs = fixed_regressions(&regs)?;
    let mut rows = Vec::with_capacity(16);
    for combo in 0..16usize {
        let outs: Vec<usize> = (0..4).map(|i| (combo >> (3 - i)) & 1).collect();
        let qs = mechs
            .iter()
            .zip(&outs)
            .map(|(m, &o)| QueryTerms::from_mechanism(m, o))
            .collect::<bayes_ldp::Result<Vec<_>>>()?;
        let b = realized_loss_bounds(&qs, &domain, cfg.group_size, cfg.bnb_delta)?;
        let v: Vec<f64> = mechs
            .iter()
            .zip(&outs)
            .map(|(m, &o)| m.output_value(o))
            .collect::<bayes_ldp::Result<_>>()?;
        rows.push(HealthRow {
            o1: v[0],
            o2: v[1],
            o3: v[2],
            o4: v[3],
            log_loss_lb: b.log_lb,
            log_loss_ub: b.log_ub,
            converged: b.converged,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanVarRow {
    pub o1: f64,
    pub o2: f64,
    pub max_log_pr: f64,
    pub min_log_pr: f64,
    pub log_loss: f64,
}

/// Grid points used by [`meanvar_scenario`].
pub const MEANVAR_GRID: usize = 1_000_001;

/// Mean (ramp on `x` over [-1, 1], outputs -1/1) and variance (ramp on `x^2` over [0, 1], outputs 0/1)
/// released together; extrema of the joint likelihood over a dense grid of `x`.
pub fn meanvar_scenario(eps: f64) -> Result<Vec<MeanVarRow>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ConfigError::Invalid(format!("eps must be positive, got {eps}")).into());
    }
    let lo = 1.0 / (eps.exp() + 1.0);
    let t = (eps / 2.0).tanh();
    let mut rows = Vec::with_capacity(4);
    for (o1, o2) in [(1.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (-1.0, 0.0)] {
        let mut hi = f64::NEG_INFINITY;
        let mut lw = f64::INFINITY;
        for i in 0..MEANVAR_GRID {
            let x = -1.0 + 2.0 * i as f64 / (MEANVAR_GRID - 1) as f64;
            let p1 = 0.5 + o1 * t * x / 2.0;
            let p2 = if o2 > 0.5 { t * x * x + lo } else { 1.0 - lo - t * x * x };
            let v = p1.ln() + p2.ln();
            hi = hi.max(v);
            lw = lw.min(v);
        }
        rows.push(MeanVarRow {
            o1,
            o2,
            max_log_pr: hi,
            min_log_pr: lw,
            log_loss: hi - lw,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkRow {
    pub m: usize,
    pub k: u32,
    pub eps: f64,
    pub expectation: f64,
    pub method: &'static str,
}

/// Expected accepted identical randomized responses for `k = 1..=cfg.k`, by every available method.
pub fn walk_expected(cfg: &ExperimentConfig) -> Result<Vec<WalkRow>> {
    let mut rows = Vec::new();
    let eps = cfg.per_query_eps;
    for k in 1..=cfg.k {
        let wc = WalkConfig::new(cfg.m, k, eps)?;
        if cfg.m == 2 {
            rows.push(WalkRow {
                m: 2,
                k,
                eps,
                expectation: expected_queries_closed_form(k, eps),
                method: "closed-form",
            });
        }
        rows.push(WalkRow {
            m: cfg.m,
            k,
            eps,
            expectation: expected_queries_markov(wc)?,
            method: "markov",
        });
        if cfg.trials >= 2 {
            let mut rng = trial_rng(cfg.seed, k as usize);
            rows.push(WalkRow {
                m: cfg.m,
                k,
                eps,
                expectation: simulate_walk(&wc, cfg.trials, &mut rng)?.mean,
                method: "monte-carlo",
            });
        }
    }
    Ok(rows)
}

/// Analytic `k^2 / E[n]` and the Monte Carlo variance ratio for `k = 1..=cfg.k`.
pub fn estimator_rows(cfg: &ExperimentConfig) -> Result<Vec<EstimatorReport>> {
    (1..=cfg.k)
        .map(|k| {
            let mut rng = trial_rng(cfg.seed, k as usize);
            Ok(estimator_compare(cfg.m, k, cfg.budget_eps, cfg.trials.max(2), &mut rng)?)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes rows as CSV with a header, or as JSON lines.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, mut w: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush()?;
        }
        Format::Json => {
            for r in rows {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Filter mode used when none is configured.
pub const DEFAULT_MODE: FilterMode = FilterMode::Bayesian;
