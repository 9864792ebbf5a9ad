//! Realized loss, privacy filters and odometers.

mod approx;
mod filter;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodState;

pub use approx::{approx_filter_check, ApproxFilterState, BasicComposition, OutputIndependentFilter};
pub use filter::{
    bayesian_filter_check, filter_execute, simplified_filter_check, Admission, ContinuousConfig, Decision,
    FilterMode, FilterState, Rejection,
};

/// Slack on budget comparisons so exact ties accept despite rounding.
pub const TIE_SLACK: f64 = 1e-12;

/// `L = max P / min P`; `+inf` once a candidate is ruled out.
pub fn realized_loss(state: &LikelihoodState) -> f64 {
    state.log_loss().exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdometerReading {
    pub log_loss: f64,
    /// Budget minus `log_loss`.
    pub headroom: f64,
}

/// Upper bound on `log L` from per-group extremes.
///
/// `oracle` returns `(upper bound on max log P, lower bound on min log P)` for one group.
pub fn grouped_loss_upper_bound<T, F>(records: &[T], group_size: usize, mut oracle: F) -> Result<f64>
where
    F: FnMut(&[T]) -> Result<(f64, f64)>,
{
    if group_size == 0 {
        return Err(Error::Domain("group size must be at least 1".into()));
    }
    let mut total = 0.0;
    for g in records.chunks(group_size) {
        let (hi, lo) = oracle(g)?;
        if hi < lo {
            return Err(Error::Numerical(format!("group bounds inverted: max {hi} < min {lo}")));
        }
        total += hi - lo;
    }
    Ok(total)
}

/// One line of the decision trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub query_id: String,
    pub epsilon: f64,
    pub decision: String,
    pub output: Option<f64>,
    pub log_loss_after: f64,
}

/// Writes one JSON object per line.
pub fn write_trace_jsonl<W: Write>(records: &[TraceRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace_jsonl(s: &str) -> Result<Vec<TraceRecord>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DiscreteDomain;
    use crate::mechanisms::{MechanismSpec, ObjectValue};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grouping_sums_per_group_ranges() {
        let recs: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let ub = grouped_loss_upper_bound(&recs, 2, |g| Ok((g.iter().sum::<f64>(), 0.0))).unwrap();
        assert_eq!(ub, 15.0);
        assert!(grouped_loss_upper_bound(&recs, 0, |_| Ok((0.0, 0.0))).is_err());
    }

    #[test]
    fn realized_loss_of_fresh_state_is_one() {
        let s = LikelihoodState::new(DiscreteDomain::indexed(5).unwrap());
        assert_eq!(realized_loss(&s), 1.0);
    }

    #[test]
    fn trace_round_trips() {
        let mut fs = FilterState::discrete(DiscreteDomain::indexed(2).unwrap(), 1.0, FilterMode::Bayesian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..4 {
            let q = MechanismSpec::randomized_response(format!("q{i}"), 2, 0.4).unwrap();
            fs.submit(&q, ObjectValue::Index(0), &mut rng).unwrap();
        }
        let mut buf = Vec::new();
        write_trace_jsonl(fs.trace(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        let back = read_trace_jsonl(&text).unwrap();
        assert_eq!(back, fs.trace());
        assert!(back.iter().all(|r| r.log_loss_after <= 1.0 + 1e-12));
    }
}
