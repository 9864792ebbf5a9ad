use bayes_ldp::dcopt::loss::combined_objective;
use bayes_ldp::dcopt::{branch_and_bound_min, BnbOptions, DcObjective, QueryTerms};
use bayes_ldp::mechanisms::{MechanismSpec, RegressionKind, RegressionParams};
use bayes_ldp::BoxDomain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random regression outputs on [-1, 1]^2; draws whose truncated ramp turns non-positive on the box are redrawn.
fn random_instance(rng: &mut ChaCha8Rng) -> DcObjective {
    loop {
        if let Ok(obj) = try_instance(rng) {
            return obj;
        }
    }
}

fn try_instance(rng: &mut ChaCha8Rng) -> bayes_ldp::Result<DcObjective> {
    let d = BoxDomain::cube(2, -1.0, 1.0).unwrap();
    let n = rng.gen_range(1..=4);
    let qs: Vec<QueryTerms> = (0..n)
        .map(|i| {
            let theta = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let c = rng.gen_range(-1.0..1.0);
            let kind = [RegressionKind::Linear, RegressionKind::TruncatedLinear, RegressionKind::Logistic][rng.gen_range(0..3)];
            let (lo, hi) = d.affine_range(&theta, c);
            let (a, b) = match kind {
                RegressionKind::Linear => (lo - rng.gen_range(0.0..0.5), hi + rng.gen_range(0.0..0.5)),
                _ => (rng.gen_range(-2.0..0.0), rng.gen_range(0.1..2.0)),
            };
            let p = RegressionParams::new(theta, c, a, b).unwrap();
            let m = MechanismSpec::regression(format!("q{i}"), kind, p, rng.gen_range(0.2..2.0)).unwrap();
            QueryTerms::from_mechanism(&m, rng.gen_range(0..2)).unwrap()
        })
        .collect();
    combined_objective(&qs, &d)
}

/// Grid minimum and the largest step between neighbouring grid values.
fn grid_min(obj: &DcObjective, n: usize) -> (f64, f64) {
    let at = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    let vals: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| obj.eval(&[at(i), at(j)])).collect()).collect();
    let mut best = f64::INFINITY;
    let mut step: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            best = best.min(vals[i][j]);
            if i + 1 < n {
                step = step.max((vals[i + 1][j] - vals[i][j]).abs());
            }
            if j + 1 < n {
                step = step.max((vals[i][j + 1] - vals[i][j]).abs());
            }
        }
    }
    (best, step)
}

#[test]
fn bnb_matches_grid_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let delta = 0.01;
    let opts = BnbOptions::with_delta(delta);
    for case in 0..100 {
        let obj = random_instance(&mut rng);
        let r = branch_and_bound_min(&obj, &opts).unwrap();
        assert!(r.converged, "case {case}");
        let (g, step) = grid_min(&obj, 301);
        assert!(r.lb <= g + 1e-9, "case {case}: lb {} above grid {g}", r.lb);
        assert!((r.ub - g).abs() <= delta + step, "case {case}: ub {} grid {g} step {step}", r.ub);
        assert!((obj.eval(&r.argmin) - r.ub).abs() < 1e-9);
    }
}
