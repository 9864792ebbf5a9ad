use bayes_ldp::accounting::{FilterMode, FilterState};
use bayes_ldp::belief::{knowledge_gain, posterior_belief, Belief, Statement};
use bayes_ldp::likelihood::LikelihoodState;
use bayes_ldp::mechanisms::{dc_decompose, regression_log_likelihood, HighLow, MechanismSpec, ObjectValue};
use bayes_ldp::mechanisms::{RegressionKind, RegressionParams};
use bayes_ldp::num::log_spread;
use bayes_ldp::DiscreteDomain;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A random column-stochastic table with `k` outputs over `n` candidates, and its exact epsilon.
fn table(n: usize, k: usize) -> impl Strategy<Value = MechanismSpec> {
    prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), k).prop_map(move |w| {
        let mut lp = vec![vec![0.0; n]; k];
        for c in 0..n {
            let s: f64 = (0..k).map(|o| w[o][c]).sum();
            for o in 0..k {
                lp[o][c] = (w[o][c] / s).ln();
            }
        }
        let eps = lp.iter().map(|r| log_spread(r)).fold(0.0, f64::max).max(1e-9);
        MechanismSpec::table("t", eps, lp).unwrap()
    })
}

fn mechanism(n: usize) -> impl Strategy<Value = MechanismSpec> {
    prop_oneof![
        (0.05f64..3.0).prop_map(move |e| MechanismSpec::randomized_response("rr", n, e).unwrap()),
        (2usize..4).prop_flat_map(move |k| table(n, k)),
    ]
}

fn regression() -> impl Strategy<Value = (RegressionKind, RegressionParams, f64)> {
    (
        prop_oneof![
            Just(RegressionKind::Linear),
            Just(RegressionKind::TruncatedLinear),
            Just(RegressionKind::Logistic)
        ],
        prop::collection::vec(-1.0f64..1.0, 3),
        -0.5f64..0.5,
        0.1f64..3.0,
    )
        .prop_map(|(kind, theta, c, eps)| {
            // the box is [-1, 1]^3, so |Y| <= |theta|_1 + |c| fits the linear range
            let r = theta.iter().map(|t| t.abs()).sum::<f64>() + c.abs() + 0.1;
            (kind, RegressionParams::new(theta, c, -r, r).unwrap(), eps)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn learning_limit(
        n in 2usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let prior = Belief::from_probs(&(0..n).map(|_| rng.gen_range(0.01..1.0)).collect::<Vec<_>>()).unwrap();
        let mut corr: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        corr[0] = corr[0].max(0.1);
        let stmt = Statement::new(corr).unwrap();
        let mech = MechanismSpec::randomized_response("rr", n, rng.gen_range(0.05..3.0)).unwrap();
        let d = DiscreteDomain::indexed(n).unwrap();
        let y = rng.gen_range(0..n);
        let l = log_spread(&mech.log_likelihood_vector(&d, y).unwrap()).exp();
        let g = knowledge_gain(&prior, &stmt, &mech, &d, y).unwrap();
        prop_assert!(g <= l * (1.0 + 1e-12));
        prop_assert!(g >= (1.0 / l) * (1.0 - 1e-12));
    }

    #[test]
    fn posterior_is_normalized(
        (n, mech) in (2usize..8).prop_flat_map(|n| (Just(n), mechanism(n))),
        y in 0usize..8,
        w in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let d = DiscreteDomain::indexed(n).unwrap();
        let prior = Belief::from_probs(&w[..n]).unwrap();
        let post = posterior_belief(&prior, &mech, &d, y % mech.num_outputs()).unwrap();
        prop_assert!(post.is_normalized());
        prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_updates_compose(mechs in prop::collection::vec(mechanism(4), 1..6), ys in prop::collection::vec(0usize..4, 6)) {
        let d = DiscreteDomain::indexed(4).unwrap();
        let mut state = LikelihoodState::new(d.clone());
        let mut total = vec![0.0; 4];
        let mut belief = Belief::uniform(4).unwrap();
        let mut sum_single = 0.0;
        for (m, y) in mechs.iter().zip(&ys) {
            let y = y % m.num_outputs();
            let ll = m.log_likelihood_vector(&d, y).unwrap();
            state.fold(&m.id, y, &ll).unwrap();
            for (t, l) in total.iter_mut().zip(&ll) {
                *t += l;
            }
            belief = belief.update(&ll).unwrap();
            sum_single += log_spread(&ll);
            prop_assert!(log_spread(&ll) <= m.epsilon + 1e-9);
        }
        prop_assert!((state.log_loss() - log_spread(&total)).abs() < 1e-9);
        // subadditivity
        prop_assert!(state.log_loss() <= sum_single + 1e-9);
        let direct = Belief::uniform(4).unwrap().update(&total).unwrap();
        for (a, b) in belief.probs().iter().zip(direct.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_output_loss_within_epsilon(
        (kind, p, eps) in regression(),
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..20),
    ) {
        for o in [HighLow::Low, HighLow::High] {
            let v: Vec<f64> = pts.iter().map(|x| regression_log_likelihood(kind, &p, eps, o, x).unwrap()).collect();
            prop_assert!(log_spread(&v) <= eps + 1e-9);
        }
    }

    #[test]
    fn dc_reconstruction_and_convexity(
        (kind, p, eps) in regression(),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        z in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        for o in [HighLow::Low, HighLow::High] {
            let (f, g) = match dc_decompose(kind, &p, eps, o) {
                Ok(fg) => fg,
                Err(_) => continue,
            };
            let ev = |ts: &[bayes_ldp::mechanisms::DcTerm], pt: &[f64]| ts.iter().map(|t| t.eval(pt)).sum::<f64>();
            let want = regression_log_likelihood(kind, &p, eps, o, &x).unwrap();
            let fx = ev(&f, &x);
            let gx = ev(&g, &x);
            if fx.is_finite() && gx.is_finite() {
                prop_assert!((fx - gx - want).abs() < 1e-9 * (1.0 + want.abs()));
                let mid: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 0.5 * (a + b)).collect();
                let (fz, gz) = (ev(&f, &z), ev(&g, &z));
                if fz.is_finite() && gz.is_finite() {
                    prop_assert!(ev(&f, &mid) <= 0.5 * (fx + fz) + 1e-9);
                    prop_assert!(ev(&g, &mid) <= 0.5 * (gx + gz) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn filter_safety_and_simplified_subset(
        budget in 0.2f64..3.0,
        mechs in prop::collection::vec(mechanism(3), 1..25),
        x in 0usize..3,
        seed in any::<u64>(),
    ) {
        let d = DiscreteDomain::indexed(3).unwrap();
        let mut fs = FilterState::discrete(d, budget, FilterMode::Bayesian).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eps_sum = 0.0;
        for m in &mechs {
            let simple = fs.check_simplified(m).unwrap().is_accept();
            let bayes = fs.check_bayesian(m).unwrap().is_accept();
            prop_assert!(!simple || bayes);
            if fs.submit(m, ObjectValue::Index(x), &mut rng).unwrap().is_some() {
                eps_sum += m.epsilon;
            } else {
                // efficiency floor: the declared epsilons spent cover the realized loss
                prop_assert!(eps_sum + 1e-9 >= fs.log_loss());
            }
            prop_assert!(fs.log_loss() <= budget + 1e-9);
        }
    }

    #[test]
    fn identical_pairs_are_compactible(m in 2usize..6, eps in 0.05f64..3.0) {
        let d = DiscreteDomain::indexed(m).unwrap();
        let q = MechanismSpec::randomized_response("rr", m, eps).unwrap();
        let mut best = f64::INFINITY;
        for y1 in 0..m {
            for y2 in 0..m {
                let a = q.log_likelihood_vector(&d, y1).unwrap();
                let b = q.log_likelihood_vector(&d, y2).unwrap();
                let s: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
                best = best.min(log_spread(&s));
            }
        }
        prop_assert!(best < 2.0 * eps);
    }

    #[test]
    fn product_domain_losses_multiply(m1 in 2usize..5, m2 in 2usize..5, e1 in 0.1f64..2.0, e2 in 0.1f64..2.0, y1 in 0usize..5, y2 in 0usize..5) {
        let (y1, y2) = (y1 % m1, y2 % m2);
        let n = m1 * m2;
        let r1 = MechanismSpec::randomized_response("a", m1, e1).unwrap();
        let r2 = MechanismSpec::randomized_response("b", m2, e2).unwrap();
        let d1 = DiscreteDomain::indexed(m1).unwrap();
        let d2 = DiscreteDomain::indexed(m2).unwrap();
        let l1 = r1.log_likelihood_vector(&d1, y1).unwrap();
        let l2 = r2.log_likelihood_vector(&d2, y2).unwrap();
        // candidate (v1, v2) has index v1 * m2 + v2
        let joint: Vec<f64> = (0..n).map(|i| l1[i / m2] + l2[i % m2]).collect();
        let lift = |f: &dyn Fn(usize) -> f64| (0..n).map(f).collect::<Vec<f64>>();
        let mut s = LikelihoodState::new(DiscreteDomain::indexed(n).unwrap());
        s.fold("a", y1, &lift(&|i| l1[i / m2])).unwrap();
        s.fold("b", y2, &lift(&|i| l2[i % m2])).unwrap();
        let prod = log_spread(&l1).exp() * log_spread(&l2).exp();
        prop_assert!((s.log_loss().exp() - prod).abs() <= 1e-12 * prod);
        prop_assert!((log_spread(&joint).exp() - prod).abs() <= 1e-12 * prod);
    }
}

#[test]
fn example_one_odometer_rises_and_returns() {
    let eps = 0.25;
    let k = 8;
    let d = DiscreteDomain::indexed(2).unwrap();
    let mut fs = FilterState::discrete(d, k as f64 * eps, FilterMode::Bayesian).unwrap();
    let q = MechanismSpec::randomized_response("rr", 2, eps).unwrap();
    let mut readings = vec![];
    for j in 0..k {
        let y = if j < k / 2 { 1 } else { 0 };
        let a = match fs.check(&q).unwrap() {
            bayes_ldp::accounting::Decision::Accept(a) => a,
            bayes_ldp::accounting::Decision::Reject(r) => panic!("{}", r.reason),
        };
        fs.observe(&a, &q, y).unwrap();
        readings.push(fs.odometer().log_loss);
    }
    let peak = readings.iter().cloned().fold(0.0, f64::max);
    assert!((peak - k as f64 / 2.0 * eps).abs() < 1e-12);
    assert_eq!(*readings.last().unwrap(), 0.0);
    assert_eq!(bayes_ldp::accounting::realized_loss(fs.likelihood().unwrap()), 1.0);
}
