use bayes_ldp::dcopt::{realized_loss_bounds, QueryTerms};
use bayes_ldp::mechanisms::{MechanismSpec, RegressionKind, RegressionParams};
use bayes_ldp::BoxDomain;

fn domain() -> BoxDomain {
    BoxDomain::new(vec![10.0, 0.0, 50.0, 10.0], vec![100.0, 1.0, 200.0, 50.0]).unwrap()
}

fn mechanisms() -> Vec<MechanismSpec> {
    let regs = [
        (RegressionKind::Logistic, [-0.059, -1.456, -0.0134, 0.0], 6.177, 0.0, 1.0),
        (RegressionKind::Logistic, [0.0761, 0.0952, 0.0, 0.0163], -7.989, 0.0, 1.0),
        (RegressionKind::TruncatedLinear, [0.0855, 0.4617, -0.07, 0.0], 12.323, 0.0, 12.0),
        (RegressionKind::Logistic, [0.0491, 0.0, -0.0091, 0.1039], -5.07, 0.0, 1.0),
    ];
    regs.iter()
        .enumerate()
        .map(|(i, (k, t, c, a, b))| {
            let p = RegressionParams::new(t.to_vec(), *c, *a, *b).unwrap();
            MechanismSpec::regression(format!("r{i}"), *k, p, 1.0).unwrap()
        })
        .collect()
}

/// Max and min of the summed log-likelihood over a regular grid with `n` points per axis.
fn grid_extremes(mechs: &[MechanismSpec], outs: &[usize], n: usize) -> (f64, f64) {
    let d = domain();
    let axis = |i: usize, j: usize| d.lower()[i] + (d.upper()[i] - d.lower()[i]) * j as f64 / (n - 1) as f64;
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut x = [0.0; 4];
    for a in 0..n {
        x[0] = axis(0, a);
        for b in 0..2 {
            x[1] = b as f64;
            for c in 0..n {
                x[2] = axis(2, c);
                for e in 0..n {
                    x[3] = axis(3, e);
                    let v: f64 = mechs
                        .iter()
                        .zip(outs)
                        .map(|(m, o)| m.log_likelihood_point(*o, &x).unwrap())
                        .sum();
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
            }
        }
    }
    (hi, lo)
}

#[test]
fn healthcare_bounds_bracket_grid_oracle() {
    let mechs = mechanisms();
    for combo in 0..16usize {
        let outs: Vec<usize> = (0..4).map(|i| (combo >> (3 - i)) & 1).collect();
        let qs: Vec<QueryTerms> = mechs
            .iter()
            .zip(&outs)
            .map(|(m, o)| QueryTerms::from_mechanism(m, *o).unwrap())
            .collect();
        let b = realized_loss_bounds(&qs, &domain(), 10, 0.01).unwrap();
        assert!(b.converged, "{outs:?}");
        assert!(b.log_ub < 4.0);
        assert!(b.log_ub - b.log_lb <= 0.02 + 1e-9, "{outs:?}: {} {}", b.log_lb, b.log_ub);
        let (hi, lo) = grid_extremes(&mechs, &outs, 61);
        let grid = hi - lo;
        // the grid spread never exceeds the truth, so never exceeds the certified bound
        assert!(grid <= b.log_ub + 1e-9, "{outs:?}: grid {grid} > ub {}", b.log_ub);
        assert!(b.log_ub - grid < 0.05, "{outs:?}: ub {} far above grid {grid}", b.log_ub);
    }
}
