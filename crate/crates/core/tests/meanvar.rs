//! Mean and variance of a scalar in [-1, 1] released with one binary ramp each.

use bayes_ldp::accounting::{grouped_loss_upper_bound, Decision, FilterMode, FilterState};
use bayes_ldp::dcopt::{branch_and_bound_min, BnbOptions, DcObjective};
use bayes_ldp::mechanisms::{AffineMap, DcTerm, MechanismSpec, TermShape};
use bayes_ldp::{BoxDomain, DiscreteDomain};

struct Ramp {
    lo: f64,
    hi: f64,
    t: f64,
}

fn ramp(eps: f64) -> Ramp {
    let lo = 1.0 / (eps.exp() + 1.0);
    Ramp {
        lo,
        hi: 1.0 - lo,
        t: (eps / 2.0).tanh(),
    }
}

/// `log Pr(o1 | x) + log Pr(o2 | x)` where o1 ramps on `x` over [-1, 1] and o2 on `x^2` over [0, 1].
fn log_pr(r: &Ramp, o1: bool, o2: bool, x: f64) -> f64 {
    let p1 = if o1 { r.t * x / 2.0 + 0.5 } else { 0.5 - r.t * x / 2.0 };
    let p2 = if o2 { r.t * x * x + r.lo } else { r.hi - r.t * x * x };
    p1.ln() + p2.ln()
}

fn objective(r: &Ramp, o1: bool, o2: bool) -> DcObjective {
    let map = AffineMap::coordinate(1, 0);
    let s = if o1 { 1.0 } else { -1.0 };
    let mut g = vec![DcTerm::new(
        TermShape::NegLog {
            alpha: s * r.t / 2.0,
            beta: 0.5,
        },
        map.clone(),
    )];
    let mut f = vec![];
    if o2 {
        let c = r.t / (8.0 * r.lo);
        f.push(DcTerm::new(
            TermShape::QuadLog {
                a: r.t,
                b: r.lo,
                sign: 1.0,
                shift: c,
            },
            map.clone(),
        ));
        g.push(DcTerm::new(TermShape::Square { coeff: c }, map));
    } else {
        g.push(DcTerm::new(
            TermShape::QuadLog {
                a: -r.t,
                b: r.hi,
                sign: -1.0,
                shift: 0.0,
            },
            map,
        ));
    }
    DcObjective::new(f, g, BoxDomain::cube(1, -1.0, 1.0).unwrap()).unwrap()
}

fn grid(r: &Ramp, o1: bool, o2: bool, n: usize) -> (f64, f64) {
    (0..n)
        .map(|i| log_pr(r, o1, o2, -1.0 + 2.0 * i as f64 / (n - 1) as f64))
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), v| (h.max(v), l.min(v)))
}

#[test]
fn decomposition_reconstructs_likelihood() {
    let r = ramp(1.0);
    for (o1, o2) in [(true, true), (true, false), (false, true), (false, false)] {
        let obj = objective(&r, o1, o2);
        for i in 0..=40 {
            let x = -1.0 + i as f64 / 20.0;
            assert!((obj.eval(&[x]) - log_pr(&r, o1, o2, x)).abs() < 1e-12);
        }
    }
}

#[test]
fn branch_and_bound_matches_dense_grid() {
    let r = ramp(1.0);
    let opts = BnbOptions::with_delta(1e-4);
    for (o1, o2) in [(true, true), (true, false), (false, true), (false, false)] {
        let obj = objective(&r, o1, o2);
        let lo = branch_and_bound_min(&obj, &opts).unwrap();
        let hi = branch_and_bound_min(&obj.negated(), &opts).unwrap();
        assert!(lo.converged && hi.converged);
        let (gh, gl) = grid(&r, o1, o2, 200_001);
        assert!(lo.lb <= gl + 1e-9 && (lo.ub - gl).abs() < 1e-4, "{o1} {o2}");
        assert!(-hi.lb >= gh - 1e-9 && (-hi.ub - gh).abs() < 1e-4, "{o1} {o2}");
    }
}

#[test]
fn reference_table() {
    let r = ramp(1.0);
    let (h, l) = grid(&r, true, true, 1_000_001);
    assert!((h - -0.63).abs() < 0.01 && (l - -2.04).abs() < 0.01 && (h - l - 1.41).abs() < 0.01);
    let (h, l) = grid(&r, true, false, 1_000_001);
    assert!((h - -0.94).abs() < 0.01 && (l - -2.63).abs() < 0.01 && (h - l - 1.69).abs() < 0.01);
    let sym = grid(&r, false, true, 1_000_001);
    let (h, l) = grid(&r, true, true, 1_000_001);
    assert!((sym.0 - h).abs() < 1e-9 && (sym.1 - l).abs() < 1e-9);
}

#[test]
fn grouping_the_pair_beats_singletons() {
    let r = ramp(1.0);
    let recs = [0usize, 1];
    let oracle = |g: &[usize]| {
        let f = |x: f64| {
            g.iter()
                .map(|&q| {
                    if q == 0 {
                        (r.t * x / 2.0 + 0.5).ln()
                    } else {
                        (r.t * x * x + r.lo).ln()
                    }
                })
                .sum::<f64>()
        };
        let n = 100_001;
        let v: Vec<f64> = (0..n).map(|i| f(-1.0 + 2.0 * i as f64 / (n - 1) as f64)).collect();
        Ok((v.iter().cloned().fold(f64::NEG_INFINITY, f64::max), v.iter().cloned().fold(f64::INFINITY, f64::min)))
    };
    let joint = grouped_loss_upper_bound(&recs, 2, oracle).unwrap();
    let single = grouped_loss_upper_bound(&recs, 1, oracle).unwrap();
    assert!((joint - 1.41).abs() < 0.01);
    assert!((single - 2.0).abs() < 1e-9);
}

/// The pair as one 4-output mechanism over a fine grid of candidates.
fn pair_table(eps_each: f64, n: usize) -> (DiscreteDomain, MechanismSpec) {
    let r = ramp(eps_each);
    let d = DiscreteDomain::grid_1d(-1.0, 1.0, n).unwrap();
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let rows = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(o1, o2)| xs.iter().map(|&x| log_pr(&r, o1, o2, x)).collect())
        .collect();
    (d, MechanismSpec::table("meanvar", 2.0 * eps_each, rows).unwrap())
}

#[test]
fn bayesian_filter_accepts_above_simplified_headroom() {
    let (d, m) = pair_table(0.3, 2001);
    let fs = FilterState::discrete(d, 0.5, FilterMode::Bayesian).unwrap();
    match fs.check_bayesian(&m).unwrap() {
        Decision::Accept(a) => assert!(a.worst_projected().unwrap() <= 0.5),
        Decision::Reject(r) => panic!("{}", r.reason),
    }
    assert!(!fs.check_simplified(&m).unwrap().is_accept());
}
