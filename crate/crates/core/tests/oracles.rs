//! Library results against independent brute-force computations.

mod common;

use common::*;
use hmo::dynamics::{equilibrium, integrate, mean, newton, residual};
use hmo::{
    build_chain, build_uniform, classify, ideal_point, sigma_thresholds, upper_bound, validate_network, Population,
    Regime,
};
use rand::Rng;

#[test]
fn upper_bound_matches_grid_search() {
    let mut rng = rng(11);
    for n in 1..=4 {
        for _ in 0..6 {
            let p = random_population(&mut rng, n);
            let grid = brute_force_max_sum(&p) / n as f64;
            let ub = upper_bound(&p);
            assert!(((grid - ub) / ub).abs() < 1e-5, "n={n} grid={grid} bound={ub}");
            assert!(grid <= ub * (1.0 + 1e-12));
        }
    }
}

#[test]
fn chain_matches_independent_construction() {
    let mut rng = rng(12);
    for _ in 0..100 {
        let n = rng.gen_range(2..=8);
        let p = random_feasible(&mut rng, n);
        let net = build_chain(&p, &ideal_point(&p), &tol()).unwrap();
        let oracle = oracle_chain(&p);
        assert_eq!(net.edge_count(), oracle.len());
        for (i, j, w) in oracle {
            let got = net.weight(i, j);
            assert!((got - w).abs() <= 1e-9 * w.abs().max(1.0), "({i},{j}) {got} vs {w}");
        }
    }
}

#[test]
fn three_agent_chain_frozen_values() {
    // values computed once from the independent chain construction above
    let p = Population::new(vec![1.0, 4.0, 5.0], vec![1.0, 2.0, 1.0]).unwrap();
    let ideal = ideal_point(&p);
    let net = build_chain(&p, &ideal, &tol()).unwrap();
    assert!((net.weight(0, 1) - 18.760106239).abs() < 1e-8);
    assert!((net.weight(1, 2) - 0.264059797).abs() < 1e-8);
    assert_eq!(net.weight(0, 2), 0.0);
    assert!(residual(&p, &net, &ideal.x_star).unwrap() < 1e-12);
    let eq = equilibrium(&p, &net, &tol()).unwrap();
    assert!((eq.mean() - 3.6736).abs() < 1e-4);
}

/// Mean equilibrium opinion of a dyad linked with weight `a`.
fn dyad_mean(p: &Population, a: f64) -> f64 {
    let net = validate_network(2, &[(0, 1, a)]).unwrap();
    equilibrium(p, &net, &tol()).unwrap().mean()
}

#[test]
fn dyad_optimum_beats_weight_grid() {
    let mut rng = rng(13);
    let mut seen = [0usize; 3];
    for _ in 0..40 {
        let u1 = rng.gen_range(0.5..3.0);
        let u2 = u1 + rng.gen_range(0.1..4.0);
        let p = Population::new(vec![u1, u2], vec![rng.gen_range(0.05..4.0), 1.0]).unwrap();
        let o = classify(&p).unwrap();
        let grid: Vec<f64> = (0..=160).map(|k| 10f64.powf(-4.0 + 8.0 * k as f64 / 160.0)).collect();
        let means: Vec<f64> = grid.iter().map(|&a| dyad_mean(&p, a)).collect();
        let grid_best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(grid_best <= o.best_mean + 1e-9, "{:?} grid {grid_best}", o.regime);
        match o.regime {
            Regime::Compromise => {
                seen[0] += 1;
                let a = o.a_star.unwrap();
                let at = dyad_mean(&p, a);
                assert!((at - o.best_mean).abs() < 1e-9);
                // the grid optimum sits within one grid cell of a*
                let k = means.iter().position(|m| *m == grid_best).unwrap();
                let (lo, hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
                assert!(lo <= a && a <= hi, "a*={a} grid cell [{lo}, {hi}]");
            }
            Regime::Polarization => {
                seen[1] += 1;
                assert!(means.iter().all(|m| *m < o.best_mean));
            }
            Regime::Consensus => {
                seen[2] += 1;
                // increasing in a, approaching the limit from below
                assert!(means.windows(2).all(|w| w[1] >= w[0] - 1e-12));
                assert!((means[means.len() - 1] - o.best_mean).abs() < 1e-3);
            }
            Regime::DegenerateConsensus => unreachable!(),
        }
    }
    assert!(seen.iter().all(|c| *c > 0), "regimes seen {seen:?}");
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn thresholds_match_bisection_on_ideal_point() {
    let mut rng = rng(14);
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let sigma = rng.gen_range(0.3..3.0);
        let p = Population::uniform(increasing_u(&mut rng, n), sigma).unwrap();
        let t = sigma_thresholds(&p, 0, &tol()).unwrap();
        let x1_gap = |mu: f64| {
            let q = p.with_sigma(0, mu).unwrap();
            ideal_point(&q).x_star[0] - q.u()[0]
        };
        let oracle = bisect(sigma, 1e3 * sigma, x1_gap);
        assert!((t.mu_plus - oracle).abs() < 1e-8 * oracle.max(1.0), "{} vs {oracle}", t.mu_plus);

        for k in 2..=n {
            let meet = |mu: f64| {
                let x = ideal_point(&p.with_sigma(0, mu).unwrap()).x_star;
                x[0] - x[k - 1]
            };
            let oracle = bisect(1e-9 * sigma, sigma, meet);
            let got = t.mu_x[k - 2];
            assert!((got - oracle).abs() < 1e-8 * sigma, "mu_x[{k}] {got} vs {oracle}");

            let reach = |mu: f64| {
                let x = ideal_point(&p.with_sigma(0, mu).unwrap()).x_star;
                x[k - 1] - p.u()[k - 1]
            };
            let got = t.mu_u[k - 2];
            if got > 0.0 && got < sigma {
                let oracle = bisect(1e-9 * sigma, sigma, reach);
                assert!((got - oracle).abs() < 1e-8 * sigma, "mu_u[{k}] {got} vs {oracle}");
            }
        }
    }
}

#[test]
fn newton_and_integration_agree() {
    let mut rng = rng(15);
    for _ in 0..30 {
        let n = rng.gen_range(2..=6);
        let p = random_population(&mut rng, n);
        let net = random_connected(&mut rng, n);
        let (xn, _) = newton(&p, &net, p.u(), &tol(), 200).unwrap().expect("newton converges");
        let xi = integrate(&p, &net, &tol(), false).unwrap().x;
        for (a, b) in xn.iter().zip(&xi) {
            assert!((a - b).abs() < 1e-7 * a.max(1.0), "{xn:?} vs {xi:?}");
        }
    }
}

#[test]
fn uniform_closed_form_matches_oracle_chain() {
    let mut rng = rng(16);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let p = Population::uniform(increasing_u(&mut rng, n), rng.gen_range(0.2..4.0)).unwrap();
        let net = build_uniform(&p).unwrap();
        for (i, j, w) in oracle_chain(&p) {
            assert!((net.weight(i, j) - w).abs() <= 1e-10 * w.max(1.0));
        }
    }
}

#[test]
fn constructed_equilibrium_reaches_the_bound() {
    let mut rng = rng(17);
    for _ in 0..30 {
        let n = rng.gen_range(2..=8);
        let p = random_feasible(&mut rng, n);
        let net = build_chain(&p, &ideal_point(&p), &tol()).unwrap();
        let eq = equilibrium(&p, &net, &tol()).unwrap();
        assert!((mean(&eq.x) - upper_bound(&p)).abs() <= 1e-8 * upper_bound(&p));
    }
}
