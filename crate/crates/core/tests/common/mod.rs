//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use hmo::{feasibility, ideal_point, validate_network, Network, Population, Tolerances};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn random_population(rng: &mut impl Rng, n: usize) -> Population {
    let u = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
    let s = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
    Population::new(u, s).unwrap()
}

/// Random population whose ideal point is realizable, by rejection.
pub fn random_feasible(rng: &mut impl Rng, n: usize) -> Population {
    loop {
        let p = if rng.gen_bool(0.5) {
            random_population(rng, n)
        } else {
            // mild stubbornness spread is feasible far more often
            let u = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
            let s = (0..n).map(|_| rng.gen_range(0.8..1.25)).collect();
            Population::new(u, s).unwrap()
        };
        if feasibility(&p, &ideal_point(&p), &tol()).map(|r| r.feasible).unwrap_or(false) {
            return p;
        }
    }
}

pub fn random_infeasible(rng: &mut impl Rng, n: usize) -> Population {
    loop {
        let u = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        let s = (0..n).map(|_| rng.gen_range(0.05..10.0)).collect();
        let p = Population::new(u, s).unwrap();
        if let Ok(r) = feasibility(&p, &ideal_point(&p), &tol()) {
            if !r.feasible {
                return p;
            }
        }
    }
}

/// Strictly increasing convictions.
pub fn increasing_u(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(n);
    let mut v = rng.gen_range(0.3..2.0);
    for _ in 0..n {
        u.push(v);
        v += rng.gen_range(0.05..2.0);
    }
    u
}

/// Random spanning tree plus random extra edges.
pub fn random_connected(rng: &mut impl Rng, n: usize) -> Network {
    let mut entries = Vec::new();
    for j in 1..n {
        let i = rng.gen_range(0..j);
        entries.push((i, j, rng.gen_range(0.1..2.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.3) && !entries.iter().any(|e| e.0 == i && e.1 == j) {
                entries.push((i, j, rng.gen_range(0.1..2.0)));
            }
        }
    }
    validate_network(n, &entries).unwrap()
}

pub fn random_network(rng: &mut impl Rng, n: usize, density: f64, max_w: f64) -> Network {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                // log-uniform weights reach both weak and strong coupling
                let w = (rng.gen_range(-4.0..max_w.ln())).exp();
                entries.push((i, j, w));
            }
        }
    }
    validate_network(n, &entries).unwrap()
}

/// Largest `sum x` on the ellipsoid `sum sigma (u - x) x = 0`, by grid
/// search over its parametrization `x = u/2 + r * s`, `|s| = 1`,
/// `r_i = sqrt(R / sigma_i)`, followed by successive grid refinement.
/// Uses no Lagrange multiplier.
pub fn brute_force_max_sum(pop: &Population) -> f64 {
    let n = pop.len();
    let big_r: f64 = pop.u().iter().zip(pop.sigma()).map(|(u, s)| s * u * u).sum::<f64>() / 4.0;
    let r: Vec<f64> = pop.sigma().iter().map(|s| (big_r / s).sqrt()).collect();
    let center: f64 = pop.u().iter().sum::<f64>() / 2.0;
    if n == 1 {
        return center + r[0];
    }
    // hyperspherical angles: n-2 in [0, pi], one in [0, 2 pi)
    let objective = |angles: &[f64]| -> f64 {
        let mut sum = center;
        let mut sin_prod = 1.0;
        for (k, a) in angles.iter().enumerate() {
            sum += r[k] * sin_prod * a.cos();
            sin_prod *= a.sin();
        }
        sum + r[n - 1] * sin_prod
    };
    let dims = n - 1;
    let mut lo: Vec<f64> = vec![0.0; dims];
    let mut hi: Vec<f64> =
        (0..dims).map(|k| if k == dims - 1 { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI }).collect();
    let steps = match dims {
        1 => 2000,
        2 => 200,
        _ => 48,
    };
    let mut best = f64::NEG_INFINITY;
    let mut best_at = vec![0.0; dims];
    for _round in 0..12 {
        let mut idx = vec![0usize; dims];
        let mut angles = vec![0.0; dims];
        loop {
            for k in 0..dims {
                angles[k] = lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / steps as f64;
            }
            let v = objective(&angles);
            if v > best {
                best = v;
                best_at.clone_from(&angles);
            }
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == dims {
                    break;
                }
            }
            if k == dims {
                break;
            }
        }
        for k in 0..dims {
            let width = (hi[k] - lo[k]) / steps as f64 * 2.0;
            lo[k] = best_at[k] - width;
            hi[k] = best_at[k] + width;
        }
    }
    best
}

/// Independent chain construction straight from the balance equations:
/// sort by ideal opinion, carry the running flow along consecutive links.
pub fn oracle_chain(pop: &Population) -> Vec<(usize, usize, f64)> {
    let n = pop.len();
    let (u, s) = (pop.u(), pop.sigma());
    let inv: f64 = s.iter().map(|v| 1.0 / v).sum();
    let quad: f64 = u.iter().zip(s).map(|(u, s)| s * u * u).sum();
    // sum x is maximal where x_i - u_i/2 is proportional to 1/sigma_i
    let c = (quad / inv).sqrt() / 2.0;
    let x: Vec<f64> = (0..n).map(|i| u[i] / 2.0 + c / s[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut flow = 0.0;
    let mut out = Vec::new();
    for k in 0..n - 1 {
        let (a, b) = (order[k], order[k + 1]);
        flow += s[a] * (x[a] - u[a]) * x[a];
        out.push((a.min(b), a.max(b), flow / (x[b] - x[a])));
    }
    out
}
