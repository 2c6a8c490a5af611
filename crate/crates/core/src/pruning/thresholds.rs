//! Threshold values of a single varying stubbornness.
//!
//! One agent (the one with the lowest conviction) has stubbornness `mu`,
//! every other agent shares `sigma`. The chain construction works for
//! `mu` in `(mu_minus, mu_plus)`. Above `mu_plus` the varying agent's
//! ideal opinion drops below its conviction. Below `mu_minus` it overtakes
//! the next agent or that agent drops below its own conviction.
//!
//! Notation below: `u1` is the varying agent's conviction, `tail` the
//! other convictions in increasing order (`tail[0]` is agent 2),
//! `S = sum tail^2`, and `P_k = sum_{j=2}^{k} u_j^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Population, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolynomials {
    pub u1: f64,
    pub tail: Vec<f64>,
    pub sigma: f64,
}

impl ThresholdPolynomials {
    pub fn n(&self) -> usize {
        self.tail.len() + 1
    }

    fn tail_sq(&self) -> f64 {
        self.tail.iter().map(|u| u * u).sum()
    }

    fn prefix_sq(&self, k: usize) -> f64 {
        self.tail[..k - 1].iter().map(|u| u * u).sum()
    }

    fn conviction(&self, k: usize) -> f64 {
        if k == 1 {
            self.u1
        } else {
            self.tail[k - 2]
        }
    }

    /// Coefficients `(a, b, c)` of the quadratic `f_k(mu) = a mu^2 + b mu + c`
    /// whose root above `sigma` makes the k-th prefix sum vanish, k = 1..N-1.
    pub fn f_coefficients(&self, k: usize) -> (f64, f64, f64) {
        let n = self.n() as f64;
        let kf = k as f64;
        let (s, p) = (self.tail_sq(), self.prefix_sq(k));
        let a = self.u1 * self.u1 / self.sigma * (kf - n);
        let b = (kf - 1.0) * s - (n - 1.0) * p;
        let c = self.sigma * (s - p);
        (a, b, c)
    }

    pub fn f(&self, k: usize, mu: f64) -> f64 {
        let (a, b, c) = self.f_coefficients(k);
        (a * mu + b) * mu + c
    }

    /// Cubic `g_k`, k = 2..N, vanishing where the varying agent's ideal
    /// opinion meets agent k's.
    pub fn g(&self, k: usize, mu: f64) -> f64 {
        let n = self.n() as f64;
        let (u1, sg, s) = (self.u1, self.sigma, self.tail_sq());
        let d = self.conviction(k) - u1;
        let c3 = u1 * u1 / (sg * sg);
        let c2 = (s - 2.0 * u1 * u1 - (n - 1.0) * d * d) / sg;
        let c1 = -2.0 * s + u1 * u1 - d * d;
        let c0 = sg * s;
        ((c3 * mu + c2) * mu + c1) * mu + c0
    }

    /// Coefficients of the quadratic `h_k`, k = 2..N, vanishing where agent
    /// k's ideal opinion equals its conviction.
    pub fn h_coefficients(&self, k: usize) -> (f64, f64, f64) {
        let n = self.n() as f64;
        let (u1, sg, s) = (self.u1, self.sigma, self.tail_sq());
        let uk = self.conviction(k);
        let a = u1 * u1 / (sg * sg * uk * uk);
        let b = s / (sg * uk * uk) - (n - 1.0) / sg;
        (a, b, -1.0)
    }

    pub fn h(&self, k: usize, mu: f64) -> f64 {
        let (a, b, c) = self.h_coefficients(k);
        (a * mu + b) * mu + c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaThresholds {
    /// The varying agent (0-based, caller's labeling).
    pub agent: usize,
    /// Common stubbornness of the other agents.
    pub sigma: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Roots of `f_k` above `sigma`, k = 1..N-1.
    pub mu_k: Vec<f64>,
    /// Roots of `g_k` in `(0, sigma)`, k = 2..N.
    pub mu_x: Vec<f64>,
    /// Positive roots of `h_k`, k = 2..N.
    pub mu_u: Vec<f64>,
    pub f_at_sigma: Vec<f64>,
    pub g_at_zero: Vec<f64>,
    pub g_at_sigma: Vec<f64>,
    pub polynomials: ThresholdPolynomials,
}

/// Roots of `a x^2 + b x + c` without cancellation, or `None` when complex.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        let r = -c / b;
        return Some((r, r));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let (r1, r2) = (q / a, c / q);
    Some((r1.min(r2), r1.max(r2)))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..400 {
        if hi - lo <= tol * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Thresholds for varying the stubbornness of `agent`, which must hold
/// the strictly lowest conviction; the remaining convictions must be
/// distinct and the remaining stubbornness values equal.
pub fn sigma_thresholds(pop: &Population, agent: usize, tol: &Tolerances) -> Result<SigmaThresholds> {
    let n = pop.len();
    if agent >= n {
        return Err(Error::IndexOutOfRange { i: agent, j: agent, n });
    }
    if n < 2 {
        return Err(Error::NonMonotoneU);
    }
    let (u, s) = (pop.u(), pop.sigma());
    let mut others: Vec<usize> = (0..n).filter(|&i| i != agent).collect();
    others.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    if u[others[0]] <= u[agent] || others.windows(2).any(|w| u[w[1]] <= u[w[0]]) {
        return Err(Error::NonMonotoneU);
    }
    let sigma = s[others[0]];
    if others.iter().any(|&i| (s[i] - sigma).abs() > 1e-12 * sigma) {
        return Err(Error::NonUniformTail);
    }

    let poly = ThresholdPolynomials { u1: u[agent], tail: others.iter().map(|&i| u[i]).collect(), sigma };

    let mu_k: Vec<f64> = (1..n)
        .map(|k| {
            let (a, b, c) = poly.f_coefficients(k);
            quadratic_roots(a, b, c).map(|(_, hi)| hi).unwrap_or(f64::NAN)
        })
        .collect();
    let mu_x: Vec<f64> = (2..=n).map(|k| bisect(0.0, sigma, |m| poly.g(k, m), tol.root_tol)).collect();
    let mu_u: Vec<f64> = (2..=n)
        .map(|k| {
            let (a, b, c) = poly.h_coefficients(k);
            quadratic_roots(a, b, c).map(|(_, hi)| hi).unwrap_or(f64::NAN)
        })
        .collect();

    let mu_plus = mu_k.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_minus = mu_x[0].min(mu_u[0]);
    Ok(SigmaThresholds {
        agent,
        sigma,
        mu_plus,
        mu_minus,
        f_at_sigma: (1..n).map(|k| poly.f(k, sigma)).collect(),
        g_at_zero: (2..=n).map(|k| poly.g(k, 0.0)).collect(),
        g_at_sigma: (2..=n).map(|k| poly.g(k, sigma)).collect(),
        mu_k,
        mu_x,
        mu_u,
        polynomials: poly,
    })
}
