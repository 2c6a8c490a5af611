//! The ideal equilibrium: the maximizer of the mean opinion over the
//! ellipsoid `sum_i sigma_i (u_i - x_i) x_i = 0` on which every
//! equilibrium lies, whatever the network.
//!
//! Maximizing `mean(x)` on that ellipsoid with a Lagrange multiplier gives
//! `x_i = 1 / (2 N lambda sigma_i) + u_i / 2` with
//! `lambda = (1/N) sqrt(sum 1/sigma_i / sum sigma_i u_i^2)`, and the mean
//! at that point bounds the mean equilibrium opinion of any network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Population;

/// Absolute gap below which two ideal opinions are treated as tied.
pub const TIE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealEquilibrium {
    pub x_star: Vec<f64>,
    pub lambda: f64,
    /// Agents sorted by ascending `x_star`, ties broken by index.
    pub order: Vec<usize>,
    /// Runs of `order` whose ideal opinions are tied, singletons included,
    /// in ascending order of value.
    pub groups: Vec<Vec<usize>>,
}

impl IdealEquilibrium {
    pub fn mean(&self) -> f64 {
        self.x_star.iter().sum::<f64>() / self.x_star.len() as f64
    }

    /// Tie groups with more than one member.
    pub fn ties(&self) -> impl Iterator<Item = &[usize]> {
        self.groups.iter().filter(|g| g.len() > 1).map(|g| g.as_slice())
    }

    pub fn lowest(&self) -> usize {
        self.order[0]
    }

    pub fn highest(&self) -> usize {
        self.order[self.order.len() - 1]
    }
}

pub fn lagrange_lambda(pop: &Population) -> f64 {
    let n = pop.len() as f64;
    let inv: f64 = pop.sigma().iter().map(|s| 1.0 / s).sum();
    let quad: f64 = pop.u().iter().zip(pop.sigma()).map(|(u, s)| s * u * u).sum();
    (inv / quad).sqrt() / n
}

pub fn ideal_point(pop: &Population) -> IdealEquilibrium {
    let n = pop.len() as f64;
    let lambda = lagrange_lambda(pop);
    let x_star: Vec<f64> =
        pop.u().iter().zip(pop.sigma()).map(|(u, s)| 1.0 / (2.0 * n * lambda * s) + u / 2.0).collect();

    let mut order: Vec<usize> = (0..x_star.len()).collect();
    order.sort_by(|&a, &b| x_star[a].total_cmp(&x_star[b]).then(a.cmp(&b)));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if x_star[i] - x_star[*g.last().unwrap()] <= TIE_THRESHOLD => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    // keep `order` consistent with the index-sorted groups
    let order = groups.iter().flatten().copied().collect();

    IdealEquilibrium { x_star, lambda, order, groups }
}

/// The largest mean equilibrium opinion any network can produce.
pub fn upper_bound(pop: &Population) -> f64 {
    let n = pop.len() as f64;
    let inv: f64 = pop.sigma().iter().map(|s| 1.0 / s).sum();
    let quad: f64 = pop.u().iter().zip(pop.sigma()).map(|(u, s)| s * u * u).sum();
    let total: f64 = pop.u().iter().sum();
    (inv.sqrt() * quad.sqrt() + total) / (2.0 * n)
}

/// `sum_i sigma_i (u_i - x_i) x_i`; zero at every equilibrium.
pub fn ellipsoid_residual(pop: &Population, x: &[f64]) -> Result<f64> {
    if x.len() != pop.len() {
        return Err(Error::LengthMismatch { expected: pop.len(), found: x.len() });
    }
    Ok(pop.u().iter().zip(pop.sigma()).zip(x).map(|((u, s), x)| s * (u - x) * x).sum())
}
