//! Realizing the ideal equilibrium with a nonnegative network.
//!
//! At the ideal point the equilibrium equations become linear in the
//! weights: `sum_j a_ij (x_j - x_i) = g_i` with
//! `g_i = sigma_i (x_i - u_i) x_i`. With agents sorted by ideal opinion,
//! a nonnegative solution exists iff every proper prefix sum of `g` is
//! positive. The canonical solution is a chain between consecutive agents
//! whose link `k` carries the prefix sum `k` as flow.
//!
//! Agents with tied ideal opinions cannot exchange flow. They are merged
//! into one level, ordered inside the level by ascending `g`, and the flow
//! between consecutive levels is split with a northwest-corner transport
//! so that the result is still a forest.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal::{ideal_point, upper_bound, IdealEquilibrium};
use crate::types::{validate_network, Network, Population, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Feasible,
    /// The lowest ideal opinion sits below that agent's conviction.
    BottomViolation,
    /// The highest ideal opinion sits above that agent's conviction.
    TopViolation,
    /// Both extremes are admissible but an inner prefix sum is not positive.
    InteriorViolation,
    /// Sorting by ideal opinion does not sort the convictions.
    Reorder,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::Feasible => "feasible",
            Classification::BottomViolation => "bottom_violation",
            Classification::TopViolation => "top_violation",
            Classification::InteriorViolation => "interior_violation",
            Classification::Reorder => "reorder",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Agents by ascending ideal opinion; inside a tie, by ascending `g`.
    pub order: Vec<usize>,
    pub sorted_g: Vec<f64>,
    /// Prefix sums of `sorted_g` for k = 1..N-1.
    pub partial_sums: Vec<f64>,
    pub feasible: bool,
    /// Smallest k whose prefix sum is not above `feas_eps`.
    pub first_violation: Option<usize>,
    pub classification: Classification,
    /// Sum of all `g`; zero up to rounding.
    pub total: f64,
}

impl FeasibilityReport {
    /// 0-based position (in `order`) of the first failing prefix.
    pub fn first_failing_position(&self) -> Option<usize> {
        self.first_violation.map(|k| k - 1)
    }

    /// Largest k whose prefix sum fails, i.e. the first failure seen when
    /// scanning the suffix sums from the top.
    pub fn last_violation(&self, feas_eps: f64) -> Option<usize> {
        self.partial_sums.iter().rposition(|s| *s <= feas_eps).map(|p| p + 1)
    }
}

/// `g_i = sigma_i (x_i - u_i) x_i` for every agent.
pub fn flows(pop: &Population, ideal: &IdealEquilibrium) -> Vec<f64> {
    pop.u().iter().zip(pop.sigma()).zip(&ideal.x_star).map(|((u, s), x)| s * (x - u) * x).collect()
}

fn refined_groups(ideal: &IdealEquilibrium, g: &[f64]) -> Vec<Vec<usize>> {
    ideal
        .groups
        .iter()
        .map(|grp| {
            let mut grp = grp.clone();
            grp.sort_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b)));
            grp
        })
        .collect()
}

pub fn feasibility(pop: &Population, ideal: &IdealEquilibrium, tol: &Tolerances) -> Result<FeasibilityReport> {
    let n = pop.len();
    if ideal.x_star.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: ideal.x_star.len() });
    }
    let g = flows(pop, ideal);
    if n > 1 && ideal.groups.len() == 1 {
        if let Some(flow) = g.iter().copied().find(|v| v.abs() > tol.feas_eps) {
            return Err(Error::TiedIdealValues { flow });
        }
    }

    let order: Vec<usize> = refined_groups(ideal, &g).into_iter().flatten().collect();
    let sorted_g: Vec<f64> = order.iter().map(|&i| g[i]).collect();
    let mut partial_sums = Vec::with_capacity(n.saturating_sub(1));
    let mut acc = 0.0;
    for v in sorted_g.iter().take(n.saturating_sub(1)) {
        acc += v;
        partial_sums.push(acc);
    }
    let total = sorted_g.iter().sum();
    let first_violation = partial_sums.iter().position(|s| *s <= tol.feas_eps).map(|p| p + 1);
    let feasible = first_violation.is_none();

    let u = pop.u();
    let x = &ideal.x_star;
    let classification = if feasible {
        Classification::Feasible
    } else if order.windows(2).any(|w| u[w[1]] < u[w[0]]) {
        Classification::Reorder
    } else if x[order[0]] < u[order[0]] {
        Classification::BottomViolation
    } else if x[order[n - 1]] > u[order[n - 1]] {
        Classification::TopViolation
    } else {
        Classification::InteriorViolation
    };

    Ok(FeasibilityReport { order, sorted_g, partial_sums, feasible, first_violation, classification, total })
}

/// Northwest-corner transport of flow between consecutive levels.
///
/// `levels` are agent groups in ascending opinion, members ordered by
/// ascending `g`; `heights` the common opinion of each level. The highest
/// member of each level receives the slack, so it is the only member with
/// both incoming and outgoing flow and the result is a forest.
fn level_transport(n: usize, levels: &[Vec<usize>], heights: &[f64], g: &[f64]) -> Result<Network> {
    let mut inflow = vec![0.0; n];
    let mut entries = Vec::new();
    for m in 0..levels.len().saturating_sub(1) {
        let (cur, next) = (&levels[m], &levels[m + 1]);
        let gap = heights[m + 1] - heights[m];
        let mut supplies: Vec<(usize, f64)> = cur.iter().map(|&i| (i, (inflow[i] + g[i]).max(0.0))).collect();
        let total: f64 = supplies.iter().map(|s| s.1).sum();

        let mut demands: Vec<(usize, f64)> = next.iter().map(|&j| (j, (-g[j]).max(0.0))).collect();
        let base: f64 = demands.iter().map(|d| d.1).sum();
        if let Some(last) = demands.last_mut() {
            last.1 += (total - base).max(0.0);
        }
        for &(j, d) in &demands {
            inflow[j] = d;
        }

        let cutoff = 1e-13 * total;
        let (mut a, mut b) = (0, 0);
        while a < supplies.len() && b < demands.len() {
            let f = supplies[a].1.min(demands[b].1);
            if f > cutoff {
                entries.push((supplies[a].0, demands[b].0, f / gap));
            }
            supplies[a].1 -= f;
            demands[b].1 -= f;
            if supplies[a].1 <= cutoff {
                a += 1;
            } else {
                b += 1;
            }
        }
    }
    validate_network(n, &entries)
}

/// The canonical chain network realizing the ideal equilibrium.
pub fn build_chain(pop: &Population, ideal: &IdealEquilibrium, tol: &Tolerances) -> Result<Network> {
    let report = feasibility(pop, ideal, tol)?;
    if !report.feasible {
        return Err(Error::Infeasible(Box::new(report)));
    }
    let g = flows(pop, ideal);
    let levels = refined_groups(ideal, &g);
    let heights: Vec<f64> = levels.iter().map(|l| ideal.x_star[l[0]]).collect();
    level_transport(pop.len(), &levels, &heights, &g)
}

/// Closed-form optimal chain for uniform stubbornness:
/// `a_(k,k+1) = (sigma/2) ((k/N) sum u^2 - sum_(i<=k) u_(i)^2) / (u_(k+1) - u_(k))`
/// along ascending convictions. Equal convictions are merged into one level.
pub fn build_uniform(pop: &Population) -> Result<Network> {
    if !pop.has_uniform_sigma(1e-12) {
        return Err(Error::NonUniformSigma);
    }
    let n = pop.len();
    let sigma = pop.sigma()[0];
    let u = pop.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]).then(a.cmp(&b)));
    let sum_sq: f64 = u.iter().map(|v| v * v).sum();

    let distinct = order.windows(2).all(|w| u[w[1]] > u[w[0]]);
    if distinct {
        let mut entries = Vec::with_capacity(n.saturating_sub(1));
        let mut prefix = 0.0;
        for k in 1..n {
            let (lo, hi) = (order[k - 1], order[k]);
            prefix += u[lo] * u[lo];
            let w = 0.5 * sigma * (k as f64 / n as f64 * sum_sq - prefix) / (u[hi] - u[lo]);
            entries.push((lo, hi, w));
        }
        return validate_network(n, &entries);
    }

    let mut levels: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match levels.last_mut() {
            Some(l) if u[*l.last().unwrap()] == u[i] => l.push(i),
            _ => levels.push(vec![i]),
        }
    }
    let mean_sq = sum_sq / n as f64;
    let g: Vec<f64> = u.iter().map(|v| 0.25 * sigma * (mean_sq - v * v)).collect();
    // ideal opinions are u/2 plus a common shift, so level gaps are half the conviction gaps
    let heights: Vec<f64> = levels.iter().map(|l| 0.5 * u[l[0]]).collect();
    level_transport(n, &levels, &heights, &g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoGroupDesign {
    pub population: Population,
    pub network: Network,
    pub upper_bound: f64,
    /// Weight of every cross-group link.
    pub cross_weight: f64,
}

/// Two-community layout: `n1` agents with conviction `kappa` and
/// stubbornness `delta` (listed first), `n2` agents with `(1, 1)`. The
/// optimal network links every cross-group pair with one common weight
/// and leaves each group internally unconnected.
pub fn build_two_group(n1: usize, n2: usize, kappa: f64, delta: f64, tol: &Tolerances) -> Result<TwoGroupDesign> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut u = vec![kappa; n1];
    u.extend(std::iter::repeat_n(1.0, n2));
    let mut sigma = vec![delta; n1];
    sigma.extend(std::iter::repeat_n(1.0, n2));
    let population = Population::new(u, sigma)?;
    let ideal = ideal_point(&population);
    let report = feasibility(&population, &ideal, tol)?;
    if !report.feasible {
        return Err(Error::Infeasible(Box::new(report)));
    }
    let (x1, x2) = (ideal.x_star[0], ideal.x_star[n1]);
    let g1 = delta * (x1 - kappa) * x1;
    let w = g1 / (n2 as f64 * (x2 - x1));
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Infeasible(Box::new(report)));
    }
    let entries: Vec<_> = (0..n1).flat_map(|i| (n1..n1 + n2).map(move |j| (i, j, w))).collect();
    let network = validate_network(n1 + n2, &entries)?;
    Ok(TwoGroupDesign { upper_bound: upper_bound(&population), population, network, cross_weight: w })
}
