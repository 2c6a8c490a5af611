//! Pruning and strengthening when the ideal equilibrium is not realizable.
//!
//! Pruning an agent removes all of its links, so it settles at its own
//! conviction, and the remaining agents are re-optimized as a smaller
//! community. Strengthening drives a group of agents to consensus by
//! letting their links grow without bound; the resulting mean is a
//! supremum rather than an attained value.

pub mod thresholds;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::builder::{build_chain, feasibility, Classification, FeasibilityReport};
use crate::dyad::{self, Regime};
use crate::error::{Error, Result};
use crate::ideal::{ideal_point, IdealEquilibrium};
use crate::parallel::{self, Execution};
use crate::types::{validate_network, Network, Population, Tolerances};

pub use thresholds::{sigma_thresholds, SigmaThresholds, ThresholdPolynomials};

/// Maximum number of nested prune/split decisions.
pub const DEPTH_CAP: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The lowest ideal opinion is below that agent's conviction.
    BelowConviction { agent: usize, x: f64, u: f64 },
    /// The highest ideal opinion is above that agent's conviction.
    AboveConviction { agent: usize, x: f64, u: f64 },
    /// Prefix sum `k` (agents sorted by ideal opinion) is not positive.
    PrefixSum { k: usize, sum: f64 },
}

/// Every reason the ideal point cannot be an equilibrium of a nonnegative
/// network. Prefix failures at `k = 1` or `k = N-1` that merely restate an
/// extreme violation are not listed twice.
pub fn admissibility(pop: &Population, ideal: &IdealEquilibrium, tol: &Tolerances) -> Result<Vec<Violation>> {
    let report = feasibility(pop, ideal, tol)?;
    Ok(violations(pop, ideal, &report, tol))
}

fn violations(
    pop: &Population,
    ideal: &IdealEquilibrium,
    report: &FeasibilityReport,
    tol: &Tolerances,
) -> Vec<Violation> {
    let n = pop.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let (lo, hi) = (report.order[0], report.order[n - 1]);
    let (u, x) = (pop.u(), &ideal.x_star);
    let below = x[lo] < u[lo];
    let above = x[hi] > u[hi];
    if below {
        out.push(Violation::BelowConviction { agent: lo, x: x[lo], u: u[lo] });
    }
    if above {
        out.push(Violation::AboveConviction { agent: hi, x: x[hi], u: u[hi] });
    }
    for (p, &sum) in report.partial_sums.iter().enumerate() {
        let k = p + 1;
        if sum > tol.feas_eps || (k == 1 && below) || (k == n - 1 && above) {
            continue;
        }
        out.push(Violation::PrefixSum { k, sum });
    }
    out
}

/// Ideal equilibrium of the agents left after freezing `frozen`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedIdeal {
    /// Remaining agents; local index `k` of `ideal` is agent `agents[k]`.
    pub agents: Vec<usize>,
    pub frozen: usize,
    pub ideal: IdealEquilibrium,
}

impl ReducedIdeal {
    /// Ideal opinion of a remaining agent, or `None` if not in the set.
    pub fn value(&self, agent: usize) -> Option<f64> {
        self.agents.iter().position(|&a| a == agent).map(|k| self.ideal.x_star[k])
    }
}

/// Freezes `victim` at its conviction and re-optimizes the rest of `active`.
pub fn prune_once(pop: &Population, active: &[usize], victim: usize) -> Result<ReducedIdeal> {
    if !active.contains(&victim) {
        return Err(Error::IndexOutOfRange { i: victim, j: victim, n: pop.len() });
    }
    if active.len() < 2 {
        return Err(Error::LastAgent);
    }
    let mut agents: Vec<usize> = active.iter().copied().filter(|&a| a != victim).collect();
    agents.sort_unstable();
    let ideal = ideal_point(&pop.subset(&agents)?);
    Ok(ReducedIdeal { agents, frozen: victim, ideal })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Explore both extreme victims (and splits) and keep the best.
    Best,
    /// Prune the agent at the first failing prefix.
    Bottom,
    /// Prune the agent at the first failing suffix, scanning from the top.
    Top,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "best" => Ok(Policy::Best),
            "bottom" => Ok(Policy::Bottom),
            "top" => Ok(Policy::Top),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneAction {
    PruneBottom,
    PruneTop,
    StrengthenPair,
    StrengthenAll,
    /// Solve the two sides of a vanishing inner prefix independently.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    XBelowUMin,
    XAboveUMax,
    PartialSumViolation,
    CompleteReorder,
}

impl std::fmt::Display for PruneAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PruneAction::PruneBottom => "prune_bottom",
            PruneAction::PruneTop => "prune_top",
            PruneAction::StrengthenPair => "strengthen_pair",
            PruneAction::StrengthenAll => "strengthen_all",
            PruneAction::Split => "split",
        };
        f.write_str(s)
    }
}

impl std::fmt::Display for PruneReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PruneReason::XBelowUMin => "x_below_u_min",
            PruneReason::XAboveUMax => "x_above_u_max",
            PruneReason::PartialSumViolation => "partial_sum_violation",
            PruneReason::CompleteReorder => "complete_reorder",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    pub action: PruneAction,
    /// The pruned agent, the strengthened agents, or the first agent of
    /// the upper half of a split.
    pub agents: Vec<usize>,
    pub reason: PruneReason,
    /// Mean over all N agents right after this step, with agents outside
    /// the step's scope at their final values.
    pub resulting_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub steps: Vec<PruneStep>,
    /// Agents that were not pruned.
    pub active: Vec<usize>,
    /// Pruned agents and the value they settle at (their conviction).
    pub frozen: BTreeMap<usize, f64>,
    pub final_network: Network,
    /// Claimed opinion of every agent in the final state.
    pub x: Vec<f64>,
    pub final_mean: f64,
    /// False when a strengthened consensus is involved (a supremum).
    pub attained: bool,
}

#[derive(Debug, Clone)]
struct RawStep {
    action: PruneAction,
    agents: Vec<usize>,
    reason: PruneReason,
    /// Agents whose values this step determines.
    scope: Vec<usize>,
    /// Sum of their values right after the step.
    scope_sum: f64,
}

#[derive(Debug, Clone)]
struct Outcome {
    steps: Vec<RawStep>,
    values: Vec<(usize, f64)>,
    edges: Vec<(usize, usize, f64)>,
    frozen: Vec<usize>,
    attained: bool,
    sum: f64,
}

impl Outcome {
    fn leaf(values: Vec<(usize, f64)>, edges: Vec<(usize, usize, f64)>, attained: bool) -> Self {
        let sum = values.iter().map(|v| v.1).sum();
        Outcome { steps: Vec::new(), values, edges, frozen: Vec::new(), attained, sum }
    }
}

struct Search<'a> {
    pop: &'a Population,
    policy: Policy,
    tol: Tolerances,
    exec: Execution,
    strong_weight: f64,
    memo: Mutex<HashMap<Vec<usize>, Outcome>>,
}

impl Search<'_> {
    fn solve(&self, active: &[usize], depth: usize) -> Result<Outcome> {
        if depth > DEPTH_CAP {
            return Err(Error::BranchLimit(DEPTH_CAP));
        }
        if let Some(hit) = self.memo.lock().unwrap().get(active) {
            return Ok(hit.clone());
        }
        let out = self.solve_uncached(active, depth)?;
        self.memo.lock().unwrap().insert(active.to_vec(), out.clone());
        Ok(out)
    }

    fn solve_uncached(&self, active: &[usize], depth: usize) -> Result<Outcome> {
        let u = self.pop.u();
        match active.len() {
            0 => return Ok(Outcome::leaf(Vec::new(), Vec::new(), true)),
            1 => return Ok(Outcome::leaf(vec![(active[0], u[active[0]])], Vec::new(), true)),
            _ => {}
        }
        let sub = self.pop.subset(active)?;
        let ideal = ideal_point(&sub);
        let report = match feasibility(&sub, &ideal, &self.tol) {
            Ok(r) => r,
            // tied ideal values with unbalanced flow: no link can help
            Err(Error::TiedIdealValues { .. }) => return self.split_all(active),
            Err(e) => return Err(e),
        };

        if report.feasible {
            let net = build_chain(&sub, &ideal, &self.tol)?;
            let edges = net.edges().iter().map(|e| (active[e.i], active[e.j], e.w)).collect();
            let values = active.iter().copied().zip(ideal.x_star.iter().copied()).collect();
            return Ok(Outcome::leaf(values, edges, true));
        }

        if report.classification == Classification::Reorder {
            if active.len() == 2 {
                return self.dyad(active, &sub);
            }
            let local_u: Vec<f64> = report.order.iter().map(|&k| sub.u()[k]).collect();
            if local_u.windows(2).all(|w| w[1] <= w[0]) {
                return Ok(self.strengthen(active, &sub, PruneAction::StrengthenAll));
            }
        }

        let bottom = report.first_failing_position().map(|p| {
            let local = report.order[p];
            let reason = if p == 0 && ideal.x_star[local] < sub.u()[local] {
                PruneReason::XBelowUMin
            } else {
                PruneReason::PartialSumViolation
            };
            (active[local], reason)
        });
        let top = report.last_violation(self.tol.feas_eps).map(|k| {
            let local = report.order[k];
            let reason = if k == active.len() - 1 && ideal.x_star[local] > sub.u()[local] {
                PruneReason::XAboveUMax
            } else {
                PruneReason::PartialSumViolation
            };
            (active[local], reason)
        });

        match self.policy {
            Policy::Bottom => {
                let (v, r) = bottom.or(top).expect("infeasible report has a failing prefix");
                self.prune(active, v, PruneAction::PruneBottom, r, depth)
            }
            Policy::Top => {
                let (v, r) = top.or(bottom).expect("infeasible report has a failing prefix");
                self.prune(active, v, PruneAction::PruneTop, r, depth)
            }
            Policy::Best => {
                let b = bottom.expect("infeasible report has a failing prefix");
                let t = top.expect("infeasible report has a failing prefix");
                let (ob, ot) = if b.0 == t.0 {
                    (self.prune(active, b.0, PruneAction::PruneBottom, b.1, depth), None)
                } else {
                    let (x, y) = parallel::join(
                        self.exec,
                        || self.prune(active, b.0, PruneAction::PruneBottom, b.1, depth),
                        || self.prune(active, t.0, PruneAction::PruneTop, t.1, depth),
                    );
                    (x, Some(y))
                };
                let mut best = ob?;
                if let Some(ot) = ot {
                    let ot = ot?;
                    if ot.sum > best.sum {
                        best = ot;
                    }
                }
                if report.classification == Classification::InteriorViolation {
                    let k = report.first_violation.expect("infeasible");
                    let split = self.split(active, &report, k, depth)?;
                    if split.sum > best.sum {
                        best = split;
                    }
                }
                Ok(best)
            }
        }
    }

    fn prune(
        &self,
        active: &[usize],
        victim: usize,
        action: PruneAction,
        reason: PruneReason,
        depth: usize,
    ) -> Result<Outcome> {
        let reduced = prune_once(self.pop, active, victim)?;
        let rest = self.solve(&reduced.agents, depth + 1)?;
        let u_v = self.pop.u()[victim];
        let scope_sum = u_v + reduced.ideal.x_star.iter().sum::<f64>();
        let mut out = rest;
        out.steps.insert(0, RawStep { action, agents: vec![victim], reason, scope: active.to_vec(), scope_sum });
        out.values.push((victim, u_v));
        out.frozen.push(victim);
        out.sum += u_v;
        Ok(out)
    }

    fn split(&self, active: &[usize], report: &FeasibilityReport, k: usize, depth: usize) -> Result<Outcome> {
        let mut lower: Vec<usize> = report.order[..k].iter().map(|&l| active[l]).collect();
        let mut upper: Vec<usize> = report.order[k..].iter().map(|&l| active[l]).collect();
        lower.sort_unstable();
        upper.sort_unstable();
        let a = self.solve(&lower, depth + 1)?;
        let b = self.solve(&upper, depth + 1)?;
        let ideal_sum = |set: &[usize]| -> Result<f64> { Ok(ideal_point(&self.pop.subset(set)?).x_star.iter().sum()) };
        let step = RawStep {
            action: PruneAction::Split,
            agents: vec![*upper.first().expect("non-empty")],
            reason: PruneReason::PartialSumViolation,
            scope: active.to_vec(),
            scope_sum: ideal_sum(&lower)? + ideal_sum(&upper)?,
        };
        let mut steps = vec![step];
        steps.extend(a.steps);
        steps.extend(b.steps);
        Ok(Outcome {
            steps,
            values: a.values.into_iter().chain(b.values).collect(),
            edges: a.edges.into_iter().chain(b.edges).collect(),
            frozen: a.frozen.into_iter().chain(b.frozen).collect(),
            attained: a.attained && b.attained,
            sum: a.sum + b.sum,
        })
    }

    fn split_all(&self, active: &[usize]) -> Result<Outcome> {
        let u = self.pop.u();
        Ok(Outcome::leaf(active.iter().map(|&i| (i, u[i])).collect(), Vec::new(), true))
    }

    fn dyad(&self, active: &[usize], sub: &Population) -> Result<Outcome> {
        let outcome = dyad::classify(sub)?;
        match outcome.regime {
            Regime::Consensus | Regime::DegenerateConsensus => {
                Ok(self.strengthen(active, sub, PruneAction::StrengthenPair))
            }
            // reorder reports only arise from the consensus regime
            _ => unreachable!("dyad with a reorder report classified as {}", outcome.regime),
        }
    }

    fn strengthen(&self, active: &[usize], sub: &Population, action: PruneAction) -> Outcome {
        let m = crate::dynamics::consensus_limit(sub);
        let mut edges = Vec::new();
        for (p, &i) in active.iter().enumerate() {
            for &j in &active[p + 1..] {
                edges.push((i, j, self.strong_weight));
            }
        }
        let values: Vec<(usize, f64)> = active.iter().map(|&i| (i, m)).collect();
        let mut out = Outcome::leaf(values, edges, false);
        out.steps.push(RawStep {
            action,
            agents: active.to_vec(),
            reason: PruneReason::CompleteReorder,
            scope: active.to_vec(),
            scope_sum: m * active.len() as f64,
        });
        out
    }
}

/// Weight used as an effectively infinite link when strengthening.
pub fn strong_weight(pop: &Population) -> f64 {
    1e6 * pop.sigma_max() * pop.u_max()
}

/// Finds the best reduced configuration reachable by pruning agents or
/// strengthening links, starting from the full population.
pub fn prune_search(pop: &Population, policy: Policy, tol: &Tolerances) -> Result<PruneTrace> {
    prune_search_with(pop, policy, tol, Execution::default())
}

pub fn prune_search_with(pop: &Population, policy: Policy, tol: &Tolerances, exec: Execution) -> Result<PruneTrace> {
    let n = pop.len();
    let search =
        Search { pop, policy, tol: *tol, exec, strong_weight: strong_weight(pop), memo: Mutex::new(HashMap::new()) };
    let all: Vec<usize> = (0..n).collect();
    let out = search.solve(&all, 0)?;

    let mut x = vec![f64::NAN; n];
    for &(i, v) in &out.values {
        x[i] = v;
    }
    let total: f64 = x.iter().sum();
    let steps = out
        .steps
        .iter()
        .map(|s| {
            let outside: f64 = total - s.scope.iter().map(|&i| x[i]).sum::<f64>();
            PruneStep {
                action: s.action,
                agents: s.agents.clone(),
                reason: s.reason,
                resulting_mean: (outside + s.scope_sum) / n as f64,
            }
        })
        .collect();
    let frozen: BTreeMap<usize, f64> = out.frozen.iter().map(|&i| (i, pop.u()[i])).collect();
    let active = (0..n).filter(|i| !frozen.contains_key(i)).collect();
    Ok(PruneTrace {
        steps,
        active,
        frozen,
        final_network: validate_network(n, &out.edges)?,
        final_mean: total / n as f64,
        x,
        attained: out.attained,
    })
}

/// Convenience: the admissibility violations and the report together.
pub fn diagnose(pop: &Population, tol: &Tolerances) -> Result<(IdealEquilibrium, FeasibilityReport, Vec<Violation>)> {
    let ideal = ideal_point(pop);
    let report = feasibility(pop, &ideal, tol)?;
    let v = violations(pop, &ideal, &report, tol);
    Ok((ideal, report, v))
}
