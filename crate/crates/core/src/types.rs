//! Domain types shared by every solver: the agent population, the
//! connectivity network and numerical tolerances.
//!
//! Indices are 0-based throughout the Rust API. The config file, the CLI
//! and the record output use 1-based agent numbers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convictions `u` and stubbornness `sigma` of a community of agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPopulation", into = "RawPopulation")]
pub struct Population {
    u: Vec<f64>,
    sigma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPopulation {
    u: Vec<f64>,
    sigma: Vec<f64>,
}

impl TryFrom<RawPopulation> for Population {
    type Error = Error;

    fn try_from(raw: RawPopulation) -> Result<Self> {
        validate_population(raw.u, raw.sigma)
    }
}

impl From<Population> for RawPopulation {
    fn from(p: Population) -> Self {
        RawPopulation { u: p.u, sigma: p.sigma }
    }
}

pub fn validate_population(u: Vec<f64>, sigma: Vec<f64>) -> Result<Population> {
    if u.is_empty() && sigma.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if u.len() != sigma.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: sigma.len() });
    }
    for (index, &value) in u.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveConviction { index, value });
        }
    }
    for (index, &value) in sigma.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveStubbornness { index, value });
        }
    }
    Ok(Population { u, sigma })
}

impl Population {
    pub fn new(u: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        validate_population(u, sigma)
    }

    /// All agents share the same stubbornness.
    pub fn uniform(u: Vec<f64>, sigma: f64) -> Result<Self> {
        let s = vec![sigma; u.len()];
        validate_population(u, s)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn u_min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sub-population restricted to `agents` (in the given order).
    pub fn subset(&self, agents: &[usize]) -> Result<Population> {
        let u = agents.iter().map(|&i| self.u[i]).collect();
        let sigma = agents.iter().map(|&i| self.sigma[i]).collect();
        validate_population(u, sigma)
    }

    /// Copy with the stubbornness of one agent replaced.
    pub fn with_sigma(&self, agent: usize, value: f64) -> Result<Population> {
        let mut sigma = self.sigma.clone();
        sigma[agent] = value;
        validate_population(self.u.clone(), sigma)
    }

    /// True when every stubbornness equals the first to `rel` relative tolerance.
    pub fn has_uniform_sigma(&self, rel: f64) -> bool {
        let s0 = self.sigma[0];
        self.sigma.iter().all(|&s| (s - s0).abs() <= rel * s0)
    }
}

/// One undirected weighted link, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Symmetric nonnegative connectivity with zero diagonal, stored as an
/// edge list. Pairs that are absent have weight zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct Network {
    n: usize,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    n: usize,
    edges: Vec<Edge>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        let entries: Vec<_> = raw.edges.iter().map(|e| (e.i, e.j, e.w)).collect();
        validate_network(raw.n, &entries)
    }
}

impl From<Network> for RawNetwork {
    fn from(net: Network) -> Self {
        RawNetwork { n: net.n, edges: net.edges }
    }
}

/// Canonicalizes `(i, j, w)` entries into a [`Network`].
///
/// Entries may be given in either orientation. A pair listed twice is
/// accepted only when both weights agree (a symmetric restatement).
/// Zero weights are dropped.
pub fn validate_network(n: usize, entries: &[(usize, usize, f64)]) -> Result<Network> {
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, w) in entries {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        if i == j {
            return Err(Error::DiagonalEntry { i });
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::NegativeWeight { i, j, w });
        }
        let key = (i.min(j), i.max(j));
        match map.get(&key) {
            Some(&prev) if prev != w => {
                return Err(Error::DuplicateEdge { i: key.0, j: key.1 });
            }
            _ => {
                map.insert(key, w);
            }
        }
    }
    let edges = map.into_iter().filter(|&(_, w)| w > 0.0).map(|((i, j), w)| Edge { i, j, w }).collect();
    Ok(Network { n, edges })
}

impl Network {
    pub fn empty(n: usize) -> Self {
        Network { n, edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&key)).map(|k| self.edges[k].w).unwrap_or(0.0)
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Network {
        let edges = self.edges.iter().map(|e| Edge { w: e.w * factor, ..*e }).filter(|e| e.w > 0.0).collect();
        Network { n: self.n, edges }
    }

    /// Weighted degree of every agent.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.i] += e.w;
            deg[e.j] += e.w;
        }
        deg
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees().into_iter().fold(0.0, f64::max)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for e in &self.edges {
            a[e.i][e.j] = e.w;
            a[e.j][e.i] = e.w;
        }
        a
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.w));
            adj[e.j].push((e.i, e.w));
        }
        adj
    }

    /// Connected components as sorted agent lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(w, _) in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Irreducible as a matrix, i.e. connected as a graph.
    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Agents touched by at least one edge.
    pub fn incident(&self, agent: usize) -> bool {
        self.edges.iter().any(|e| e.i == agent || e.j == agent)
    }

    /// Union of two networks on disjoint agent sets; weights add.
    pub fn merged(&self, other: &Network) -> Result<Network> {
        let n = self.n.max(other.n);
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in self.edges.iter().chain(&other.edges) {
            *map.entry((e.i, e.j)).or_insert(0.0) += e.w;
        }
        let entries: Vec<_> = map.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        validate_network(n, &entries)
    }

    /// Re-labels a network built on a sub-population: local agent `k`
    /// becomes `agents[k]` in a network of size `n`.
    pub fn lift(&self, agents: &[usize], n: usize) -> Result<Network> {
        let entries: Vec<_> = self.edges.iter().map(|e| (agents[e.i], agents[e.j], e.w)).collect();
        validate_network(n, &entries)
    }
}

/// Numerical tolerances used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Scaled max-norm residual accepted for an equilibrium.
    pub eq_tol: f64,
    pub root_tol: f64,
    /// Margin for strict positivity of the prefix sums.
    pub feas_eps: f64,
    /// Integration horizon cap.
    pub t_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eq_tol: 1e-10, root_tol: 1e-12, feas_eps: 1e-12, t_max: 1e6 }
    }
}

impl Tolerances {
    pub fn with_eq_tol(self, eq_tol: f64) -> Self {
        Tolerances { eq_tol, ..self }
    }

    pub fn is_valid(&self) -> bool {
        [self.eq_tol, self.root_tol, self.feas_eps, self.t_max].iter().all(|v| *v > 0.0 && v.is_finite())
    }
}
