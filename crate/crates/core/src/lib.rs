//! Highest mean opinion for the nonlinear opinion model
//! `x_i' = sum_j a_ij (x_j - x_i) + sigma_i (u_i - x_i) x_i`.
//!
//! Agents are indexed from 0 in this API. Config files, command line
//! flags and printed records use 1-based indices.

pub mod builder;
pub mod cli;
pub mod dyad;
pub mod dynamics;
pub mod error;
pub mod ideal;
pub mod parallel;
pub mod pruning;
pub mod reproduce;
pub mod types;

pub use builder::{build_chain, build_two_group, build_uniform, feasibility, Classification, FeasibilityReport};
pub use dyad::{classify, mu_star, Regime, TrichotomyOutcome};
pub use dynamics::{equilibrium, scale_sweep, EquilibriumState, SweepPoint};
pub use error::{Error, Result};
pub use ideal::{ideal_point, upper_bound, IdealEquilibrium};
pub use parallel::Execution;
pub use pruning::{admissibility, prune_once, prune_search, sigma_thresholds, Policy, PruneTrace};
pub use types::{validate_network, validate_population, Edge, Network, Population, Tolerances};
