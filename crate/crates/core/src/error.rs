use thiserror::Error;

use crate::builder::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("conviction of agent {index} must be positive and finite, got {value}")]
    NonPositiveConviction { index: usize, value: f64 },
    #[error("stubbornness of agent {index} must be positive and finite, got {value}")]
    NonPositiveStubbornness { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("edge ({i}, {j}) has invalid weight {w}")]
    NegativeWeight { i: usize, j: usize, w: f64 },
    #[error("edge ({i}, {j}) references an agent outside 0..{n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("diagonal entry ({i}, {i}) is not allowed")]
    DiagonalEntry { i: usize },
    #[error("edge ({i}, {j}) given twice with different weights")]
    DuplicateEdge { i: usize, j: usize },

    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("equilibrium solver did not converge (best scaled residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("ideal opinions are tied and the tie group carries unbalanced flow {flow:e}")]
    TiedIdealValues { flow: f64 },
    #[error("no nonnegative network realizes the ideal equilibrium ({})", .0.classification)]
    Infeasible(Box<FeasibilityReport>),
    #[error("stubbornness is not uniform")]
    NonUniformSigma,

    #[error("a dyad with equal convictions has no threshold")]
    EqualConvictions,
    #[error("operation requires exactly two agents, got {0}")]
    NotADyad(usize),

    #[error("cannot prune the last active agent")]
    LastAgent,
    #[error("pruning search exceeded the depth cap of {0}")]
    BranchLimit(usize),
    #[error("convictions must be strictly increasing from the varying agent onward")]
    NonMonotoneU,
    #[error("stubbornness of the non-varying agents is not uniform")]
    NonUniformTail,

    #[error("config: {0}")]
    ConfigParse(String),
}
