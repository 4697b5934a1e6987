use std::fmt;

use crate::num::ParseScalarError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which of the two finite spaces an error or object refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => f.write_str("X"),
            Axis::Y => f.write_str("Y"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricDefect {
    NotSquare {
        rows: usize,
        cols: usize,
    },
    Negative {
        i: usize,
        j: usize,
    },
    NonzeroDiagonal {
        i: usize,
    },
    Asymmetric {
        i: usize,
        j: usize,
    },
    /// `d(from, to) > d(from, via) + d(via, to)`
    Triangle {
        from: usize,
        via: usize,
        to: usize,
    },
}

impl fmt::Display for MetricDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricDefect::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}"),
            MetricDefect::Negative { i, j } => write!(f, "negative distance at ({i}, {j})"),
            MetricDefect::NonzeroDiagonal { i } => write!(f, "nonzero diagonal at {i}"),
            MetricDefect::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            MetricDefect::Triangle { from, via, to } => write!(
                f,
                "triangle inequality fails on ({from}, {via}, {to}): d({from},{to}) > d({from},{via}) + d({via},{to})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("space {0} has no points")]
    EmptySpace(Axis),
    #[error("space {axis} repeats label {label:?}")]
    DuplicateLabel { axis: Axis, label: String },
    #[error("marginal over {axis} has negative mass at index {index}")]
    NegativeMass { axis: Axis, index: usize },
    #[error("marginal over {axis} sums to {sum}, not 1")]
    MassNotOne { axis: Axis, sum: String },
    #[error("metric on {axis} is invalid: {defect}")]
    MetricViolation { axis: Axis, defect: MetricDefect },
    #[error("cost at ({row}, {col}) is +inf but the cost is declared bounded")]
    InfiniteCostInBoundedMode { row: usize, col: usize },
    #[error("operation requires a bounded (everywhere finite) cost")]
    UnboundedCost,
    #[error("c-transform is -inf at index {index}: every cost entry along it is +inf")]
    UnboundedTransform { index: usize },
    #[error("every feasible plan puts mass on an infinite-cost cell")]
    InfeasibleFiniteCost,
    #[error("potentials violate phi(i) + psi(j) <= c(i,j) at ({row}, {col})")]
    InfeasiblePotentials { row: usize, col: usize },
    #[error("infeasible arguments: {0}")]
    InfeasibleArguments(String),
    #[error("basis cells admit no feasible potentials (not an optimal basis)")]
    InconsistentBasis,
    #[error("cyclic monotonicity check needs {needed} evaluations, budget is {budget}")]
    SupportTooLarge { needed: u128, budget: u128 },
    #[error("space {0} has no metric")]
    MissingMetric(Axis),
    #[error("cost has a negative entry at ({row}, {col})")]
    NegativeCost { row: usize, col: usize },
    #[error("envelope level must be positive, got {0}")]
    InvalidLevel(String),
    #[error("envelope levels must be nonempty and strictly increasing")]
    UnsortedLevels,
    #[error("envelope never reproduces the cost: cells ({a:?}) and ({b:?}) are at distance 0 with different costs")]
    NoSaturation { a: (usize, usize), b: (usize, usize) },
    #[error("envelope value chain is not monotone at level {0}")]
    ChainViolation(String),
    #[error("oracle needs {trees} spanning trees, budget is {budget}")]
    BudgetExceeded { trees: u128, budget: u128 },
    #[error("no optimal spanning tree yields feasible potentials")]
    NoFeasibleTreeDual,
    #[error(transparent)]
    Parse(#[from] ParseScalarError),
    #[error("invalid instance document: {0}")]
    Schema(String),
}
