use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 2 rows and 2 columns, got {rows}x{cols}")]
    GridTooSmall { rows: usize, cols: usize },

    #[error("edge #{index} ({u}, {v}): self-loop")]
    SelfLoop { index: usize, u: usize, v: usize },

    #[error("edge #{index} ({u}, {v}): duplicate of an earlier edge")]
    DuplicateEdge { index: usize, u: usize, v: usize },

    #[error("edge #{index} ({u}, {v}): weight must be positive and finite, got {weight}")]
    BadEdgeWeight {
        index: usize,
        u: usize,
        v: usize,
        weight: f64,
    },

    #[error("{what} id {id} out of range for a graph with {nodes} nodes")]
    NodeOutOfRange {
        what: &'static str,
        id: usize,
        nodes: usize,
    },

    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),

    #[error("{what}[{index}] = {value} is not a valid nonnegative finite weight")]
    BadWeight {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("node mass nu[{index}] is zero and delta = 0: the pencil is degenerate")]
    DegeneratePencil { index: usize },

    #[error("no eigenvalue within {tol:e} of {lambda}")]
    NoEigenvalueNear { lambda: f64, tol: f64 },

    #[error("eigenvalue #{k} = {lambda} has multiplicity {multiplicity}; it is not differentiable")]
    NonSimpleEigenvalue {
        k: usize,
        lambda: f64,
        multiplicity: usize,
    },

    #[error("eigenvalue #{k} = {lambda} is not positive")]
    NonPositiveEigenvalue { k: usize, lambda: f64 },

    #[error("non-finite {what} update at index {index}")]
    NonFiniteUpdate { what: &'static str, index: usize },

    #[error("not an eigenpair: residual {residual:e} exceeds tolerance {tol:e}")]
    NotAnEigenpair { residual: f64, tol: f64 },

    #[error("{what} did not converge within {iters} iterations")]
    NotConverged { what: &'static str, iters: usize },

    #[error("eigen-solver failure: {0}")]
    EigenSolve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
