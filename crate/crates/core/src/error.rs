use thiserror::Error;

use crate::fabric::{Cell, ResourceKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid device config: {0}")]
    Config(String),

    #[error("declared {kind} budget {declared} does not match column map total {actual}")]
    BudgetMismatch {
        kind: ResourceKind,
        declared: u64,
        actual: u64,
    },

    #[error("interfaces {a} and {b} share termination cell {cell}")]
    TerminationOverlap { a: usize, b: usize, cell: Cell },

    #[error("interface {id} anchor {cell} lies inside the static partition")]
    AnchorInStatic { id: usize, cell: Cell },

    #[error("cell {0} is outside the device")]
    CellOutOfBounds(Cell),

    #[error("cell {0} belongs to the static partition")]
    CellInStatic(Cell),

    #[error("cell sets come from different device geometries")]
    GeometryMismatch,

    #[error("requested {requested} peripheral interfaces but only {available} sites exist")]
    NotEnoughPeripherySites { requested: usize, available: usize },

    #[error("no near-equal split exists: partition {partition} holds {have} {kind}, mean is {mean:.1}")]
    NaiveLayoutInfeasible {
        partition: usize,
        kind: ResourceKind,
        have: u64,
        mean: f64,
    },

    #[error("layout generation produced {produced} of {requested} distinct layouts")]
    LayoutGeneration { requested: usize, produced: usize },

    #[error("sequence construction stalled after {built} of {requested} combinations")]
    SequenceConstruction { requested: usize, built: usize },

    #[error("AFU library is empty")]
    EmptyLibrary,

    #[error("brute-force search space {product} exceeds bound {bound}")]
    OracleBoundExceeded { product: u128, bound: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
