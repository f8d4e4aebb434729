use thiserror::Error;

use crate::graph::{AngleTriple, Edge};

/// Errors raised by graph construction, rigidity analysis, formation control
/// and Henneberg growth.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate constraint: {0}")]
    DuplicateConstraint(String),

    #[error("vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("angle triple ({0}, {1}, {2}) repeats a vertex")]
    DegenerateAngleTriple(usize, usize, usize),

    #[error("points {0} and {1} are collocated")]
    CollocatedPoints(usize, usize),

    #[error("graph has no edges")]
    EmptyEdgeSet,

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("operation requires dimension {expected}, framework has dimension {found}")]
    WrongDimension { expected: usize, found: usize },

    #[error("position count {positions} does not match vertex count {n}")]
    PositionCountMismatch { positions: usize, n: usize },

    #[error("operation requires at least {required} vertices, got {n}")]
    TooFewVertices { required: usize, n: usize },

    #[error("non-finite coordinate at vertex {0}")]
    NonFiniteCoordinate(usize),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("target mismatch: {0}")]
    TargetMismatch(String),

    #[error("wrong topology: {0}")]
    WrongTopology(String),

    #[error("new vertex placement is collinear with anchors {0} and {1}")]
    CollinearPlacement(usize, usize),

    #[error("bad anchor: {0}")]
    BadAnchor(String),

    #[error("edge {0} not found")]
    EdgeNotFound(Edge),

    #[error("angle {0} not found")]
    AngleNotFound(AngleTriple),

    #[error("seed framework is not minimally rigid or minimally weakly rigid: {0}")]
    SeedNotRigid(String),

    #[error("no admissible placement after {0} attempts")]
    PlacementExhausted(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
