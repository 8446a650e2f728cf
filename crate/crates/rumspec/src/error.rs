use thiserror::Error;

/// Errors produced by framework construction, symbol assembly and the
/// numerical routines built on top of them.
#[derive(Debug, Error)]
pub enum RumspecError {
    #[error("joint index {0} out of range (motif has {1} joints)")]
    JointOutOfRange(usize, usize),

    #[error("edge index {0} out of range (motif has {1} edges)")]
    EdgeOutOfRange(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("period basis is degenerate (|det| = {0:.3e})")]
    DegenerateLattice(f64),

    #[error("motif joints {0} and {1} coincide")]
    CoincidentJoints(usize, usize),

    #[error("edge {0} has zero length")]
    ZeroLengthBar(usize),

    #[error("edge {0} joins a joint to itself (equal joint and offsets)")]
    SelfLoop(usize),

    #[error("evaluation point has a zero component (index {0})")]
    ZeroComponent(usize),

    #[error("matrix selection is not square ({rows} rows, {cols} cols)")]
    NonSquare { rows: usize, cols: usize },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("unknown gallery framework {0:?}")]
    UnknownFramework(String),

    #[error("unknown flex {0:?} for framework {1:?}")]
    UnknownFlex(String, String),

    #[error("velocity field does not cover joint ({joint}, {cell:?})")]
    MissingJoint { joint: usize, cell: Vec<i64> },

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("locally dependent spanning set at joint ({joint}, {cell:?}); coefficients not determined")]
    LocallyDependent { joint: usize, cell: Vec<i64> },

    #[error("reconstruction left {0} elements undetermined")]
    Undetermined(usize),

    #[error("flex space dimension not stabilized at margin {margin} (dims {dim_m} vs {dim_m1})")]
    NotStabilized { margin: usize, dim_m: usize, dim_m1: usize },

    #[error("witness chain violated at element {0}: {1}")]
    WitnessChain(usize, String),

    #[error("field is not band-limited (support rank equals dimension)")]
    NotBandLimited,

    #[error("exact polynomial division failed: {0}")]
    DivisionFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RumspecError>;
