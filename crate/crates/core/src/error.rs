use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("matrix is not a group element: {0}")]
    NotGroupElement(String),

    #[error("matrix is not an algebra element: {0}")]
    NotAlgebraElement(String),

    /// An eigenvalue sits within `margin` of -1, where the principal logarithm is undefined.
    #[error("cut locus: eigenvalue argument {arg:.6} within {margin:e} of ±π")]
    CutLocus { arg: f64, margin: f64 },

    #[error("principal logarithm leaves the Lie algebra (trace {0:e})")]
    LogNotInAlgebra(f64),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown identifier `{ident}` at position {pos}")]
    UnknownIdentifier { pos: usize, ident: String },

    #[error("arity mismatch: expected {expected} components, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("form of degree {degree} evaluated on {got} tangents")]
    DegreeMismatch { degree: usize, got: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("base point mismatch: {0}")]
    BaseMismatch(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid string: {0}")]
    InvalidString(String),

    #[error("invalid homotopy: {0}")]
    InvalidHomotopy(String),

    #[error("basepoint is not fixed by the conjugation action: {0}")]
    BasepointNotFixed(String),

    #[error("finite-difference step underflow: {0:e}")]
    StepUnderflow(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
