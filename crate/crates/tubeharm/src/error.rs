//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All recoverable failures raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input arrays have the wrong shape (e.g. ragged generator rows, m < n).
    #[error("bad shape: {0}")]
    BadShape(String),
    /// Some n-subset of generators is (numerically) linearly dependent.
    #[error("degenerate generator subset {subset:?}: |det| = {det:e}")]
    DegenerateSubset { subset: Vec<usize>, det: f64 },
    /// A generator is too far from unit length to be normalized silently.
    #[error("generator {index} has norm {norm} (deviation from 1 exceeds 1e-6)")]
    NotUnit { index: usize, norm: f64 },
    /// A parameter vector has the wrong length.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// The simplex solver exceeded its pivot budget.
    #[error("linear feasibility solver stalled after {pivots} pivots")]
    SolverStall { pivots: usize },
    /// A requested n-subset is singular.
    #[error("singular generator subset {0:?}")]
    SingularSubset(Vec<usize>),
    /// Dimension outside the supported range of an operation.
    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),
    /// Grid functions or specs are incompatible.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A Poisson parameter is not strictly positive.
    #[error("Poisson parameter must be strictly positive, got {0}")]
    NonpositiveT(f64),
    /// A gradient selector or index set is empty.
    #[error("empty derivative selector")]
    EmptySelector,
    /// Materializing a field would exceed the configured memory budget.
    #[error("memory budget exceeded: {requested} samples requested, cap {cap}")]
    OutOfMemoryBudget { requested: usize, cap: usize },
    /// The spectral support ball is not contained in the dual cone.
    #[error("spectral support escapes the dual cone (constraint {constraint}, margin {margin:e})")]
    SupportEscapesDualCone { constraint: usize, margin: f64 },
    /// Imaginary part not strictly inside the cone.
    #[error("imaginary part is not strictly inside the cone")]
    BoundaryY,
    /// No admissible (x', t) pair for a region operator.
    #[error("empty admissible region")]
    EmptyRegion,
    /// Calderón normalization integral vanished.
    #[error("Calderón normalization degenerate (integrand {0:e})")]
    NormalizationDegenerate(f64),
    /// Scale range does not capture the energy of the input.
    #[error("scale range too narrow: captured fraction {0}")]
    RangeTooNarrow(f64),
    /// Invalid experiment or CLI configuration.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    /// An experiment exceeded its compute budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// Malformed on-disk data.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
