use thiserror::Error;

/// Errors shared across the geometry, interpolation, filtration and
/// distance layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Input that defeats a geometric construction: collinear point sets,
    /// near-duplicate points, empty clips and the like.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Interpolation query outside (or on the boundary of) the convex hull.
    #[error("query point lies outside the convex hull of the sample")]
    OutsideHull,

    /// Interpolation query coincides with an existing sample point.
    #[error("query point coincides with an existing sample point")]
    CoincidentPoint,

    /// Rejection sampling exhausted its draw budget.
    #[error("rejection sampling failed after {attempts} draws")]
    SamplingFailed { attempts: u64 },

    /// Combinatorial complex construction refused above its size cap.
    #[error("point set of size {n} exceeds the cap of {cap} for this construction")]
    TooLarge { n: usize, cap: usize },

    /// A filtration violated closure or face-before-coface ordering.
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    /// Diagrams with differing counts of infinite-death points in some
    /// dimension; the distance would be infinite.
    #[error("diagrams have mismatched infinite-death point counts in dimension {dim}")]
    InfiniteMismatch { dim: usize },

    /// Trimming removed every matched cost.
    #[error("trimming with gamma={gamma} removed all {m} matched costs")]
    EmptyAfterTrim { gamma: f64, m: usize },

    /// A malformed row in an input file.
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    /// Fewer points than the pipeline minimum.
    #[error("sample has {found} points, need at least {min}")]
    TooFewPoints { found: usize, min: usize },

    /// A trace glob matched nothing.
    #[error("no traces matched")]
    NoTraces,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
