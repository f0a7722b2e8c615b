use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid scale {0}")]
    InvalidScale(f64),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("polygon is not convex")]
    NotConvex,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown prototile `{id}`")]
    UnknownPrototile { id: String, line: usize },
    #[error("rule `{rule}`: non-uniform scaling")]
    NonUniformScaling { rule: String },
    #[error("rule `{rule}`: theta {theta} outside (0,1)")]
    ThetaOutOfRange { rule: String, theta: f64 },
    #[error("family fails validation: {0}")]
    Invalid(String),
    #[error("theta mismatch between factors at rule {rule}: {left} vs {right}")]
    ThetaMismatch { rule: usize, left: f64, right: f64 },

    #[error("unknown rule symbol `{0}`")]
    UnknownSymbol(String),
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("edge mismatch at level {level}: {message}")]
    EdgeMismatch { level: usize, message: String },
    #[error("path has {available} levels, {requested} requested")]
    PathTooShort { requested: usize, available: usize },
    #[error("paths are not tail-equivalent from level {0}")]
    NotTailEquivalent(usize),
    #[error("singular path: origin tile stays on the patch boundary up to level {0}")]
    SingularPath(usize),
    #[error("patch has no level-1 grouping")]
    NoGrouping,

    #[error("collared classes did not stabilize within {0} rounds")]
    NotStabilized(usize),
    #[error("collar not found in class list")]
    UnknownCollar,
    #[error("vector length {found} does not match basis size {expected}")]
    BasisMismatch { expected: usize, found: usize },
    #[error("degenerate product: {0}")]
    DegenerateProduct(String),
    #[error("rank did not stabilize within {0} steps")]
    RankNotStable(usize),
    #[error("integer overflow in cocycle product")]
    Overflow,

    #[error("region is not covered by classified tiles up to level {0}")]
    Coverage(usize),
    #[error("T grid has {0} points, at least 8 required")]
    GridTooSmall(usize),
    #[error("only {0} envelope points, at least 4 required")]
    TooFewEnvelopePoints(usize),
    #[error("observable mean {0} is not zero")]
    NonzeroMean(f64),
    #[error("sequence is not minimal within {0} levels")]
    NotMinimal(usize),
    #[error("too few boundary hits to fit a decay rate")]
    TooFewHits,
}
