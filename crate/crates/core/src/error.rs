use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph needs q >= 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("point index {index} out of range for {n_points} points")]
    PointOutOfRange { index: usize, n_points: usize },
    #[error("class {class} out of range for q = {q}")]
    ClassOutOfRange { class: usize, q: usize },
    #[error("self edge on point {0}")]
    SelfEdge(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("edge {i}-{j} has non-positive or non-finite weight {weight}")]
    BadWeight { i: usize, j: usize, weight: f64 },
    #[error("point {0} is labelled more than once")]
    DuplicateLabel(usize),
    #[error("configuration has {got} states, graph has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point {point} is clamped to class {clamp} but configuration holds {state}")]
    ClampViolated { point: usize, clamp: usize, state: usize },
    #[error("point {0} is labelled and cannot be flipped")]
    LabelledFlip(usize),
    #[error("feature {0} has zero variance")]
    ZeroVariance(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration needs {states} states, limit is {limit}")]
    EnumerationCap { states: u128, limit: u64 },
    #[error("graph has no free spins")]
    NoFreeSpins,
    #[error("energy binnings differ")]
    BinningMismatch,
    #[error("accumulator is empty")]
    EmptyAccumulator,
    #[error("min-cut needs labelled points of class {0}")]
    MissingClassLabels(usize),
    #[error("ground truth covers {got} points, expected {expected}")]
    CoverageMismatch { expected: usize, got: usize },
    #[error("sample of {requested} exceeds candidate pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },
}
