use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are grouped loosely by the subsystem that raises them. The CLI
/// maps every variant to the "validation error" exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({x}, {y}, {z}) does not fit in a level-{level} Morton key")]
    CoordinateOverflow { x: u32, y: u32, z: u32, level: u32 },

    #[error("refinement level {0} exceeds the maximum of {max}", max = crate::mesh::MAX_LEVEL)]
    LevelTooDeep(u32),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("requested {requested} device elements on node {node} but only {max_feasible} interior elements exist")]
    InfeasibleDeviceSet { node: usize, requested: usize, max_feasible: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("polynomial order {0} is outside the supported range 1..=15")]
    UnsupportedOrder(usize),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("non-finite value in element {element} while evaluating the right-hand side")]
    NonFiniteRate { element: usize },

    #[error("non-finite state at time step {step}")]
    NonFiniteState { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no calibration for kernel {kernel} at order {order} on {device}")]
    MissingCalibration { kernel: String, order: usize, device: String },

    #[error("calibration needs at least 3 distinct element counts, got {0}")]
    TooFewSamples(usize),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("empty report input: {0}")]
    EmptyReport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
