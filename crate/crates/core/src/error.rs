use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step of length {dt} from tau={tau} crosses the branching time")]
    CrossesBranchTime { tau: f64, dt: f64 },

    #[error("target tau {target} outside ({tau}, 1]")]
    TargetOutOfRange { tau: f64, target: f64 },

    #[error("branch called mid-epoch at tau={0}")]
    MidEpochBranch(f64),

    #[error("length {len} is not a multiple of dimension {dim}")]
    ShapeMismatch { len: usize, dim: usize },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("mesh is not strictly increasing")]
    UnsortedMesh,

    #[error("lineage index {index} out of range for {n} particles")]
    LineageOutOfRange { index: usize, n: usize },

    #[error("matrix for epoch {0} is too large to materialize")]
    TooLargeToMaterialize(u32),

    #[error("no surviving replicates in ensemble")]
    NoSurvivors,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
