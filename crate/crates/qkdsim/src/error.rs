//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot compose an empty sequence of matrices")]
    EmptySequence,

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("probability {value} lies outside [0, 1]")]
    InvalidProbability { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("density matrix is not physical: {0}")]
    UnphysicalState(String),

    #[error("tomography settings do not span the operator space (rank {rank} < 16)")]
    RankDeficient { rank: usize },

    #[error("incomplete basis group {group} in counts data; cannot normalize")]
    IncompleteBasisGroup { group: String },

    #[error("unknown projector label `{0}` (expected one of H, V, D, A, R, L)")]
    UnknownProjector(String),

    #[error("detection records are not sorted by timestamp")]
    UnsortedRecords,

    #[error("no pairs disclosed for error estimation; increase the sample fraction")]
    EmptyQberSample,

    #[error("no sifted pairs to estimate errors from")]
    EmptySiftedSet,

    #[error("no secure operating point: every probe session aborted")]
    NoSecureOperatingPoint,

    #[error("samples are degenerate (constant); nothing to fit")]
    DegenerateFit,

    #[error("need at least {needed} samples spanning {span_deg} degrees, got {got} over {got_span_deg:.1}")]
    InsufficientSamples {
        needed: usize,
        span_deg: f64,
        got: usize,
        got_span_deg: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config file error: {0}")]
    Toml(String),
}

pub type Result<T> = std::result::Result<T, Error>;
