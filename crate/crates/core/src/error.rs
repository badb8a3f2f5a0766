//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Estimation
//! failures that are *data*, not bugs — a replicate whose importance weight
//! is exactly zero, say — are represented in the result types themselves
//! (see `BoundEstimate::invalid`) rather than as errors, so that long runs
//! are never silently truncated.

use thiserror::Error;

/// Errors produced by models, proposals, estimators, and baselines.
#[derive(Debug, Error)]
pub enum Error {
    /// An assignment's key set does not match what the operation requires.
    #[error("incomplete assignment: {0}")]
    IncompleteAssignment(String),

    /// A target selection is empty, duplicated, unknown, or not a strict
    /// subset where one is required.
    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    /// The model does not implement an optional capability that the caller
    /// needs (single-site resimulation, per-node densities, ...).
    #[error("model capability missing: {0}")]
    CapabilityMissing(&'static str),

    /// The regression proposal requires every latent and target variable to
    /// be real-valued.
    #[error("non-real variables under selection: {0}")]
    NonRealVariables(String),

    /// Too few training pairs to fit a proposal.
    #[error("insufficient training data: need at least {need}, got {got}")]
    InsufficientTrainingData { need: usize, got: usize },

    /// Every candidate particle carried zero probability mass.
    #[error("all importance weights are zero")]
    AllWeightsZero,

    /// The point being conditioned on has zero density under the model, so
    /// it cannot appear in a weight denominator.
    #[error("conditioning point has zero joint density")]
    ZeroDensityConditioningPoint,

    /// An entire particle population collapsed to zero weight mid-run.
    #[error("particle population collapsed to zero weight at step {step}")]
    ParticleCollapse { step: usize },

    /// The configured move kernel cannot be sampled in reverse.
    #[error("backward kernel unavailable at step {step}")]
    BackwardKernelUnavailable { step: usize },

    /// A diagnostic was handed a non-positive standard deviation.
    #[error("standard deviation must be positive, got {0}")]
    NonpositiveStddev(f64),

    /// Exact enumeration was requested for a state space over the cap.
    #[error("joint state space too large to enumerate: {states} states (limit {limit})")]
    TooLargeToEnumerate { states: u128, limit: u128 },

    /// A covariance (sub)matrix is singular or not positive definite.
    #[error("singular or non-positive-definite covariance submatrix")]
    SingularSubmatrix,

    /// A time index fell outside the model's horizon.
    #[error("time index {index} outside horizon {horizon}")]
    IndexOutOfHorizon { index: usize, horizon: usize },

    /// Duplicate sample points left a zero nearest-neighbor distance even
    /// after jitter.
    #[error("degenerate sample: zero neighbor distance after jitter")]
    DegenerateSample,

    /// A report that requires shared-outer sampling was asked of an
    /// independently-sampled estimate.
    #[error("report requires shared-outer sampling")]
    SharingModeMismatch,

    /// Bad run configuration (grids, counts, schedules).
    #[error("configuration error: {0}")]
    Config(String),

    /// A model definition failed to load or validate.
    #[error("model load error: {0}")]
    ModelLoad(String),

    /// A value failed a domain check (non-finite real, out-of-range index).
    #[error("invalid value: {0}")]
    InvalidValue(String),
}

pub type Result<T> = std::result::Result<T, Error>;
