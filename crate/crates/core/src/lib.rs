//! squint — interval estimates of entropy and information in generative
//! models.
//!
//! Exact entropies are rarely available outside conjugate textbook cases,
//! but many models of interest can be *simulated* and their joint density
//! evaluated pointwise. This crate turns that pair of capabilities into
//! two-sided interval estimates of the Shannon entropy H(Y) of an arbitrary
//! subset Y of model variables:
//!
//! * an upper-bound estimator whose replicates are `-log w`, where
//!   `exp(log w)` is an unbiased estimate of the marginal p(y) produced by
//!   an inference strategy (basic importance sampling, sampling/importance
//!   resampling, or sequential Monte Carlo);
//! * a lower-bound estimator whose replicates are `log w'`, where
//!   `exp(log w')` is an unbiased estimate of 1/p(y) produced by the
//!   matching auxiliary strategy run from a joint sample.
//!
//! By Jensen's inequality the two means bracket H(Y) in expectation, and the
//! bracket tightens as the inference strategy approaches the exact posterior
//! over latents. Bounds on derived quantities — conditional entropy, mutual
//! information, total/interaction/dual correlation — follow by composing
//! entropy bounds term by term with the appropriate signs.
//!
//! The crate ships three built-in model families with closed-form oracles
//! (multivariate normal, discrete Bayesian networks, linear-Gaussian state
//! space models), a nearest-neighbor entropy baseline, and deterministic
//! seeded execution throughout: a seed plus a configuration fully determines
//! every estimate, independent of worker count.

pub mod baseline;
pub mod builtin;
pub mod enumerate;
pub mod error;
pub mod estimate;
pub mod logspace;
pub mod measure;
pub mod model;
pub mod proposal;
pub mod special;
pub mod stream;

pub use error::{Error, Result};
pub use model::{Address, Assignment, JointModel, Support, TargetSelection, Value};

pub use estimate::{
    entropy_interval, entropy_lower, entropy_upper, BoundEstimate, BoundKind, EstimatorConfig,
    IntervalEstimate,
};
pub use measure::{MeasureEstimate, MeasureKind, MeasureQuery, SharingMode};
pub use proposal::{BasicProposal, ProposalPair, ProposalStack, StackSpec};
