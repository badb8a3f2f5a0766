//! Reference methods and instrumentation the interval estimators are
//! measured against: a nearest-neighbor point estimator for differential
//! entropy (no guarantees, but a standard yardstick) and simple wall-clock
//! profiling.

pub mod knn;
pub mod profile;

pub use knn::{knn_entropy, knn_entropy_of_selection, KnnConfig};
pub use profile::{runtime_profile, TimingRecord};
