//! Benchmark-only crate; see `benches/estimators.rs`. Nothing is exported.
