//! Benchmark-only crate; see `benches/filter_step.rs`.
