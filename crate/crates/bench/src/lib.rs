//! Benchmark-only crate; see `benches/density.rs`.
