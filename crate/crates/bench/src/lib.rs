//! Criterion benchmarks for the cost kernels and the game potential; see `benches/kernels.rs`.
