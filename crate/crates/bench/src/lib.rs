//! Criterion benchmarks for the entropath pipeline; see `benches/`.
