//! Criterion benchmarks for the identification pipeline live in `benches/`.
