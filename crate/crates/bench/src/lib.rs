//! Criterion benchmarks for `nonloc-core`; see `benches/solvers.rs`.
