//! Criterion benchmarks for the rate kernels and the integrator; see `benches/`.
