//! Criterion benchmarks for the splx numerical kernels; see `benches/`.
