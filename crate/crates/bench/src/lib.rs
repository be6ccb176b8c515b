//! Criterion benchmarks for the wristfuse pipelines live in `benches/`.
