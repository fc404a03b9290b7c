//! Benchmarks for the volume engine and the algebraicity probe.
