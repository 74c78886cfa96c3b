//! Criterion benchmarks for the packing searches and layout generation;
//! see `benches/packing.rs`.
