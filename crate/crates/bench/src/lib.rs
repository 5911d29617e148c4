//! Benchmark-only crate; the measurements live in `benches/invariants.rs`.
