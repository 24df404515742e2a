//! Deterministic synthetic corpora and scripted backends for offline runs,
//! tests and benchmarks.

pub mod corpus;
pub mod scoring;
pub mod scripted;
