//! Evaluation toolkit for code summarization: corpus mining and filtering,
//! methodology-aware dataset splitting, metrics and significance testing.

pub mod corpus;
pub mod harness;
pub mod ingest;
pub mod io;
pub mod javascan;
pub mod metrics;
pub mod miner;
pub mod rng;
pub mod splitter;
pub mod stats;
