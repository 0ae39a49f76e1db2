//! Evaluation harness: phantom generation, geodesic transform benchmarks,
//! simulated-annotator experiments and session log replay.

pub mod bench;
pub mod error;
pub mod experiment;
pub mod replay;

pub use error::CliError;
