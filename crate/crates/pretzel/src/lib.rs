//! Standard-library companion to `pretzel-core`: framed transports, file
//! formats, the cost estimator, corpora, micro-benchmarks and two-party
//! session drivers used by the `pretzel` binary.

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod cost;
pub mod formats;
pub mod session;
pub mod transport;

pub use pretzel_core as core;
