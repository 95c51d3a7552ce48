//! Benchmark harness and statistics behind the `bitruss` binary.
//!
//! The binary itself is a thin argument layer; everything measurable or
//! checkable lives here so integration tests can drive the same code
//! paths without spawning processes.

pub mod harness;
pub mod stats;

pub use harness::{DeskConfig, Param};
