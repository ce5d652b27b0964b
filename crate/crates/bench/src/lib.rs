//! Benchmark harness for the dynamic ensemble selection toolkit:
//! seeded replications over shared pools, parameter sweeps, rank-based
//! significance tests, and summary tables.

pub mod config;
pub mod protocol;
pub mod registry;
pub mod report;
pub mod stats;
pub mod sweep;

pub use config::{ProtocolParams, RunConfig};
pub use protocol::{run_protocol, RunRecord};
pub use registry::Registry;
