//! Benchmarking, verification, and reporting around the line-scan engine.
//!
//! The library half of the `linescan` binary: deterministic sweep timing
//! ([`mod@bench`]), the `key = value` config format ([`config`]), CSV/JSON
//! reports and ladder rendering ([`report`]), seeded verification suites
//! ([`verify`]), and the scoped worker pool that plugs into the engine's
//! runner trait ([`pool`]).

pub mod bench;
pub mod config;
pub mod pool;
pub mod report;
pub mod verify;
