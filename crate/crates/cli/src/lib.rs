//! Batch front-end for topology-guarded point-cloud augmentation.
//!
//! The binary (`topo-guard`) wires these pieces to a command line; the
//! library form exists so the pipeline stays testable end to end:
//!
//! * [`config`] — the run configuration, JSON-serializable, with the
//!   reference defaults.
//! * [`synth`] — synthetic cloud generators with known topology.
//! * [`ingest`] — CSV ingestion (`x,y` plus optional channel columns).
//! * [`run`] — the batch augmentation pipeline and its artifacts.
//! * [`stats`] — dataset summary statistics over run artifacts.
//! * [`commands`] — the small one-shot subcommands.
//! * [`schema`] — minimal JSON-schema validation of emitted artifacts.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod run;
pub mod schema;
pub mod stats;
pub mod synth;

pub use config::RunConfig;

/// Exit status policy: 0 success, 1 runtime error, 2 usage/input error.
pub fn exit_code_for(err: &topo_guard_core::Error) -> u8 {
    use topo_guard_core::Error::*;
    match err {
        ParseError { .. } | TooFewPoints { .. } | NoTraces | TooLarge { .. } => 2,
        _ => 1,
    }
}
