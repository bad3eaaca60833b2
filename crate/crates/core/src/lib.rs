//! Cycle-faithful software model of a time-multiplexed spiking-network
//! accelerator built from Hodgkin-Huxley somas and plastic synapses.
//!
//! The pipeline is: parse a [`net::NetworkDescription`], lay it out into
//! per-HN memory images with [`compile::build_images`], then step it with
//! [`engine::Engine`]. [`oracle::oracle_run`] is an independent dense
//! simulator used to check the engine.

pub mod compile;
pub mod diff;
pub mod engine;
pub mod error;
pub mod fsutil;
pub mod gen;
pub mod image;
pub mod layout;
pub mod model;
pub mod net;
pub mod oracle;
pub mod perf;
pub mod record;
pub mod stimulus;

pub use compile::{build_images, CompileParams, CompiledNetwork};
pub use engine::Engine;
pub use error::{Error, Result};
pub use oracle::{oracle_run, MatchMode, OracleConfig, OracleRun};
pub use net::{parse_network, validate, NetworkDescription};
pub use record::{FinalState, ProbeSpec, Raster, RunOutput};
pub use stimulus::Stimulus;
