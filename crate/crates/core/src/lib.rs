//! Pre-routing slack estimation.
//!
//! The crate turns Liberty, DEF, SDF and SDC inputs into a pin-level timing
//! graph, obtains per-pin arrival times from a pluggable provider, estimates
//! required arrival times at every timing endpoint (with clock reconvergence
//! pessimism removal on violating paths) and reports per-endpoint slack
//! together with the circuit TNS/WNS.
//!
//! Module map:
//! - [`liberty`]: cell libraries and NLDM lookup tables
//! - [`physical`]: DEF placement
//! - [`sdf`]: delay files and per-pin label sidecars
//! - [`sdc`]: clock and I/O constraints
//! - [`timing_graph`]: the heterogeneous pin graph and its interchange format
//! - [`at_provider`]: arrival-time sources behind one trait, selected by name
//! - [`slack_engine`]: RAT, critical paths, CRPR, TNS/WNS, reports
//! - [`metrics`]: comparison against ground-truth labels
//! - [`synth`]: random placed benchmark circuits with oracle labels
//! - [`pipeline`]: the end-to-end flows driven by the command line

pub mod at_provider;
pub mod corner;
pub mod error;
pub mod liberty;
pub mod metrics;
pub mod physical;
pub mod pipeline;
pub mod sdc;
pub mod sdf;
pub mod slack_engine;
pub mod synth;
pub mod timing_graph;

pub use corner::{Corner, Quad};
pub use error::{Error, Result};
