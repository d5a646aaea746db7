//! Mixed-traffic routing with cognitive-hierarchy drivers and mobility-equity
//! weight selection.
//!
//! The crate is organised bottom-up:
//!
//! - [`network`]: graph, demand and scenario data model, BPR link costs,
//!   scenario ingestion and the 12-node sample generator.
//! - [`assignment`]: the weighted system-centric assignment for compliant
//!   traffic (Frank-Wolfe) and the totals-fixed redistribution LP.
//! - [`router`]: level-0/1/2 noncompliant best responses over shortest paths.
//! - [`game`]: the fixed-point loop between the two, chatter detection and
//!   resolution, per-trip travel times and the CPV/NPV time gap.
//! - [`equity`]: the mobility equity metric and the constrained weight sweep.
//! - [`experiments`]: run records, result tables and the operations behind
//!   the command-line tool.

pub mod assignment;
pub mod equity;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod game;
pub mod network;
pub mod presets;
pub mod router;

pub use error::{Error, Result};
pub use exec::Execution;
pub use network::{Bpr, DemandTable, Edge, ModeSet, Network, NodeId, Scenario, Trip};
