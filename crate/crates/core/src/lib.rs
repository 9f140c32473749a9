//! Power-minimizing placement of processing demands over a three-layer
//! vehicular / edge / cloud architecture.
//!
//! - [`topo`]: typed network graph, parameter catalog and the reference car park.
//! - [`power`]: power model and feasibility checker.
//! - [`optimizer`]: exact model, LP export and solvers.
//! - [`heuristic`]: sequential real-time allocator.
//! - [`experiments`]: study sweeps, savings and gap tables.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demand;
pub mod error;
pub mod experiments;
pub mod heuristic;
pub mod optimizer;
pub mod power;
pub mod topo;

pub use demand::{Demand, Scenario, SplitLimit, TrafficMode};
pub use error::{Error, Result};
pub use power::{Assignment, PowerBreakdown};
pub use topo::{NodeId, NodeKind, Topology};
