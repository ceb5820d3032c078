//! Lot sizing with machine-speed decisions for a multi-stage felt plant.
//!
//! The planning model couples production quantities with per-period machine
//! processing times through bilinear capacity rows. [`heuristic::two_phase`]
//! alternates between two linear subproblems, each solved with the dense
//! simplex in [`lp`], until it reaches a fixed point. [`oracle`] provides a
//! grid-search reference for small instances, and [`harness`] runs the
//! scenario grid and writes CSV reports.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generator;
pub mod harness;
pub mod heuristic;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod subproblems;

pub use error::{Error, Result};
pub use heuristic::{two_phase, HeuristicConfig, HeuristicTrace, Termination};
pub use model::{
    check_feasibility, evaluate_objective, FeasibilityReport, FlowMode, Instance, Solution,
};
