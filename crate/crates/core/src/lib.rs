//! Model-based HVAC control for multi-zone buildings.
//!
//! An RC-network building simulator provides ground truth, an ensemble of
//! environment-conditioned MLPs learns its dynamics, and sampling planners
//! (random shooting, CEM, MPPI) pick heating/cooling setpoints against the
//! learned model.

// negated float comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dataset;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod norm;
pub mod sim;
pub mod state;

pub use error::{Error, Result};
