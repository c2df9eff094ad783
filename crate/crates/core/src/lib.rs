//! Delay models and window design for temporal windows of integration (TWIs)
//! in perceptive wireless networks.
//!
//! A physical event at `t0` reaches sensors spread uniformly over a disc,
//! each sensor spends a random computation time producing a status update,
//! and the update is delivered to the base station through a frame-based
//! grant protocol (scheduling request, then packet transmission, both with
//! bounded retries over a block-fading channel). The base station buffers
//! updates in a window of duration `W` and delivers them to the application
//! together; a *simultaneity violation* happens when updates of the same
//! event end up in different windows.
//!
//! The crate is organised as:
//!
//! * [`params`]: scenario/protocol parameters and derived link probabilities.
//! * [`analytic`]: closed-form delay distributions, the violation probability
//!   and its inversion into a window duration, plus a quadrature oracle.
//! * [`sim`]: seed-deterministic simulation of one event replication.
//! * [`twi`]: the base-station window buffer.
//! * [`experiments`]: Monte Carlo aggregation, empirical CDFs and figure recipes.
//! * [`exec`]: batch execution with an optional rayon backend.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
mod error;
pub mod exec;
pub mod experiments;
pub mod params;
pub mod sim;
pub mod twi;

pub use error::{Error, Result};
