//! Patrolling policies for event detection and confirmation.
//!
//! Events arrive at graph vertices as Poisson processes and stay active for
//! exponentially distributed times. An event that stays at least the critical
//! time `T` is a *true* event; robots classify it as true only by seeing it
//! twice, at least `T` apart. This crate provides:
//!
//! - [`graph`]: metric closure and TSP tours,
//! - [`analytic`]: closed-form confirmation probabilities and the single-,
//!   two- and m-robot policies,
//! - [`sim`]: a discrete-event patrol simulator and an idealized per-event
//!   Monte Carlo, both used as independent checks of the closed forms,
//! - [`offline`]: the known-events feasibility problem and its reduction from
//!   TSP with time windows,
//! - [`cli`]: the `edc` command-line front end.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod graph;
pub mod offline;
pub mod sim;

pub use error::{EdcError, Result};

/// Relative tolerance for "is an exact multiple" and distance equality tests.
pub const REL_TOL: f64 = 1e-9;
