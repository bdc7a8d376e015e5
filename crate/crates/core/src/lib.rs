//! Share-a-ride problem: passengers and parcels served by the same taxi fleet.
//!
//! The crate provides the problem model, an instance generator, the bundle
//! formulation with an exact branch-and-bound solver and MILP export, the
//! two-stage passenger-first baseline, and evaluation metrics.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundles;
pub mod cli;
pub mod instance_gen;
pub mod metrics;
pub mod model;
pub mod solver_bf;
pub mod solver_twostage;
