//! Risk-limiting audits for delegate-allocation primaries.
//!
//! Contests award delegates by the Hamilton (largest-remainder) method to
//! candidates who reach a viability threshold, either on first preferences
//! (plurality) or after instant-runoff elimination. This crate tabulates such
//! contests, generates assertion sets whose truth implies the reported
//! viable set and allocation, estimates audit sample sizes and runs
//! ballot-level comparison audit rounds.

pub mod assertions;
pub mod audit;
pub mod cli;
pub mod delegate;
pub mod error;
pub mod model;
pub mod risk;
pub mod score;
pub mod spec;
pub mod tabulation;
pub mod viability;

pub use error::{Error, Result};
