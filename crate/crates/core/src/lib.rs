//! Brownian particles absorbed by a barrier that jumps by a fixed mass per
//! absorption, together with the mean-field free boundary those systems
//! converge to (the supercooled Stefan problem).
//!
//! The crate is organised bottom-up:
//!
//! * [`densities`] initial intensities `g` and the structural checks on them
//! * [`sampling`] seed streams and Poisson clouds
//! * [`closed_form`] special functions and the exact formulas
//! * [`particle_sim`] the finite system, exact and time-stepped
//! * [`mean_field`] the operator `Γ`, the minimal solution and diagnostics
//! * [`critical`] the unit-density scaling limit
//! * [`experiments`] replicated studies with verdicts
//! * [`cli_io`] configuration, persistence and the command line

pub mod cli_io;
pub mod closed_form;
pub mod critical;
pub mod densities;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod mean_field;
pub mod particle_sim;
pub mod sampling;

pub use error::{Error, Result};
