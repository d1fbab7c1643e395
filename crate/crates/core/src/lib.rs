//! Monte Carlo simulator for reading symbols stored on a reconfigurable
//! reflecting surface with coherent light.
//!
//! Two receivers are modelled:
//!
//! - a heterodyne receiver limited by vacuum noise ([`classical_rx`]), and
//! - an adaptive time-resolving receiver that displaces the incoming field
//!   with a feedback-controlled local oscillator and updates a Bayesian
//!   posterior from single-photon arrival times ([`quantum_rx`]).
//!
//! [`harness`] runs parameter sweeps over both and [`cli`] exposes them as the
//! `risqr` command-line tool.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical_rx;
pub mod cli;
pub mod constellation;
pub mod error;
pub mod harness;
pub mod optics;
pub mod quantum_rx;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
