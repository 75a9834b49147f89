//! Hybrid, filtered and coherent control of a two-level atom coupled to
//! quantum fields.
//!
//! The crate is organized bottom-up: [`algebra`] holds the finite-dimensional
//! operator toolkit, [`slh`] the network parameters and master equations,
//! [`hybrid`] the impulsive/continuous Bloch dynamics, [`filter`] the
//! homodyne filters, [`hjb`] the dynamic-programming solvers and
//! [`coherent`] the coherent-feedback CNOT construction. [`cli`] drives all
//! of it from JSON configuration files.

pub mod algebra;
pub mod cli;
pub mod coherent;
pub mod error;
pub mod filter;
pub mod hjb;
pub mod hybrid;
pub mod slh;

pub use error::{Error, Result};
