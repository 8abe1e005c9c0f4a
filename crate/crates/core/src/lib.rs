//! Statevector simulation of QAOA and adaptive-bias QAOA on random
//! 1-in-3 positive SAT (1-3-SAT+) and its Max-SAT version.
//!
//! - [`sat`]: instances, penalty energy, exhaustive ground states
//! - [`quantum`]: cost diagonal, biased mixer, circuit evolution
//! - [`variational`]: Adam + adaptive bias-field outer loop
//! - [`ofab`]: optimization-free bias-field training
//! - [`diagnostics`]: infidelity, entropies, participation ratio
//! - [`harness`]: sweeps, levels-to-solution, R study, export

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod ofab;
pub mod quantum;
pub mod rng;
pub mod sat;
pub mod variational;

pub use error::{Error, Result};
