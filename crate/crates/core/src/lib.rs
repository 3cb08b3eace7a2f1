//! Approximate model counting for positive 3-SAT variants by self-reduction
//! over samples drawn from a simulated variational circuit.

pub mod cli;
pub mod counting;
pub mod error;
pub mod experiments;
pub mod formula;
pub mod instances;
pub mod ising;
pub mod qsim;
pub mod seed;
pub mod variational;

pub use error::{Error, Result};
