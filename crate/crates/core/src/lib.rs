//! Cat-and-mouse Markov chains: exact invariant measures on finite state
//! spaces and Monte Carlo checks of the scaling behaviour on Z, Z^2, the
//! reflected walk and the M/M/inf queue.

pub mod chain;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod lattice;
pub mod mminf;
pub mod passage;
pub mod reflected;
pub mod stationary;
pub mod stats;

pub use error::{Error, Result};
