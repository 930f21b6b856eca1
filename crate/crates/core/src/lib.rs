//! Occupation-measure formulation of mean-field games of optimal stopping
//! and control on a finite grid: Markov-chain discretization, linear
//! programming for the frozen problem, a dynamic-programming oracle, the
//! fixed-point search for equilibria, certification of candidates and an
//! N-player simulator.

pub mod chain;
pub mod domain;
pub mod error;
pub mod lp;
pub mod mfg;
pub mod oracle;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
