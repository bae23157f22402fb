//! Finite-chain laboratory for current-carrying stationary states of
//! one-dimensional quantum lattice models.
//!
//! The crate builds translation-invariant finite-range interactions on a
//! chain, constructs biased Gibbs ensembles that carry a stationary current,
//! and evaluates Lieb-Robinson bounds, correlation sum rules and the
//! energy-momentum spectral weight of the charge/energy-density pair.

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod spectral;
pub mod steady_state;

pub use error::{Error, ErrorKind, Result};
