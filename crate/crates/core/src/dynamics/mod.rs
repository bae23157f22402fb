//! Heisenberg evolution, the Lieb-Robinson bound and the deviation bound on
//! the current correlation.

mod deviation;
mod evolution;
mod lieb_robinson;

pub use deviation::{deviation_bound_z, DeviationNorms};
pub use evolution::{EvolutionContext, RECONSTRUCTION_TOL};
pub use lieb_robinson::{
    empirical_velocity, lr_bound, lr_scan, wrap_horizon, LRBoundParams, LRRow, LRScan,
};
