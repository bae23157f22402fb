//! Symmetry-resolved eigenbases and operators expressed in them.

mod eigen_op;
mod joint;
mod partition;

pub use eigen_op::EigenOperator;
pub use joint::{fold_momentum, EigenLabel, JointBasis, COMMUTATION_TOL, DEGENERACY_TOL};
pub use partition::SectorPartition;
