//! Finite-chain operator algebra.

mod chain;
mod global;
mod local;
pub mod matrix_units;
mod sparse;

pub use chain::{Boundary, ChainConfig, DEFAULT_DIM_CAP};
pub use global::{comm_norm, commutator, embed, operator_norm, translate, GlobalOperator};
pub use local::{LocalOperator, HERMITIAN_TOL};
pub use matrix_units::{MatrixUnitBasis, MatrixUnitTerm};
pub use sparse::{embed_sparse, embed_sum, SparseOperator};
