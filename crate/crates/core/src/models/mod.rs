//! Interactions, charges and the operators derived from them.

mod builders;
mod current;
mod density;
mod interaction;
mod windows;

pub use builders::{build_fermion_model, build_xx_model, build_xxz_model, fermion_mode, spin_half};
pub use current::{
    canonical_current, current_operator, energy_current_operators, CurrentGeometry, EnergyCurrents, SUPPORT_TOL,
};
pub use density::{
    boundary_complements, energy_density, reconstruction_residual, telescoping_term,
    telescoping_window,
};
pub use interaction::{lr_velocity, ChargeSpec, Interaction, InteractionTerm};
pub use windows::{
    chain_charge, chain_hamiltonian, chain_terms, charge_operator, check_conservation,
    local_hamiltonian, symmetry_residual, window_charge, window_hamiltonian, Interval,
    CONSERVATION_MAX_WINDOW,
};
