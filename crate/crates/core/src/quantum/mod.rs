//! Optimal quantum realizations and their exact evaluation.

pub mod gamma;
pub mod realization;

pub use gamma::{gamma_generators, GammaSet};
pub use realization::{
    apply_visibility, correlator_table, omega_norms, optimal_realization, Convention, Party,
    Realization, MAX_TOTAL_DIM,
};
