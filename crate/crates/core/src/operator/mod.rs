//! Dense complex linear algebra for small multipartite systems.

pub mod eigen;
pub mod matrix;
pub mod state;
pub mod subsystems;

pub use eigen::{hermitian_eigen, HermitianEigen};
pub use matrix::{
    anticommutator, commutator, commutator_norm, pauli, tensor_all, tensor_product, ComplexMatrix,
};
pub use state::{
    expectation, max_entangled_state, DensityOperator, LocalOp, Observable, QuantumState,
    StateVector,
};
pub use subsystems::{apply_local, embed_operator, partial_trace, product_vector, reduced_outer};

/// Defaults used when comparing matrices and values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Numerical values such as Bell values and norms.
    pub value: f64,
    /// Algebraic identities (commutators, anticommutators, residuals).
    pub algebraic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            value: 1e-9,
            algebraic: 1e-12,
        }
    }
}
