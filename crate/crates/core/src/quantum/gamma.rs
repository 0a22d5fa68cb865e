//! Pairwise anticommuting Hermitian involutions (Jordan–Wigner pattern).

use crate::encoding::MAX_INPUTS;
use crate::error::{Error, Result};
use crate::operator::{anticommutator, pauli, tensor_all, ComplexMatrix};

/// `m` generators of dimension `2^⌊m/2⌋`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSet {
    pub matrices: Vec<ComplexMatrix>,
}

impl GammaSet {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(1, ComplexMatrix::dim)
    }

    /// Largest `‖Γ_r Γ_s + Γ_s Γ_r‖_max` over `r ≠ s`.
    pub fn max_anticommutator(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.len() {
            for s in (r + 1)..self.len() {
                let ac = anticommutator(&self.matrices[r], &self.matrices[s]).expect("equal dims");
                worst = worst.max(ac.max_abs());
            }
        }
        worst
    }
}

/// Generator `2k` is `Z^{⊗k} ⊗ X ⊗ 1`, generator `2k+1` is `Z^{⊗k} ⊗ Y ⊗ 1`;
/// for odd `m` the last one is `Z^{⊗⌊m/2⌋}`.
pub fn gamma_generators(m: usize) -> Result<GammaSet> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 2 generators, got {m}"
        )));
    }
    if m > MAX_INPUTS {
        return Err(Error::Capacity(format!(
            "generators limited to m <= {MAX_INPUTS}"
        )));
    }
    let sites = m / 2;
    let (x, y, z, id) = (
        pauli::x(),
        pauli::y(),
        pauli::z(),
        ComplexMatrix::identity(2),
    );
    let site_string = |k: usize, middle: &ComplexMatrix| {
        let factors: Vec<&ComplexMatrix> = (0..sites)
            .map(|s| match s.cmp(&k) {
                std::cmp::Ordering::Less => &z,
                std::cmp::Ordering::Equal => middle,
                std::cmp::Ordering::Greater => &id,
            })
            .collect();
        tensor_all(factors)
    };
    let mut matrices = Vec::with_capacity(m);
    for k in 0..sites {
        matrices.push(site_string(k, &x));
        matrices.push(site_string(k, &y));
    }
    if m % 2 == 1 {
        matrices.push(tensor_all(std::iter::repeat_n(&z, sites)));
    }
    Ok(GammaSet { matrices })
}
