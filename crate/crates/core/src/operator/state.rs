use num_complex::Complex64;

use super::eigen::hermitian_eigen;
use super::matrix::{ComplexMatrix, ZERO};
use super::subsystems::{apply_indexed, total_dim, LocalIndexing};
use crate::error::{Error, Result};

pub const STATE_TOL: f64 = 1e-10;
pub const OBSERVABLE_TOL: f64 = 1e-12;

/// Dichotomic observable: Hermitian, squares to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable(ComplexMatrix);

impl Observable {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, OBSERVABLE_TOL)
    }

    pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
        let herm = m.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidOperand(format!(
                "observable is not Hermitian (deviation {herm:e})"
            )));
        }
        let sq = &m * &m;
        let inv = sq.max_abs_diff(&ComplexMatrix::identity(m.dim()));
        if inv > tol {
            return Err(Error::InvalidOperand(format!(
                "observable is not dichotomic (|O^2 - 1| = {inv:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

/// Unit-norm pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidOperand(format!("state norm {norm} is not 1")));
        }
        Ok(Self(amplitudes))
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidOperand(
                "cannot normalize a zero vector".into(),
            ));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self(amplitudes))
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator(ComplexMatrix::outer(&self.0, &self.0))
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let herm = m.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::InvalidOperand(format!(
                "density operator is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidOperand(format!(
                "density operator has trace {tr}"
            )));
        }
        let lowest = hermitian_eigen(&m)?.values.last().copied().unwrap_or(0.0);
        if lowest < -STATE_TOL {
            return Err(Error::InvalidOperand(format!(
                "density operator has negative eigenvalue {lowest:e}"
            )));
        }
        Ok(Self(m))
    }

    /// For operators known to be valid by construction (mixtures and tensor
    /// products of valid states).
    pub(crate) fn from_valid(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `Σ_k |kk> / √d`
pub fn max_entangled_state(d: usize) -> Result<StateVector> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "maximally entangled state needs d >= 2, got {d}"
        )));
    }
    let mut amps = vec![ZERO; d * d];
    let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for k in 0..d {
        amps[k * d + k] = a;
    }
    Ok(StateVector(amps))
}

/// Pure or mixed state of the whole network.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

/// Operator factor placed on a list of subsystems.
pub type LocalOp<'a> = (&'a ComplexMatrix, &'a [usize]);

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.dim(),
            Self::Mixed(r) => r.dim(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&StateVector> {
        match self {
            Self::Pure(v) => Some(v),
            Self::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> DensityOperator {
        match self {
            Self::Pure(v) => v.density(),
            Self::Mixed(r) => r.clone(),
        }
    }

    /// `<ψ|O|ψ>` or `tr(ρ O)` for a full-space operator.
    pub fn expectation(&self, o: &ComplexMatrix) -> Result<Complex64> {
        expectation(self, o)
    }

    /// Expectation of a product of operators on disjoint subsystem sets.
    pub fn expectation_local(&self, ops: &[LocalOp<'_>], dims: &[usize]) -> Result<Complex64> {
        self.check_dims(dims)?;
        match self {
            Self::Pure(v) => {
                let phi = apply_product(ops, dims, v.amplitudes())?;
                Ok(inner(v.amplitudes(), &phi))
            }
            Self::Mixed(r) => Ok(left_apply(ops, dims, r.matrix())?.trace()),
        }
    }

    /// `<X^† X>` for the product operator `X`; equals `‖X|ψ>‖²` on pure states.
    pub fn norm_sq_local(&self, ops: &[LocalOp<'_>], dims: &[usize]) -> Result<f64> {
        self.check_dims(dims)?;
        match self {
            Self::Pure(v) => {
                let phi = apply_product(ops, dims, v.amplitudes())?;
                Ok(phi.iter().map(|z| z.norm_sqr()).sum())
            }
            Self::Mixed(r) => {
                // tr(X ρ X^†) = tr(X (X ρ)^†)
                let x_rho = left_apply(ops, dims, r.matrix())?;
                Ok(left_apply(ops, dims, &x_rho.adjoint())?.trace().re)
            }
        }
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if total_dim(dims) != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} vs subsystem dims {dims:?}",
                self.dim()
            )));
        }
        Ok(())
    }
}

pub fn expectation(state: &QuantumState, o: &ComplexMatrix) -> Result<Complex64> {
    if !o.is_square() || o.dim() != state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a state of dimension {}",
            o.rows(),
            o.cols(),
            state.dim()
        )));
    }
    match state {
        QuantumState::Pure(v) => Ok(inner(v.amplitudes(), &o.mul_vec(v.amplitudes())?)),
        QuantumState::Mixed(r) => {
            let rho = r.matrix();
            let n = rho.dim();
            let mut acc = ZERO;
            for i in 0..n {
                for j in 0..n {
                    acc += rho[(i, j)] * o[(j, i)];
                }
            }
            Ok(acc)
        }
    }
}

/// `<u|v>`
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Applies each factor in turn to `v`.
pub fn apply_product(
    ops: &[LocalOp<'_>],
    dims: &[usize],
    v: &[Complex64],
) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    for (op, pos) in ops {
        let idx = LocalIndexing::new(pos, dims)?;
        out = apply_indexed(op, &idx, dims, &out)?;
    }
    Ok(out)
}

/// `X M` for the product operator `X`, column by column.
fn left_apply(ops: &[LocalOp<'_>], dims: &[usize], m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.dim();
    let indexings = ops
        .iter()
        .map(|(_, pos)| LocalIndexing::new(pos, dims))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        let mut col = m.column(c);
        for ((op, _), idx) in ops.iter().zip(&indexings) {
            col = apply_indexed(op, idx, dims, &col)?;
        }
        for (r, z) in col.into_iter().enumerate() {
            out[(r, c)] = z;
        }
    }
    Ok(out)
}
