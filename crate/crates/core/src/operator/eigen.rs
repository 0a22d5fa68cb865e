//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Each rotation zeroes one off-diagonal pair `(p, q)` with the unitary
//!
//! ```text
//! U = [[c, s e^{iφ}], [-s e^{-iφ}, c]]     where a_pq = |a_pq| e^{iφ}
//! ```
//!
//! applied as `A <- U^† A U`. Pairs are visited in row-major order of the
//! upper triangle, which makes the result reproducible bit for bit.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Off-diagonal threshold at unit scale; scaled by `max(1, ‖H‖_F)`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;
/// Hermiticity required of the input.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    /// `V Λ V^†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| l)
    }

    /// `V f(Λ) V^†`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let k = f(self.values[c]);
            for r in 0..n {
                scaled[(r, c)] *= k;
            }
        }
        &scaled * &self.vectors.adjoint()
    }
}

pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::InvalidOperand(format!(
            "eigendecomposition of a {}x{} matrix",
            h.rows(),
            h.cols()
        )));
    }
    let err = h.hermiticity_error();
    if err > HERMITIAN_INPUT_TOL {
        return Err(Error::InvalidOperand(format!(
            "matrix is not Hermitian (deviation {err:e})"
        )));
    }

    let n = h.dim();
    let mut a = h.hermitian_part();
    for k in 0..n {
        a[(k, k)] = Complex64::new(a[(k, k)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let threshold = OFF_DIAGONAL_TOL * h.frobenius_norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if max_off_diagonal(&a) < threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() == 0.0 {
                    continue;
                }
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps equal eigenvalues in sweep order
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

fn max_off_diagonal(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut worst = 0.0_f64;
    for p in 0..n {
        for q in (p + 1)..n {
            worst = worst.max(a[(p, q)].norm());
        }
    }
    worst
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.dim();
    let apq = a[(p, q)];
    let mag = apq.norm();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to (p, q)
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = phase * s;
    let u_qp = -phase.conj() * s;
    let u_qq = Complex64::new(c, 0.0);

    // A <- A U
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    // A <- U^† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(app - t * mag, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * mag, 0.0);

    // V <- V U
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}
