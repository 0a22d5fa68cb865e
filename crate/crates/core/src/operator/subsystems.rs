//! Index bookkeeping for operators acting on a subset of tensor factors.
//!
//! Subsystem 0 is the most significant digit of a full basis index. An
//! operator placed on `positions = [p0, p1, ..]` is read as `X_{p0} ⊗ X_{p1} ⊗ ..`
//! in the order the positions are listed.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Precomputed split of a full index into (rest, local) parts.
#[derive(Clone, Debug)]
pub struct LocalIndexing {
    /// Full-index contribution of each local basis state.
    pub offsets: Vec<usize>,
    /// Full indices whose digits at the local positions are all zero.
    pub bases: Vec<usize>,
}

pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

impl LocalIndexing {
    pub fn new(positions: &[usize], dims: &[usize]) -> Result<Self> {
        for (k, &p) in positions.iter().enumerate() {
            if p >= dims.len() {
                return Err(Error::DimensionMismatch(format!(
                    "position {p} outside {} subsystems",
                    dims.len()
                )));
            }
            if positions[..k].contains(&p) {
                return Err(Error::DimensionMismatch(format!(
                    "position {p} listed twice"
                )));
            }
        }
        let st = strides(dims);
        let local_dim: usize = positions.iter().map(|&p| dims[p]).product();
        let mut offsets = vec![0; local_dim];
        for (l, off) in offsets.iter_mut().enumerate() {
            let mut rem = l;
            for &p in positions.iter().rev() {
                *off += (rem % dims[p]) * st[p];
                rem /= dims[p];
            }
        }
        let total = total_dim(dims);
        let bases = (0..total)
            .filter(|&i| {
                positions
                    .iter()
                    .all(|&p| (i / st[p]).is_multiple_of(dims[p]))
            })
            .collect();
        Ok(Self { offsets, bases })
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }
}

fn check_op(op: &ComplexMatrix, idx: &LocalIndexing) -> Result<()> {
    if !op.is_square() || op.dim() != idx.local_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on subsystems of joint dimension {}",
            op.rows(),
            op.cols(),
            idx.local_dim()
        )));
    }
    Ok(())
}

/// Full matrix acting as `op` on `positions` and as identity elsewhere.
pub fn embed_operator(
    op: &ComplexMatrix,
    positions: &[usize],
    dims: &[usize],
) -> Result<ComplexMatrix> {
    let idx = LocalIndexing::new(positions, dims)?;
    check_op(op, &idx)?;
    let total = total_dim(dims);
    let mut out = ComplexMatrix::zeros(total, total);
    for &b in &idx.bases {
        for (l, &ol) in idx.offsets.iter().enumerate() {
            for (lp, &olp) in idx.offsets.iter().enumerate() {
                out[(b + ol, b + olp)] = op[(l, lp)];
            }
        }
    }
    Ok(out)
}

/// `(op ⊗ 1) v` without materializing the full operator.
pub fn apply_local(
    op: &ComplexMatrix,
    positions: &[usize],
    dims: &[usize],
    v: &[Complex64],
) -> Result<Vec<Complex64>> {
    let idx = LocalIndexing::new(positions, dims)?;
    apply_indexed(op, &idx, dims, v)
}

pub(crate) fn apply_indexed(
    op: &ComplexMatrix,
    idx: &LocalIndexing,
    dims: &[usize],
    v: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_op(op, idx)?;
    if v.len() != total_dim(dims) {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on a space of dimension {}",
            v.len(),
            total_dim(dims)
        )));
    }
    let mut out = vec![ZERO; v.len()];
    let d = idx.local_dim();
    let mut gathered = vec![ZERO; d];
    for &b in &idx.bases {
        for (g, &o) in gathered.iter_mut().zip(&idx.offsets) {
            *g = v[b + o];
        }
        for (l, &ol) in idx.offsets.iter().enumerate() {
            let row = op.row(l);
            out[b + ol] = row.iter().zip(&gathered).map(|(a, x)| a * x).sum();
        }
    }
    Ok(out)
}

/// Partial trace keeping `keep` (in the listed order); works for any square
/// matrix, not only density operators.
pub fn partial_trace(m: &ComplexMatrix, keep: &[usize], dims: &[usize]) -> Result<ComplexMatrix> {
    let total = total_dim(dims);
    if !m.is_square() || m.dim() != total {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix on a space of dimension {total}",
            m.rows(),
            m.cols()
        )));
    }
    let idx = LocalIndexing::new(keep, dims)?;
    let d = idx.local_dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for &b in &idx.bases {
        for (l, &ol) in idx.offsets.iter().enumerate() {
            for (lp, &olp) in idx.offsets.iter().enumerate() {
                out[(l, lp)] += m[(b + ol, b + olp)];
            }
        }
    }
    Ok(out)
}

/// `Tr_rest |u><v|` restricted to `keep`.
pub fn reduced_outer(
    u: &[Complex64],
    v: &[Complex64],
    keep: &[usize],
    dims: &[usize],
) -> Result<ComplexMatrix> {
    let total = total_dim(dims);
    if u.len() != total || v.len() != total {
        return Err(Error::DimensionMismatch(
            "vector length vs subsystem dims".into(),
        ));
    }
    let idx = LocalIndexing::new(keep, dims)?;
    let d = idx.local_dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for &b in &idx.bases {
        for (l, &ol) in idx.offsets.iter().enumerate() {
            let ul = u[b + ol];
            for (lp, &olp) in idx.offsets.iter().enumerate() {
                out[(l, lp)] += ul * v[b + olp].conj();
            }
        }
    }
    Ok(out)
}

/// Product vector assembled from factors living on the given positions.
/// The positions of all factors must partition the subsystems.
pub fn product_vector(
    parts: &[(&[Complex64], &[usize])],
    dims: &[usize],
) -> Result<Vec<Complex64>> {
    let mut seen = vec![false; dims.len()];
    for (_, pos) in parts {
        for &p in pos.iter() {
            if p >= dims.len() || seen[p] {
                return Err(Error::DimensionMismatch(format!(
                    "position {p} invalid or repeated"
                )));
            }
            seen[p] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::DimensionMismatch(
            "factors do not cover every subsystem".into(),
        ));
    }
    let total = total_dim(dims);
    let mut out = vec![Complex64::new(1.0, 0.0); total];
    for (amps, pos) in parts {
        let idx = LocalIndexing::new(pos, dims)?;
        if amps.len() != idx.local_dim() {
            return Err(Error::DimensionMismatch(
                "factor length vs its subsystems".into(),
            ));
        }
        // every full index decomposes uniquely as base(rest) + offset(local)
        let mut local_of = vec![0usize; total];
        for &b in &idx.bases {
            for (l, &o) in idx.offsets.iter().enumerate() {
                local_of[b + o] = l;
            }
        }
        for (i, x) in out.iter_mut().enumerate() {
            *x *= amps[local_of[i]];
        }
    }
    Ok(out)
}
