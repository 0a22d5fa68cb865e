//! Classical bounds from deterministic strategies.
//!
//! A deterministic strategy fixes a sign for every input of every party.
//! Assignments are enumerated as bitmasks: bit `x` set means `a_x = -1`, so
//! mask 0 is the all-`+1` assignment. Ties are broken towards the lowest
//! mask, independent of how the scan is partitioned.

use rayon::prelude::*;

use crate::encoding::EncodingScheme;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, ScenarioKind};

/// Largest `m` for a single-party scan (`2^(2^(m-1))` masks).
pub const MAX_ETA_INPUTS: usize = 5;
/// Largest `m` for the joint `(a, c, b)` scan.
pub const MAX_JOINT_INPUTS: usize = 4;
/// Largest star network scanned exhaustively.
pub const MAX_BRUTE_FORCE_STAR: usize = 8;

/// `m · C(m-1, ⌊(m-1)/2⌋)`
pub fn eta_closed_form(m: usize) -> Result<u128> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("need m >= 2, got {m}")));
    }
    let n = (m - 1) as u128;
    let k = n / 2;
    let mut c: u128 = 1;
    for j in 0..k {
        c = c
            .checked_mul(n - j)
            .ok_or_else(|| Error::Capacity(format!("binomial overflow at m={m}")))?
            / (j + 1);
    }
    c.checked_mul(m as u128)
        .ok_or_else(|| Error::Capacity(format!("bound overflow at m={m}")))
}

/// `Σ_x S[i][x] a_x` for the assignment encoded by `mask`.
fn row_sums(signs: &[Vec<i8>], mask: u64) -> Vec<i64> {
    signs
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(x, &s)| {
                    if (mask >> x) & 1 == 1 {
                        -(s as i64)
                    } else {
                        s as i64
                    }
                })
                .sum()
        })
        .collect()
}

fn mask_to_signs(mask: u64, len: usize) -> Vec<i8> {
    (0..len)
        .map(|x| if (mask >> x) & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// Keeps the larger value; equal values keep the lower mask.
fn better<T: PartialOrd + Copy>(a: (T, u64), b: (T, u64)) -> (T, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaMaximum {
    pub value: u64,
    /// Edge assignment attaining the maximum, one sign per input.
    pub witness: Vec<i8>,
    pub mask: u64,
}

/// `max_a Σ_i |Σ_x S[i][x] a_x|` by exhaustive enumeration.
pub fn eta_brute_force(scheme: &EncodingScheme) -> Result<EtaMaximum> {
    let m = scheme.m();
    if m > MAX_ETA_INPUTS {
        return Err(Error::Capacity(format!(
            "exhaustive scan limited to m <= {MAX_ETA_INPUTS}, got {m}"
        )));
    }
    let signs = scheme.sign_matrix();
    let count = 1u64 << scheme.inputs();
    let (value, mask) = (0..count)
        .into_par_iter()
        .map(|mask| {
            (
                row_sums(&signs, mask)
                    .iter()
                    .map(|s| s.unsigned_abs())
                    .sum::<u64>(),
                mask,
            )
        })
        .reduce(|| (0, u64::MAX), better);
    Ok(EtaMaximum {
        value,
        witness: mask_to_signs(mask, scheme.inputs()),
        mask,
    })
}

pub fn classical_bound(scenario: &Scenario) -> f64 {
    scenario.classical_bound
}

/// `v^(1/n)`, exact when `v` is a perfect `n`-th power.
fn exact_root(v: u64, n: usize) -> f64 {
    if v == 0 {
        return 0.0;
    }
    let approx = (v as f64).powf(1.0 / n as f64);
    let r = approx.round() as u64;
    if r.checked_pow(n as u32) == Some(v) {
        r as f64
    } else {
        approx
    }
}

/// Maximum of the Bell functional over deterministic strategies.
pub fn brute_force_delta(scenario: &Scenario) -> Result<f64> {
    match scenario.kind {
        ScenarioKind::Star { n } => star_brute_force(n),
        ScenarioKind::Bilocal { m } if m <= MAX_JOINT_INPUTS => {
            Ok(bilocal_joint_scan(&scenario.scheme))
        }
        ScenarioKind::Bilocal { m } if m <= MAX_ETA_INPUTS => {
            // the diagonal c = a attains the joint maximum
            Ok(eta_brute_force(&scenario.scheme)?.value as f64)
        }
        ScenarioKind::Bilocal { m } => Err(Error::Capacity(format!(
            "deterministic scan limited to m <= {MAX_ETA_INPUTS}, got {m}"
        ))),
    }
}

fn star_brute_force(n: usize) -> Result<f64> {
    if n > MAX_BRUTE_FORCE_STAR {
        return Err(Error::Capacity(format!(
            "star scan limited to n <= {MAX_BRUTE_FORCE_STAR}, got {n}"
        )));
    }
    // two bits per edge party, then two bits for b
    let edge_masks = 1u64 << (2 * n);
    let best = (0..edge_masks * 4)
        .into_par_iter()
        .map(|mask| {
            let (mut i1, mut i2) = (1i64, 1i64);
            for k in 0..n {
                let a1 = if (mask >> (2 * k)) & 1 == 1 { -1 } else { 1 };
                let a2 = if (mask >> (2 * k + 1)) & 1 == 1 {
                    -1
                } else {
                    1
                };
                i1 *= a1 + a2;
                i2 *= a1 - a2;
            }
            let b = mask >> (2 * n);
            if b & 1 == 1 {
                i1 = -i1;
            }
            if b & 2 == 2 {
                i2 = -i2;
            }
            let v = exact_root(i1.unsigned_abs(), n) + exact_root(i2.unsigned_abs(), n);
            (v, mask)
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), better);
    Ok(best.0)
}

/// Scan over edge assignments `a`, `c` and central assignment `b`.
fn bilocal_joint_scan(scheme: &EncodingScheme) -> f64 {
    let signs = scheme.sign_matrix();
    let m = scheme.m();
    let per_party = 1u64 << scheme.inputs();
    let sums: Vec<Vec<i64>> = (0..per_party).map(|mask| row_sums(&signs, mask)).collect();
    let (value, _) = (0..per_party)
        .into_par_iter()
        .map(|a| {
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            for c in 0..per_party {
                for b in 0..(1u64 << m) {
                    let v: f64 = (0..m)
                        .map(|i| {
                            let sign = if (b >> i) & 1 == 1 { -1 } else { 1 };
                            ((sums[a as usize][i] * sign * sums[c as usize][i]).unsigned_abs()
                                as f64)
                                .sqrt()
                        })
                        .sum();
                    let joint = (a << (per_party.trailing_zeros() + m as u32)) | (c << m) | b;
                    best = better(best, (v, joint));
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), better);
    value
}
