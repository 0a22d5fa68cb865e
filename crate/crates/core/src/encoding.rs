//! Bit-string encodings that fix the signs of the bilocal Bell expression.
//!
//! For `m` central inputs the edge parties have `2^(m-1)` inputs. Input `x`
//! is labelled by an `m`-bit string `y^x`, and the `i`-th correlator weights
//! `A_x` by `(-1)^(y^x_i)`. The strings form a transversal of the
//! complementary pairs of `{0,1}^m`: one member of each pair `{y, !y}`.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// Largest supported number of central inputs (`2^(m-1)` strings are stored).
pub const MAX_INPUTS: usize = 20;

/// Fixed-length bit string; bit `i = 0` is the leftmost character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    value: u64,
    len: usize,
}

impl BitString {
    /// `value` is read with the most significant of `len` bits as position 0.
    pub fn new(value: u64, len: usize) -> Self {
        assert!(len <= 64 && (len == 64 || value < (1u64 << len)));
        Self { value, len }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 64 {
            return Err(Error::InvalidParameter(format!(
                "bit string {s:?} has bad length"
            )));
        }
        let mut value = 0u64;
        for ch in s.chars() {
            let bit = match ch {
                '0' => 0,
                '1' => 1,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "bit string {s:?} has non-binary character"
                    )))
                }
            };
            value = (value << 1) | bit;
        }
        Ok(Self {
            value,
            len: s.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.value >> (self.len - 1 - i)) & 1 == 1
    }

    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }

    pub fn complement(&self) -> Self {
        let mask = if self.len == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        };
        Self::new(!self.value & mask, self.len)
    }

    /// Parity of the bitwise inner product `self · other` as a sign.
    pub fn dot_sign(&self, other: &Self) -> i8 {
        if (self.value & other.value).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        (self.value ^ other.value).count_ones()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Which member of each complementary pair is kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransversalPolicy {
    /// The member whose first bit is 0, in lexicographic order.
    #[default]
    LexFirstZero,
    /// The lower-weight member (first bit 0 on ties), ordered by weight then
    /// lexicographically.
    MinorityWeight,
}

impl TransversalPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LexFirstZero => "lex-first-zero",
            Self::MinorityWeight => "minority-weight",
        }
    }
}

impl std::str::FromStr for TransversalPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lex-first-zero" | "lex" => Ok(Self::LexFirstZero),
            "minority-weight" | "minority" => Ok(Self::MinorityWeight),
            _ => Err(Error::InvalidParameter(format!(
                "unknown transversal policy {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingScheme {
    m: usize,
    strings: Vec<BitString>,
    policy: Option<TransversalPolicy>,
}

fn check_inputs(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 central inputs, got {m}"
        )));
    }
    if m > MAX_INPUTS {
        return Err(Error::Capacity(format!(
            "{m} central inputs would need 2^{} strings (limit m <= {MAX_INPUTS})",
            m - 1
        )));
    }
    Ok(())
}

pub fn generate_transversal(m: usize, policy: TransversalPolicy) -> Result<EncodingScheme> {
    check_inputs(m)?;
    let half = 1u64 << (m - 1);
    let mut strings: Vec<BitString> = (0..half)
        .map(|v| {
            let s = BitString::new(v, m);
            match policy {
                TransversalPolicy::LexFirstZero => s,
                TransversalPolicy::MinorityWeight => {
                    let c = s.complement();
                    if c.weight() < s.weight() {
                        c
                    } else {
                        s
                    }
                }
            }
        })
        .collect();
    if policy == TransversalPolicy::MinorityWeight {
        strings.sort_by_key(|s| (s.weight(), s.value()));
    }
    Ok(EncodingScheme {
        m,
        strings,
        policy: Some(policy),
    })
}

impl EncodingScheme {
    /// Validates an explicit list of strings against the transversal
    /// invariants.
    pub fn from_strings(strings: Vec<BitString>) -> Result<Self> {
        let m = strings.first().map_or(0, BitString::len);
        check_inputs(m)?;
        if strings.len() != 1usize << (m - 1) {
            return Err(Error::InvalidParameter(format!(
                "expected {} strings of length {m}, got {}",
                1usize << (m - 1),
                strings.len()
            )));
        }
        if strings.iter().any(|s| s.len() != m) {
            return Err(Error::InvalidParameter(
                "strings have unequal lengths".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &strings {
            if !seen.insert(s.value()) || seen.contains(&s.complement().value()) {
                return Err(Error::InvalidParameter(format!(
                    "string {s} repeats or complements another string"
                )));
            }
        }
        let policy = [
            TransversalPolicy::LexFirstZero,
            TransversalPolicy::MinorityWeight,
        ]
        .into_iter()
        .find(|&p| {
            generate_transversal(m, p)
                .map(|g| g.strings == strings)
                .unwrap_or(false)
        });
        Ok(Self { m, strings, policy })
    }

    pub fn parse_strings<S: AsRef<str>>(strings: &[S]) -> Result<Self> {
        Self::from_strings(
            strings
                .iter()
                .map(|s| BitString::parse(s.as_ref()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of edge-party inputs, `2^(m-1)`.
    pub fn inputs(&self) -> usize {
        self.strings.len()
    }

    pub fn strings(&self) -> &[BitString] {
        &self.strings
    }

    /// `None` when built from strings matching neither policy.
    pub fn policy(&self) -> Option<TransversalPolicy> {
        self.policy
    }

    pub fn string_labels(&self) -> Vec<String> {
        self.strings.iter().map(ToString::to_string).collect()
    }

    /// `S[i][x] = (-1)^(y^x_i)`
    pub fn sign_matrix(&self) -> Vec<Vec<i8>> {
        (0..self.m)
            .map(|i| {
                self.strings
                    .iter()
                    .map(|s| if s.bit(i) { -1 } else { 1 })
                    .collect()
            })
            .collect()
    }

    pub fn pair_statistics(&self, j: usize, jp: usize) -> Result<PairStats> {
        check_index(j, self.inputs())?;
        check_index(jp, self.inputs())?;
        let (a, b) = (self.strings[j], self.strings[jp]);
        let q = a.weight() + b.weight();
        let d = (a.value() & b.value()).count_ones();
        Ok(PairStats { q, d, p: q - 2 * d })
    }

    /// `{A_j, A_j'} = 2 - 4p/m` at the optimum.
    pub fn predicted_anticommutator(&self, j: usize, jp: usize) -> Result<Ratio<i64>> {
        let p = self.pair_statistics(j, jp)?.p as i64;
        let m = self.m as i64;
        Ok(Ratio::new(2 * m - 4 * p, m))
    }
}

/// Counts for a pair of strings: total ones `q`, shared ones `d`, `p = q - 2d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairStats {
    pub q: u32,
    pub d: u32,
    pub p: u32,
}

/// Odd-weight strings of weight at least 3; each one names an operator
/// constraint `Σ_x (-1)^(s·y^x) A_x = 0` that holds at the optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSet {
    pub m: usize,
    pub elements: Vec<BitString>,
}

pub fn constraint_strings(m: usize) -> Result<ConstraintSet> {
    check_inputs(m)?;
    let elements = (0..(1u64 << m))
        .map(|v| BitString::new(v, m))
        .filter(|s| s.weight() >= 3 && s.weight() % 2 == 1)
        .collect();
    Ok(ConstraintSet { m, elements })
}
