//! Network scenarios and evaluation of the Bell functional.
//!
//! Both scenarios share one shape: edge parties with a ±1 observable per
//! input, a central party with one observable per correlator, and
//!
//! ```text
//! value_i = < ⊗_k (Σ_x S[i][x] A^k_x) ⊗ B_i >
//! Δ       = Σ_i |value_i|^(1/K)          K = number of edge parties
//! ```
//!
//! The star network with `n` edge parties uses the two-string scheme
//! `{00, 01}`, whose sign rows are `(+,+)` and `(+,-)`. The bilocal network
//! has edge parties A and C and uses a `2^(m-1)`-string transversal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classical::eta_closed_form;
use crate::encoding::{generate_transversal, EncodingScheme, TransversalPolicy};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioKind {
    Star { n: usize },
    Bilocal { m: usize },
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Star { n } => write!(f, "star n={n}"),
            Self::Bilocal { m } => write!(f, "bilocal m={m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Sign-defining strings; `{00, 01}` for the star network.
    pub scheme: EncodingScheme,
    pub classical_bound: f64,
    pub quantum_optimum: f64,
}

/// Star networks are evaluated up to this many edge parties.
pub const MAX_STAR_PARTIES: usize = 16;

pub fn build_scenario(kind: ScenarioKind, policy: TransversalPolicy) -> Result<Scenario> {
    match kind {
        ScenarioKind::Star { n } => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!(
                    "star network needs n >= 2, got {n}"
                )));
            }
            if n > MAX_STAR_PARTIES {
                return Err(Error::Capacity(format!(
                    "star network limited to n <= {MAX_STAR_PARTIES}"
                )));
            }
            Ok(Scenario {
                kind,
                scheme: generate_transversal(2, TransversalPolicy::LexFirstZero)?,
                classical_bound: 2.0,
                quantum_optimum: 2.0 * std::f64::consts::SQRT_2,
            })
        }
        ScenarioKind::Bilocal { m } => {
            let scheme = generate_transversal(m, policy)?;
            Scenario::bilocal_with_scheme(scheme)
        }
    }
}

impl Scenario {
    pub fn star(n: usize) -> Result<Self> {
        build_scenario(ScenarioKind::Star { n }, TransversalPolicy::LexFirstZero)
    }

    pub fn bilocal(m: usize) -> Result<Self> {
        build_scenario(ScenarioKind::Bilocal { m }, TransversalPolicy::default())
    }

    /// Bilocal scenario with an explicit transversal.
    pub fn bilocal_with_scheme(scheme: EncodingScheme) -> Result<Self> {
        let m = scheme.m();
        Ok(Scenario {
            kind: ScenarioKind::Bilocal { m },
            classical_bound: eta_closed_form(m)? as f64,
            quantum_optimum: bilocal_quantum_optimum(m),
            scheme,
        })
    }

    pub fn is_star(&self) -> bool {
        matches!(self.kind, ScenarioKind::Star { .. })
    }

    /// Number of edge parties, which is also the root taken in `Δ`.
    pub fn edge_parties(&self) -> usize {
        match self.kind {
            ScenarioKind::Star { n } => n,
            ScenarioKind::Bilocal { .. } => 2,
        }
    }

    pub fn edge_inputs(&self) -> usize {
        self.scheme.inputs()
    }

    /// Number of correlators, equal to the number of central inputs.
    pub fn central_inputs(&self) -> usize {
        self.scheme.m()
    }

    pub fn edge_party_names(&self) -> Vec<String> {
        match self.kind {
            ScenarioKind::Star { n } => (1..=n).map(|k| format!("A{k}")).collect(),
            ScenarioKind::Bilocal { .. } => vec!["A".into(), "C".into()],
        }
    }

    pub fn central_party_name(&self) -> &'static str {
        "B"
    }

    /// `quantum_optimum / classical_bound`
    pub fn violation_ratio(&self) -> f64 {
        self.quantum_optimum / self.classical_bound
    }
}

pub fn bilocal_quantum_optimum(m: usize) -> f64 {
    2f64.powi(m as i32 - 1) * (m as f64).sqrt()
}

/// Correlator values, indexed by central input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
}

impl CorrelatorTable {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            std_errors: None,
        }
    }
}

/// Sign vector over edge inputs for each correlator.
pub fn correlator_sign_vectors(scenario: &Scenario) -> Vec<Vec<i8>> {
    scenario.scheme.sign_matrix()
}

pub fn delta_from_correlators(scenario: &Scenario, table: &CorrelatorTable) -> Result<f64> {
    let expected = scenario.central_inputs();
    if table.values.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} correlators for a scenario with {expected}",
            table.values.len()
        )));
    }
    Ok(delta_from_values(&table.values, scenario.edge_parties()))
}

pub(crate) fn delta_from_values(values: &[f64], root: usize) -> f64 {
    values.iter().map(|v| root_abs(*v, root)).sum()
}

/// `|v|^(1/n)`, using `sqrt` for `n = 2`.
pub(crate) fn root_abs(v: f64, n: usize) -> f64 {
    match n {
        1 => v.abs(),
        2 => v.abs().sqrt(),
        _ => v.abs().powf(1.0 / n as f64),
    }
}

/// Auxiliary inequalities used by the bound arguments. Each returns
/// `rhs - lhs`, which is nonnegative whenever the inequality holds.
pub mod lemmas {
    /// `Π_k (Σ_i z[k][i])^(1/n) - Σ_i (Π_k z[k][i])^(1/n)` with `n = z.len()`.
    pub fn product_root_gap(z: &[Vec<f64>]) -> f64 {
        let n = z.len() as f64;
        let len = z.first().map_or(0, Vec::len);
        let rhs: f64 = z
            .iter()
            .map(|row| row.iter().sum::<f64>().powf(1.0 / n))
            .product();
        let lhs: f64 = (0..len)
            .map(|i| z.iter().map(|row| row[i]).product::<f64>().powf(1.0 / n))
            .sum();
        rhs - lhs
    }

    /// `sqrt(Σ a · Σ b) - Σ sqrt(a_i b_i)`
    pub fn cauchy_schwarz_gap(a: &[f64], b: &[f64]) -> f64 {
        let rhs = (a.iter().sum::<f64>() * b.iter().sum::<f64>()).sqrt();
        let lhs: f64 = a.iter().zip(b).map(|(x, y)| (x * y).sqrt()).sum();
        rhs - lhs
    }

    /// `sqrt(m Σ w²) - Σ w`
    pub fn convex_sum_gap(w: &[f64]) -> f64 {
        let m = w.len() as f64;
        (m * w.iter().map(|x| x * x).sum::<f64>()).sqrt() - w.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    #[test]
    fn bilocal_m3_bounds() {
        let s = Scenario::bilocal(3).unwrap();
        assert_eq!(s.classical_bound, 6.0);
        assert!((s.quantum_optimum - 4.0 * SQRT3).abs() < 1e-12);
    }

    #[test]
    fn star_and_bilocal_m2_agree() {
        let star = Scenario::star(4).unwrap();
        let bl = Scenario::bilocal(2).unwrap();
        assert_eq!(star.classical_bound, 2.0);
        assert_eq!(star.classical_bound, bl.classical_bound);
        assert!((star.quantum_optimum - bl.quantum_optimum).abs() < 1e-15);
        assert_eq!(star.scheme, bl.scheme);
    }

    #[test]
    fn parameters_rejected() {
        assert!(matches!(Scenario::star(1), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            Scenario::bilocal(1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sign_vectors() {
        let star = Scenario::star(3).unwrap();
        assert_eq!(correlator_sign_vectors(&star)[1], [1, -1]);
        assert_eq!(correlator_sign_vectors(&star)[0], [1, 1]);
        let s = build_scenario(
            ScenarioKind::Bilocal { m: 3 },
            TransversalPolicy::MinorityWeight,
        )
        .unwrap();
        assert_eq!(correlator_sign_vectors(&s)[2], [1, -1, 1, 1]);
        assert_eq!(
            correlator_sign_vectors(&Scenario::bilocal(2).unwrap())[0],
            [1, 1]
        );
    }

    #[test]
    fn delta_examples() {
        let star = Scenario::star(2).unwrap();
        let d = delta_from_correlators(&star, &CorrelatorTable::new(vec![2.0, 2.0])).unwrap();
        assert!((d - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
        let bl = Scenario::bilocal(3).unwrap();
        let d = delta_from_correlators(&bl, &CorrelatorTable::new(vec![16.0 / 3.0; 3])).unwrap();
        assert!((d - 4.0 * SQRT3).abs() < 1e-12);
        assert_eq!(
            delta_from_correlators(&bl, &CorrelatorTable::new(vec![0.0; 3])).unwrap(),
            0.0
        );
        assert!(delta_from_correlators(&bl, &CorrelatorTable::new(vec![0.0; 2])).is_err());
    }

    #[test]
    fn optimum_beats_classical() {
        for m in 2..=8 {
            assert!(
                Scenario::bilocal(m).unwrap().violation_ratio() > 1.0,
                "m={m}"
            );
        }
    }

    #[test]
    fn star_n3_uses_cube_root() {
        let star = Scenario::star(3).unwrap();
        let v = 2f64.powf(1.5);
        let d = delta_from_correlators(&star, &CorrelatorTable::new(vec![v, -v])).unwrap();
        assert!((d - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
    }
}
