//! JSON realization files.
//!
//! ```json
//! {
//!   "scenario": {"kind": "bilocal", "m": 3, "policy": "lex-first-zero"},
//!   "dims": [2, 2, 2, 2],
//!   "encoding_strings": ["000", "001", "010", "011"],
//!   "observables": [{"party": "A", "positions": [0], "matrices": [...]}, ...],
//!   "state": {"vector": [[re, im], ...]},
//!   "sources": [[0, 1], [2, 3]],
//!   "convention": "transpose-central"
//! }
//! ```
//!
//! Matrices are `{"rows", "cols", "data"}` with row-major `[re, im]` entries.
//! Floats are written in shortest round-trip form, so reading and writing
//! again reproduces the file byte for byte.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodingScheme, TransversalPolicy};
use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, DensityOperator, Observable, QuantumState, StateVector};
use crate::quantum::{Convention, Party, Realization};
use crate::scenario::{build_scenario, Scenario, ScenarioKind};

/// Tolerance for observables read from files.
const FILE_OBSERVABLE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<TransversalPolicy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixRecord {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<&MatrixRecord> for ComplexMatrix {
    type Error = Error;

    fn try_from(r: &MatrixRecord) -> Result<Self> {
        ComplexMatrix::new(
            r.rows,
            r.cols,
            r.data.iter().map(|[a, b]| Complex64::new(*a, *b)).collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyRecord {
    pub party: String,
    pub positions: Vec<usize>,
    pub matrices: Vec<MatrixRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateRecord {
    Vector(Vec<[f64; 2]>),
    Density(MatrixRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationFile {
    pub scenario: ScenarioDescriptor,
    pub dims: Vec<usize>,
    pub encoding_strings: Vec<String>,
    pub observables: Vec<PartyRecord>,
    pub state: StateRecord,
    #[serde(default)]
    pub sources: Vec<Vec<usize>>,
    pub convention: Convention,
}

impl From<&Realization> for RealizationFile {
    fn from(r: &Realization) -> Self {
        let scenario = r.scenario();
        let policy = if scenario.is_star() {
            None
        } else {
            scenario.scheme.policy()
        };
        let mut parties: Vec<&Party> = r.parties().collect();
        parties.sort_by_key(|p| p.positions.iter().min().copied());
        let observables = parties
            .into_iter()
            .map(|p| PartyRecord {
                party: p.name.clone(),
                positions: p.positions.clone(),
                matrices: p.observables.iter().map(|o| o.matrix().into()).collect(),
            })
            .collect();
        let state = match r.state() {
            QuantumState::Pure(v) => {
                StateRecord::Vector(v.amplitudes().iter().map(|z| [z.re, z.im]).collect())
            }
            QuantumState::Mixed(rho) => StateRecord::Density(rho.matrix().into()),
        };
        Self {
            scenario: ScenarioDescriptor {
                kind: scenario.kind,
                policy,
            },
            dims: r.dims().to_vec(),
            encoding_strings: scenario.scheme.string_labels(),
            observables,
            state,
            sources: r.sources().to_vec(),
            convention: Convention::TransposeCentral,
        }
    }
}

impl RealizationFile {
    pub fn to_realization(&self) -> Result<Realization> {
        let scenario = self.scenario()?;
        let find = |name: &str| -> Result<Party> {
            let rec = self
                .observables
                .iter()
                .find(|p| p.party == name)
                .ok_or_else(|| Error::Format(format!("no observables for party {name}")))?;
            let obs = rec
                .matrices
                .iter()
                .map(|m| Observable::with_tolerance(m.try_into()?, FILE_OBSERVABLE_TOL))
                .collect::<Result<Vec<_>>>()?;
            Ok(Party::new(name, rec.positions.clone(), obs))
        };
        let edges = scenario
            .edge_party_names()
            .iter()
            .map(|n| find(n))
            .collect::<Result<Vec<_>>>()?;
        let central = find(scenario.central_party_name())?;
        if self.observables.len() != edges.len() + 1 {
            return Err(Error::Format(format!(
                "{} parties listed",
                self.observables.len()
            )));
        }
        let state = match &self.state {
            StateRecord::Vector(v) => QuantumState::Pure(StateVector::new(
                v.iter().map(|[a, b]| Complex64::new(*a, *b)).collect(),
            )?),
            StateRecord::Density(m) => QuantumState::Mixed(DensityOperator::new(m.try_into()?)?),
        };
        Realization::new(
            scenario,
            self.dims.clone(),
            edges,
            central,
            state,
            self.sources.clone(),
        )
    }

    fn scenario(&self) -> Result<Scenario> {
        let scenario = match self.scenario.kind {
            ScenarioKind::Star { .. } => {
                build_scenario(self.scenario.kind, TransversalPolicy::default())?
            }
            ScenarioKind::Bilocal { m } => {
                let scheme = EncodingScheme::parse_strings(&self.encoding_strings)?;
                if scheme.m() != m {
                    return Err(Error::Format(format!(
                        "encoding strings have length {}, scenario m={m}",
                        scheme.m()
                    )));
                }
                if let Some(p) = self.scenario.policy {
                    if scheme.policy() != Some(p) {
                        return Err(Error::Format(format!(
                            "encoding strings do not follow the {} policy",
                            p.as_str()
                        )));
                    }
                }
                Scenario::bilocal_with_scheme(scheme)?
            }
        };
        if scenario.scheme.string_labels() != self.encoding_strings {
            return Err(Error::Format(
                "encoding strings do not match the scenario".into(),
            ));
        }
        Ok(scenario)
    }
}

pub fn realization_to_json(r: &Realization) -> String {
    let mut s = serde_json::to_string_pretty(&RealizationFile::from(r)).expect("serializable");
    s.push('\n');
    s
}

pub fn realization_from_json(text: &str) -> Result<Realization> {
    let file: RealizationFile =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.to_realization()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply_visibility, optimal_realization};

    #[test]
    fn round_trip_is_exact() {
        for s in [
            Scenario::bilocal(3).unwrap(),
            Scenario::star(3).unwrap(),
            Scenario::bilocal(4).unwrap(),
        ] {
            let r = optimal_realization(&s).unwrap();
            let text = realization_to_json(&r);
            let back = realization_from_json(&text).unwrap();
            assert_eq!(back, r);
            assert_eq!(realization_to_json(&back), text);
        }
    }

    #[test]
    fn mixed_state_round_trip() {
        let r = optimal_realization(&Scenario::bilocal(2).unwrap()).unwrap();
        let noisy = apply_visibility(&r, &[0.8, 0.9]).unwrap();
        let text = realization_to_json(&noisy);
        assert!(text.contains("\"density\""));
        assert_eq!(
            realization_to_json(&realization_from_json(&text).unwrap()),
            text
        );
    }

    #[test]
    fn descriptor_shape() {
        let r = optimal_realization(&Scenario::bilocal(3).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&realization_to_json(&r)).unwrap();
        assert_eq!(v["scenario"]["kind"], "bilocal");
        assert_eq!(v["scenario"]["m"], 3);
        assert_eq!(v["scenario"]["policy"], "lex-first-zero");
        assert_eq!(v["convention"], "transpose-central");
        assert_eq!(v["observables"][1]["party"], "B");
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(realization_from_json("{}"), Err(Error::Format(_))));
        let r = optimal_realization(&Scenario::bilocal(3).unwrap()).unwrap();
        let text = realization_to_json(&r).replace("\"011\"", "\"100\"");
        assert!(realization_from_json(&text).is_err());
        let text = realization_to_json(&r).replace("transpose-central", "other");
        assert!(matches!(
            realization_from_json(&text),
            Err(Error::Format(_))
        ));
    }
}
