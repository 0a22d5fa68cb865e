//! Checks of the relations forced by the optimal violation.
//!
//! Every check becomes a [`CheckEntry`] holding the measured value, the
//! closed-form expectation and the tolerance used. Pure and mixed states are
//! both accepted: norms `‖X|ψ>‖` generalize to `sqrt(<X^† X>)`.

use serde::{Deserialize, Serialize};

use crate::encoding::constraint_strings;
use crate::error::{Error, Result};
use crate::operator::state::{apply_product, inner};
use crate::operator::{
    anticommutator, commutator_norm, ComplexMatrix, LocalOp, QuantumState, Tolerances,
};
use crate::quantum::realization::{correlator_table, omega_table};
use crate::quantum::Realization;
use crate::scenario::{delta_from_correlators, ScenarioKind};

/// Below this an ω norm is treated as zero.
const DEGENERATE_OMEGA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckEntry {
    /// Passes when `|measured - expected| <= tolerance`.
    pub fn close(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
            pass: (measured - expected).abs() <= tolerance,
        }
    }

    /// Passes when `measured > expected + tolerance`.
    pub fn above(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
            pass: measured > expected + tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub scenario: String,
    pub entries: Vec<CheckEntry>,
    /// Operator-level anticommutator identities; informational, not part of
    /// `overall`.
    pub operator_identities: Vec<CheckEntry>,
    pub overall: bool,
    pub delta_value: f64,
    pub delta_target: f64,
    pub classical_bound: f64,
    pub correlators: Vec<f64>,
}

impl CertificationReport {
    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    /// Entries whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckEntry> {
        self.entries
            .iter()
            .filter(move |e| e.name.starts_with(prefix))
    }
}

/// `‖[B_i, B_j]‖_max` for every `i < j`, expected 0.
pub fn verify_central_commutation(realization: &Realization, tol: f64) -> Result<Vec<CheckEntry>> {
    let b = realization.central();
    let mut out = Vec::new();
    for i in 0..b.observables.len() {
        for j in (i + 1)..b.observables.len() {
            let c = commutator_norm(b.matrix(i), b.matrix(j))?;
            out.push(CheckEntry::close(
                format!("commutator.B{}.B{}", i + 1, j + 1),
                c,
                0.0,
                tol,
            ));
        }
    }
    Ok(out)
}

/// `‖B_1 B_2 - (-1)^n B_2 B_1‖_max` for the star network, the relation the
/// central observables must mirror from the edge effectives.
fn central_sign_rule(realization: &Realization, n: usize, tol: f64) -> Vec<CheckEntry> {
    let b = realization.central();
    let (b1, b2) = (b.matrix(0), b.matrix(1));
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let measured = (b1 * b2).max_abs_diff(&(b2 * b1).scale_real(sign));
    let name = if n.is_multiple_of(2) {
        "commutator.B1.B2"
    } else {
        "anticommutator.B1.B2"
    };
    vec![CheckEntry::close(name, measured, 0.0, tol)]
}

/// `<{A_j, A_j'}>` on edge party `k`.
pub fn edge_anticommutator_expectation(
    realization: &Realization,
    k: usize,
    j: usize,
    jp: usize,
) -> Result<f64> {
    crate::error::check_index(k, realization.edges().len())?;
    let party = &realization.edges()[k];
    crate::error::check_index(j, party.observables.len())?;
    crate::error::check_index(jp, party.observables.len())?;
    let ac = anticommutator(party.matrix(j), party.matrix(jp))?;
    Ok(realization
        .state()
        .expectation_local(&[(&ac, party.positions.as_slice())], realization.dims())?
        .re)
}

/// Expectation-level and operator-level anticommutator checks.
#[derive(Clone, Debug, PartialEq)]
pub struct AnticommutatorChecks {
    pub entries: Vec<CheckEntry>,
    pub operator_identities: Vec<CheckEntry>,
}

/// Compares `<{A_j, A_j'}>` with `2 - 4p/m` for every pair `j < j'` of
/// every edge party, using the realization's own encoding.
pub fn verify_edge_anticommutators(
    realization: &Realization,
    tol: f64,
) -> Result<AnticommutatorChecks> {
    let scheme = &realization.scenario().scheme;
    let mut entries = Vec::new();
    let mut operator_identities = Vec::new();
    for (k, party) in realization.edges().iter().enumerate() {
        let d = party.observables[0].dim();
        for j in 0..party.observables.len() {
            for jp in (j + 1)..party.observables.len() {
                let r = scheme.predicted_anticommutator(j, jp)?;
                let expected = *r.numer() as f64 / *r.denom() as f64;
                let name = format!("anticommutator.{}.{}.{}", party.name, j + 1, jp + 1);
                let measured = edge_anticommutator_expectation(realization, k, j, jp)?;
                entries.push(CheckEntry::close(name.clone(), measured, expected, tol));
                let ac = anticommutator(party.matrix(j), party.matrix(jp))?;
                let dev = ac.max_abs_diff(&ComplexMatrix::identity(d).scale_real(expected));
                operator_identities.push(CheckEntry::close(
                    format!("operator.{name}"),
                    dev,
                    0.0,
                    tol,
                ));
            }
        }
    }
    Ok(AnticommutatorChecks {
        entries,
        operator_identities,
    })
}

/// Residuals `sqrt(<X_l^† X_l>)` with `X_l = Σ_x (-1)^(s_l·y^x) A_x` per edge
/// party, then `δ_m = Σ_l (2^(m-1) - <X_l^† X_l>)`.
pub fn verify_linear_constraints(
    realization: &Realization,
    residual_tol: f64,
    value_tol: f64,
) -> Result<Vec<CheckEntry>> {
    let ScenarioKind::Bilocal { m } = realization.scenario().kind else {
        return Err(Error::NotApplicable(
            "linear constraints are defined for bilocal scenarios".into(),
        ));
    };
    let scheme = &realization.scenario().scheme;
    let constraints = constraint_strings(m)?;
    let half = scheme.inputs() as f64;
    let expected_delta = (half - m as f64) * half;
    let mut out = Vec::new();
    let mut deltas = Vec::new();
    for party in realization.edges() {
        let d = party.observables[0].dim();
        let mut delta = 0.0;
        for s in &constraints.elements {
            let mut x = ComplexMatrix::zeros(d, d);
            for (obs, y) in party.observables.iter().zip(scheme.strings()) {
                x = &x + &obs.matrix().scale_real(s.dot_sign(y) as f64);
            }
            let sq = realization
                .state()
                .norm_sq_local(&[(&x, party.positions.as_slice())], realization.dims())?;
            delta += half - sq;
            out.push(CheckEntry::close(
                format!("constraint.{}.{s}", party.name),
                sq.max(0.0).sqrt(),
                0.0,
                residual_tol,
            ));
        }
        deltas.push(CheckEntry::close(
            format!("delta_m.{}", party.name),
            delta,
            expected_delta,
            value_tol,
        ));
    }
    out.extend(deltas);
    Ok(out)
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `‖M_i|ψ> - λ_i|ψ>‖` where `M_i` is the ω-normalized Bell term and
/// `λ_i = sign<M_i>` (with sign(0) = +1).
pub fn verify_eigenvector_conditions(
    realization: &Realization,
    tol: f64,
) -> Result<Vec<CheckEntry>> {
    let omegas = omega_table(realization)?;
    let dims = realization.dims();
    let mut out = Vec::new();
    for (i, row) in omegas.iter().enumerate() {
        if let Some(k) = row.iter().position(|&w| w < DEGENERATE_OMEGA) {
            return Err(Error::DegenerateRealization(format!(
                "omega vanishes for correlator {} on party {}",
                i + 1,
                realization.edges()[k].name
            )));
        }
        let mut factors = realization.term_factors(i)?;
        for ((op, _), w) in factors.iter_mut().zip(row) {
            *op = op.scale_real(1.0 / w);
        }
        let ops: Vec<LocalOp<'_>> = factors.iter().map(|(m, p)| (m, p.as_slice())).collect();
        let residual = match realization.state() {
            QuantumState::Pure(psi) => {
                let v = psi.amplitudes();
                let mv = apply_product(&ops, dims, v)?;
                let lambda = sign(inner(v, &mv).re);
                mv.iter()
                    .zip(v)
                    .map(|(a, b)| (a - b * lambda).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            }
            state @ QuantumState::Mixed(_) => {
                let mean = state.expectation_local(&ops, dims)?.re;
                let lambda = sign(mean);
                let sq = state.norm_sq_local(&ops, dims)? - 2.0 * lambda * mean + 1.0;
                sq.max(0.0).sqrt()
            }
        };
        out.push(CheckEntry::close(
            format!("eigenvector.M{}", i + 1),
            residual,
            0.0,
            tol,
        ));
    }
    Ok(out)
}

/// Full report: Δ, ω norms, central commutation, edge anticommutators,
/// linear constraints with δ_m (bilocal only) and eigenvector residuals.
pub fn certify(realization: &Realization, tol: Tolerances) -> Result<CertificationReport> {
    let scenario = realization.scenario();
    let table = correlator_table(realization)?;
    let delta = delta_from_correlators(scenario, &table)?;
    let mut entries = vec![
        CheckEntry::above(
            "delta.violation",
            delta,
            scenario.classical_bound,
            tol.value,
        ),
        CheckEntry::close("delta.optimal", delta, scenario.quantum_optimum, tol.value),
    ];

    let omega_target = scenario.edge_inputs() as f64 / (scenario.central_inputs() as f64).sqrt();
    for (i, row) in omega_table(realization)?.iter().enumerate() {
        for (party, &w) in realization.edges().iter().zip(row) {
            entries.push(CheckEntry::close(
                format!("omega.{}.{}", i + 1, party.name),
                w,
                omega_target,
                tol.value,
            ));
        }
    }

    match scenario.kind {
        ScenarioKind::Star { n } => {
            entries.extend(central_sign_rule(realization, n, tol.algebraic))
        }
        ScenarioKind::Bilocal { .. } => {
            entries.extend(verify_central_commutation(realization, tol.algebraic)?)
        }
    }

    let anti = verify_edge_anticommutators(realization, tol.algebraic)?;
    entries.extend(anti.entries);

    if !scenario.is_star() {
        entries.extend(verify_linear_constraints(
            realization,
            tol.algebraic,
            tol.value,
        )?);
    }

    entries.extend(verify_eigenvector_conditions(realization, tol.algebraic)?);

    Ok(CertificationReport {
        scenario: scenario.kind.to_string(),
        overall: entries.iter().all(|e| e.pass),
        entries,
        operator_identities: anti.operator_identities,
        delta_value: delta,
        delta_target: scenario.quantum_optimum,
        classical_bound: scenario.classical_bound,
        correlators: table.values,
    })
}
