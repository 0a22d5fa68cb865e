use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::gamma_generators;
use crate::error::{check_index, Error, Result};
use crate::operator::subsystems::total_dim;
use crate::operator::{
    embed_operator, max_entangled_state, partial_trace, pauli, product_vector, tensor_all,
    ComplexMatrix, DensityOperator, LocalOp, Observable, QuantumState, StateVector,
};
use crate::scenario::{delta_from_correlators, CorrelatorTable, Scenario, ScenarioKind};

/// Largest Hilbert-space dimension handled by the dense routines.
pub const MAX_TOTAL_DIM: usize = 1 << 12;

/// Observables of one party, acting on the listed subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct Party {
    pub name: String,
    pub positions: Vec<usize>,
    pub observables: Vec<Observable>,
}

impl Party {
    pub fn new(
        name: impl Into<String>,
        positions: Vec<usize>,
        observables: Vec<Observable>,
    ) -> Self {
        Self {
            name: name.into(),
            positions,
            observables,
        }
    }

    pub fn matrix(&self, x: usize) -> &ComplexMatrix {
        self.observables[x].matrix()
    }
}

/// How the central observables relate to the source states. Recorded in
/// realization files; only `transpose-central` is constructed here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    TransposeCentral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    scenario: Scenario,
    dims: Vec<usize>,
    edges: Vec<Party>,
    central: Party,
    state: QuantumState,
    sources: Vec<Vec<usize>>,
}

fn check_positions(
    positions: &[usize],
    dims: &[usize],
    used: &mut [bool],
    owner: &str,
) -> Result<()> {
    for &p in positions {
        if p >= dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{owner}: position {p} outside {} subsystems",
                dims.len()
            )));
        }
        if used[p] {
            return Err(Error::DimensionMismatch(format!(
                "{owner}: subsystem {p} already assigned"
            )));
        }
        used[p] = true;
    }
    Ok(())
}

impl Realization {
    /// Checks observable counts and sizes, subsystem assignment and the state
    /// dimension. `sources` may be empty when the state is not a product of
    /// independent sources.
    pub fn new(
        scenario: Scenario,
        dims: Vec<usize>,
        edges: Vec<Party>,
        central: Party,
        state: QuantumState,
        sources: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "bad subsystem dims {dims:?}"
            )));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t <= MAX_TOTAL_DIM => {}
            _ => {
                return Err(Error::Capacity(format!(
                    "total dimension of {dims:?} exceeds {MAX_TOTAL_DIM}"
                )))
            }
        }
        if edges.len() != scenario.edge_parties() {
            return Err(Error::InvalidParameter(format!(
                "{} edge parties for {}",
                edges.len(),
                scenario.kind
            )));
        }
        let mut used = vec![false; dims.len()];
        for (party, count) in edges
            .iter()
            .map(|p| (p, scenario.edge_inputs()))
            .chain(std::iter::once((&central, scenario.central_inputs())))
        {
            if party.observables.len() != count {
                return Err(Error::InvalidParameter(format!(
                    "party {} has {} observables, expected {count}",
                    party.name,
                    party.observables.len()
                )));
            }
            if party.positions.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "party {} holds no subsystem",
                    party.name
                )));
            }
            check_positions(&party.positions, &dims, &mut used, &party.name)?;
            let local: usize = party.positions.iter().map(|&p| dims[p]).product();
            if let Some(o) = party.observables.iter().find(|o| o.dim() != local) {
                return Err(Error::DimensionMismatch(format!(
                    "party {} observable of dimension {} on a {local}-dimensional space",
                    party.name,
                    o.dim()
                )));
            }
        }
        if state.dim() != total_dim(&dims) {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} for subsystem dims {dims:?}",
                state.dim()
            )));
        }
        let mut in_source = vec![false; dims.len()];
        for src in &sources {
            check_positions(src, &dims, &mut in_source, "source")?;
        }
        Ok(Self {
            scenario,
            dims,
            edges,
            central,
            state,
            sources,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn edges(&self) -> &[Party] {
        &self.edges
    }

    pub fn central(&self) -> &Party {
        &self.central
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn sources(&self) -> &[Vec<usize>] {
        &self.sources
    }

    /// Edge parties followed by the central party.
    pub fn parties(&self) -> impl Iterator<Item = &Party> {
        self.edges.iter().chain(std::iter::once(&self.central))
    }

    pub fn with_state(&self, state: QuantumState) -> Result<Self> {
        Self::new(
            self.scenario.clone(),
            self.dims.clone(),
            self.edges.clone(),
            self.central.clone(),
            state,
            self.sources.clone(),
        )
    }

    /// `Σ_x S[i][x] A^k_x` on edge party `k`.
    pub fn effective_edge_operator(&self, k: usize, i: usize) -> Result<ComplexMatrix> {
        check_index(k, self.edges.len())?;
        check_index(i, self.scenario.central_inputs())?;
        let party = &self.edges[k];
        let signs = &self.scenario.scheme.sign_matrix()[i];
        let d = party.observables[0].dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (o, &s) in party.observables.iter().zip(signs) {
            acc = &acc + &o.matrix().scale_real(s as f64);
        }
        Ok(acc)
    }

    /// Local factors of the `i`-th term of the Bell operator.
    pub(crate) fn term_factors(&self, i: usize) -> Result<Vec<(ComplexMatrix, Vec<usize>)>> {
        check_index(i, self.scenario.central_inputs())?;
        let mut out = Vec::with_capacity(self.edges.len() + 1);
        for (k, party) in self.edges.iter().enumerate() {
            out.push((self.effective_edge_operator(k, i)?, party.positions.clone()));
        }
        out.push((
            self.central.matrix(i).clone(),
            self.central.positions.clone(),
        ));
        Ok(out)
    }

    /// Full-space Bell operator term `⊗_k (Σ_x S[i][x] A^k_x) ⊗ B_i`.
    pub fn bell_term(&self, i: usize) -> Result<ComplexMatrix> {
        let factors = self.term_factors(i)?;
        let mut acc = ComplexMatrix::identity(total_dim(&self.dims));
        for (op, pos) in &factors {
            acc = &acc * &embed_operator(op, pos, &self.dims)?;
        }
        Ok(acc)
    }

    pub fn expectation_of(&self, factors: &[(ComplexMatrix, Vec<usize>)]) -> Result<Complex64> {
        let ops: Vec<LocalOp<'_>> = factors.iter().map(|(m, p)| (m, p.as_slice())).collect();
        self.state.expectation_local(&ops, &self.dims)
    }

    /// `<A^1_{x_1} ... A^K_{x_K} B_i>`
    pub fn raw_correlator(&self, edge_inputs: &[usize], i: usize) -> Result<f64> {
        if edge_inputs.len() != self.edges.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} edge inputs for {} edge parties",
                edge_inputs.len(),
                self.edges.len()
            )));
        }
        check_index(i, self.scenario.central_inputs())?;
        let mut ops: Vec<LocalOp<'_>> = Vec::with_capacity(self.edges.len() + 1);
        for (party, &x) in self.edges.iter().zip(edge_inputs) {
            check_index(x, party.observables.len())?;
            ops.push((party.matrix(x), &party.positions));
        }
        ops.push((self.central.matrix(i), &self.central.positions));
        Ok(self.state.expectation_local(&ops, &self.dims)?.re)
    }

    /// `<X^† X>` for `X = Σ_x S[i][x] A^k_x` on edge party `k`; valid for
    /// mixed states too.
    pub(crate) fn omega_squared(&self, k: usize, i: usize) -> Result<f64> {
        let e = self.effective_edge_operator(k, i)?;
        self.state
            .norm_sq_local(&[(&e, self.edges[k].positions.as_slice())], &self.dims)
    }

    pub fn delta(&self) -> Result<f64> {
        delta_from_correlators(&self.scenario, &correlator_table(self)?)
    }
}

pub fn correlator_table(realization: &Realization) -> Result<CorrelatorTable> {
    let values = (0..realization.scenario.central_inputs())
        .map(|i| {
            Ok(realization
                .expectation_of(&realization.term_factors(i)?)?
                .re)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorTable::new(values))
}

/// `‖(Σ_x S[i][x] A^k_x ⊗ 1)|ψ>‖` indexed `[i][k]`.
pub fn omega_norms(realization: &Realization) -> Result<Vec<Vec<f64>>> {
    if !realization.state.is_pure() {
        return Err(Error::Unsupported(
            "omega norms are defined for pure states".into(),
        ));
    }
    omega_table(realization)
}

pub(crate) fn omega_table(realization: &Realization) -> Result<Vec<Vec<f64>>> {
    (0..realization.scenario.central_inputs())
        .map(|i| {
            (0..realization.edges.len())
                .map(|k| Ok(realization.omega_squared(k, i)?.max(0.0).sqrt()))
                .collect()
        })
        .collect()
}

fn observables(ms: Vec<ComplexMatrix>) -> Result<Vec<Observable>> {
    ms.into_iter().map(Observable::new).collect()
}

/// Edge observables `(1/√m) Σ_r S[r][x] Γ_r`.
fn edge_observables(scenario: &Scenario, gammas: &[ComplexMatrix]) -> Result<Vec<Observable>> {
    let signs = scenario.scheme.sign_matrix();
    let scale = 1.0 / (gammas.len() as f64).sqrt();
    let d = gammas[0].dim();
    let ms = (0..scenario.edge_inputs())
        .map(|x| {
            let mut acc = ComplexMatrix::zeros(d, d);
            for (r, g) in gammas.iter().enumerate() {
                acc = &acc + &g.scale_real(signs[r][x] as f64);
            }
            acc.scale_real(scale)
        })
        .collect();
    observables(ms)
}

/// The optimal realization at minimal dimension with maximally entangled
/// sources.
pub fn optimal_realization(scenario: &Scenario) -> Result<Realization> {
    match scenario.kind {
        ScenarioKind::Star { n } => {
            if 4usize
                .checked_pow(n as u32)
                .is_none_or(|d| d > MAX_TOTAL_DIM)
            {
                return Err(Error::Capacity(format!(
                    "star network with n={n} exceeds {MAX_TOTAL_DIM} dimensions"
                )));
            }
            let gammas = [pauli::z(), pauli::x()];
            let edge_obs = edge_observables(scenario, &gammas)?;
            let dims = vec![2; 2 * n];
            let edges = (0..n)
                .map(|k| Party::new(format!("A{}", k + 1), vec![k], edge_obs.clone()))
                .collect();
            let (z, x) = (pauli::z(), pauli::x());
            let central_obs = observables(vec![
                tensor_all(std::iter::repeat_n(&z, n)),
                tensor_all(std::iter::repeat_n(&x, n)),
            ])?;
            let central = Party::new("B", (n..2 * n).collect(), central_obs);
            let phi = max_entangled_state(2)?;
            let sources: Vec<Vec<usize>> = (0..n).map(|k| vec![k, n + k]).collect();
            let parts: Vec<(&[Complex64], &[usize])> = sources
                .iter()
                .map(|s| (phi.amplitudes(), s.as_slice()))
                .collect();
            let psi = StateVector::new(product_vector(&parts, &dims)?)?;
            Realization::new(
                scenario.clone(),
                dims,
                edges,
                central,
                QuantumState::Pure(psi),
                sources,
            )
        }
        ScenarioKind::Bilocal { m } => {
            let gs = gamma_generators(m)?;
            let d = gs.dim();
            if d.pow(4) > MAX_TOTAL_DIM {
                return Err(Error::Capacity(format!(
                    "bilocal m={m} exceeds {MAX_TOTAL_DIM} dimensions"
                )));
            }
            let edge_obs = edge_observables(scenario, &gs.matrices)?;
            let central_obs = observables(
                gs.matrices
                    .iter()
                    .map(|g| {
                        let t = g.transpose();
                        crate::operator::tensor_product(&t, &t)
                    })
                    .collect(),
            )?;
            let dims = vec![d; 4];
            let edges = vec![
                Party::new("A", vec![0], edge_obs.clone()),
                Party::new("C", vec![3], edge_obs),
            ];
            let central = Party::new("B", vec![1, 2], central_obs);
            let phi = max_entangled_state(d)?;
            let sources = vec![vec![0, 1], vec![2, 3]];
            let parts: Vec<(&[Complex64], &[usize])> = sources
                .iter()
                .map(|s| (phi.amplitudes(), s.as_slice()))
                .collect();
            let psi = StateVector::new(product_vector(&parts, &dims)?)?;
            Realization::new(
                scenario.clone(),
                dims,
                edges,
                central,
                QuantumState::Pure(psi),
                sources,
            )
        }
    }
}

/// Mixes each source with white noise: `ρ_k -> v_k ρ_k + (1 - v_k) 1/d_k`.
/// The state must be a pure product over the recorded sources.
pub fn apply_visibility(realization: &Realization, visibilities: &[f64]) -> Result<Realization> {
    let sources = realization.sources();
    if sources.is_empty() {
        return Err(Error::Unsupported(
            "realization does not record its sources".into(),
        ));
    }
    if visibilities.len() != sources.len() {
        return Err(Error::InvalidParameter(format!(
            "{} visibilities for {} sources",
            visibilities.len(),
            sources.len()
        )));
    }
    if let Some(v) = visibilities.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!(
            "visibility {v} outside [0, 1]"
        )));
    }
    let Some(psi) = realization.state().as_pure() else {
        return Err(Error::Unsupported(
            "visibility applies to pure-state realizations".into(),
        ));
    };
    let dims = realization.dims();
    let covered: usize = sources.iter().map(Vec::len).sum();
    if covered != dims.len() {
        return Err(Error::Unsupported(
            "sources do not cover every subsystem".into(),
        ));
    }
    let full = psi.density();
    let mut rho = ComplexMatrix::identity(total_dim(dims));
    for (src, &v) in sources.iter().zip(visibilities) {
        let local = partial_trace(full.matrix(), src, dims)?;
        let purity = (&local * &local).trace().re;
        if (purity - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidOperand(format!(
                "state is not a product over sources (purity {purity} on {src:?})"
            )));
        }
        let d = local.dim();
        let noisy =
            &local.scale_real(v) + &ComplexMatrix::identity(d).scale_real((1.0 - v) / d as f64);
        rho = &rho * &embed_operator(&noisy, src, dims)?;
    }
    realization.with_state(QuantumState::Mixed(DensityOperator::from_valid(rho)))
}
