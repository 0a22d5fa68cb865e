//! Finite-shot emulation of the network experiment.
//!
//! Input tuples list the edge inputs followed by the central input, in
//! lexicographic order. Outcome tuples are ordered the same way; outcome
//! index bit `b` (most significant first) set means party `b` reported -1.
//! Each party measures the ±1 eigenspace projectors of its observable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::operator::{hermitian_eigen, ComplexMatrix, LocalOp};
use crate::quantum::Realization;
use crate::scenario::{root_abs, CorrelatorTable};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputTuple {
    pub edge: Vec<usize>,
    pub central: usize,
}

impl InputTuple {
    pub fn new(edge: Vec<usize>, central: usize) -> Self {
        Self { edge, central }
    }
}

/// All input tuples in lexicographic order.
pub fn input_tuples(realization: &Realization) -> Vec<InputTuple> {
    let edge_inputs = realization.scenario().edge_inputs();
    let k = realization.edges().len();
    let central = realization.scenario().central_inputs();
    let mut out = Vec::new();
    let mut edge = vec![0; k];
    loop {
        for i in 0..central {
            out.push(InputTuple::new(edge.clone(), i));
        }
        // odometer increment, last party fastest
        let mut p = k;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            edge[p] += 1;
            if edge[p] < edge_inputs {
                break;
            }
            edge[p] = 0;
        }
    }
}

/// Outcome signs for outcome index `idx` over `parties` parties.
pub fn outcome_signs(idx: usize, parties: usize) -> Vec<i8> {
    (0..parties)
        .map(|b| {
            if (idx >> (parties - 1 - b)) & 1 == 1 {
                -1
            } else {
                1
            }
        })
        .collect()
}

/// Product of the outcomes for outcome index `idx`.
fn outcome_parity(idx: usize) -> f64 {
    if idx.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `(P_+, P_-)` from the sign eigenspaces, with eigenvalue 0 counted as +1.
fn sign_projectors(o: &ComplexMatrix) -> Result<[ComplexMatrix; 2]> {
    let eig = hermitian_eigen(o)?;
    let plus = eig.map_spectrum(|l| if l >= 0.0 { 1.0 } else { 0.0 });
    let minus = eig.map_spectrum(|l| if l >= 0.0 { 0.0 } else { 1.0 });
    Ok([plus, minus])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub inputs: InputTuple,
    /// Indexed by outcome index.
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    /// `Σ_o (Π o) P(o)`
    pub fn correlator(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(idx, p)| outcome_parity(idx) * p)
            .sum()
    }
}

/// Projectors for every observable, indexed `[party][input]`, edge parties
/// first.
fn all_projectors(realization: &Realization) -> Result<Vec<Vec<[ComplexMatrix; 2]>>> {
    realization
        .parties()
        .map(|p| {
            p.observables
                .iter()
                .map(|o| sign_projectors(o.matrix()))
                .collect()
        })
        .collect()
}

fn distribution_with(
    realization: &Realization,
    projectors: &[Vec<[ComplexMatrix; 2]>],
    inputs: &InputTuple,
) -> Result<OutcomeDistribution> {
    let parties: Vec<_> = realization.parties().collect();
    if inputs.edge.len() + 1 != parties.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} edge inputs for {} edge parties",
            inputs.edge.len(),
            parties.len() - 1
        )));
    }
    let chosen: Vec<usize> = inputs
        .edge
        .iter()
        .copied()
        .chain(std::iter::once(inputs.central))
        .collect();
    for (party, &x) in parties.iter().zip(&chosen) {
        check_index(x, party.observables.len())?;
    }
    let n = parties.len();
    let probabilities = (0..1usize << n)
        .map(|idx| {
            let ops: Vec<LocalOp<'_>> = (0..n)
                .map(|b| {
                    let sign_bit = (idx >> (n - 1 - b)) & 1;
                    (
                        &projectors[b][chosen[b]][sign_bit],
                        parties[b].positions.as_slice(),
                    )
                })
                .collect();
            Ok(realization
                .state()
                .expectation_local(&ops, realization.dims())?
                .re)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeDistribution {
        inputs: inputs.clone(),
        probabilities,
    })
}

/// Born-rule probabilities of all outcome tuples for one input tuple.
pub fn outcome_distribution(
    realization: &Realization,
    inputs: &InputTuple,
) -> Result<OutcomeDistribution> {
    distribution_with(realization, &all_projectors(realization)?, inputs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleCounts {
    pub inputs: InputTuple,
    pub shots: u64,
    /// Indexed by outcome index.
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub shots: u64,
    pub seed: u64,
    pub parties: usize,
    pub tuples: Vec<TupleCounts>,
}

impl OutcomeCounts {
    /// Tab-separated rows `edge inputs, central input, outcomes, count`,
    /// inputs 1-based; zero counts are omitted.
    pub fn to_table(&self) -> String {
        let mut s = String::from("inputs\toutcomes\tcount\n");
        for t in &self.tuples {
            let inputs: Vec<String> = t
                .inputs
                .edge
                .iter()
                .chain(std::iter::once(&t.inputs.central))
                .map(|x| (x + 1).to_string())
                .collect();
            for (idx, &c) in t.counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let outs: Vec<String> = outcome_signs(idx, self.parties)
                    .iter()
                    .map(|&o| {
                        if o > 0 {
                            "+1".to_string()
                        } else {
                            "-1".to_string()
                        }
                    })
                    .collect();
                s.push_str(&format!("{}\t{}\t{c}\n", inputs.join(","), outs.join(",")));
            }
        }
        s
    }
}

/// Inverse-CDF sampling of `shots` outcomes from `probs` with a generator
/// keyed by `(seed, stream)`.
fn draw_counts(probs: &[f64], shots: u64, seed: u64, stream: u64) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    if shots == 0 {
        return counts;
    }
    let clipped: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &clipped {
        acc += p / total;
        cdf.push(acc);
    }
    let last = clipped.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    for _ in 0..shots {
        let u: f64 = rng.random();
        let idx = cdf.iter().position(|&c| u < c).unwrap_or(last).min(last);
        counts[idx] += 1;
    }
    counts
}

/// Splits `shots` equally over all input tuples (remainder to the first
/// tuples) and samples each tuple independently.
pub fn sample_counts(realization: &Realization, shots: u64, seed: u64) -> Result<OutcomeCounts> {
    if shots == 0 {
        return Err(Error::InvalidParameter("need at least one shot".into()));
    }
    let tuples = input_tuples(realization);
    let projectors = all_projectors(realization)?;
    let n = tuples.len() as u64;
    let (base, rem) = (shots / n, shots % n);
    let counted = tuples
        .par_iter()
        .enumerate()
        .map(|(t, inputs)| {
            let dist = distribution_with(realization, &projectors, inputs)?;
            let s = base + u64::from((t as u64) < rem);
            Ok(TupleCounts {
                inputs: inputs.clone(),
                shots: s,
                counts: draw_counts(&dist.probabilities, s, seed, t as u64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeCounts {
        shots,
        seed,
        parties: realization.edges().len() + 1,
        tuples: counted,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawEstimate {
    pub inputs: InputTuple,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub counts: OutcomeCounts,
    pub raw: Vec<RawEstimate>,
    pub table: CorrelatorTable,
    pub delta: f64,
    pub delta_std_error: f64,
}

/// Empirical correlator of one tuple with `sqrt((1 - E²)/N)`; a tuple
/// without shots carries no information and reports `(0, 1)`.
fn raw_estimate(t: &TupleCounts) -> RawEstimate {
    if t.shots == 0 {
        return RawEstimate {
            inputs: t.inputs.clone(),
            value: 0.0,
            std_error: 1.0,
        };
    }
    let n = t.shots as f64;
    let sum: f64 = t
        .counts
        .iter()
        .enumerate()
        .map(|(idx, &c)| outcome_parity(idx) * c as f64)
        .sum();
    let value = sum / n;
    RawEstimate {
        inputs: t.inputs.clone(),
        value,
        std_error: ((1.0 - value * value).max(0.0) / n).sqrt(),
    }
}

/// Plugs empirical correlators into the signed sums and propagates the
/// standard errors linearly.
pub fn estimate(realization: &Realization, counts: OutcomeCounts) -> SampleEstimate {
    let scenario = realization.scenario();
    let signs = scenario.scheme.sign_matrix();
    let raw: Vec<RawEstimate> = counts.tuples.iter().map(raw_estimate).collect();
    let m = scenario.central_inputs();
    let mut values = vec![0.0; m];
    let mut variances = vec![0.0; m];
    for r in &raw {
        let i = r.inputs.central;
        let s: f64 = r.inputs.edge.iter().map(|&x| signs[i][x] as f64).product();
        values[i] += s * r.value;
        variances[i] += r.std_error * r.std_error;
    }
    let root = scenario.edge_parties();
    let k = root as f64;
    let delta = values.iter().map(|&v| root_abs(v, root)).sum();
    let delta_var: f64 = values
        .iter()
        .zip(&variances)
        .map(|(&v, &var)| {
            let d = v.abs().max(1e-12).powf(1.0 / k - 1.0) / k;
            d * d * var
        })
        .sum();
    SampleEstimate {
        counts,
        raw,
        table: CorrelatorTable {
            values,
            std_errors: Some(variances.iter().map(|v| v.sqrt()).collect()),
        },
        delta,
        delta_std_error: delta_var.sqrt(),
    }
}

pub fn sample_and_estimate(
    realization: &Realization,
    shots: u64,
    seed: u64,
) -> Result<SampleEstimate> {
    let counts = sample_counts(realization, shots, seed)?;
    Ok(estimate(realization, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DensityOperator, QuantumState};
    use crate::quantum::{correlator_table, optimal_realization};
    use crate::scenario::Scenario;

    #[test]
    fn tuple_enumeration() {
        let r = optimal_realization(&Scenario::bilocal(3).unwrap()).unwrap();
        let t = input_tuples(&r);
        assert_eq!(t.len(), 48);
        assert_eq!(t[0], InputTuple::new(vec![0, 0], 0));
        assert_eq!(t[1], InputTuple::new(vec![0, 0], 1));
        assert_eq!(t[3], InputTuple::new(vec![0, 1], 0));
        assert_eq!(t[47], InputTuple::new(vec![3, 3], 2));
    }

    #[test]
    fn distributions_are_normalized() {
        let r = optimal_realization(&Scenario::bilocal(3).unwrap()).unwrap();
        for t in input_tuples(&r) {
            let d = outcome_distribution(&r, &t).unwrap();
            assert!(d.probabilities.iter().all(|&p| p > -1e-12));
            assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let exact = r.raw_correlator(&t.edge, t.central).unwrap();
            assert!((d.correlator() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn star_correlator_matches_operator_value() {
        let r = optimal_realization(&Scenario::star(2).unwrap()).unwrap();
        let d = outcome_distribution(&r, &InputTuple::new(vec![0, 0], 0)).unwrap();
        assert!((d.correlator() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mixed_state_has_uniform_marginals() {
        let r = optimal_realization(&Scenario::bilocal(2).unwrap()).unwrap();
        let mixed = r
            .with_state(QuantumState::Mixed(DensityOperator::maximally_mixed(16)))
            .unwrap();
        let d = outcome_distribution(&mixed, &InputTuple::new(vec![1, 0], 1)).unwrap();
        for party in 0..3 {
            let mean: f64 = d
                .probabilities
                .iter()
                .enumerate()
                .map(|(idx, p)| outcome_signs(idx, 3)[party] as f64 * p)
                .sum();
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_counts_have_zero_error() {
        let counts = vec![0, 0, 7, 0];
        let t = TupleCounts {
            inputs: InputTuple::new(vec![0], 0),
            shots: 7,
            counts,
        };
        let e = raw_estimate(&t);
        assert_eq!((e.value, e.std_error), (-1.0, 0.0));
        assert_eq!(draw_counts(&[0.0, 1.0, 0.0], 5, 1, 0), vec![0, 5, 0]);
    }

    #[test]
    fn seeded_runs_repeat() {
        let r = optimal_realization(&Scenario::bilocal(2).unwrap()).unwrap();
        let a = sample_counts(&r, 1001, 9).unwrap();
        let b = sample_counts(&r, 1001, 9).unwrap();
        assert_eq!(a, b);
        let per: Vec<u64> = a.tuples.iter().map(|t| t.shots).collect();
        assert_eq!(per.iter().sum::<u64>(), 1001);
        assert_eq!(per[0], 126);
        assert_eq!(per[7], 125);
        assert!(a
            .tuples
            .iter()
            .all(|t| t.counts.iter().sum::<u64>() == t.shots));
        assert!(matches!(
            sample_counts(&r, 0, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn large_sample_is_close_to_exact() {
        let r = optimal_realization(&Scenario::bilocal(2).unwrap()).unwrap();
        let est = sample_and_estimate(&r, 1_000_000, 5).unwrap();
        for raw in &est.raw {
            let exact = r
                .raw_correlator(&raw.inputs.edge, raw.inputs.central)
                .unwrap();
            assert!((raw.value - exact).abs() <= 5.0 * raw.std_error.max(1e-12));
            assert!(raw.value.abs() <= 1.0);
        }
        let exact = correlator_table(&r).unwrap();
        for (v, (e, s)) in est.table.values.iter().zip(
            exact
                .values
                .iter()
                .zip(est.table.std_errors.as_ref().unwrap()),
        ) {
            assert!((v - e).abs() <= 5.0 * s);
        }
    }
}
