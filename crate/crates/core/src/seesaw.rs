//! See-saw maximization of the Bell functional at fixed local dimensions.
//!
//! The objective `Σ_i |J_i|^(1/K)` is linearized around the current point
//! with weights `w_i = s_i · max(|J_i|, ε)^(1/K - 1) / K`; for `K = 2` this
//! is `s_i / (2 sqrt|J_i|)`. Each block (the joint state, the observables of
//! one party) is then set to the exact maximizer of the linearized
//! functional. A block update is kept only if it does not lower the true
//! objective, which makes every trace nondecreasing.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::state::{apply_product, inner};
use crate::operator::subsystems::total_dim;
use crate::operator::{
    embed_operator, hermitian_eigen, reduced_outer, ComplexMatrix, LocalOp, Observable,
    QuantumState, StateVector,
};
use crate::quantum::{Party, Realization, MAX_TOTAL_DIM};
use crate::scenario::{root_abs, Scenario, ScenarioKind};

/// Slack allowed when accepting a block update.
const ACCEPT_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    /// Local dimensions in the layout described on [`seesaw_optimize`].
    pub dims: Vec<usize>,
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Stop once a sweep improves the objective by less than this.
    pub tol: f64,
    pub seed: u64,
    pub weight_floor: f64,
}

impl SeesawConfig {
    pub fn new(dims: Vec<usize>) -> Self {
        Self {
            dims,
            restarts: 20,
            max_sweeps: 1000,
            tol: 1e-12,
            seed: 0,
            weight_floor: 1e-12,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("need at least one restart".into()));
        }
        if self.tol.is_nan()
            || self.tol <= 0.0
            || self.weight_floor.is_nan()
            || self.weight_floor <= 0.0
        {
            return Err(Error::InvalidParameter(
                "tolerance and weight floor must be positive".into(),
            ));
        }
        if self.dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "zero dimension in {:?}",
                self.dims
            )));
        }
        let total = self.dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if total.is_none_or(|t| t > MAX_TOTAL_DIM) {
            return Err(Error::Capacity(format!(
                "total dimension of {:?} exceeds {MAX_TOTAL_DIM}",
                self.dims
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub seed: u64,
    /// Objective before the first sweep and after each sweep.
    pub objective: Vec<f64>,
    pub converged: bool,
}

impl RestartTrace {
    pub fn final_value(&self) -> f64 {
        *self
            .objective
            .last()
            .expect("trace starts with the initial value")
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub best_value: f64,
    pub best_restart: usize,
    pub realization: Realization,
    pub traces: Vec<RestartTrace>,
}

/// `V sign(Λ) V^†` with sign(0) = +1.
pub fn sign_operator(h: &ComplexMatrix) -> Result<Observable> {
    let eig = hermitian_eigen(h)?;
    let m = eig.map_spectrum(|l| if l >= 0.0 { 1.0 } else { -1.0 });
    Observable::with_tolerance(m.hermitian_part(), 1e-10)
}

struct Layout {
    edges: Vec<Vec<usize>>,
    central: Vec<usize>,
}

fn layout(scenario: &Scenario, dims: &[usize]) -> Result<Layout> {
    let bad = || {
        Error::InvalidParameter(format!(
            "dims {dims:?} do not fit {}; see the accepted layouts",
            scenario.kind
        ))
    };
    match scenario.kind {
        ScenarioKind::Bilocal { .. } => match dims.len() {
            3 => Ok(Layout {
                edges: vec![vec![0], vec![2]],
                central: vec![1],
            }),
            4 => Ok(Layout {
                edges: vec![vec![0], vec![3]],
                central: vec![1, 2],
            }),
            _ => Err(bad()),
        },
        ScenarioKind::Star { n } => {
            let edges = (0..n).map(|k| vec![k]).collect();
            if dims.len() == n + 1 {
                Ok(Layout {
                    edges,
                    central: vec![n],
                })
            } else if dims.len() == 2 * n {
                Ok(Layout {
                    edges,
                    central: (n..2 * n).collect(),
                })
            } else {
                Err(bad())
            }
        }
    }
}

struct Problem<'a> {
    dims: &'a [usize],
    layout: Layout,
    signs: Vec<Vec<i8>>,
    root: usize,
    floor: f64,
}

struct Point {
    edges: Vec<Vec<ComplexMatrix>>,
    central: Vec<ComplexMatrix>,
    psi: Vec<Complex64>,
}

impl Problem<'_> {
    fn effective(&self, point: &Point, k: usize, i: usize) -> ComplexMatrix {
        let d = point.edges[k][0].dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (a, &s) in point.edges[k].iter().zip(&self.signs[i]) {
            acc = &acc + &a.scale_real(s as f64);
        }
        acc
    }

    /// Term `i` factors, optionally leaving out edge party `skip_edge` or the
    /// central operator.
    fn factors(
        &self,
        point: &Point,
        i: usize,
        skip_edge: Option<usize>,
        skip_central: bool,
    ) -> Vec<(ComplexMatrix, Vec<usize>)> {
        let mut out: Vec<(ComplexMatrix, Vec<usize>)> = (0..self.layout.edges.len())
            .filter(|&k| Some(k) != skip_edge)
            .map(|k| (self.effective(point, k, i), self.layout.edges[k].clone()))
            .collect();
        if !skip_central {
            out.push((point.central[i].clone(), self.layout.central.clone()));
        }
        out
    }

    fn apply(
        &self,
        factors: &[(ComplexMatrix, Vec<usize>)],
        v: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let ops: Vec<LocalOp<'_>> = factors.iter().map(|(m, p)| (m, p.as_slice())).collect();
        apply_product(&ops, self.dims, v)
    }

    fn correlators(&self, point: &Point) -> Result<Vec<f64>> {
        (0..self.signs.len())
            .map(|i| {
                let phi = self.apply(&self.factors(point, i, None, false), &point.psi)?;
                Ok(inner(&point.psi, &phi).re)
            })
            .collect()
    }

    fn objective(&self, point: &Point) -> Result<f64> {
        Ok(self
            .correlators(point)?
            .iter()
            .map(|&j| root_abs(j, self.root))
            .sum())
    }

    fn weights(&self, point: &Point) -> Result<Vec<f64>> {
        let k = self.root as f64;
        Ok(self
            .correlators(point)?
            .iter()
            .map(|&j| {
                let s = if j >= 0.0 { 1.0 } else { -1.0 };
                s * j.abs().max(self.floor).powf(1.0 / k - 1.0) / k
            })
            .collect())
    }

    fn update_state(&self, point: &Point, w: &[f64]) -> Result<Vec<Complex64>> {
        let n = total_dim(self.dims);
        let mut bell = ComplexMatrix::zeros(n, n);
        for (i, &wi) in w.iter().enumerate() {
            let mut term = ComplexMatrix::identity(n).scale_real(wi);
            for (op, pos) in self.factors(point, i, None, false) {
                term = &term * &embed_operator(&op, &pos, self.dims)?;
            }
            bell = &bell + &term;
        }
        Ok(hermitian_eigen(&bell.hermitian_part())?.vector(0))
    }

    fn update_edge(&self, point: &Point, w: &[f64], k: usize) -> Result<Vec<ComplexMatrix>> {
        let rest: Vec<Vec<Complex64>> = (0..self.signs.len())
            .map(|i| self.apply(&self.factors(point, i, Some(k), false), &point.psi))
            .collect::<Result<_>>()?;
        (0..point.edges[k].len())
            .map(|x| {
                let mut u = vec![Complex64::new(0.0, 0.0); point.psi.len()];
                for (i, r) in rest.iter().enumerate() {
                    let c = w[i] * self.signs[i][x] as f64;
                    u.iter_mut().zip(r).for_each(|(a, b)| *a += b * c);
                }
                let e = reduced_outer(&u, &point.psi, &self.layout.edges[k], self.dims)?;
                Ok(sign_operator(&e.hermitian_part())?.into_matrix())
            })
            .collect()
    }

    fn update_central(&self, point: &Point, w: &[f64]) -> Result<Vec<ComplexMatrix>> {
        (0..self.signs.len())
            .map(|i| {
                let mut u = self.apply(&self.factors(point, i, None, true), &point.psi)?;
                u.iter_mut().for_each(|z| *z *= w[i]);
                let e = reduced_outer(&u, &point.psi, &self.layout.central, self.dims)?;
                Ok(sign_operator(&e.hermitian_part())?.into_matrix())
            })
            .collect()
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Result<Point> {
        let local = |pos: &[usize]| pos.iter().map(|&p| self.dims[p]).product::<usize>();
        let mut random_observable = |d: usize| -> Result<ComplexMatrix> {
            let mut h = ComplexMatrix::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    h[(r, c)] =
                        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
                }
            }
            Ok(sign_operator(&h.hermitian_part())?.into_matrix())
        };
        let inputs = self.signs[0].len();
        let edges = self
            .layout
            .edges
            .iter()
            .map(|pos| {
                (0..inputs)
                    .map(|_| random_observable(local(pos)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let central = (0..self.signs.len())
            .map(|_| random_observable(local(&self.layout.central)))
            .collect::<Result<Vec<_>>>()?;
        let psi: Vec<Complex64> = (0..total_dim(self.dims))
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let psi = StateVector::normalized(psi)?.amplitudes().to_vec();
        Ok(Point {
            edges,
            central,
            psi,
        })
    }

    fn run(
        &self,
        restart: usize,
        seed: u64,
        config: &SeesawConfig,
    ) -> Result<(RestartTrace, Point)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = self.random_point(&mut rng)?;
        let mut value = self.objective(&point)?;
        let mut objective = vec![value];
        let mut converged = false;
        let blocks = self.layout.edges.len() + 2;
        for _ in 0..config.max_sweeps {
            let start = value;
            for block in 0..blocks {
                let w = self.weights(&point)?;
                let candidate = match block {
                    0 => Point {
                        psi: self.update_state(&point, &w)?,
                        edges: point.edges.clone(),
                        central: point.central.clone(),
                    },
                    b if b <= self.layout.edges.len() => {
                        let mut edges = point.edges.clone();
                        edges[b - 1] = self.update_edge(&point, &w, b - 1)?;
                        Point {
                            edges,
                            central: point.central.clone(),
                            psi: point.psi.clone(),
                        }
                    }
                    _ => Point {
                        central: self.update_central(&point, &w)?,
                        edges: point.edges.clone(),
                        psi: point.psi.clone(),
                    },
                };
                let v = self.objective(&candidate)?;
                if v >= value - ACCEPT_SLACK {
                    point = candidate;
                    value = v;
                }
            }
            objective.push(value);
            if value - start < config.tol {
                converged = true;
                break;
            }
        }
        Ok((
            RestartTrace {
                restart,
                seed,
                objective,
                converged,
            },
            point,
        ))
    }
}

/// Runs `config.restarts` independent see-saw restarts; restart `r` is
/// seeded with `config.seed + r`.
///
/// Accepted `dims` layouts: bilocal `[A, B, C]` or `[A, B_A, B_C, C]`; star
/// `[A_1..A_n, B]` or `[A_1..A_n, B_1..B_n]`. The optimized state is a
/// single vector over all subsystems.
pub fn seesaw_optimize(scenario: &Scenario, config: &SeesawConfig) -> Result<SeesawResult> {
    config.validate()?;
    let problem = Problem {
        dims: &config.dims,
        layout: layout(scenario, &config.dims)?,
        signs: scenario.scheme.sign_matrix(),
        root: scenario.edge_parties(),
        floor: config.weight_floor,
    };
    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| problem.run(r, config.seed.wrapping_add(r as u64), config))
        .collect::<Result<Vec<_>>>()?;

    let best = runs.iter().enumerate().fold(0, |b, (r, (t, _))| {
        if t.final_value() > runs[b].0.final_value() {
            r
        } else {
            b
        }
    });
    let mut traces = Vec::with_capacity(runs.len());
    let mut best_point = None;
    for (r, (trace, point)) in runs.into_iter().enumerate() {
        if r == best {
            best_point = Some(point);
        }
        traces.push(trace);
    }
    let point = best_point.expect("at least one restart");
    let names = scenario.edge_party_names();
    let to_obs = |ms: Vec<ComplexMatrix>| {
        ms.into_iter()
            .map(|m| Observable::with_tolerance(m, 1e-9))
            .collect::<Result<Vec<_>>>()
    };
    let edges = point
        .edges
        .into_iter()
        .zip(&problem.layout.edges)
        .zip(names)
        .map(|((ms, pos), name)| Ok(Party::new(name, pos.clone(), to_obs(ms)?)))
        .collect::<Result<Vec<_>>>()?;
    let central = Party::new(
        scenario.central_party_name(),
        problem.layout.central.clone(),
        to_obs(point.central)?,
    );
    let state = QuantumState::Pure(StateVector::normalized(point.psi)?);
    let realization = Realization::new(
        scenario.clone(),
        config.dims.clone(),
        edges,
        central,
        state,
        vec![],
    )?;
    Ok(SeesawResult {
        best_value: traces[best].final_value(),
        best_restart: best,
        realization,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;

    #[test]
    fn sign_operator_examples() {
        assert_eq!(sign_operator(&pauli::z()).unwrap().matrix(), &pauli::z());
        let two_x = pauli::x().scale_real(2.0);
        assert!(
            sign_operator(&two_x)
                .unwrap()
                .matrix()
                .max_abs_diff(&pauli::x())
                < 1e-14
        );
        let zero = ComplexMatrix::zeros(3, 3);
        assert_eq!(
            sign_operator(&zero).unwrap().matrix(),
            &ComplexMatrix::identity(3)
        );
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(sign_operator(&bad).is_err());
    }

    #[test]
    fn star_n2_reaches_optimum() {
        let s = Scenario::star(2).unwrap();
        let mut cfg = SeesawConfig::new(vec![2, 2, 2, 2]);
        cfg.seed = 7;
        let res = seesaw_optimize(&s, &cfg).unwrap();
        assert!(
            (res.best_value - s.quantum_optimum).abs() < 1e-4,
            "{}",
            res.best_value
        );
        assert!(res.best_value <= s.quantum_optimum + 1e-7);
        assert!((res.realization.delta().unwrap() - res.best_value).abs() < 1e-9);
    }

    #[test]
    fn bilocal_m3_reaches_optimum() {
        let s = Scenario::bilocal(3).unwrap();
        let res = seesaw_optimize(&s, &SeesawConfig::new(vec![2, 4, 2])).unwrap();
        let finals: Vec<f64> = res.traces.iter().map(RestartTrace::final_value).collect();
        assert!(
            (res.best_value - s.quantum_optimum).abs() < 1e-4,
            "{finals:?}"
        );
        assert!(finals.iter().all(|&v| v <= s.quantum_optimum + 1e-7));
    }

    #[test]
    fn scalar_observables_stay_classical() {
        let s = Scenario::bilocal(3).unwrap();
        let mut cfg = SeesawConfig::new(vec![1, 1, 1]);
        cfg.restarts = 8;
        let res = seesaw_optimize(&s, &cfg).unwrap();
        assert!(res.best_value <= 6.0 + 1e-12);
    }

    #[test]
    fn traces_are_monotone_and_reproducible() {
        let s = Scenario::bilocal(2).unwrap();
        let mut cfg = SeesawConfig::new(vec![2, 2, 2, 2]);
        cfg.restarts = 4;
        cfg.seed = 3;
        let a = seesaw_optimize(&s, &cfg).unwrap();
        let b = seesaw_optimize(&s, &cfg).unwrap();
        assert_eq!(a.traces, b.traces);
        for t in &a.traces {
            assert!(t.objective.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        }
    }

    #[test]
    fn config_errors() {
        let s = Scenario::bilocal(3).unwrap();
        let mut cfg = SeesawConfig::new(vec![2, 4, 2]);
        cfg.restarts = 0;
        assert!(matches!(
            seesaw_optimize(&s, &cfg),
            Err(Error::InvalidParameter(_))
        ));
        let cfg = SeesawConfig::new(vec![16, 32, 16]);
        assert!(matches!(seesaw_optimize(&s, &cfg), Err(Error::Capacity(_))));
        let cfg = SeesawConfig::new(vec![2, 2]);
        assert!(matches!(
            seesaw_optimize(&s, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }
}
