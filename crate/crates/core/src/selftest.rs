//! Built-in acceptance checks, run by `netbell selftest`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certify::certify;
use crate::classical::{brute_force_delta, eta_brute_force, eta_closed_form};
use crate::error::Result;
use crate::operator::{commutator_norm, Tolerances};
use crate::quantum::{apply_visibility, optimal_realization};
use crate::sampling::sample_and_estimate;
use crate::scenario::{lemmas, Scenario};
use crate::seesaw::{seesaw_optimize, SeesawConfig};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub seconds: f64,
    /// One line per failed check; empty on success.
    pub failures: Vec<String>,
}

struct Checker {
    failures: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || {
            format!("{label}: got {got}, want {want} ± {tol:e}")
        });
    }
}

type CriterionFn = fn(&mut Checker) -> Result<()>;

const CRITERIA: [(&str, CriterionFn, Option<f64>); 8] = [
    (
        "star network values and central commutation",
        star,
        Some(5.0),
    ),
    ("bilocal m=3 relations", bilocal_three, None),
    (
        "general m relations and brute-force bound",
        general_m,
        Some(120.0),
    ),
    ("quantum over classical ratio", ratios, None),
    ("see-saw reaches the optimum", seesaw, Some(60.0)),
    ("finite-shot violation", sampling, None),
    ("auxiliary inequalities", lemma_suite, None),
    ("visibility scaling", visibility, None),
];

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .enumerate()
        .map(|(k, &(title, f, limit))| {
            let start = Instant::now();
            let mut c = Checker::new();
            if let Err(e) = f(&mut c) {
                c.failures.push(format!("error: {e}"));
            }
            let seconds = start.elapsed().as_secs_f64();
            if let Some(limit) = limit {
                c.check(seconds < limit, || {
                    format!("took {seconds:.1}s, limit {limit}s")
                });
            }
            CriterionOutcome {
                id: k + 1,
                title,
                pass: c.failures.is_empty(),
                seconds,
                failures: c.failures,
            }
        })
        .collect()
}

fn star(c: &mut Checker) -> Result<()> {
    let target = 2.0 * 2f64.sqrt();
    for n in 2..=4 {
        let s = Scenario::star(n)?;
        let r = optimal_realization(&s)?;
        c.close(&format!("n={n} delta"), r.delta()?, target, 1e-9);
        let bf = brute_force_delta(&s)?;
        c.check(bf == 2.0, || format!("n={n} brute force {bf}"));
        let b = r.central();
        let comm = commutator_norm(b.matrix(0), b.matrix(1))?;
        let want = if n % 2 == 0 { 0.0 } else { 2.0 };
        c.close(&format!("n={n} commutator"), comm, want, 1e-12);
    }
    Ok(())
}

fn bilocal_three(c: &mut Checker) -> Result<()> {
    let s = Scenario::bilocal(3)?;
    let r = optimal_realization(&s)?;
    let rep = certify(&r, Tolerances::default())?;
    c.close("delta", rep.delta_value, 4.0 * 3f64.sqrt(), 1e-9);
    let bf = brute_force_delta(&s)?;
    c.check(bf == 6.0, || format!("brute force {bf}"));
    let anti: Vec<_> = rep.group("anticommutator.A.").collect();
    c.check(anti.len() == 6, || {
        format!("{} anticommutator entries", anti.len())
    });
    for e in anti {
        c.check(
            (e.expected.abs() - 2.0 / 3.0).abs() < 1e-15
                && (e.measured - e.expected).abs() <= 1e-12,
            || format!("{} = {}", e.name, e.measured),
        );
    }
    for e in rep.group("delta_m.") {
        c.close(&e.name, e.measured, 4.0, 1e-10);
    }
    for e in rep.group("omega.") {
        c.close(&e.name, e.measured, 4.0 / 3f64.sqrt(), 1e-10);
    }
    let comms: Vec<_> = rep.group("commutator.").collect();
    c.check(comms.len() == 3, || format!("{} commutators", comms.len()));
    for e in comms {
        c.check(e.measured <= 1e-12, || {
            format!("{} = {}", e.name, e.measured)
        });
    }
    Ok(())
}

fn general_m(c: &mut Checker) -> Result<()> {
    for m in 2..=5usize {
        let s = Scenario::bilocal(m)?;
        let r = optimal_realization(&s)?;
        let rep = certify(&r, Tolerances::default())?;
        c.close(
            &format!("m={m} delta"),
            rep.delta_value,
            s.quantum_optimum,
            1e-9,
        );
        let eta = eta_brute_force(&s.scheme)?.value as u128;
        let closed = eta_closed_form(m)?;
        c.check(eta == closed, || format!("m={m} eta {eta} vs {closed}"));
        let residuals: Vec<_> = rep.group("constraint.A.").collect();
        let count = (1usize << (m - 1)) - m;
        c.check(residuals.len() == count, || {
            format!("m={m}: {} constraints", residuals.len())
        });
        for e in rep.group("constraint.") {
            c.check(e.measured <= 1e-10, || {
                format!("m={m} {} = {}", e.name, e.measured)
            });
        }
        let half = (1u64 << (m - 1)) as f64;
        for e in rep.group("delta_m.") {
            c.close(
                &format!("m={m} {}", e.name),
                e.measured,
                (half - m as f64) * half,
                1e-9,
            );
        }
        let comms: Vec<_> = rep.group("commutator.").collect();
        c.check(comms.len() == m * (m - 1) / 2, || {
            format!("m={m}: {} commutators", comms.len())
        });
        for e in comms {
            c.check(e.measured <= 1e-12, || {
                format!("m={m} {} = {}", e.name, e.measured)
            });
        }
    }
    Ok(())
}

fn ratios(c: &mut Checker) -> Result<()> {
    for m in 2..=6usize {
        let s = Scenario::bilocal(m)?;
        let ratio = s.violation_ratio();
        let binom = (1..=(m - 1) / 2).fold(1u64, |acc, j| acc * (m as u64 - j as u64) / j as u64);
        let direct = 2f64.powi(m as i32 - 1) * (m as f64).sqrt() / (m as f64 * binom as f64);
        c.check(ratio > 1.0, || format!("m={m} ratio {ratio}"));
        c.close(&format!("m={m} ratio"), ratio, direct, 1e-12);
    }
    Ok(())
}

fn seesaw(c: &mut Checker) -> Result<()> {
    let cases = [
        (Scenario::star(2)?, vec![2, 2, 2, 2]),
        (Scenario::bilocal(3)?, vec![2, 4, 2]),
    ];
    for (s, dims) in cases {
        let mut cfg = SeesawConfig::new(dims);
        cfg.seed = 7;
        let res = seesaw_optimize(&s, &cfg)?;
        c.close(
            &format!("{} best", s.kind),
            res.best_value,
            s.quantum_optimum,
            1e-4,
        );
        for t in &res.traces {
            c.check(t.objective.windows(2).all(|w| w[1] >= w[0] - 1e-10), || {
                format!("{} restart {} not monotone", s.kind, t.restart)
            });
        }
    }
    Ok(())
}

fn sampling(c: &mut Checker) -> Result<()> {
    for m in [2, 3] {
        let s = Scenario::bilocal(m)?;
        let r = optimal_realization(&s)?;
        for seed in 0..20 {
            let est = sample_and_estimate(&r, 100_000, seed)?;
            c.check(
                est.delta - s.classical_bound >= 5.0 * est.delta_std_error,
                || {
                    format!(
                        "m={m} seed {seed}: delta {} ± {}",
                        est.delta, est.delta_std_error
                    )
                },
            );
            for raw in &est.raw {
                let exact = r.raw_correlator(&raw.inputs.edge, raw.inputs.central)?;
                c.check((raw.value - exact).abs() <= 5.0 * raw.std_error, || {
                    format!(
                        "m={m} seed {seed} {:?}: {} vs {exact}",
                        raw.inputs, raw.value
                    )
                });
            }
        }
    }
    Ok(())
}

fn lemma_suite(c: &mut Checker) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 3];
    for _ in 0..10_000 {
        let n = rng.random_range(2..=4usize);
        let len = rng.random_range(1..=8usize);
        let z: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..len).map(|_| rng.random::<f64>()).collect())
            .collect();
        worst[0] = worst[0].min(lemmas::product_root_gap(&z));
        worst[1] = worst[1].min(lemmas::cauchy_schwarz_gap(&z[0], &z[1]));
        worst[2] = worst[2].min(lemmas::convex_sum_gap(&z[0]));
    }
    for (k, w) in worst.iter().enumerate() {
        c.check(*w >= -1e-12, || {
            format!("inequality {} violated by {}", k + 1, -w)
        });
    }
    Ok(())
}

fn visibility(c: &mut Checker) -> Result<()> {
    for m in [2, 3] {
        let s = Scenario::bilocal(m)?;
        let r = optimal_realization(&s)?;
        let threshold = s.classical_bound / s.quantum_optimum;
        for step in 0..=10 {
            let v = step as f64 / 10.0;
            let noisy = apply_visibility(&r, &[v, v])?;
            let rep = certify(&noisy, Tolerances::default())?;
            c.close(
                &format!("m={m} v={v}"),
                rep.delta_value,
                v * s.quantum_optimum,
                1e-9,
            );
            let pass = rep.entry("delta.violation").is_some_and(|e| e.pass);
            c.check(pass == (v > threshold), || {
                format!("m={m} v={v}: violation entry pass={pass}")
            });
        }
    }
    Ok(())
}
