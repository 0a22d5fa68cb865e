//! End-to-end acceptance checks. Every target below is a closed-form number;
//! values are recomputed here from dense operators rather than taken from
//! the library's own reports.

use std::process::ExitCode;
use std::time::Instant;

use netbell_core::certify::certify;
use netbell_core::classical::{brute_force_delta, eta_brute_force};
use netbell_core::encoding::constraint_strings;
use netbell_core::operator::{
    embed_operator, expectation, ComplexMatrix, QuantumState, Tolerances,
};
use netbell_core::quantum::{apply_visibility, optimal_realization, Realization};
use netbell_core::sampling::sample_and_estimate;
use netbell_core::scenario::Scenario;
use netbell_core::seesaw::{seesaw_optimize, SeesawConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(label: &str, got: f64, want: f64, tol: f64) -> Outcome {
    ensure((got - want).abs() <= tol, || {
        format!("{label}: got {got:.15}, want {want:.15} (tol {tol:e})")
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, j| acc * (n + 1 - j) / j)
}

fn classical_closed(m: usize) -> f64 {
    (m as u64 * binomial(m as u64 - 1, (m as u64 - 1) / 2)) as f64
}

fn quantum_closed(m: usize) -> f64 {
    2f64.powi(m as i32 - 1) * (m as f64).sqrt()
}

fn full(r: &Realization, op: &ComplexMatrix, positions: &[usize]) -> ComplexMatrix {
    embed_operator(op, positions, r.dims()).unwrap()
}

fn mean(r: &Realization, op: &ComplexMatrix) -> f64 {
    expectation(r.state(), op).unwrap().re
}

/// `Σ_x S[i][x] A_x` on edge party `k`.
fn signed_sum(r: &Realization, k: usize, i: usize) -> ComplexMatrix {
    let signs = r.scenario().scheme.sign_matrix();
    let party = &r.edges()[k];
    let d = party.matrix(0).rows();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (x, &s) in signs[i].iter().enumerate() {
        acc = &acc + &party.matrix(x).scale_real(s as f64);
    }
    acc
}

/// Δ from scratch: full-space Bell terms, then the root-sum.
fn delta_direct(r: &Realization) -> f64 {
    let k_edges = r.edges().len();
    let central = r.central();
    (0..central.observables.len())
        .map(|i| {
            let mut op = full(r, central.matrix(i), &central.positions);
            for k in 0..k_edges {
                let e = full(r, &signed_sum(r, k, i), &r.edges()[k].positions);
                op = op.matmul(&e).unwrap();
            }
            mean(r, &op).abs().powf(1.0 / k_edges as f64)
        })
        .sum()
}

/// `‖(Σ_x S[i][x] A_x)|ψ>‖` for a pure state.
fn omega(r: &Realization, k: usize, i: usize) -> f64 {
    let QuantumState::Pure(psi) = r.state() else {
        panic!("pure state expected")
    };
    let op = full(r, &signed_sum(r, k, i), &r.edges()[k].positions);
    op.mul_vec(psi.amplitudes())
        .unwrap()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn anticomm(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    &a.matmul(b).unwrap() + &b.matmul(a).unwrap()
}

fn comm(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.matmul(b).unwrap().try_sub(&b.matmul(a).unwrap()).unwrap()
}

/// Deterministic maximum for the star network, enumerated directly.
fn star_deterministic(n: usize) -> f64 {
    // Each edge party holds (a0, a1); the central outputs are absorbed by |.|.
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << (2 * n)) {
        let bit = |k: usize, x: usize| {
            if mask >> (2 * k + x) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let plus: f64 = (0..n).map(|k| bit(k, 0) + bit(k, 1)).product();
        let minus: f64 = (0..n).map(|k| bit(k, 0) - bit(k, 1)).product();
        let nf = n as f64;
        best = best.max(plus.abs().powf(1.0 / nf) + minus.abs().powf(1.0 / nf));
    }
    best
}

/// Deterministic maximum for the bilocal network with the given sign matrix.
fn bilocal_deterministic(signs: &[Vec<i8>]) -> f64 {
    let inputs = signs[0].len();
    let sums = |mask: u32| -> Vec<f64> {
        signs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(x, &s)| {
                        if mask >> x & 1 == 1 {
                            -(s as f64)
                        } else {
                            s as f64
                        }
                    })
                    .sum()
            })
            .collect()
    };
    let mut best: f64 = 0.0;
    for a in 0u32..(1 << inputs) {
        let sa = sums(a);
        for c in 0u32..(1 << inputs) {
            let sc = sums(c);
            best = best.max(sa.iter().zip(&sc).map(|(x, y)| (x * y).abs().sqrt()).sum());
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let target = 2.0 * 2f64.sqrt();
    for n in 2..=4usize {
        let s = Scenario::star(n).map_err(|e| e.to_string())?;
        let r = optimal_realization(&s).map_err(|e| e.to_string())?;
        close(&format!("n={n} delta"), delta_direct(&r), target, 1e-9)?;
        let det = star_deterministic(n);
        ensure(det == 2.0, || format!("n={n} deterministic max {det}"))?;
        let lib = brute_force_delta(&s).map_err(|e| e.to_string())?;
        ensure(lib == 2.0, || format!("n={n} library brute force {lib}"))?;
        let b = r.central();
        let c = comm(b.matrix(0), b.matrix(1)).max_abs();
        if n % 2 == 0 {
            ensure(c <= 1e-12, || format!("n={n} commutator {c}"))?;
        } else {
            close(&format!("n={n} commutator"), c, 2.0, 1e-12)?;
        }
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 5.0, || format!("took {t:.2}s"))
}

fn criterion_2() -> Outcome {
    let s = Scenario::bilocal(3).map_err(|e| e.to_string())?;
    let r = optimal_realization(&s).map_err(|e| e.to_string())?;
    close("delta", delta_direct(&r), 4.0 * 3f64.sqrt(), 1e-9)?;
    let det = bilocal_deterministic(&s.scheme.sign_matrix());
    ensure(det == 6.0, || format!("deterministic max {det}"))?;
    ensure(brute_force_delta(&s) == Ok(6.0), || {
        "library brute force differs from 6".into()
    })?;

    let strings = s.scheme.strings();
    for (k, party) in r.edges().iter().enumerate() {
        let mut count = 0;
        for j in 0..4 {
            for jp in (j + 1)..4 {
                let h = strings[j].hamming(&strings[jp]) as f64;
                let want = 2.0 * (3.0 - 2.0 * h) / 3.0;
                ensure((want.abs() - 2.0 / 3.0).abs() < 1e-15, || {
                    format!("pair {j},{jp} predicts {want}")
                })?;
                let ac = anticomm(party.matrix(j), party.matrix(jp));
                let got = mean(&r, &full(&r, &ac, &party.positions));
                close(
                    &format!("{}: <{{A{},A{}}}>", party.name, j + 1, jp + 1),
                    got,
                    want,
                    1e-12,
                )?;
                count += 1;
            }
        }
        ensure(count == 6, || format!("{count} pairs"))?;
        for i in 0..3 {
            close(
                &format!("omega {i} party {k}"),
                omega(&r, k, i),
                4.0 / 3f64.sqrt(),
                1e-10,
            )?;
        }
    }
    delta_m_check(&r, 3, 4.0)?;
    central_commutators(&r, 3)
}

/// Odd-weight strings of weight at least 3 annihilate the state through
/// `Σ_x (-1)^(s·y^x) A_x`; the deficits sum to `δ_m`.
fn delta_m_check(r: &Realization, m: usize, want: f64) -> Outcome {
    let strings = r.scenario().scheme.strings();
    let half = (1usize << (m - 1)) as f64;
    let ss: Vec<u64> = (0u64..1 << m)
        .filter(|s| s.count_ones() % 2 == 1 && s.count_ones() >= 3)
        .collect();
    let expected_count = (1usize << (m - 1)) - m;
    ensure(ss.len() == expected_count, || {
        format!("m={m}: {} constraint strings", ss.len())
    })?;
    let lib = constraint_strings(m).map_err(|e| e.to_string())?;
    ensure(lib.elements.len() == expected_count, || {
        format!("m={m}: library lists {}", lib.elements.len())
    })?;
    for party in r.edges() {
        let d = party.matrix(0).rows();
        let mut delta = 0.0;
        for &s in &ss {
            let mut x = ComplexMatrix::zeros(d, d);
            for (j, y) in strings.iter().enumerate() {
                let sign = if (s & y.value()).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                x = &x + &party.matrix(j).scale_real(sign);
            }
            let xx = x.adjoint().matmul(&x).unwrap();
            let sq = mean(r, &full(r, &xx, &party.positions));
            ensure(sq.max(0.0).sqrt() <= 1e-10, || {
                format!("m={m} {} residual {s:b}: {}", party.name, sq.sqrt())
            })?;
            delta += half - sq;
        }
        close(&format!("m={m} delta_m {}", party.name), delta, want, 1e-9)?;
    }
    Ok(())
}

fn central_commutators(r: &Realization, m: usize) -> Outcome {
    let b = r.central();
    let mut count = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            let c = comm(b.matrix(i), b.matrix(j)).max_abs();
            ensure(c <= 1e-12, || {
                format!("m={m} [B{},B{}] = {c}", i + 1, j + 1)
            })?;
            count += 1;
        }
    }
    ensure(count == m * (m - 1) / 2, || format!("{count} commutators"))
}

fn criterion_3() -> Outcome {
    for m in 2..=5usize {
        let start = Instant::now();
        let s = Scenario::bilocal(m).map_err(|e| e.to_string())?;
        let r = optimal_realization(&s).map_err(|e| e.to_string())?;
        close(
            &format!("m={m} delta"),
            delta_direct(&r),
            quantum_closed(m),
            1e-9,
        )?;
        let eta = eta_brute_force(&s.scheme).map_err(|e| e.to_string())?.value;
        ensure(eta as f64 == classical_closed(m), || {
            format!("m={m} eta {eta}")
        })?;
        if m <= 4 {
            let det = bilocal_deterministic(&s.scheme.sign_matrix());
            ensure(det == classical_closed(m), || {
                format!("m={m} deterministic {det}")
            })?;
        }
        let half = 2f64.powi(m as i32 - 1);
        delta_m_check(&r, m, (half - m as f64) * half)?;
        central_commutators(&r, m)?;
        let t = start.elapsed().as_secs_f64();
        ensure(t < 120.0, || format!("m={m} took {t:.1}s"))?;
    }
    Ok(())
}

#[allow(clippy::approx_constant)]
fn criterion_4() -> Outcome {
    let samples = [(2, 1.4142), (3, 1.1547), (4, 1.3333)];
    for m in 2..=6usize {
        let s = Scenario::bilocal(m).map_err(|e| e.to_string())?;
        let ratio = quantum_closed(m) / classical_closed(m);
        ensure(ratio > 1.0, || format!("m={m} ratio {ratio}"))?;
        close(
            &format!("m={m} library ratio"),
            s.violation_ratio(),
            ratio,
            1e-12,
        )?;
        close(
            &format!("m={m} classical"),
            s.classical_bound,
            classical_closed(m),
            0.0,
        )?;
        close(
            &format!("m={m} quantum"),
            s.quantum_optimum,
            quantum_closed(m),
            1e-12,
        )?;
        if let Some(&(_, approx)) = samples.iter().find(|(mm, _)| *mm == m) {
            close(&format!("m={m} ratio approx"), ratio, approx, 1e-4)?;
        }
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let cases = [
        (
            Scenario::star(2).map_err(|e| e.to_string())?,
            vec![2, 2, 2, 2],
            2.0 * 2f64.sqrt(),
        ),
        (
            Scenario::bilocal(3).map_err(|e| e.to_string())?,
            vec![2, 4, 2],
            4.0 * 3f64.sqrt(),
        ),
    ];
    for (s, dims, target) in cases {
        let mut cfg = SeesawConfig::new(dims);
        cfg.restarts = 20;
        cfg.seed = 7;
        let res = seesaw_optimize(&s, &cfg).map_err(|e| e.to_string())?;
        close(&format!("{} best", s.kind), res.best_value, target, 1e-4)?;
        close(
            &format!("{} returned realization", s.kind),
            delta_direct(&res.realization),
            res.best_value,
            1e-9,
        )?;
        for t in &res.traces {
            ensure(t.objective.windows(2).all(|w| w[1] >= w[0] - 1e-10), || {
                format!("{} restart {} decreased", s.kind, t.restart)
            })?;
        }
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 60.0, || format!("took {t:.1}s"))
}

fn criterion_6() -> Outcome {
    for m in [2usize, 3] {
        let s = Scenario::bilocal(m).map_err(|e| e.to_string())?;
        let r = optimal_realization(&s).map_err(|e| e.to_string())?;
        let (a, b, c) = (&r.edges()[0], r.central(), &r.edges()[1]);
        for seed in 0..20u64 {
            let est = sample_and_estimate(&r, 100_000, seed).map_err(|e| e.to_string())?;
            ensure(
                est.delta - classical_closed(m) >= 5.0 * est.delta_std_error,
                || format!("m={m} seed {seed}: {} ± {}", est.delta, est.delta_std_error),
            )?;
            for raw in &est.raw {
                let (x, z) = (raw.inputs.edge[0], raw.inputs.edge[1]);
                let op = full(&r, a.matrix(x), &a.positions)
                    .matmul(&full(&r, c.matrix(z), &c.positions))
                    .unwrap()
                    .matmul(&full(&r, b.matrix(raw.inputs.central), &b.positions))
                    .unwrap();
                let exact = mean(&r, &op);
                ensure((raw.value - exact).abs() <= 5.0 * raw.std_error, || {
                    format!(
                        "m={m} seed {seed} ({x},{z},{}): {} vs {exact}",
                        raw.inputs.central, raw.value
                    )
                })?;
            }
        }
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..10_000 {
        let n = rng.random_range(2..=5usize);
        let len = rng.random_range(1..=10usize);
        let scale = 10f64.powi(rng.random_range(-3..=3));
        let z: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..len).map(|_| scale * rng.random::<f64>()).collect())
            .collect();
        let nf = n as f64;

        // Π_k (Σ_i z_ki)^(1/n) ≥ Σ_i Π_k z_ki^(1/n)
        let rhs: f64 = z
            .iter()
            .map(|row| row.iter().sum::<f64>().powf(1.0 / nf))
            .product();
        let lhs: f64 = (0..len)
            .map(|i| z.iter().map(|row| row[i].powf(1.0 / nf)).product::<f64>())
            .sum();
        ensure(lhs <= rhs + 1e-12 * rhs.max(1.0), || {
            format!("trial {trial}: product root {lhs} > {rhs}")
        })?;

        // Σ sqrt(a_i b_i) ≤ sqrt(Σa Σb)
        let (a, b) = (&z[0], &z[1]);
        let lhs: f64 = a.iter().zip(b).map(|(x, y)| (x * y).sqrt()).sum();
        let rhs = (a.iter().sum::<f64>() * b.iter().sum::<f64>()).sqrt();
        ensure(lhs <= rhs + 1e-12 * rhs.max(1.0), || {
            format!("trial {trial}: cauchy-schwarz {lhs} > {rhs}")
        })?;

        // Σ w ≤ sqrt(m Σ w²)
        let lhs: f64 = a.iter().sum();
        let rhs = (len as f64 * a.iter().map(|x| x * x).sum::<f64>()).sqrt();
        ensure(lhs <= rhs + 1e-12 * rhs.max(1.0), || {
            format!("trial {trial}: convex {lhs} > {rhs}")
        })?;
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    for m in [2usize, 3] {
        let s = Scenario::bilocal(m).map_err(|e| e.to_string())?;
        let r = optimal_realization(&s).map_err(|e| e.to_string())?;
        let q = quantum_closed(m);
        let threshold = classical_closed(m) / q;
        for step in 0..=10 {
            let v = step as f64 / 10.0;
            let noisy = apply_visibility(&r, &[v, v]).map_err(|e| e.to_string())?;
            close(&format!("m={m} v={v}"), delta_direct(&noisy), v * q, 1e-9)?;
            let rep = certify(&noisy, Tolerances::default()).map_err(|e| e.to_string())?;
            let entry = rep
                .entry("delta.violation")
                .ok_or("no delta.violation entry")?;
            ensure(entry.pass == (v > threshold), || {
                format!("m={m} v={v}: entry pass={}", entry.pass)
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("star network", criterion_1),
        ("bilocal m=3", criterion_2),
        ("general m", criterion_3),
        ("violation ratio", criterion_4),
        ("see-saw", criterion_5),
        ("sampling", criterion_6),
        ("auxiliary inequalities", criterion_7),
        ("visibility", criterion_8),
    ];
    let mut failed = 0;
    for (k, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {} ({title}): PASS [{secs:.2}s]", k + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {} ({title}): FAIL [{secs:.2}s] {e}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
