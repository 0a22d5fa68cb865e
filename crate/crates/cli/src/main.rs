use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use netbell_core::certify::certify;
use netbell_core::classical::{
    brute_force_delta, eta_brute_force, eta_closed_form, MAX_ETA_INPUTS,
};
use netbell_core::encoding::TransversalPolicy;
use netbell_core::io::{realization_from_json, realization_to_json};
use netbell_core::operator::Tolerances;
use netbell_core::quantum::{apply_visibility, optimal_realization, Realization};
use netbell_core::sampling::sample_and_estimate;
use netbell_core::scenario::{bilocal_quantum_optimum, build_scenario, Scenario, ScenarioKind};
use netbell_core::seesaw::{seesaw_optimize, SeesawConfig};
use netbell_core::{selftest, Error};

#[derive(Parser)]
#[command(
    name = "netbell",
    version,
    about = "Bell functionals for star and bilocal networks"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Star,
    Bilocal,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scenario: Kind,
    /// Number of edge parties (star).
    #[arg(long)]
    n: Option<usize>,
    /// Number of central inputs (bilocal).
    #[arg(long)]
    m: Option<usize>,
    /// Transversal policy: lex-first-zero or minority-weight.
    #[arg(long, default_value = "lex-first-zero")]
    policy: String,
}

impl ScenarioArgs {
    fn kind(&self) -> Result<ScenarioKind, Error> {
        match (self.scenario, self.n, self.m) {
            (Kind::Star, Some(n), None) => Ok(ScenarioKind::Star { n }),
            (Kind::Bilocal, None, Some(m)) => Ok(ScenarioKind::Bilocal { m }),
            (Kind::Star, _, _) => Err(Error::InvalidParameter(
                "star scenario takes --n only".into(),
            )),
            (Kind::Bilocal, _, _) => Err(Error::InvalidParameter(
                "bilocal scenario takes --m only".into(),
            )),
        }
    }

    fn policy(&self) -> Result<TransversalPolicy, Error> {
        self.policy.parse()
    }

    fn build(&self) -> Result<Scenario, Error> {
        build_scenario(self.kind()?, self.policy()?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classical bound and quantum optimum, optionally by exhaustive search.
    Bound {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        brute_force: bool,
    },
    /// Write the optimal realization file.
    Realize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Per-source visibilities, comma separated.
        #[arg(long, value_delimiter = ',')]
        visibility: Option<Vec<f64>>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the self-tested relations of a realization file.
    Certify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Tolerance for values (Bell value, norms, δ_m).
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Tolerance for algebraic identities.
        #[arg(long, default_value_t = 1e-12)]
        algebraic_tol: f64,
    },
    /// See-saw maximization at fixed local dimensions.
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 1e-12)]
        sweep_tol: f64,
        /// Write the best realization here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-shot estimate of the correlators.
    Sample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the outcome counts as a tab-separated table.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Run the built-in acceptance checks.
    Selftest,
}

enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Rounds to 12 significant digits (half to even).
fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round12(n.as_f64().unwrap_or(0.0))),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => {
            n.as_f64().map_or_else(|| n.to_string(), |f| f.to_string())
        }
        Value::Array(a) => format!("[{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        Value::Object(o) => o
            .iter()
            .map(|(k, v)| format!("{k}={}", scalar(v)))
            .collect::<Vec<_>>()
            .join(" "),
        other => other.to_string(),
    }
}

fn render_text(v: &Value, prefix: &str, out: &mut String) {
    let Value::Object(o) = v else {
        out.push_str(&format!("{prefix}: {}\n", scalar(v)));
        return;
    };
    for (k, v) in o {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Object(_) => render_text(v, &key, out),
            Value::Array(a) if a.iter().any(|x| x.is_object()) => {
                for x in a {
                    out.push_str(&format!("{key}: {}\n", scalar(x)));
                }
            }
            _ => out.push_str(&format!("{key}: {}\n", scalar(v))),
        }
    }
}

fn emit(format: Format, v: Value) {
    let v = round_value(v);
    match format {
        Format::Json => write_stdout(&format!(
            "{}\n",
            serde_json::to_string_pretty(&v).expect("serializable")
        )),
        Format::Text => {
            let mut s = String::new();
            render_text(&v, "", &mut s);
            write_stdout(&s);
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn write_stdout(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn read_realization(path: &PathBuf) -> Result<Realization, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(realization_from_json(&text)?)
}

fn bound(format: Format, args: &ScenarioArgs, brute: bool) -> Result<bool, Failure> {
    let kind = args.kind()?;
    let (classical, quantum) = match kind {
        ScenarioKind::Star { n } if n >= 2 => (2.0, 2.0 * 2f64.sqrt()),
        ScenarioKind::Bilocal { m } => (eta_closed_form(m)? as f64, bilocal_quantum_optimum(m)),
        ScenarioKind::Star { n } => {
            return Err(
                Error::InvalidParameter(format!("star network needs n >= 2, got {n}")).into(),
            )
        }
    };
    let mut out = Map::new();
    out.insert("scenario".into(), json!(kind.to_string()));
    out.insert("classical_bound".into(), json!(classical));
    out.insert("quantum_optimum".into(), json!(quantum));
    out.insert("ratio".into(), json!(quantum / classical));
    if brute {
        let s = build_scenario(kind, args.policy()?)?;
        out.insert("brute_force_delta".into(), json!(brute_force_delta(&s)?));
        if let ScenarioKind::Bilocal { m } = kind {
            if m <= MAX_ETA_INPUTS {
                let eta = eta_brute_force(&s.scheme)?;
                out.insert("brute_force_eta".into(), json!(eta.value));
                out.insert("eta_witness".into(), json!(eta.witness));
            }
        }
    }
    emit(format, Value::Object(out));
    Ok(true)
}

fn realize(
    format: Format,
    args: &ScenarioArgs,
    visibility: Option<&[f64]>,
    out: Option<&PathBuf>,
) -> Result<bool, Failure> {
    let s = args.build()?;
    let mut r = optimal_realization(&s)?;
    if let Some(v) = visibility {
        r = apply_visibility(&r, v)?;
    }
    let text = realization_to_json(&r);
    match out {
        Some(path) => {
            std::fs::write(path, &text)?;
            emit(
                format,
                json!({
                    "scenario": s.kind.to_string(),
                    "dims": r.dims(),
                    "delta": r.delta()?,
                    "written": path.display().to_string(),
                }),
            );
        }
        None => write_stdout(&text),
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let format = cli.format;
    match cli.command {
        Command::Bound {
            scenario,
            brute_force,
        } => bound(format, &scenario, brute_force),
        Command::Realize {
            scenario,
            visibility,
            out,
        } => realize(format, &scenario, visibility.as_deref(), out.as_ref()),
        Command::Certify {
            input,
            tol,
            algebraic_tol,
        } => {
            if !(tol >= 0.0 && algebraic_tol >= 0.0) {
                return Err(
                    Error::InvalidParameter("tolerances must be nonnegative".into()).into(),
                );
            }
            let r = read_realization(&input)?;
            let report = certify(
                &r,
                Tolerances {
                    value: tol,
                    algebraic: algebraic_tol,
                },
            )?;
            let overall = report.overall;
            emit(format, serde_json::to_value(&report).expect("serializable"));
            Ok(overall)
        }
        Command::Optimize {
            scenario,
            dims,
            restarts,
            seed,
            max_sweeps,
            sweep_tol,
            out,
        } => {
            let s = scenario.build()?;
            let cfg = SeesawConfig {
                restarts,
                seed,
                max_sweeps,
                tol: sweep_tol,
                ..SeesawConfig::new(dims)
            };
            let res = seesaw_optimize(&s, &cfg)?;
            if let Some(path) = &out {
                std::fs::write(path, realization_to_json(&res.realization))?;
            }
            let finals: Vec<f64> = res.traces.iter().map(|t| t.final_value()).collect();
            let sweeps: Vec<usize> = res.traces.iter().map(|t| t.objective.len() - 1).collect();
            emit(
                format,
                json!({
                    "scenario": s.kind.to_string(),
                    "dims": cfg.dims,
                    "best_value": res.best_value,
                    "quantum_optimum": s.quantum_optimum,
                    "gap": s.quantum_optimum - res.best_value,
                    "best_restart": res.best_restart,
                    "restart_values": finals,
                    "restart_sweeps": sweeps,
                }),
            );
            Ok(true)
        }
        Command::Sample {
            input,
            shots,
            seed,
            counts,
        } => {
            let r = read_realization(&input)?;
            let est = sample_and_estimate(&r, shots, seed)?;
            if let Some(path) = &counts {
                std::fs::write(path, est.counts.to_table())?;
            }
            let bound = r.scenario().classical_bound;
            emit(
                format,
                json!({
                    "scenario": r.scenario().kind.to_string(),
                    "shots": shots,
                    "seed": seed,
                    "correlators": est.table.values,
                    "std_errors": est.table.std_errors,
                    "delta": est.delta,
                    "delta_std_error": est.delta_std_error,
                    "classical_bound": bound,
                    "sigmas_above_bound": (est.delta - bound) / est.delta_std_error,
                }),
            );
            Ok(true)
        }
        Command::Selftest => {
            let outcomes = selftest::run_all();
            let pass = outcomes.iter().all(|o| o.pass);
            match format {
                Format::Json => emit(format, json!({ "pass": pass, "criteria": outcomes })),
                Format::Text => {
                    for o in &outcomes {
                        let status = if o.pass { "PASS" } else { "FAIL" };
                        write_stdout(&format!(
                            "criterion {} {status} ({:.2}s) {}\n",
                            o.id, o.seconds, o.title
                        ));
                        for f in &o.failures {
                            write_stdout(&format!("    {f}\n"));
                        }
                    }
                }
            }
            Ok(pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Capacity(_)) {
                3
            } else {
                2
            })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
