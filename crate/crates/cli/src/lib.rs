//! `otlab` command-line front end.
//!
//! [`run_command`] parses an argument list, runs one subcommand and writes
//! its report to the given output stream. Exit statuses: 0 on success (and
//! on a passing certificate), 2 on a failing certificate, 1 on any input or
//! usage error.

pub mod fixture;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use otlab_core::certify::{certify, DEFAULT_CYCLIC_BUDGET, DEFAULT_K_MAX};
use otlab_core::ctransform::{c_transform, default_concavity_tol, double_transform, is_c_concave, normalize_pair};
use otlab_core::dual::solve_primal_dual;
use otlab_core::envelope::envelope_schedule;
use otlab_core::json::{
    certificate_json, document_mode, instance_from_value, instance_to_value, parse_document, schedule_csv,
    schedule_json, solution_from_value, solution_json, to_pretty, vector_json,
};
use otlab_core::oracle::{Oracle, DEFAULT_ORACLE_BUDGET};
use otlab_core::primal::solve_primal;
use otlab_core::{dual_value, Error, Mode, Rational, Scalar, ValidatedInstance};
use serde_json::{json, Value};

pub const BUDGET_ENV: &str = "OT_LAB_BUDGET";

const GRAMMAR: &str = "\
Instance files are JSON objects:
  {\"X\": {\"labels\": [..], \"metric\": [[..]]},   metric optional
   \"Y\": {\"labels\": [..], \"metric\": [[..]]},
   \"cost\": [[..]],          \"inf\" marks an infinite cell
   \"mu\": [..], \"nu\": [..],
   \"mode\": \"rational\" | \"float\",   default rational
   \"bounded\": true}          optional, rejects \"inf\"
Scalars are strings (\"3/4\", \"0.25\", \"1e-3\") or JSON numbers.

Exit status: 0 success or passing certificate, 2 failing certificate,
1 input or usage error.

Environment: OT_LAB_BUDGET overrides the oracle spanning-tree budget and
the cyclic-monotonicity evaluation budget.";

#[derive(Debug, Parser)]
#[command(name = "otlab", version, about = "Exact finite optimal transport with duality certificates", after_help = GRAMMAR)]
struct Cli {
    /// Read every instance in f64 arithmetic with tolerance-based checks.
    #[arg(long, global = true)]
    float: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal plan, value and basis.
    Solve {
        /// Also emit canonical dual potentials.
        #[arg(long)]
        dual: bool,
        instance: PathBuf,
    },
    /// Duality certificate for the solver's optimum or a given solution.
    Certify {
        /// Solution document (as written by `solve --dual`) to certify instead.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Largest tuple size for the cyclic monotonicity check.
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        instance: PathBuf,
    },
    /// c-transform, double transform and normalized pair of a potential.
    Transform {
        /// Comma-separated potential on X, e.g. "0,1/2".
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
        instance: PathBuf,
    },
    /// Optimal values under the Lipschitz envelopes at each level.
    Envelope {
        /// Comma-separated, strictly increasing positive levels.
        #[arg(long, default_value = "1,2,5,10")]
        levels: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        instance: PathBuf,
    },
    /// Brute-force optimum over all spanning trees, in `solve` format.
    Oracle {
        #[arg(long)]
        dual: bool,
        instance: PathBuf,
    },
    /// Write a seeded fixture instance.
    Gen {
        /// indicator | random-uniform | separable | discrete-metric-spike
        fixture: String,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// What a subcommand produced: text for stdout and the exit status.
struct Outcome {
    text: String,
    status: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, status: 0 }
    }

    fn json(v: &Value) -> Self {
        Outcome::ok(to_pretty(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Budgets {
    oracle: u128,
    cyclic: u128,
}

impl Budgets {
    fn from_env(var: Option<String>) -> Result<Self> {
        match var {
            None => Ok(Budgets {
                oracle: DEFAULT_ORACLE_BUDGET,
                cyclic: DEFAULT_CYCLIC_BUDGET,
            }),
            Some(s) => {
                let b: u128 = s
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("{BUDGET_ENV} must be a nonnegative integer, got {s:?}"))?;
                Ok(Budgets { oracle: b, cyclic: b })
            }
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status. Reports go to `out`, diagnostics to `err`.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let result = Budgets::from_env(std::env::var(BUDGET_ENV).ok()).and_then(|budgets| run(cli, budgets));
    match result {
        Ok(outcome) => {
            if out
                .write_all(outcome.text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                let _ = writeln!(err, "error: cannot write output");
                return 1;
            }
            outcome.status
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

enum Loaded {
    Exact(ValidatedInstance<Rational>),
    Float(ValidatedInstance<f64>),
}

/// Runs a generic body on whichever arithmetic the instance was loaded in.
macro_rules! dispatch {
    ($loaded:expr, |$i:ident| $body:expr) => {
        match $loaded {
            Loaded::Exact($i) => $body,
            Loaded::Float($i) => $body,
        }
    };
}

fn run(cli: Cli, budgets: Budgets) -> Result<Outcome> {
    let float = cli.float;
    match cli.command {
        Command::Solve { dual, instance } => dispatch!(load(&instance, float)?, |i| solve(&i, dual)),
        Command::Certify {
            solution,
            k_max,
            instance,
        } => {
            let solution = solution.as_deref().map(read_document).transpose()?;
            dispatch!(load(&instance, float)?, |i| run_certify(
                &i,
                solution.as_ref(),
                k_max,
                budgets
            ))
        }
        Command::Transform { phi, instance } => dispatch!(load(&instance, float)?, |i| transform(&i, &phi)),
        Command::Envelope {
            levels,
            format,
            instance,
        } => dispatch!(load(&instance, float)?, |i| envelope(&i, &levels, format)),
        Command::Oracle { dual, instance } => {
            dispatch!(load(&instance, float)?, |i| oracle(&i, dual, budgets))
        }
        Command::Gen {
            fixture,
            size,
            seed,
            output,
        } => gen(&fixture, size, seed, output.as_deref(), float),
    }
}

fn read_document(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_document(&text).with_context(|| format!("in {}", path.display()))
}

fn load(path: &Path, force_float: bool) -> Result<Loaded> {
    let doc = read_document(path)?;
    let ctx = || format!("in {}", path.display());
    let mode = if force_float {
        Mode::Float
    } else {
        document_mode(&doc).with_context(ctx)?
    };
    Ok(match mode {
        Mode::Rational => Loaded::Exact(instance_from_value(&doc).and_then(|i| i.validate()).with_context(ctx)?),
        Mode::Float => Loaded::Float(instance_from_value(&doc).and_then(|i| i.validate()).with_context(ctx)?),
    })
}

fn parse_list<T: Scalar>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| T::parse(s.trim()).with_context(|| format!("in {what}")))
        .collect()
}

fn solve<T: Scalar>(inst: &ValidatedInstance<T>, dual: bool) -> Result<Outcome> {
    if dual {
        let (res, pot) = solve_primal_dual(inst)?;
        let value = dual_value(&pot, &inst.mu, &inst.nu)?;
        Ok(Outcome::json(&solution_json(&res, Some((&pot, &value)))))
    } else {
        Ok(Outcome::json(&solution_json(&solve_primal(inst)?, None)))
    }
}

fn run_certify<T: Scalar>(
    inst: &ValidatedInstance<T>,
    solution: Option<&Value>,
    k_max: usize,
    budgets: Budgets,
) -> Result<Outcome> {
    let (plan, pot) = match solution {
        Some(doc) => solution_from_value(doc).context("in solution")?,
        None => {
            let (res, pot) = solve_primal_dual(inst)?;
            (res.plan, pot)
        }
    };
    match certify(inst, &plan, &pot, k_max, budgets.cyclic) {
        Ok(cert) => {
            let v = certificate_json(&cert);
            let status = if v["verdict"] == "pass" { 0 } else { 2 };
            Ok(Outcome {
                text: to_pretty(&v),
                status,
            })
        }
        Err(e @ (Error::InfeasibleArguments(_) | Error::InfeasiblePotentials { .. })) => {
            let v = json!({"mode": T::MODE, "verdict": "fail", "reason": e.to_string()});
            Ok(Outcome {
                text: to_pretty(&v),
                status: 2,
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn transform<T: Scalar>(inst: &ValidatedInstance<T>, phi: &str) -> Result<Outcome> {
    let phi: Vec<T> = parse_list(phi, "--phi")?;
    if phi.len() != inst.cost.rows() {
        bail!("--phi has {} entries, X has {} points", phi.len(), inst.cost.rows());
    }
    let cost = &inst.cost;
    let mut v = json!({
        "mode": T::MODE,
        "phi": vector_json(&phi),
        "phi_c": vector_json(&c_transform(&phi, cost)?),
        "phi_ccbar": vector_json(&double_transform(&phi, cost)?),
    });
    if cost.is_finite_everywhere() {
        let pair = normalize_pair(&phi, cost)?;
        v["normalized"] = json!({"phi": vector_json(&pair.phi), "psi": vector_json(&pair.psi)});
        v["c_concave"] = json!(is_c_concave(&phi, cost, &default_concavity_tol(cost)?)?);
    }
    Ok(Outcome::json(&v))
}

fn envelope<T: Scalar>(inst: &ValidatedInstance<T>, levels: &str, format: Format) -> Result<Outcome> {
    let levels: Vec<T> = parse_list(levels, "--levels")?;
    let schedule = envelope_schedule(inst, &levels)?;
    Ok(match format {
        Format::Json => Outcome::json(&schedule_json(&schedule)),
        Format::Csv => Outcome::ok(schedule_csv(&schedule)),
    })
}

fn oracle<T: Scalar>(inst: &ValidatedInstance<T>, dual: bool, budgets: Budgets) -> Result<Outcome> {
    let oracle = Oracle::with_budget(budgets.oracle);
    let res = oracle.primal(inst)?;
    if dual {
        let pot = oracle.dual(inst)?;
        let value = dual_value(&pot, &inst.mu, &inst.nu)?;
        Ok(Outcome::json(&solution_json(&res, Some((&pot, &value)))))
    } else {
        Ok(Outcome::json(&solution_json(&res, None)))
    }
}

fn gen(name: &str, size: usize, seed: u64, output: Option<&Path>, float: bool) -> Result<Outcome> {
    let (inst, header) = fixture::generate_fixture(name, size, seed)?;
    let text = if float {
        let converted = otlab_core::Instance {
            space_x: convert_space(&inst.space_x),
            space_y: convert_space(&inst.space_y),
            cost: otlab_core::CostMatrix::new(inst.cost.entries().map(|e| match e {
                otlab_core::Extended::Finite(v) => otlab_core::Extended::Finite(v.to_f64()),
                otlab_core::Extended::Infinite => otlab_core::Extended::Infinite,
            })),
            mu: otlab_core::Marginal::new(inst.mu.weights.iter().map(Scalar::to_f64).collect()),
            nu: otlab_core::Marginal::new(inst.nu.weights.iter().map(Scalar::to_f64).collect()),
        };
        to_pretty(&instance_to_value(&converted, Some(header)))
    } else {
        to_pretty(&instance_to_value(&inst, Some(header)))
    };
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

fn convert_space(s: &otlab_core::FiniteSpace<Rational>) -> otlab_core::FiniteSpace<f64> {
    otlab_core::FiniteSpace {
        labels: s.labels.clone(),
        metric: s.metric.as_ref().map(|m| m.map(Scalar::to_f64)),
    }
}
