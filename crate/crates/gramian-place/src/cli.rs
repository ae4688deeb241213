//! Command-line front end: generate or load systems, run placement, sweep
//! energy budgets over random networks, and brute-force small instances.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::objective::{feasibility_bound, TransferSpec};
use crate::oracle::{brute_force_min_actuators, brute_force_min_actuators_regularized};
use crate::placement::{bisection_place, BisectionConfig, PlacementResult};
use crate::system::{
    build_gramian_basis, erdos_renyi_system_with, integrator_chain, GramianBasis, LinearSystem,
    SystemDoc,
};

/// Process exit code for an error: 2 for energy-budget infeasibility, 3 for
/// conditioning and controllability failures, 1 for everything else
/// (malformed input, I/O, bad flags).
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InfeasibleEnergy { .. } | Error::InfeasibleForEpsilon { .. } => 2,
        Error::NotControllable { .. }
        | Error::NotHurwitz { .. }
        | Error::NumericalConditioning(_) => 3,
        _ => 1,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gramian-place",
    version,
    about = "Minimum actuator placement with bounded control energy in linear dynamical networks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select an actuator set for one transfer under an energy budget.
    Place(PlaceArgs),
    /// Sweep energy multipliers over random networks and emit CSV rows.
    Sweep(SweepArgs),
    /// Write an integrator-chain system as JSON.
    Chain(ChainArgs),
    /// Write a random stabilized network system as JSON.
    Er(ErArgs),
    /// Exhaustively find minimum actuator sets on a small system.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct PlaceArgs {
    /// Path to a system JSON document.
    #[arg(long)]
    system: PathBuf,
    /// Initial state, comma-separated; defaults to the origin.
    #[arg(long)]
    x0: Option<String>,
    /// Target state, comma-separated; defaults to all ones.
    #[arg(long)]
    x1: Option<String>,
    /// Maximum admissible transfer energy E.
    #[arg(long)]
    energy: f64,
    /// Relative energy slack: the result aims for exact energy ≤ (1+c)E.
    #[arg(long)]
    c: f64,
    /// Bisection accuracy relative to the initial bracket (0, 1/E].
    #[arg(long)]
    a: f64,
    /// Cross-check against the exhaustive oracle (small systems only).
    #[arg(long)]
    verify: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Network sizes, comma-separated (e.g. 32,64,128).
    #[arg(long = "n-list")]
    n_list: String,
    /// Energy multiplier exponents j (k = 2^j): comma list or "lo..hi".
    #[arg(long = "k-exponents", default_value = "1..25")]
    k_exponents: String,
    /// Base RNG seed; instance i retries with seed+1, … on generation failure.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative energy slack passed to every bisection run.
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    /// Bisection accuracy; 1 disables the search and runs one greedy pass.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Draw no diagonal entries when generating networks.
    #[arg(long = "no-self-loops")]
    no_self_loops: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Number of nodes in the chain.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ErArgs {
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw no diagonal entries.
    #[arg(long = "no-self-loops")]
    no_self_loops: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Path to a system JSON document.
    #[arg(long)]
    system: PathBuf,
    /// Initial state, comma-separated; defaults to the origin.
    #[arg(long)]
    x0: Option<String>,
    /// Target state, comma-separated; defaults to all ones.
    #[arg(long)]
    x1: Option<String>,
    /// Maximum admissible transfer energy E.
    #[arg(long)]
    energy: f64,
    /// Search the regularized objective φ ≤ E at this ε instead of exact
    /// energy with a controllability check.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Result document for `place`: 1-based actuator labels, the regularization
/// the selection ran at, the exact transfer energy of the selection, the
/// greedy cardinality bound, the (1+c)E energy target it was held to, and
/// the per-step (node, gain) trace.
#[derive(Debug, Serialize)]
struct PlaceOutput {
    actuators: Vec<usize>,
    epsilon: f64,
    energy: f64,
    #[serde(rename = "bound_F")]
    bound_f: f64,
    guarantee: f64,
    gain_trace: Vec<(usize, f64)>,
    energy_certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_min_cardinality: Option<usize>,
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    min_cardinality: usize,
    witnesses: Vec<Vec<usize>>,
    evaluated: usize,
}

/// Parse and run a full invocation. `argv` excludes nothing: pass
/// `std::env::args()` as-is. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests land here too; they are not errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Place(args) => cmd_place(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Chain(args) => cmd_chain(args),
        Command::Er(args) => cmd_er(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn parse_vector(text: &str, n: usize, flag: &str) -> Result<Vector> {
    let parts: std::result::Result<Vec<f64>, _> =
        text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values = parts.map_err(|e| {
        Error::InvalidParameter(format!("{flag}: cannot parse {text:?} as comma-separated reals: {e}"))
    })?;
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    Ok(Vector::from_vec(values))
}

fn load_system(path: &Path) -> Result<LinearSystem> {
    let text = fs::read_to_string(path)?;
    let doc: SystemDoc = serde_json::from_str(&text)?;
    doc.into_system()
}

fn transfer_from_flags(
    sys: &LinearSystem,
    x0: Option<&str>,
    x1: Option<&str>,
) -> Result<TransferSpec> {
    let n = sys.n();
    let x0 = match x0 {
        Some(text) => parse_vector(text, n, "--x0")?,
        None => Vector::zeros(n),
    };
    let x1 = match x1 {
        Some(text) => parse_vector(text, n, "--x1")?,
        None => Vector::from_element(n, 1.0),
    };
    TransferSpec::new(sys, x0, x1)
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_place(args: PlaceArgs) -> Result<()> {
    let sys = load_system(&args.system)?;
    let basis = build_gramian_basis(&sys)?;
    let transfer = transfer_from_flags(&sys, args.x0.as_deref(), args.x1.as_deref())?;
    let cfg = BisectionConfig::new(args.energy, args.c, args.a)?;
    let result = bisection_place(&basis, &transfer, &cfg)?;

    let oracle_min_cardinality = if args.verify {
        Some(verify_against_oracle(&basis, &transfer, &result, args.energy)?)
    } else {
        None
    };

    let output = PlaceOutput {
        actuators: result.delta.node_labels(),
        epsilon: result.epsilon_used,
        energy: result.exact_energy,
        bound_f: result.bound_f,
        guarantee: (1.0 + args.c) * args.energy,
        gain_trace: result
            .gain_trace
            .iter()
            .map(|&(i, g)| (i + 1, g))
            .collect(),
        energy_certified: result.energy_certified,
        oracle_min_cardinality,
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

/// Exhaustive cross-check of a placement: the selected cardinality must stay
/// within the multiplicative bound of the true minimum.
fn verify_against_oracle(
    basis: &GramianBasis,
    transfer: &TransferSpec,
    result: &PlacementResult,
    energy: f64,
) -> Result<usize> {
    const MAX_VERIFY_NODES: usize = 10;
    if basis.n() > MAX_VERIFY_NODES {
        return Err(Error::InvalidParameter(format!(
            "--verify supports at most {MAX_VERIFY_NODES} nodes; got {}",
            basis.n()
        )));
    }
    let oracle = brute_force_min_actuators(basis, transfer, energy)?;
    let allowed = result.bound_f * oracle.min_cardinality as f64;
    if (result.cardinality() as f64) > allowed {
        return Err(Error::NumericalConditioning(format!(
            "selection of {} actuators exceeds the guaranteed bound {:.6} × {} minimum",
            result.cardinality(),
            result.bound_f,
            oracle.min_cardinality
        )));
    }
    Ok(oracle.min_cardinality)
}

fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let parsed: std::result::Result<Vec<usize>, _> =
        text.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let ns =
        parsed.map_err(|e| Error::InvalidParameter(format!("--n-list: {e} in {text:?}")))?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::InvalidParameter(
            "--n-list needs at least one positive size".into(),
        ));
    }
    Ok(ns)
}

/// Exponent list: "lo..hi" (inclusive) or comma-separated integers, each at
/// most 60 so k = 2^j stays exactly representable.
fn parse_k_exponents(text: &str) -> Result<Vec<u32>> {
    const MAX_EXPONENT: u32 = 60;
    let exps: Vec<u32> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("--k-exponents: {e} in {text:?}")))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("--k-exponents: {e} in {text:?}")))?;
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "--k-exponents: empty range {text:?}"
            )));
        }
        (lo..=hi).collect()
    } else {
        let parsed: std::result::Result<Vec<u32>, _> =
            text.split(',').map(|s| s.trim().parse::<u32>()).collect();
        parsed.map_err(|e| Error::InvalidParameter(format!("--k-exponents: {e} in {text:?}")))?
    };
    if exps.is_empty() {
        return Err(Error::InvalidParameter(
            "--k-exponents needs at least one exponent".into(),
        ));
    }
    if let Some(&j) = exps.iter().find(|&&j| j > MAX_EXPONENT) {
        return Err(Error::InvalidParameter(format!(
            "--k-exponents: 2^{j} overflows the supported multiplier range (max exponent {MAX_EXPONENT})"
        )));
    }
    Ok(exps)
}

/// Generate a stabilized network and its Gramian basis, retrying nearby
/// seeds when a draw defeats stabilization.
fn generate_instance(
    n: usize,
    base_seed: u64,
    include_self_loops: bool,
) -> Result<(GramianBasis, LinearSystem, u64)> {
    const MAX_ATTEMPTS: u64 = 10;
    let mut last_err = None;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = base_seed.wrapping_add(attempt);
        match erdos_renyi_system_with(n, seed, include_self_loops)
            .and_then(|sys| build_gramian_basis(&sys).map(|b| (b, sys)))
        {
            Ok((basis, sys)) => return Ok((basis, sys, seed)),
            Err(err) => last_err = Some(err),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::InvalidParameter("network generation produced no instance".into())
    }))
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let ns = parse_n_list(&args.n_list)?;
    let exponents = parse_k_exponents(&args.k_exponents)?;
    if !args.c.is_finite() || args.c <= 0.0 {
        return Err(Error::InvalidParameter(
            "--c must be finite and positive".into(),
        ));
    }
    if !args.a.is_finite() || args.a <= 0.0 {
        return Err(Error::InvalidParameter(
            "--a must be finite and positive".into(),
        ));
    }

    let mut csv = String::from("n,k,E,cardinality,epsilon,F_bound,exact_energy,seed\n");
    for &n in &ns {
        let (basis, sys, seed) =
            match generate_instance(n, args.seed, !args.no_self_loops) {
                Ok(v) => v,
                Err(err) => {
                    eprintln!("skipped n={n} seed={}: {err}", args.seed);
                    continue;
                }
            };
        let transfer = transfer_from_flags(&sys, None, None)?;
        let bound = feasibility_bound(&basis, &transfer)?;
        for &j in &exponents {
            let k: u64 = 1 << j;
            let energy = k as f64 * bound;
            let cfg = BisectionConfig::new(energy, args.c, args.a)?;
            match bisection_place(&basis, &transfer, &cfg) {
                Ok(res) => {
                    csv.push_str(&format!(
                        "{n},{k},{E:.16e},{card},{eps:.16e},{f:.16e},{ex:.16e},{seed}\n",
                        E = energy,
                        card = res.cardinality(),
                        eps = res.epsilon_used,
                        f = res.bound_f,
                        ex = res.exact_energy,
                    ));
                }
                Err(err) => {
                    eprintln!("skipped n={n} seed={seed}: k=2^{j}: {err}");
                }
            }
        }
    }
    write_output(args.out.as_deref(), &csv)
}

fn cmd_chain(args: ChainArgs) -> Result<()> {
    let sys = integrator_chain(args.n)?;
    let mut text = serde_json::to_string_pretty(&SystemDoc::from_system(&sys))?;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

fn cmd_er(args: ErArgs) -> Result<()> {
    let sys = erdos_renyi_system_with(args.n, args.seed, !args.no_self_loops)?;
    let mut text = serde_json::to_string_pretty(&SystemDoc::from_system(&sys))?;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let sys = load_system(&args.system)?;
    let basis = build_gramian_basis(&sys)?;
    let transfer = transfer_from_flags(&sys, args.x0.as_deref(), args.x1.as_deref())?;
    let result = match args.epsilon {
        Some(eps) => {
            brute_force_min_actuators_regularized(&basis, &transfer, args.energy, eps)?
        }
        None => brute_force_min_actuators(&basis, &transfer, args.energy)?,
    };
    let output = OracleOutput {
        min_cardinality: result.min_cardinality,
        witnesses: result.witnesses.iter().map(|w| w.node_labels()).collect(),
        evaluated: result.evaluated,
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}
