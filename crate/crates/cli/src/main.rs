use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use graphcake::fairness::{brute_force_egalitarian, fairness_report, prop1_check};
use graphcake::generate::{generate, Family, GeneratorSpec};
use graphcake::io::{
    allocation_to_value, canonical_string, load_allocation, load_instance, report_to_value, save_instance,
    validity_to_value,
};
use graphcake::model::{validate_allocation, Graph, Instance};
use graphcake::psn::{psn_allocate, psn_certificate, psn_exact_check, PathSolver, PsnCertificate, PSN_EDGE_CAP};
use graphcake::rational::{format_q, parse_q};
use graphcake::solve::{default_epsilon, guarantee, solve, Algorithm};
use graphcake::Q;
use rayon::prelude::*;
use serde_json::{json, Value};

/// Thread count for `verify` when several allocations are checked at once.
const THREADS_VAR: &str = "GRAPHCAKE_THREADS";

#[derive(Parser)]
#[command(name = "graphcake", version, about = "Connected fair division of graphical cakes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write the allocation with its fairness report.
    Solve {
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        instance: PathBuf,
        /// Rational in `p/q` form.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        max_calls: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print one JSON line per trade to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Recompute the report of saved allocations and list every violation.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        allocation: Vec<PathBuf>,
    },
    /// Write a seeded random instance.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 3)]
        edges: usize,
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long, default_value_t = 2)]
        agents: usize,
        #[arg(long, default_value_t = 1)]
        pieces: usize,
        #[arg(long)]
        identical: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit the path-layout certificate of the instance's graph.
    Psn {
        #[arg(long)]
        instance: PathBuf,
        /// Also compute the exact piece count of the layout.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve on the laid-out path and map the shares back to the graph.
    PsnLift {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, value_enum)]
        solver: Option<SolverArg>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Best egalitarian value over connected splits of a tiny two-agent tree.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Carving,
    Identical4ef,
    Identical2eps,
}

impl From<SolverArg> for PathSolver {
    fn from(s: SolverArg) -> PathSolver {
        match s {
            SolverArg::Carving => PathSolver::Carving,
            SolverArg::Identical4ef => PathSolver::Identical4,
            SolverArg::Identical2eps => PathSolver::Identical2Eps,
        }
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_instance(&text).with_context(|| format!("loading {}", path.display()))
}

fn emit(value: &Value, output: Option<&Path>) -> Result<()> {
    let text = canonical_string(value);
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn epsilon_arg(text: Option<&str>) -> Result<Q> {
    match text {
        Some(t) => parse_q(t).with_context(|| format!("epsilon `{t}` is not a rational")),
        None => Ok(default_epsilon()),
    }
}

fn run_solve(
    algorithm: &str,
    instance: &Path,
    epsilon: Option<&str>,
    max_calls: Option<u64>,
    output: Option<&Path>,
    trace: bool,
) -> Result<ExitCode> {
    let algorithm: Algorithm = algorithm.parse()?;
    let inst = read_instance(instance)?;
    let epsilon = epsilon_arg(epsilon)?;
    let solution = solve(&inst, algorithm, &epsilon, max_calls).with_context(|| format!("{} failed", algorithm.name()))?;
    if trace {
        let mut err = std::io::stderr().lock();
        for event in &solution.trace {
            let mut line = serde_json::to_value(event)?;
            line["trader"] = json!(event.trader + 1);
            writeln!(err, "{}", serde_json::to_string(&line)?)?;
        }
    }
    emit(&solution.to_value(&inst), output)?;
    if solution.bound_holds() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{}: the promised bound does not hold", algorithm.name());
        Ok(ExitCode::FAILURE)
    }
}

/// Recomputed report plus every violation found for one allocation file.
fn verify_one(inst: &Instance, path: &Path) -> Result<(Value, Vec<String>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let graph = inst.graph();
    let allocation = load_allocation(graph, &text).with_context(|| format!("loading {}", path.display()))?;
    let mut violations = Vec::new();
    if allocation.shares.len() != inst.agent_count() {
        violations.push(format!(
            "{} shares for {} agents",
            allocation.shares.len(),
            inst.agent_count()
        ));
    }
    let validity = validate_allocation(inst, &allocation);
    for o in &validity.overlaps {
        violations.push(format!(
            "agents {} and {} overlap on {} [{}, {}]",
            o.agents.0 + 1,
            o.agents.1 + 1,
            graph.edge_name(o.segment.edge),
            format_q(&o.segment.lo),
            format_q(&o.segment.hi)
        ));
    }
    for g in &validity.gaps {
        violations.push(format!(
            "{} [{}, {}] is unallocated",
            graph.edge_name(g.edge),
            format_q(&g.lo),
            format_q(&g.hi)
        ));
    }
    for a in &validity.disconnected {
        violations.push(format!("share of agent {} is disconnected", a + 1));
    }
    let report = fairness_report(inst, &allocation);
    let implications = prop1_check(&report, inst.agent_count());
    if !implications.all_hold() {
        violations.push(format!("proportionality implications fail: {implications:?}"));
    }
    let metrics = report_to_value(&report, &implications);
    let recorded: Value = serde_json::from_str(&text)?;
    if let Some(saved) = recorded.get("metrics") {
        if saved != &metrics {
            violations.push("recorded metrics differ from the recomputed ones".into());
        }
    }
    if let Some(name) = recorded.get("algorithm").and_then(Value::as_str) {
        let algorithm: Algorithm = name.parse()?;
        let epsilon = match recorded.get("epsilon").and_then(Value::as_str) {
            Some(t) => parse_q(t)?,
            None => default_epsilon(),
        };
        if !guarantee(algorithm, inst.agent_count(), &epsilon).holds(&report) {
            violations.push(format!("the {name} guarantee does not hold"));
        }
    }
    let value = json!({
        "allocation": path.display().to_string(),
        "metrics": metrics,
        "validity": validity_to_value(graph, &validity),
        "violations": violations,
    });
    Ok((value, violations))
}

fn verify_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_VAR) {
        let threads: usize = text.parse().with_context(|| format!("{THREADS_VAR}=`{text}` is not a count"))?;
        builder = builder.num_threads(threads);
    }
    Ok(builder.build()?)
}

fn run_verify(instance: &Path, allocations: &[PathBuf]) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let results: Vec<(Value, Vec<String>)> = verify_pool()?.install(|| {
        allocations
            .par_iter()
            .map(|path| verify_one(&inst, path))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut clean = true;
    for (path, (_, violations)) in allocations.iter().zip(&results) {
        for v in violations {
            clean = false;
            eprintln!("{}: {v}", path.display());
        }
    }
    let value = if results.len() == 1 {
        results[0].0.clone()
    } else {
        Value::Array(results.into_iter().map(|(v, _)| v).collect())
    };
    emit(&value, None)?;
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn certificate_value(graph: &Graph, cert: &PsnCertificate, exact: Option<usize>) -> Value {
    let slots: Vec<Value> = cert
        .bijection
        .order
        .iter()
        .zip(&cert.bijection.right_is_hi)
        .map(|(&e, &right_is_hi)| {
            let (a, b) = graph.endpoints(e);
            let (left, right) = if right_is_hi { (a, b) } else { (b, a) };
            json!({
                "edge": graph.edge_name(e),
                "left": graph.vertex_name(left),
                "right": graph.vertex_name(right),
            })
        })
        .collect();
    json!({
        "bound": cert.bound,
        "construction": cert.construction,
        "root": graph.vertex_name(cert.root),
        "height": cert.height,
        "diameter": cert.diameter,
        "diameter_search": if cert.exhaustive { "exhaustive" } else { "heuristic" },
        "spanning_tree": cert.spanning_tree.iter().map(|&e| graph.edge_name(e)).collect::<Vec<_>>(),
        "pendants": cert
            .pendants
            .iter()
            .map(|&(e, v)| json!({ "edge": graph.edge_name(e), "at": graph.vertex_name(v) }))
            .collect::<Vec<_>>(),
        "order": slots,
        "exact_psn": exact,
    })
}

fn run_psn(instance: &Path, exact: bool, output: Option<&Path>) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let graph = inst.graph();
    let cert = psn_certificate(graph)?;
    let measured = if exact {
        if graph.edge_count() > PSN_EDGE_CAP {
            bail!("--exact handles at most {PSN_EDGE_CAP} edges");
        }
        Some(psn_exact_check(graph, &cert.bijection)?)
    } else {
        None
    };
    emit(&certificate_value(graph, &cert, measured), output)?;
    Ok(match measured {
        Some(p) if p > cert.bound => ExitCode::FAILURE,
        _ => ExitCode::SUCCESS,
    })
}

fn run_psn_lift(
    instance: &Path,
    epsilon: Option<&str>,
    solver: Option<SolverArg>,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let epsilon = epsilon_arg(epsilon)?;
    let solver = solver.map_or_else(|| PathSolver::default_for(&inst), PathSolver::from);
    let run = psn_allocate(&inst, &epsilon, solver)?;
    let graph = inst.graph();
    let report = fairness_report(&inst, &run.allocation);
    let implications = prop1_check(&report, inst.agent_count());
    let validity = validate_allocation(&inst, &run.allocation);
    let value = json!({
        "shares": allocation_to_value(graph, &run.allocation),
        "pieces": run.pieces,
        "certificate": certificate_value(graph, &run.certificate, None),
        "metrics": report_to_value(&report, &implications),
        "validity": validity_to_value(graph, &validity),
    });
    emit(&value, output)?;
    Ok(if validity.disjoint() && validity.complete() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_oracle(instance: &Path, grid: usize) -> Result<ExitCode> {
    let inst = read_instance(instance)?;
    let best = brute_force_egalitarian(&inst, grid)?;
    emit(&json!({ "exact": format_q(&best.exact), "grid": format_q(&best.grid) }), None)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            algorithm,
            instance,
            epsilon,
            max_calls,
            output,
            trace,
        } => run_solve(&algorithm, &instance, epsilon.as_deref(), max_calls, output.as_deref(), trace),
        Command::Verify { instance, allocation } => run_verify(&instance, &allocation),
        Command::Gen {
            family,
            edges,
            vertices,
            agents,
            pieces,
            identical,
            seed,
            output,
        } => {
            let spec = GeneratorSpec {
                family: family.parse::<Family>()?,
                edges,
                vertices,
                agents,
                pieces,
                identical,
                seed,
            };
            let text = save_instance(&generate(&spec)?);
            match output {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Psn { instance, exact, output } => run_psn(&instance, exact, output.as_deref()),
        Command::PsnLift {
            instance,
            epsilon,
            solver,
            output,
        } => run_psn_lift(&instance, epsilon.as_deref(), solver, output.as_deref()),
        Command::Oracle { instance, grid } => run_oracle(&instance, grid),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
