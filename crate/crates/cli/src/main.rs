//! `termsat`: simplify, prove and rewrite terms from the command line.

use std::fs;
use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use termsat_core::classic::DEFAULT_STEP_LIMIT;
use termsat_core::saturate::{DEFAULT_ITER_LIMIT, DEFAULT_NODE_LIMIT, DEFAULT_TIME_LIMIT_MS};
use termsat_core::{
    extract_best, parse_term, prove_equal, rewrite_fixpoint, run_saturation_with, CostFunction,
    EClassId, EGraph, EGraphError, OpWeights, ProofOutcome, RewriteStatus, SaturateError,
    SaturationParams, Scheduler, StopReason, Term, Theory,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INCONSISTENT: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_NO_FIXPOINT: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "termsat",
    version,
    about = "Term rewriting by equality saturation or classic rewriting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Saturate an expression and print its cheapest equivalent.
    Simplify(Opts),
    /// Try to prove `--expr` equal to `--expr2`.
    Check(Opts),
    /// Rewrite with the rules in order until nothing applies.
    Classic(Opts),
    /// Saturate an expression and print the e-graph as Graphviz DOT.
    Dot(Opts),
}

#[derive(clap::Args, Debug)]
struct Opts {
    /// Theory file.
    #[arg(long)]
    theory: PathBuf,
    /// Expression to work on.
    #[arg(long)]
    expr: String,
    /// Second expression (check only).
    #[arg(long)]
    expr2: Option<String>,
    /// `ast-size`, `ast-depth`, or a weights file of `<op> <weight>` lines.
    #[arg(long, default_value = "ast-size")]
    cost: String,
    #[arg(long, default_value_t = DEFAULT_ITER_LIMIT)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    nodes: usize,
    #[arg(long = "time-ms", default_value_t = DEFAULT_TIME_LIMIT_MS)]
    time_ms: u64,
    /// `simple` or `backoff`.
    #[arg(long, default_value = "backoff")]
    scheduler: Scheduler,
    /// Step limit for classic rewriting.
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
    steps: usize,
    /// Print a JSON document instead of plain text.
    #[arg(long)]
    json: bool,
    /// Write a DOT snapshot per iteration into this directory (simplify only).
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Print every rewrite step (classic only).
    #[arg(long)]
    trace: bool,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<SaturateError> for Failure {
    fn from(e: SaturateError) -> Self {
        let code = match e {
            SaturateError::Graph(EGraphError::Inconsistent { .. }) => EXIT_INCONSISTENT,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EGraphError> for Failure {
    fn from(e: EGraphError) -> Self {
        SaturateError::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    let (name, opts) = match &command {
        Command::Simplify(o) => ("simplify", o),
        Command::Check(o) => ("check", o),
        Command::Classic(o) => ("classic", o),
        Command::Dot(o) => ("dot", o),
    };
    if opts.expr2.is_some() && name != "check" {
        return Err(Failure::usage(format!(
            "--expr2 is only accepted by check, not {name}"
        )));
    }
    if opts.dot.is_some() && name != "simplify" {
        return Err(Failure::usage(format!(
            "--dot is only accepted by simplify, not {name}"
        )));
    }
    if opts.trace && name != "classic" {
        return Err(Failure::usage(format!(
            "--trace is only accepted by classic, not {name}"
        )));
    }
    let theory = load_theory(&opts.theory)?;
    let expr = parse_expr("--expr", &opts.expr)?;
    match command {
        Command::Simplify(o) => simplify(&o, &theory, &expr),
        Command::Check(o) => check(&o, &theory, &expr),
        Command::Classic(o) => classic(&o, &theory, &expr),
        Command::Dot(o) => dot(&o, &theory, &expr),
    }
}

fn load_theory(path: &Path) -> Result<Theory, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Theory::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_expr(flag: &str, text: &str) -> Result<Term, Failure> {
    parse_term(text).map_err(|e| Failure::usage(format!("{flag}: {e}")))
}

fn cost_function(spec: &str) -> Result<CostFunction, Failure> {
    match spec {
        "ast-size" => Ok(CostFunction::AstSize),
        "ast-depth" => Ok(CostFunction::AstDepth),
        path => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::usage(format!(
                    "--cost {path}: not ast-size, ast-depth or a readable file ({e})"
                ))
            })?;
            let weights =
                OpWeights::parse(&text).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
            Ok(CostFunction::OpWeights(weights))
        }
    }
}

fn params(o: &Opts) -> Result<SaturationParams, Failure> {
    let p = SaturationParams {
        iter_limit: o.iters,
        node_limit: o.nodes,
        time_limit_ms: o.time_ms,
        scheduler: o.scheduler,
        ..SaturationParams::default()
    };
    p.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(p)
}

/// Writes to stdout; a closed pipe is not worth a panic.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn print_json(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    emit(&format!("{text}\n"));
}

fn note_limit(reason: StopReason, iterations: usize) {
    if reason != StopReason::Saturated {
        eprintln!("note: stopped by {reason} after {iterations} iterations");
    }
}

struct Saturated {
    graph: EGraph,
    root: EClassId,
    report: Value,
    reason: StopReason,
    iterations: usize,
}

fn saturate(o: &Opts, theory: &Theory, expr: &Term) -> Result<Saturated, Failure> {
    let p = params(o)?;
    let mut g: EGraph = EGraph::default();
    let root = g.add_term(expr)?;
    g.rebuild()?;
    if let Some(dir) = &o.dot {
        fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    }
    let mut write_error = None;
    let report = run_saturation_with(&mut g, theory, &p, |g, i| {
        let Some(dir) = &o.dot else {
            return ControlFlow::Continue(());
        };
        let path = dir.join(format!("snap-{i:03}.dot"));
        match g
            .dump_dot()
            .map_err(|e| e.to_string())
            .and_then(|d| fs::write(&path, d).map_err(|e| e.to_string()))
        {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                write_error = Some(format!("{}: {e}", path.display()));
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(Failure::usage(e));
    }
    let (reason, iterations) = (report.stop_reason, report.iterations);
    let report = json!({ "params": p, "saturation": report });
    Ok(Saturated {
        graph: g,
        root,
        report,
        reason,
        iterations,
    })
}

fn simplify(o: &Opts, theory: &Theory, expr: &Term) -> Result<u8, Failure> {
    let cost = cost_function(&o.cost)?;
    let Saturated {
        graph,
        root,
        report,
        reason,
        iterations,
    } = saturate(o, theory, expr)?;
    let (best, c) = extract_best(&graph, root, &cost).map_err(|e| Failure::usage(e.to_string()))?;
    if o.json {
        print_json(&json!({
            "version": 1,
            "command": "simplify",
            "input": expr,
            "result": best,
            "cost": c.to_string(),
            "cost_function": cost.to_string(),
            "report": report,
        }));
    } else {
        emit(&format!("{best}\n"));
    }
    note_limit(reason, iterations);
    Ok(EXIT_OK)
}

fn dot(o: &Opts, theory: &Theory, expr: &Term) -> Result<u8, Failure> {
    let s = saturate(o, theory, expr)?;
    emit(&s.graph.dump_dot()?);
    note_limit(s.reason, s.iterations);
    Ok(EXIT_OK)
}

fn check(o: &Opts, theory: &Theory, expr: &Term) -> Result<u8, Failure> {
    let Some(text) = &o.expr2 else {
        return Err(Failure::usage("check needs --expr2"));
    };
    let expr2 = parse_expr("--expr2", text)?;
    let p = params(o)?;
    let mut g: EGraph = EGraph::default();
    let outcome = prove_equal(&mut g, theory, &p, expr, &expr2)?;
    let (verdict, code) = match &outcome {
        ProofOutcome::Equal(_) => ("equal".to_string(), EXIT_OK),
        ProofOutcome::Unknown(r) => (format!("unknown ({})", r.stop_reason), EXIT_UNKNOWN),
    };
    if o.json {
        print_json(&json!({
            "version": 1,
            "command": "check",
            "lhs": expr,
            "rhs": expr2,
            "equal": outcome.is_equal(),
            "verdict": verdict,
            "report": { "params": p, "saturation": outcome.report() },
        }));
    } else {
        emit(&format!("{verdict}\n"));
    }
    Ok(code)
}

fn classic(o: &Opts, theory: &Theory, expr: &Term) -> Result<u8, Failure> {
    if o.steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    let out = rewrite_fixpoint(expr, theory, o.steps);
    if o.json {
        let mut doc = json!({
            "version": 1,
            "command": "classic",
            "input": expr,
            "result": out.result,
            "status": out.status,
            "steps": out.steps,
            "step_limit": o.steps,
        });
        if o.trace {
            doc["trace"] = json!(out.trace);
        }
        print_json(&doc);
    } else {
        let mut text = String::new();
        if o.trace {
            for (i, s) in out.trace.iter().enumerate() {
                let n = i + 1;
                let (rule, path, before, after) = (&s.rule, &s.path, &s.before, &s.after);
                text += &format!("{n:>4}  {rule}  at {path:?}  {before}  ->  {after}\n");
            }
        }
        let unit = if out.steps == 1 { "step" } else { "steps" };
        text += &format!(
            "{}\n{} after {} {unit}\n",
            out.result, out.status, out.steps
        );
        emit(&text);
    }
    Ok(if out.status == RewriteStatus::Fixpoint {
        EXIT_OK
    } else {
        EXIT_NO_FIXPOINT
    })
}
