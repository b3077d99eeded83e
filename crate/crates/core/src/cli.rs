//! Command-line frontend. JSON payloads go to standard output, diagnostics
//! to standard error.
//!
//! Exit codes: 0 the property holds or the artifact was produced, 1 it fails
//! or no witness exists, 2 usage or input error, 3 budget exceeded.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::dsl::{parse_protocol, print_protocol};
use crate::model::execution::Execution;
use crate::model::policy::{BoundingFunction, ConstraintPolicy, Regime};
use crate::model::protocol::{BroadcastProtocol, StateId};
use crate::model::validate::validate_execution;
use crate::reductions::{
    compile_to_petri, encode_minsky, export_net, parse_machine, NetFormat, Reachability,
};
use crate::reductions::petri::{control_places, dead_places, explore_pruned, DEFAULT_MARKING_BUDGET};
use crate::saturation::decide_synchronization_unconstrained;
use crate::semantics::{search_synchronizing_execution, InitialEdges, SearchBudget, SearchOptions, Verdict};
use crate::trace::TraceFile;
use crate::transforms;

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rbnet", version, about = "Synchronization in reconfigurable broadcast networks")]
struct Cli {
    /// Worker threads for parallel search.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct PolicyArgs {
    /// unconstrained, k=K, balanced=K, local=K, strong=K or f=FUNCTION
    #[arg(long, default_value = "unconstrained")]
    policy: Regime,
    /// Maximum node degree in every configuration.
    #[arg(long)]
    degree: Option<usize>,
    /// Maximum simple-path length, in edges, in every configuration.
    #[arg(long)]
    path: Option<usize>,
}

impl PolicyArgs {
    fn policy(&self) -> ConstraintPolicy {
        let mut p = ConstraintPolicy::new(self.policy);
        p.topology.max_degree = self.degree;
        p.topology.max_path = self.path;
        p
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EdgesArg {
    All,
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Id,
    F,
    #[value(name = "1loc")]
    OneLoc,
    LiftK,
    Strong,
    Balanced,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    Petri,
    ProtocolFromMinsky,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Pnml,
    Net,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide or search for a synchronizing execution.
    Check {
        protocol: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Node count for bounded search.
        #[arg(long)]
        nodes: Option<usize>,
        /// Search every node count from 1 up to --nodes.
        #[arg(long)]
        exhaust: bool,
        #[arg(long, value_enum, default_value = "all")]
        initial_edges: EdgesArg,
        /// Deduplicated-state budget (default: RBNET_BUDGET_STATES or 5000000).
        #[arg(long)]
        max_states: Option<usize>,
        /// Write the witness trace here.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Print only {states, peak, depth, verdict}.
        #[arg(long)]
        stats: bool,
    },
    /// Replay a trace and check it against a policy.
    Validate {
        trace: PathBuf,
        /// Protocol file; defaults to the trace's protocol_ref, next to the trace.
        #[arg(long)]
        protocol: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Rewrite a trace into a more constrained one.
    Transform {
        trace: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        protocol: Option<PathBuf>,
        /// Constraint parameter for lift-k and strong.
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Bounding function for --kind f.
        #[arg(long, default_value = "id")]
        f: BoundingFunction,
        /// Number of copies for --kind balanced (default κ² + κ, at least 1).
        #[arg(long)]
        copies: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a protocol to a Petri net, or a counter machine to a protocol.
    Compile {
        input: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value = "net")]
        format: FormatArg,
        /// Run bounded marking reachability with this per-place token cap.
        #[arg(long)]
        verify_cap: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
struct Fail(i32, String);

type CmdResult = Result<(i32, Value), Fail>;

fn input_error(e: impl std::fmt::Display) -> Fail {
    Fail(EXIT_INPUT, e.to_string())
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    std::fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_protocol(path: &Path) -> Result<BroadcastProtocol, Fail> {
    parse_protocol(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn names(p: &BroadcastProtocol, set: &BTreeSet<StateId>) -> Vec<String> {
    set.iter().map(|&s| p.state_name(s).to_string()).collect()
}

/// Runs the command line `args` (program name first), writing the payload to
/// `out` and diagnostics to `err`, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_HOLDS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check {
            protocol,
            policy,
            nodes,
            exhaust,
            initial_edges,
            max_states,
            witness,
            stats,
        } => {
            let mut opts = SearchOptions::default().with_initial_edges(match initial_edges {
                EdgesArg::All => InitialEdges::All,
                EdgesArg::Empty => InitialEdges::EmptyOnly,
            });
            opts.budget = SearchBudget::from_env();
            if let Some(s) = max_states {
                opts.budget.max_states = s;
            }
            opts.threads = cli.threads;
            check(&protocol, &policy.policy(), nodes, exhaust, &opts, witness.as_deref(), stats, err)
        }
        Command::Validate { trace, protocol, policy } => validate(&trace, protocol.as_deref(), &policy.policy()),
        Command::Transform {
            trace,
            kind,
            protocol,
            k,
            f,
            copies,
            out: dest,
        } => transform(&trace, protocol.as_deref(), kind, k, f, copies, dest.as_deref(), err),
        Command::Compile {
            input,
            target,
            k,
            format,
            verify_cap,
            out: dest,
        } => compile(&input, target, k, format, verify_cap, dest.as_deref(), out, err),
    };
    match result {
        Ok((code, payload)) => {
            if !payload.is_null() {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&payload).expect("json values serialize"));
            }
            code
        }
        Err(Fail(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    path: &Path,
    policy: &ConstraintPolicy,
    nodes: Option<usize>,
    exhaust: bool,
    opts: &SearchOptions,
    witness: Option<&Path>,
    stats_only: bool,
    err: &mut dyn Write,
) -> CmdResult {
    let p = load_protocol(path)?;
    let Some(n) = nodes else {
        if policy.regime != Regime::Unconstrained || !policy.topology.is_unbounded() {
            return Err(input_error("--nodes is required unless the policy is unconstrained without topology bounds"));
        }
        let v = decide_synchronization_unconstrained(&p);
        let c = v.certificate();
        let _ = writeln!(err, "{}", if v.is_yes() { "YES" } else { "NO" });
        let history: Vec<Value> = c
            .history
            .iter()
            .map(|r| json!({ "forward": names(&p, &r.forward), "backward": names(&p, &r.backward) }))
            .collect();
        let payload = json!({
            "verdict": if v.is_yes() { "yes" } else { "no" },
            "iterations": c.iterations,
            "final_set": names(&p, &c.final_set),
            "meets_initial": c.meets_initial,
            "history": history,
        });
        return Ok((if v.is_yes() { EXIT_HOLDS } else { EXIT_FAILS }, payload));
    };
    let sizes = if exhaust { 1..=n } else { n..=n };
    let (mut states, mut peak, mut depth) = (0, 0, 0);
    let mut last = None;
    for m in sizes {
        let r = search_synchronizing_execution(&p, m, policy, opts).map_err(input_error)?;
        states += r.stats.states;
        peak = peak.max(r.stats.peak);
        depth = depth.max(r.stats.depth);
        let stop = r.verdict != Verdict::ExhaustedNoWitness;
        last = Some((m, r));
        if stop {
            break;
        }
    }
    let (m, r) = last.expect("at least one node count");
    let code = match r.verdict {
        Verdict::FoundWitness(_) => EXIT_HOLDS,
        Verdict::ExhaustedNoWitness => EXIT_FAILS,
        Verdict::BudgetExceeded => EXIT_BUDGET,
    };
    let trace = r.witness().map(|w| TraceFile::from_execution(&p, w, file_name(path)));
    match (&trace, r.witness()) {
        (Some(_), Some(w)) => {
            let _ = writeln!(err, "YES: {} nodes, {} steps, {} communications", m, w.len(), w.num_communications());
        }
        _ => {
            let _ = writeln!(err, "{} ({policy}, {} node{})", r.verdict_name(), if exhaust { format!("1..={n}") } else { n.to_string() }, if n == 1 { "" } else { "s" });
        }
    }
    if let (Some(dest), Some(t)) = (witness, &trace) {
        write_file(dest, &t.to_json())?;
    }
    let payload = if stats_only {
        json!({ "states": states, "peak": peak, "depth": depth, "verdict": r.verdict_name() })
    } else {
        json!({
            "verdict": r.verdict_name(),
            "policy": policy.to_string(),
            "nodes": m,
            "stats": { "states": states, "peak": peak, "depth": depth },
            "witness": trace.map(|t| serde_json::to_value(t).expect("traces serialize")),
        })
    };
    Ok((code, payload))
}

fn file_name(path: &Path) -> Option<String> {
    path.file_name().map(|f| f.to_string_lossy().into_owned())
}

/// Loads a trace and its protocol, the latter from `--protocol` or from the
/// trace's `protocol_ref` resolved next to the trace file.
fn load_trace(trace: &Path, protocol: Option<&Path>) -> Result<(BroadcastProtocol, TraceFile), Fail> {
    let file = TraceFile::parse(&read(trace)?).map_err(|e| input_error(format!("{}: {e}", trace.display())))?;
    let proto_path = match (protocol, &file.protocol_ref) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(r)) => trace.parent().unwrap_or(Path::new(".")).join(r),
        (None, None) => return Err(input_error("the trace has no protocol_ref; pass --protocol")),
    };
    Ok((load_protocol(&proto_path)?, file))
}

fn validate(trace: &Path, protocol: Option<&Path>, policy: &ConstraintPolicy) -> CmdResult {
    let (p, file) = load_trace(trace, protocol)?;
    let e = match file.to_execution(&p) {
        Ok(e) => e,
        Err(e) => {
            let step = match &e {
                crate::trace::TraceError::Replay(crate::model::execution::ReplayError::DisabledStep { index, .. })
                | crate::trace::TraceError::Replay(crate::model::execution::ReplayError::Alternation { index, .. }) => Some(*index),
                _ => None,
            };
            return Ok((EXIT_FAILS, json!({ "passed": false, "replay_error": e.to_string(), "step": step })));
        }
    };
    let report = validate_execution(&e, policy);
    let mut payload = serde_json::to_value(&report).expect("reports serialize");
    payload["synchronizes"] = json!(e.synchronizes(&p));
    Ok((if report.passed { EXIT_HOLDS } else { EXIT_FAILS }, payload))
}

/// Regime each transform promises for its output.
fn promised(kind: Kind, k: u32, f: BoundingFunction) -> Regime {
    match kind {
        Kind::Id => Regime::FConstrained(BoundingFunction::Identity),
        Kind::F => Regime::FConstrained(f),
        Kind::OneLoc => Regime::KLocallyConstrained(1),
        Kind::LiftK | Kind::Strong => Regime::StronglyKConstrained(k),
        Kind::Balanced => Regime::KConstrained(1),
    }
}

#[allow(clippy::too_many_arguments)]
fn transform(
    trace: &Path,
    protocol: Option<&Path>,
    kind: Kind,
    k: u32,
    f: BoundingFunction,
    copies: Option<usize>,
    dest: Option<&Path>,
    err: &mut dyn Write,
) -> CmdResult {
    let (p, file) = load_trace(trace, protocol)?;
    let e: Execution = file.to_execution(&p).map_err(|e| input_error(format!("{}: {e}", trace.display())))?;
    let out = match kind {
        Kind::Id => transforms::to_id_constrained(&p, &e),
        Kind::F => transforms::to_f_constrained(&p, &e, f),
        Kind::OneLoc => transforms::to_one_locally_constrained(&p, &e),
        Kind::LiftK => transforms::lift_one_to_k(&p, &e, k),
        Kind::Strong => transforms::weak_to_strong(&p, &e, k),
        Kind::Balanced => {
            let n = copies.unwrap_or_else(|| {
                let kappa = crate::model::validate::phase_decomposition(&crate::model::validate::atomic_word(&e), 1).kappa;
                (kappa * kappa + kappa).max(1)
            });
            transforms::balanced_to_constrained_k1(&p, &e, n)
        }
    }
    .map_err(input_error)?;

    // never emit a trace the validators reject
    let regime = promised(kind, k, f);
    let report = validate_execution(&out, &ConstraintPolicy::new(regime));
    let kept = (!e.synchronizes(&p) || out.synchronizes(&p)) && (!e.is_initial(&p) || out.is_initial(&p));
    if !report.passed || !kept {
        return Err(Fail(EXIT_FAILS, format!("transformed trace fails its own check against {regime}")));
    }
    let _ = writeln!(err, "{} nodes, {} steps, {regime}", out.num_nodes(), out.len());
    let t = TraceFile::from_execution(&p, &out, file.protocol_ref.clone());
    match dest {
        Some(path) => {
            write_file(path, &t.to_json())?;
            Ok((
                EXIT_HOLDS,
                json!({ "nodes": out.num_nodes(), "steps": out.len(), "policy": regime.to_string(), "out": path.display().to_string() }),
            ))
        }
        None => Ok((EXIT_HOLDS, serde_json::to_value(t).expect("traces serialize"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn compile(
    input: &Path,
    target: Target,
    k: usize,
    format: FormatArg,
    verify_cap: Option<u32>,
    dest: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let emit = |text: &str, out: &mut dyn Write| -> Result<(), Fail> {
        match dest {
            Some(path) => write_file(path, text),
            None => out.write_all(text.as_bytes()).map_err(input_error),
        }
    };
    match target {
        Target::ProtocolFromMinsky => {
            let m = parse_machine(&read(input)?).map_err(|e| input_error(format!("{}: {e}", input.display())))?;
            let enc = encode_minsky(&m).map_err(input_error)?;
            let text = print_protocol(&enc.protocol);
            if parse_protocol(&text).as_ref() != Ok(&enc.protocol) {
                return Err(Fail(EXIT_FAILS, "encoded protocol does not re-parse to itself".into()));
            }
            let _ = writeln!(err, "{} states, {} messages", enc.protocol.num_states(), enc.protocol.num_messages());
            emit(&text, out)?;
            Ok((EXIT_HOLDS, Value::Null))
        }
        Target::Petri => {
            if k == 0 {
                return Err(input_error("--k must be at least 1"));
            }
            let p = load_protocol(input)?;
            let net = compile_to_petri(&p, k);
            let fmt = match format {
                FormatArg::Pnml => NetFormat::Pnml,
                FormatArg::Net => NetFormat::DotNet,
            };
            emit(&export_net(&net, fmt), out)?;
            let mut summary = json!({ "places": net.places.len(), "transitions": net.transitions.len() });
            let mut code = EXIT_HOLDS;
            if let Some(cap) = verify_cap {
                let dead = dead_places(&p, &net);
                let report = explore_pruned(&net, cap, DEFAULT_MARKING_BUDGET, &control_places(&net), &dead);
                if report.invariant_violations > 0 {
                    return Err(Fail(EXIT_FAILS, format!("{} markings break the control-token invariant", report.invariant_violations)));
                }
                let r = report.outcome;
                code = match r {
                    Reachability::Reached(_) => EXIT_HOLDS,
                    Reachability::NotReachedWithinCap => EXIT_FAILS,
                    Reachability::BudgetExceeded(_) => EXIT_BUDGET,
                };
                summary["cap"] = json!(cap);
                summary["explored"] = json!(report.explored);
                summary["verdict"] = json!(match &r {
                    Reachability::Reached(_) => "reached",
                    Reachability::NotReachedWithinCap => "not_reached_within_cap",
                    Reachability::BudgetExceeded(_) => "budget_exceeded",
                });
                if let Reachability::Reached(seq) = &r {
                    summary["firing"] = json!(seq.iter().map(|&t| net.transitions[t].name.clone()).collect::<Vec<_>>());
                }
            }
            if dest.is_some() {
                Ok((code, summary))
            } else {
                let _ = writeln!(err, "{summary}");
                Ok((code, Value::Null))
            }
        }
    }
}
