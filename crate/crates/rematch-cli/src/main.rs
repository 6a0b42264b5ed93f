//! Command-line front end: validate scenario files, check outcomes, run
//! the matching processes, enumerate outcome sets, summarize seeded
//! batches, and export transition graphs as DOT.
//!
//! Exit codes: 0 ok, 1 domain failure (validation, non-convergence, bound
//! exceeded), 2 usage or I/O.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rematch_core::awareness::State;
use rematch_core::dynamics::{
    is_absorbing, is_self_confirming, is_stable, latent_blocking_pairs, transition,
    welfare_delta, Outcome, Welfare,
};
use rematch_core::flirting::{first_effective_flirt, is_flirt_proof_self_confirming};
use rematch_core::graph::{export_process_graph, ProcessKind};
use rematch_core::awareness::common_belief;
use rematch_core::dynamics::blocking_event;
use rematch_core::market::{Matching, Policy, ProcessResult, Side, Terminal};
use rematch_core::scenario::{find_builtin, load_scenario, parse_scenario_lenient, Scenario};
use rematch_core::trace::{write_trace, TraceHeader, TraceRecord};
use rematch_core::Error;

#[derive(Parser)]
#[command(
    name = "rematch",
    version,
    about = "Simulate and verify two-sided matching with evolving awareness",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// A scenario argument is a JSON file path or the name of a bundled
/// example (`example1` .. `example8`, or the full name).
const SCENARIO_HELP: &str = "Scenario file path or bundled name (example1..example8)";

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario and report every structural violation
    Validate {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
    },
    /// Report stability, absorbency, self-confirmation and flirt-proofness
    Check {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
        /// Matching as "m1:w1,m2:w2"; "-" or "" is everyone single
        #[arg(long)]
        matching: Option<String>,
        /// Awareness overrides as "m1:c1+c2|w2:-"
        #[arg(long)]
        awareness: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run one process and print the terminal outcome
    Simulate {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
        #[arg(long, value_enum, default_value_t = ProcessArg::P)]
        process: ProcessArg,
        /// Perturbation in (0,1); default 0.1 for p/q, unset = deterministic for classic
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        /// Pair selection for the deterministic classic process
        #[arg(long, value_enum, default_value_t = PolicyArg::MutualOptimal)]
        policy: PolicyArg,
        /// Starting matching (defaults to the scenario's initial matching)
        #[arg(long)]
        matching: Option<String>,
        /// Starting awareness overrides (defaults to the scenario's initial awareness)
        #[arg(long)]
        awareness: Option<String>,
        /// Write a JSON-lines trace of the run here
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List all self-confirming (or flirt-proof self-confirming) outcomes
    Enumerate {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
        /// Restrict to flirt-proof self-confirming outcomes
        #[arg(long)]
        flirt_proof: bool,
        /// Abort if the outcome space exceeds this many entries
        #[arg(long, default_value_t = 2_000_000)]
        bound: u128,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run many seeded simulations and tabulate terminals and step counts
    Montecarlo {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, value_enum, default_value_t = ProcessArg::P)]
        process: ProcessArg,
        /// Perturbation in (0,1); default 0.1 for p/q, unset = deterministic for classic
        #[arg(long)]
        epsilon: Option<f64>,
        /// Master seed; run k uses seed + k
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[arg(long)]
        matching: Option<String>,
        #[arg(long)]
        awareness: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Tally one player's welfare change across seeded runs
    Welfare {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
        /// Player label, e.g. m1 or w3
        #[arg(long)]
        player: String,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, value_enum, default_value_t = ProcessArg::P)]
        process: ProcessArg,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Master seed; run k uses seed + k
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[arg(long)]
        matching: Option<String>,
        #[arg(long)]
        awareness: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Export the reachable one-step transition graph as DOT
    ExportGraph {
        #[arg(help = SCENARIO_HELP)]
        scenario: String,
        #[arg(long, value_enum, default_value_t = GraphArg::P)]
        process: GraphArg,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Abort if the graph would exceed this many nodes
        #[arg(long, default_value_t = 100_000)]
        bound: usize,
        #[arg(long)]
        matching: Option<String>,
        #[arg(long)]
        awareness: Option<String>,
        /// Output file (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcessArg {
    /// Perturbed process with experience-driven discovery
    P,
    /// Communication-augmented process: flirts first, then a p step
    Q,
    /// Fully-aware satisfying process on the join-space rankings
    Classic,
}

impl ProcessArg {
    fn label(self) -> &'static str {
        match self {
            ProcessArg::P => "p",
            ProcessArg::Q => "q",
            ProcessArg::Classic => "classic",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// Satisfy the least mutually optimal pair, else the least optimal pair
    MutualOptimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphArg {
    P,
    Q,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn domain(message: impl Into<String>) -> CliError {
        CliError { code: 1, message: message.into() }
    }

    fn io(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = if matches!(e, Error::Io(_)) { 2 } else { 1 };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::io(e.to_string())
    }
}

fn main() {
    // Die quietly on SIGPIPE like other pipeline tools instead of
    // panicking mid-print when the reader closes early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Check { scenario, matching, awareness, format } => {
            cmd_check(&scenario, matching.as_deref(), awareness.as_deref(), format)
        }
        Command::Simulate {
            scenario,
            process,
            epsilon,
            seed,
            max_steps,
            policy,
            matching,
            awareness,
            trace,
            format,
        } => cmd_simulate(
            &scenario,
            process,
            epsilon,
            seed,
            max_steps,
            policy,
            matching.as_deref(),
            awareness.as_deref(),
            trace.as_deref(),
            format,
        ),
        Command::Enumerate { scenario, flirt_proof, bound, format } => {
            cmd_enumerate(&scenario, flirt_proof, bound, format)
        }
        Command::Montecarlo {
            scenario,
            runs,
            process,
            epsilon,
            seed,
            max_steps,
            matching,
            awareness,
            format,
        } => cmd_montecarlo(
            &scenario,
            runs,
            process,
            epsilon,
            seed,
            max_steps,
            matching.as_deref(),
            awareness.as_deref(),
            format,
        ),
        Command::Welfare {
            scenario,
            player,
            runs,
            process,
            epsilon,
            seed,
            max_steps,
            matching,
            awareness,
            format,
        } => cmd_welfare(
            &scenario,
            &player,
            runs,
            process,
            epsilon,
            seed,
            max_steps,
            matching.as_deref(),
            awareness.as_deref(),
            format,
        ),
        Command::ExportGraph { scenario, process, epsilon, bound, matching, awareness, output } => {
            cmd_export_graph(
                &scenario,
                process,
                epsilon,
                bound,
                matching.as_deref(),
                awareness.as_deref(),
                output.as_deref(),
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(load_scenario(path)?);
    }
    match find_builtin(arg) {
        Some(sc) => Ok(sc),
        None => Err(CliError::io(format!(
            "no file or bundled scenario named '{}' (bundled: example1..example8)",
            arg
        ))),
    }
}

fn resolve_outcome(
    sc: &Scenario,
    matching: Option<&str>,
    awareness: Option<&str>,
) -> Result<Outcome, CliError> {
    let mu = match matching {
        Some(text) => sc.parse_matching_arg(text)?,
        None => sc.initial_matching.clone(),
    };
    let omega = match awareness {
        Some(text) => sc.parse_awareness_arg(text)?,
        None => sc.initial_state(),
    };
    Ok(Outcome { matching: mu, state: omega })
}

/// Matching rendered with the scenario's own labels, e.g. `{m1-w2, m2-w1}`.
fn matching_text(sc: &Scenario, mu: &Matching) -> String {
    let pairs: Vec<String> = mu
        .matched_pairs()
        .iter()
        .map(|&(m, w)| {
            format!(
                "{}-{}",
                sc.prefs.label_of(rematch_core::market::PlayerId::man(m)),
                sc.prefs.label_of(rematch_core::market::PlayerId::woman(w))
            )
        })
        .collect();
    format!("{{{}}}", pairs.join(", "))
}

fn outcome_text(sc: &Scenario, o: &Outcome) -> String {
    format!("{} | {}", matching_text(sc, &o.matching), sc.awareness_label(&o.state))
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(arg: &str) -> Result<(), CliError> {
    let path = Path::new(arg);
    let sc = if path.exists() {
        let text = fs::read_to_string(path)?;
        parse_scenario_lenient(&text)?
    } else {
        match find_builtin(arg) {
            Some(sc) => sc,
            None => {
                return Err(CliError::io(format!(
                    "no file or bundled scenario named '{}' (bundled: example1..example8)",
                    arg
                )))
            }
        }
    };
    let violations = sc.structure_violations();
    if violations.is_empty() {
        println!(
            "ok: {} ({} men, {} women, {} characteristics, {})",
            sc.name,
            sc.prefs.n_men(),
            sc.prefs.n_women(),
            sc.prefs.chars.len(),
            sc.digest()
        );
        Ok(())
    } else {
        for v in &violations {
            println!("violation {}", v);
        }
        Err(CliError::domain(format!(
            "{} structural violation(s) in {}",
            violations.len(),
            sc.name
        )))
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(
    arg: &str,
    matching: Option<&str>,
    awareness: Option<&str>,
    format: Format,
) -> Result<(), CliError> {
    let sc = load(arg)?;
    let o = resolve_outcome(&sc, matching, awareness)?;
    let stable = is_stable(&sc, &o.matching, &o.state);
    let absorbing = is_absorbing(&sc, &o.state, &o.matching);
    let self_confirming = is_self_confirming(&sc, &o.matching, &o.state);
    let flirt_proof = is_flirt_proof_self_confirming(&sc, &o.matching, &o.state);

    let mut notes: Vec<String> = Vec::new();
    if stable {
        for pair in latent_blocking_pairs(&sc, &o.matching, &o.state) {
            notes.push(format!(
                "blocking pair ({},{}) exists but lacks pairwise common belief",
                sc.prefs.label_of(pair.0),
                sc.prefs.label_of(pair.1)
            ));
        }
    } else {
        notes.push(instability_witness(&sc, &o));
    }
    if !absorbing {
        let next = transition(&sc, &o.state, &o.matching);
        for p in sc.prefs.players() {
            let before = o.state.awareness[sc.prefs.flat(p)];
            let gained = rematch_core::awareness::Space(
                next.awareness[sc.prefs.flat(p)].0 & !before.0,
            );
            if !gained.is_empty() {
                notes.push(format!(
                    "discovery raises {}'s awareness by {}",
                    sc.prefs.label_of(p),
                    sc.prefs.space_label(gained)
                ));
            }
        }
    }
    if self_confirming && !flirt_proof {
        if let Some((from, to, chars)) = first_effective_flirt(&sc, &o.state, &o.matching) {
            notes.push(format!(
                "flirt {} -> {} raises awareness of {}",
                sc.prefs.label_of(from),
                sc.prefs.label_of(to),
                sc.prefs.space_label(chars)
            ));
        }
    }

    match format {
        Format::Text => {
            println!("scenario: {}", sc.name);
            println!("matching: {}", matching_text(&sc, &o.matching));
            println!("awareness: {}", sc.awareness_label(&o.state));
            println!("stable: {}", stable);
            println!("absorbing: {}", absorbing);
            println!("self-confirming: {}", self_confirming);
            println!("flirt-proof-self-confirming: {}", flirt_proof);
            for n in &notes {
                println!("note: {}", n);
            }
        }
        Format::Json => {
            let doc = serde_json::json!({
                "scenario": sc.name,
                "matching": matching_text(&sc, &o.matching),
                "awareness": sc.awareness_label(&o.state),
                "stable": stable,
                "absorbing": absorbing,
                "self_confirming": self_confirming,
                "flirt_proof_self_confirming": flirt_proof,
                "notes": notes,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

/// Why an outcome is unstable: an effective divorce, or the first
/// commonly-believed blocking pair.
fn instability_witness(sc: &Scenario, o: &Outcome) -> String {
    let prefs = &sc.prefs;
    for i in prefs.players() {
        if let Some(q) = o.matching.partner(i) {
            let level = rematch_core::awareness::awareness_level(prefs, i, &o.state);
            if prefs.prefers_at(i, level, i, q) {
                return format!(
                    "{} effectively prefers staying single over {}",
                    prefs.label_of(i),
                    prefs.label_of(q)
                );
            }
        }
    }
    for m in prefs.side_players(Side::Man) {
        for w in prefs.side_players(Side::Woman) {
            if o.matching.partner(m) == Some(w) {
                continue;
            }
            let event = blocking_event(sc, m, w, &o.matching).expect("unmatched pair");
            if common_belief(prefs, m, w, &event, &o.state) {
                return format!(
                    "blocking pair ({},{}) has pairwise common belief",
                    prefs.label_of(m),
                    prefs.label_of(w)
                );
            }
        }
    }
    "unstable".to_string()
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    arg: &str,
    process: ProcessArg,
    epsilon: Option<f64>,
    seed: u64,
    max_steps: u64,
    policy: PolicyArg,
    matching: Option<&str>,
    awareness: Option<&str>,
    trace: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let sc = load(arg)?;
    let start = resolve_outcome(&sc, matching, awareness)?;

    if process == ProcessArg::Classic {
        let market = sc.classic_market();
        let core_policy = match policy {
            PolicyArg::MutualOptimal => Policy::MutualOptimalFirst,
        };
        let res = match epsilon {
            Some(eps) => rematch_core::market::run_perturbed_classic(
                &market,
                &start.matching,
                eps,
                seed,
                max_steps as usize,
            )?,
            None => rematch_core::market::run_deterministic(
                &market,
                &start.matching,
                &core_policy,
                max_steps as usize,
            )?,
        };
        if let Some(path) = trace {
            write_classic_trace(&sc, &res, &start.state, seed, epsilon, path)?;
        }
        let steps = res.path.len() - 1;
        return match res.terminal {
            Terminal::Stable(m) => {
                report_classic(&sc, format, "stable", &m, steps, None)?;
                Ok(())
            }
            Terminal::Cycle { entry, period } => {
                let m = res.path[entry].matching.clone();
                report_classic(&sc, format, "cycle", &m, steps, Some((entry, period)))?;
                Ok(())
            }
            Terminal::Exhausted(m) => {
                report_classic(&sc, format, "exhausted", &m, steps, None)?;
                Err(CliError::domain(format!(
                    "no stability or revisit within {} steps",
                    max_steps
                )))
            }
        };
    }

    let eps = epsilon.unwrap_or(0.1);
    let run = match process {
        ProcessArg::P => rematch_core::dynamics::run_p_process(&sc, &start, eps, seed, max_steps)?,
        ProcessArg::Q => rematch_core::flirting::run_q_process(&sc, &start, eps, seed, max_steps)?,
        ProcessArg::Classic => unreachable!(),
    };
    if let Some(path) = trace {
        let header = TraceHeader::new(&sc, seed, eps, process.label());
        let mut file = fs::File::create(path)?;
        write_trace(&mut file, &header, &run.records)?;
    }
    match format {
        Format::Text => {
            println!("scenario: {}", sc.name);
            println!("process: {} (epsilon {}, seed {})", process.label(), eps, seed);
            println!("terminal: {}", outcome_text(&sc, &run.terminal));
            println!("steps: {}", run.steps);
            println!("converged: {}", run.converged);
        }
        Format::Json => {
            let doc = serde_json::json!({
                "scenario": sc.name,
                "process": process.label(),
                "epsilon": eps,
                "seed": seed,
                "terminal": {
                    "matching": matching_text(&sc, &run.terminal.matching),
                    "awareness": sc.awareness_label(&run.terminal.state),
                },
                "steps": run.steps,
                "converged": run.converged,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    if run.converged {
        Ok(())
    } else {
        Err(CliError::domain(format!("did not converge within {} steps", max_steps)))
    }
}

fn report_classic(
    sc: &Scenario,
    format: Format,
    verdict: &str,
    m: &Matching,
    steps: usize,
    cycle: Option<(usize, usize)>,
) -> Result<(), CliError> {
    match format {
        Format::Text => {
            println!("scenario: {}", sc.name);
            println!("process: classic");
            match cycle {
                Some((entry, period)) => {
                    println!("terminal: cycle entered at step {}, period {}", entry, period);
                    println!("matching at cycle entry: {}", matching_text(sc, m));
                }
                None => println!("terminal: {} {}", verdict, matching_text(sc, m)),
            }
            println!("steps: {}", steps);
        }
        Format::Json => {
            let doc = serde_json::json!({
                "scenario": sc.name,
                "process": "classic",
                "verdict": verdict,
                "matching": matching_text(sc, m),
                "cycle": cycle.map(|(entry, period)| serde_json::json!({
                    "entry": entry,
                    "period": period,
                })),
                "steps": steps,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

/// Classic runs carry no awareness dynamics; snapshots reuse the start
/// state so traces stay well-formed.
fn write_classic_trace(
    sc: &Scenario,
    res: &ProcessResult,
    omega: &State,
    seed: u64,
    epsilon: Option<f64>,
    path: &Path,
) -> Result<(), CliError> {
    let header = TraceHeader::new(sc, seed, epsilon.unwrap_or(0.0), "classic");
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, step) in res.path.iter().enumerate().skip(1) {
        records.push(TraceRecord::snapshot(
            sc,
            i as u64,
            "satisfy",
            step.satisfied,
            &step.matching,
            omega,
            None,
        ));
    }
    let last = &res.path[res.path.len() - 1].matching;
    records.push(TraceRecord::snapshot(
        sc,
        res.path.len() as u64,
        "terminal",
        None,
        last,
        omega,
        None,
    ));
    let mut file = fs::File::create(path)?;
    write_trace(&mut file, &header, &records)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// enumerate
// ---------------------------------------------------------------------------

fn cmd_enumerate(arg: &str, flirt_proof: bool, bound: u128, format: Format) -> Result<(), CliError> {
    let sc = load(arg)?;
    let (kind, outcomes) = if flirt_proof {
        ("flirt-proof self-confirming", rematch_core::flirting::enumerate_flirt_proof(&sc, bound)?)
    } else {
        ("self-confirming", rematch_core::dynamics::enumerate_self_confirming(&sc, bound)?)
    };
    match format {
        Format::Text => {
            println!("{} outcomes of {} ({}):", kind, sc.name, outcomes.len());
            for o in &outcomes {
                println!("  {}", outcome_text(&sc, o));
            }
        }
        Format::Json => {
            let list: Vec<serde_json::Value> = outcomes
                .iter()
                .map(|o| {
                    serde_json::json!({
                        "matching": matching_text(&sc, &o.matching),
                        "awareness": sc.awareness_label(&o.state),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "scenario": sc.name,
                "kind": kind,
                "count": outcomes.len(),
                "outcomes": list,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// montecarlo
// ---------------------------------------------------------------------------

struct Batch {
    /// Terminal label -> run count, canonically ordered.
    buckets: std::collections::BTreeMap<String, u64>,
    steps: Vec<u64>,
    nonconverged: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    sc: &Scenario,
    runs: u64,
    process: ProcessArg,
    epsilon: Option<f64>,
    seed: u64,
    max_steps: u64,
    start: &Outcome,
    mut on_terminal: impl FnMut(&Outcome),
) -> Result<Batch, CliError> {
    let mut batch = Batch {
        buckets: std::collections::BTreeMap::new(),
        steps: Vec::new(),
        nonconverged: 0,
    };
    let market = if process == ProcessArg::Classic { Some(sc.classic_market()) } else { None };
    for k in 0..runs {
        let run_seed = seed.wrapping_add(k);
        match process {
            ProcessArg::Classic => {
                let market = market.as_ref().expect("built above");
                let res = match epsilon {
                    Some(eps) => rematch_core::market::run_perturbed_classic(
                        market,
                        &start.matching,
                        eps,
                        run_seed,
                        max_steps as usize,
                    )?,
                    None => rematch_core::market::run_deterministic(
                        market,
                        &start.matching,
                        &Policy::MutualOptimalFirst,
                        max_steps as usize,
                    )?,
                };
                let steps = (res.path.len() - 1) as u64;
                match res.terminal {
                    Terminal::Stable(m) => {
                        // Classic runs live on the join-space rankings, so
                        // welfare is judged at full awareness.
                        let full = State::fully_aware(
                            sc.prefs.join_space(),
                            sc.prefs.n_players(),
                        );
                        let o = Outcome { matching: m.clone(), state: full };
                        on_terminal(&o);
                        *batch.buckets.entry(matching_text(sc, &m)).or_insert(0) += 1;
                        batch.steps.push(steps);
                    }
                    Terminal::Cycle { entry, period } => {
                        let label = format!(
                            "cycle at {} (period {})",
                            matching_text(sc, &res.path[entry].matching),
                            period
                        );
                        *batch.buckets.entry(label).or_insert(0) += 1;
                        batch.steps.push(steps);
                    }
                    Terminal::Exhausted(_) => batch.nonconverged += 1,
                }
            }
            ProcessArg::P | ProcessArg::Q => {
                let eps = epsilon.unwrap_or(0.1);
                let run = match process {
                    ProcessArg::P => {
                        rematch_core::dynamics::run_p_process(sc, start, eps, run_seed, max_steps)?
                    }
                    _ => rematch_core::flirting::run_q_process(sc, start, eps, run_seed, max_steps)?,
                };
                if run.converged {
                    on_terminal(&run.terminal);
                    *batch.buckets.entry(outcome_text(sc, &run.terminal)).or_insert(0) += 1;
                    batch.steps.push(run.steps);
                } else {
                    batch.nonconverged += 1;
                }
            }
        }
    }
    Ok(batch)
}

fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

#[allow(clippy::too_many_arguments)]
fn cmd_montecarlo(
    arg: &str,
    runs: u64,
    process: ProcessArg,
    epsilon: Option<f64>,
    seed: u64,
    max_steps: u64,
    matching: Option<&str>,
    awareness: Option<&str>,
    format: Format,
) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::domain("runs must be at least 1"));
    }
    let sc = load(arg)?;
    let start = resolve_outcome(&sc, matching, awareness)?;
    let batch = run_batch(&sc, runs, process, epsilon, seed, max_steps, &start, |_| {})?;

    let mut sorted = batch.steps.clone();
    sorted.sort_unstable();
    let mean = if sorted.is_empty() {
        0.0
    } else {
        sorted.iter().sum::<u64>() as f64 / sorted.len() as f64
    };
    match format {
        Format::Text => {
            println!(
                "{}: {} runs, process {}, epsilon {}, seeds {}..{}",
                sc.name,
                runs,
                process.label(),
                epsilon.map_or_else(|| "none".to_string(), |e| e.to_string()),
                seed,
                seed.wrapping_add(runs - 1)
            );
            let width = batch.buckets.keys().map(|k| k.len()).max().unwrap_or(7).max(7);
            println!("{:<width$}  {:>6}  {:>7}", "outcome", "runs", "share");
            for (label, count) in &batch.buckets {
                println!(
                    "{:<width$}  {:>6}  {:>6.1}%",
                    label,
                    count,
                    100.0 * *count as f64 / runs as f64
                );
            }
            println!(
                "steps: mean {:.1}, p50 {}, p90 {}, max {}",
                mean,
                percentile(&sorted, 0.5),
                percentile(&sorted, 0.9),
                sorted.last().copied().unwrap_or(0)
            );
            println!("nonconverged: {}", batch.nonconverged);
        }
        Format::Json => {
            let outcomes: Vec<serde_json::Value> = batch
                .buckets
                .iter()
                .map(|(label, count)| {
                    serde_json::json!({
                        "outcome": label,
                        "runs": count,
                        "share": *count as f64 / runs as f64,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "scenario": sc.name,
                "process": process.label(),
                "epsilon": epsilon,
                "runs": runs,
                "seed": seed,
                "outcomes": outcomes,
                "steps": {
                    "mean": mean,
                    "p50": percentile(&sorted, 0.5),
                    "p90": percentile(&sorted, 0.9),
                    "max": sorted.last().copied().unwrap_or(0),
                },
                "nonconverged": batch.nonconverged,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// welfare
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_welfare(
    arg: &str,
    player: &str,
    runs: u64,
    process: ProcessArg,
    epsilon: Option<f64>,
    seed: u64,
    max_steps: u64,
    matching: Option<&str>,
    awareness: Option<&str>,
    format: Format,
) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::domain("runs must be at least 1"));
    }
    let sc = load(arg)?;
    let p = sc.prefs.parse_player(player)?;
    let start = resolve_outcome(&sc, matching, awareness)?;
    let mu0 = start.matching.clone();
    let mut tally: std::collections::BTreeMap<Welfare, u64> = std::collections::BTreeMap::new();
    let batch = run_batch(&sc, runs, process, epsilon, seed, max_steps, &start, |terminal| {
        let delta = welfare_delta(&sc, p, &mu0, &terminal.matching, &terminal.state);
        *tally.entry(delta).or_insert(0) += 1;
    })?;
    let converged = runs - batch.nonconverged;
    let get = |w: Welfare| tally.get(&w).copied().unwrap_or(0);
    match format {
        Format::Text => {
            println!(
                "{}: welfare of {} over {} runs, process {}",
                sc.name,
                player,
                runs,
                process.label()
            );
            for (name, w) in
                [("better", Welfare::Better), ("same", Welfare::Same), ("worse", Welfare::Worse)]
            {
                let count = get(w);
                let share = if converged == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / converged as f64
                };
                println!("{:<7} {:>6}  {:>6.1}%", name, count, share);
            }
            println!("nonconverged: {}", batch.nonconverged);
        }
        Format::Json => {
            let doc = serde_json::json!({
                "scenario": sc.name,
                "player": player,
                "process": process.label(),
                "runs": runs,
                "better": get(Welfare::Better),
                "same": get(Welfare::Same),
                "worse": get(Welfare::Worse),
                "nonconverged": batch.nonconverged,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// export-graph
// ---------------------------------------------------------------------------

fn cmd_export_graph(
    arg: &str,
    process: GraphArg,
    epsilon: f64,
    bound: usize,
    matching: Option<&str>,
    awareness: Option<&str>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let sc = load(arg)?;
    let start = resolve_outcome(&sc, matching, awareness)?;
    let kind = match process {
        GraphArg::P => ProcessKind::P,
        GraphArg::Q => ProcessKind::Q,
    };
    let mut buf: Vec<u8> = Vec::new();
    export_process_graph(&sc, kind, &start, epsilon, bound, &mut buf)?;
    match output {
        Some(path) => {
            fs::write(path, &buf)?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
