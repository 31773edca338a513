//! `ctp`: classify, check, transform and simulate communicating systems.
//!
//! Exit codes:
//! * classify: 0 decidable, 4 undecidable, 5 open
//! * check: 0 reachable, 1 unreachable (certified), 2 unknown or bound exhausted
//! * every command: 3 for input or precondition errors, 6 when `--verify`
//!   finds the two engines contradicting each other

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ctp_core::dense::{self, format_timed_trace, zone_reach, ZoneLimits, ZoneOutcome};
use ctp_core::gen::{self, GenProfile, Shape};
use ctp_core::reductions::{self, check_via_vass, tick_to_vass};
use ctp_core::semantics::{self, dump_trace, format_trace, reach_explicit, Policy, ReachOutcome};
use ctp_core::topology::{classify_system, is_polyforest, Status};
use ctp_core::vass::{karp_miller, materialize, KmResult, VassAnswer, VassBudget, VassMode};
use ctp_core::{parse, serialize, DelayDomain, Limits, Network, System, Target};

const VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_REACHABLE: u8 = 0;
const EXIT_UNREACHABLE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_UNDECIDABLE: u8 = 4;
const EXIT_OPEN: u8 = 5;
const EXIT_DIFFERENTIAL: u8 = 6;

#[derive(Parser)]
#[command(name = "ctp", version, about = "Communicating tick, counter and timed processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Engine {
    Auto,
    Explicit,
    Vass,
    Zone,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReduceTarget {
    Vass,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LiftSource {
    Counter,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Flavor {
    Discrete,
    Dense,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Decidability verdict from the topology.
    Classify { file: PathBuf },
    /// Reachability of a target (default: every process in a final location).
    Check {
        file: PathBuf,
        /// `p=loc,q=loc,...`
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_enum, default_value = "auto")]
        engine: Engine,
        /// Channel-length bound for the explicit and zone engines.
        #[arg(long, default_value_t = 4)]
        bound: usize,
        /// Maximum number of stored states (tree nodes for VASS).
        #[arg(long, env = "CTP_BUDGET", default_value_t = 1_000_000)]
        budget: usize,
        /// Step bound for the explicit engine.
        #[arg(long)]
        depth: Option<usize>,
        /// Cross-check the VASS answer against the explicit engine.
        #[arg(long)]
        verify: bool,
        /// Worker count; exploration is single-threaded.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Translate a system into another formalism.
    Reduce {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: ReduceTarget,
        #[arg(long)]
        target: Option<String>,
        /// Also write the Karp–Miller tree.
        #[arg(long)]
        tree: bool,
        #[arg(long, env = "CTP_BUDGET", default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Encode counters as channels.
    Lift {
        file: PathBuf,
        #[arg(long, value_enum)]
        from: LiftSource,
    },
    /// Region-based translation of a dense system into a tick system.
    Discretize { file: PathBuf },
    /// Random or scripted run.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated successor indices instead of random choices.
        #[arg(long)]
        script: Option<String>,
    },
    /// Generate a random system.
    Gen {
        /// polytree, polyforest, cycle, star-in, star-out or free
        #[arg(long, default_value = "polytree")]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "discrete")]
        flavor: Flavor,
        #[arg(long, default_value_t = 2)]
        min_processes: usize,
        #[arg(long, default_value_t = 3)]
        max_processes: usize,
        #[arg(long, default_value_t = 0)]
        testable: usize,
        #[arg(long, default_value_t = 1.0)]
        tick_density: f64,
        /// Output file (default `gen_<profile>_<seed>.ctp`).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize, Default)]
struct Stats {
    states: Option<usize>,
    tree_nodes: Option<usize>,
    wall_ms: u128,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    version: &'static str,
    input: Option<String>,
    input_sha256: Option<String>,
    seed: Option<u64>,
    engine: Option<String>,
    answer: String,
    detail: serde_json::Value,
    stats: Stats,
    witness_files: Vec<String>,
}

impl RunReport {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION,
            input: None,
            input_sha256: None,
            seed: None,
            engine: None,
            answer: String::new(),
            detail: serde_json::Value::Null,
            stats: Stats::default(),
            witness_files: Vec::new(),
        }
    }
}

/// Failure with a specific exit code.
struct Exit(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        Exit(EXIT_INPUT, e.into())
    }
}

fn input_error(e: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_INPUT, e.into())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct Input {
    path: PathBuf,
    text: String,
    system: System,
}

fn load(path: &Path) -> Result<Input, Exit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input_error)?;
    let system = parse(&text).map_err(|errs| {
        let msg = errs
            .iter()
            .map(|e| format!("{}:{e}", path.display()))
            .collect::<Vec<_>>()
            .join("\n");
        input_error(anyhow!(msg))
    })?;
    Ok(Input {
        path: path.to_path_buf(),
        text,
        system,
    })
}

impl Input {
    fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into())
    }

    /// `<dir>/<stem><suffix>` next to the input.
    fn sibling(&self, suffix: &str) -> PathBuf {
        self.path.with_file_name(format!("{}{suffix}", self.stem()))
    }

    fn fill(&self, report: &mut RunReport) {
        report.input = Some(self.path.display().to_string());
        report.input_sha256 = Some(hex(&Sha256::digest(self.text.as_bytes())));
    }
}

fn write(path: &Path, contents: &str, report: &mut RunReport) -> Result<(), Exit> {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(input_error)?;
    report.witness_files.push(path.display().to_string());
    Ok(())
}

fn save_report(path: &Path, report: &RunReport) -> Result<(), Exit> {
    let json = serde_json::to_string_pretty(report).map_err(input_error)?;
    fs::write(path, json + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(input_error)?;
    Ok(())
}

fn target_of(text: &Option<String>) -> Result<Target, Exit> {
    match text {
        None => Ok(Target::Final),
        Some(s) => Target::parse(s).map_err(|e| input_error(anyhow!(e))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Command) -> Result<u8, Exit> {
    let started = Instant::now();
    match cmd {
        Command::Classify { file } => {
            let input = load(&file)?;
            let verdict = classify_system(&input.system);
            print!("{}", verdict.report());
            let mut report = RunReport::new("classify");
            input.fill(&mut report);
            report.answer = verdict.status.to_string();
            report.detail = serde_json::to_value(&verdict).map_err(input_error)?;
            report.stats.wall_ms = started.elapsed().as_millis();
            save_report(&input.sibling(".report"), &report)?;
            Ok(match verdict.status {
                Status::Decidable => 0,
                Status::Undecidable => EXIT_UNDECIDABLE,
                Status::Open => EXIT_OPEN,
            })
        }
        Command::Check {
            file,
            target,
            engine,
            bound,
            budget,
            depth,
            verify,
            jobs,
        } => {
            if jobs != 1 {
                eprintln!("note: exploration is single-threaded; ignoring --jobs {jobs}");
            }
            let input = load(&file)?;
            let target = target_of(&target)?;
            let mut report = RunReport::new("check");
            input.fill(&mut report);
            let code = check(&input, &target, engine, bound, budget, depth, verify, &mut report)?;
            report.stats.wall_ms = started.elapsed().as_millis();
            save_report(&input.sibling(".report"), &report)?;
            println!("{}", report.answer);
            Ok(code)
        }
        Command::Reduce {
            file,
            to: ReduceTarget::Vass,
            target,
            tree,
            budget,
        } => {
            let input = load(&file)?;
            let target = target_of(&target)?;
            let v = tick_to_vass(&input.system, &target)?;
            let explicit = materialize(&v, budget)
                .ok_or_else(|| anyhow!("control product exceeds {budget} states"))?;
            let mut report = RunReport::new("reduce");
            input.fill(&mut report);
            report.answer = format!(
                "{} places, {} transitions, {} counters",
                explicit.states.len(),
                explicit.transitions.len(),
                explicit.counters.len()
            );
            write(&input.sibling(".vass"), &explicit.to_text(), &mut report)?;
            if tree {
                match karp_miller(&v, budget) {
                    KmResult::Complete(cov) => {
                        let mut text = cov.tree.to_text(&v);
                        for (i, b) in cov.bounded.iter().enumerate() {
                            text.push_str(&format!(
                                "# {}: {}\n",
                                ctp_core::vass::Vass::counter_name(&v, i),
                                if *b { "bounded" } else { "unbounded" }
                            ));
                        }
                        report.stats.tree_nodes = Some(cov.tree.nodes.len());
                        write(&input.sibling(".km"), &text, &mut report)?;
                    }
                    KmResult::Budget { nodes } => {
                        eprintln!("note: coverability tree exceeded {nodes} nodes; not written");
                    }
                }
            }
            report.stats.wall_ms = started.elapsed().as_millis();
            save_report(&input.sibling(".report"), &report)?;
            println!("{}", report.answer);
            Ok(0)
        }
        Command::Lift {
            file,
            from: LiftSource::Counter,
        } => {
            let input = load(&file)?;
            let lifted = reductions::counters_to_channels(&input.system)?;
            let mut report = RunReport::new("lift");
            input.fill(&mut report);
            report.answer = format!("{} channels", lifted.topology.channels.len());
            write(&input.sibling(".lifted.ctp"), &serialize(&lifted), &mut report)?;
            report.stats.wall_ms = started.elapsed().as_millis();
            save_report(&input.sibling(".report"), &report)?;
            println!("{}", report.answer);
            Ok(0)
        }
        Command::Discretize { file } => {
            let input = load(&file)?;
            let d = dense::discretize(&input.system)?;
            let mut report = RunReport::new("discretize");
            input.fill(&mut report);
            report.answer = d
                .system
                .processes
                .iter()
                .map(|(p, proc_)| format!("{p}: {} locations", proc_.locations.len()))
                .collect::<Vec<_>>()
                .join(", ");
            write(&input.sibling(".tick.ctp"), &serialize(&d.system), &mut report)?;
            report.stats.wall_ms = started.elapsed().as_millis();
            save_report(&input.sibling(".report"), &report)?;
            println!("{}", report.answer);
            Ok(0)
        }
        Command::Simulate {
            file,
            steps,
            seed,
            script,
        } => {
            let input = load(&file)?;
            let net = Network::new(&input.system)?;
            let policy = match script {
                None => Policy::Random,
                Some(s) => Policy::Script(
                    s.split(',')
                        .filter(|x| !x.trim().is_empty())
                        .map(|x| x.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .context("script must be comma-separated indices")?,
                ),
            };
            let sim = semantics::simulate(&net, steps, seed, &policy)?;
            let mut report = RunReport::new("simulate");
            input.fill(&mut report);
            report.seed = Some(seed);
            report.answer = format!(
                "{} steps{}",
                sim.trace.len(),
                if sim.deadlock { ", deadlock" } else { "" }
            );
            report.detail = serde_json::json!({ "deadlock": sim.deadlock });
            let text = format_trace(&net, &sim.trace);
            print!("{text}");
            write(&input.sibling(".trace"), &text, &mut report)?;
            report.stats.wall_ms = started.elapsed().as_millis();
            save_report(&input.sibling(".report"), &report)?;
            Ok(0)
        }
        Command::Gen {
            profile,
            seed,
            flavor,
            min_processes,
            max_processes,
            testable,
            tick_density,
            out,
        } => {
            let shape = Shape::parse(&profile)
                .ok_or_else(|| anyhow!("unknown profile {profile}"))?;
            let p = GenProfile {
                flavor: match flavor {
                    Flavor::Discrete => DelayDomain::Tick,
                    Flavor::Dense => DelayDomain::Dense,
                    Flavor::None => DelayDomain::None,
                },
                processes: (min_processes, max_processes),
                testable,
                tick_density,
                ..GenProfile::tick(shape)
            };
            let sys = gen::generate(&p, seed)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("gen_{profile}_{seed}.ctp")));
            let mut report = RunReport::new("gen");
            report.seed = Some(seed);
            report.answer = out.display().to_string();
            let text = serialize(&sys);
            report.input_sha256 = Some(hex(&Sha256::digest(text.as_bytes())));
            write(&out, &text, &mut report)?;
            report.stats.wall_ms = started.elapsed().as_millis();
            let stem = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "gen".into());
            save_report(&out.with_file_name(format!("{stem}.report")), &report)?;
            println!("{}", out.display());
            Ok(0)
        }
    }
}

fn explicit_answer(out: &ReachOutcome) -> &'static str {
    match out {
        ReachOutcome::Reachable(_) => "reachable",
        ReachOutcome::Unreachable(_) => "unreachable",
        ReachOutcome::BoundExhausted(_) => "unknown (bound exhausted)",
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    input: &Input,
    target: &Target,
    engine: Engine,
    bound: usize,
    budget: usize,
    depth: Option<usize>,
    verify: bool,
    report: &mut RunReport,
) -> Result<u8, Exit> {
    let sys = &input.system;
    let net = Network::new(sys)?;
    let resolved = net.resolve_target(target)?;
    let vass_ok = sys.delay == DelayDomain::Tick
        && sys.topology.testable_channels().next().is_none()
        && is_polyforest(&sys.topology).is_forest();
    let engine = match engine {
        Engine::Auto if sys.delay == DelayDomain::Dense => Engine::Zone,
        Engine::Auto if vass_ok => Engine::Vass,
        Engine::Auto => Engine::Explicit,
        e => e,
    };
    let limits = Limits {
        channel_bound: Some(bound),
        depth,
        max_states: Some(budget),
    };
    let run_explicit = |report: &mut RunReport| -> Result<ReachOutcome, Exit> {
        let out = reach_explicit(&net, &resolved, limits)?;
        report.stats.states = Some(match &out {
            ReachOutcome::Reachable(t) => t.len(),
            ReachOutcome::Unreachable(s) | ReachOutcome::BoundExhausted(s) => s.states,
        });
        Ok(out)
    };
    let write_trace = |trace: &semantics::Trace, report: &mut RunReport| -> Result<(), Exit> {
        write(&input.sibling(".witness"), &format_trace(&net, trace), report)?;
        let json = serde_json::to_string_pretty(&dump_trace(&net, trace)).map_err(input_error)?;
        write(&input.sibling(".witness.json"), &(json + "\n"), report)
    };

    match engine {
        Engine::Zone => {
            report.engine = Some("zone".into());
            let out = zone_reach(
                &net,
                &resolved,
                ZoneLimits {
                    channel_bound: bound,
                    max_states: budget,
                },
            )?;
            let code = match &out {
                ZoneOutcome::Reachable(tr) => {
                    dense::replay_timed(&net, &resolved, tr)
                        .map_err(|e| Exit(EXIT_DIFFERENTIAL, anyhow!("witness fails replay: {e}")))?;
                    write(&input.sibling(".witness"), &format_timed_trace(&net, tr), report)?;
                    let json = serde_json::to_string_pretty(tr).map_err(input_error)?;
                    write(&input.sibling(".witness.json"), &(json + "\n"), report)?;
                    report.answer = "reachable".into();
                    EXIT_REACHABLE
                }
                ZoneOutcome::Unreachable(s) => {
                    report.stats.states = Some(s.states);
                    report.answer = "unreachable".into();
                    EXIT_UNREACHABLE
                }
                ZoneOutcome::BoundExhausted(s) => {
                    report.stats.states = Some(s.states);
                    report.answer = "unknown (bound exhausted)".into();
                    EXIT_UNKNOWN
                }
            };
            Ok(code)
        }
        Engine::Explicit => {
            if sys.delay == DelayDomain::Dense {
                bail_input("the explicit engine needs a discrete system; use --engine zone")?;
            }
            report.engine = Some("explicit".into());
            let out = run_explicit(report)?;
            report.answer = explicit_answer(&out).into();
            Ok(match &out {
                ReachOutcome::Reachable(t) => {
                    write_trace(t, report)?;
                    EXIT_REACHABLE
                }
                ReachOutcome::Unreachable(s) => {
                    report.detail = serde_json::json!({ "certificate": "exhaustive", "states": s.states });
                    EXIT_UNREACHABLE
                }
                ReachOutcome::BoundExhausted(_) => EXIT_UNKNOWN,
            })
        }
        Engine::Vass | Engine::Auto => {
            report.engine = Some("vass".into());
            let vb = VassBudget {
                km_nodes: budget,
                states: budget,
                ..VassBudget::default()
            };
            let (_, check) = check_via_vass(sys, target, VassMode::Auto, &vb)?;
            report.stats.tree_nodes = Some(check.outcome.stats.km_nodes);
            report.stats.states = Some(check.outcome.stats.states);
            let mut code = match &check.outcome.answer {
                VassAnswer::Accepting(_) => {
                    report.answer = "reachable".into();
                    write_trace(check.trace.as_ref().expect("accepting paths are lifted"), report)?;
                    EXIT_REACHABLE
                }
                VassAnswer::Rejecting(cert) => {
                    report.answer = "unreachable".into();
                    report.detail = serde_json::json!({ "certificate": cert.to_string() });
                    EXIT_UNREACHABLE
                }
                VassAnswer::Unknown(why) => {
                    report.answer = "unknown".into();
                    report.detail = serde_json::json!({ "vass": why });
                    EXIT_UNKNOWN
                }
            };
            if code == EXIT_UNKNOWN || verify {
                let out = run_explicit(report)?;
                let explicit_code = match &out {
                    ReachOutcome::Reachable(_) => EXIT_REACHABLE,
                    ReachOutcome::Unreachable(_) => EXIT_UNREACHABLE,
                    ReachOutcome::BoundExhausted(_) => EXIT_UNKNOWN,
                };
                if code != EXIT_UNKNOWN && explicit_code != EXIT_UNKNOWN && explicit_code != code {
                    return Err(Exit(
                        EXIT_DIFFERENTIAL,
                        anyhow!(
                            "differential bug: vass says {}, explicit says {}",
                            report.answer,
                            explicit_answer(&out)
                        ),
                    ));
                }
                if code == EXIT_UNKNOWN && explicit_code != EXIT_UNKNOWN {
                    report.engine = Some("vass+explicit".into());
                    report.answer = explicit_answer(&out).into();
                    if let ReachOutcome::Reachable(t) = &out {
                        write_trace(t, report)?;
                    }
                    code = explicit_code;
                }
            }
            Ok(code)
        }
    }
}

fn bail_input(msg: &str) -> Result<(), Exit> {
    Err(input_error(anyhow!(msg.to_string())))
}
