//! Operational semantics of discrete systems (tick and counter flavors)
//! and the explicit-state reachability oracle.
//!
//! A tick step moves every process simultaneously along one of its tick
//! transitions and is enabled only when every process has one. All other
//! steps are asynchronous moves of a single process.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::DelayDomain;
use crate::network::{cartesian, Network, Op, ResolvedTarget};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GlobalConfig {
    /// Current location index per process.
    pub locs: Vec<u32>,
    /// Message indices per channel, head (oldest) first.
    pub channels: Vec<Vec<u32>>,
    /// Counter values per process.
    pub counters: Vec<Vec<u64>>,
    /// Global tick rounds so far.
    pub ticks: u64,
}

impl GlobalConfig {
    /// Deterministic byte encoding. With `with_ticks = false` the encoding
    /// identifies configurations that differ only in elapsed rounds, which
    /// have identical futures.
    pub fn canonical_bytes(&self, with_ticks: bool) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.locs.len());
        let mut put = |v: u64| {
            let mut v = v;
            loop {
                let b = (v & 0x7f) as u8;
                v >>= 7;
                if v == 0 {
                    out.push(b);
                    break;
                }
                out.push(b | 0x80);
            }
        };
        for &l in &self.locs {
            put(l as u64);
        }
        for ch in &self.channels {
            put(ch.len() as u64);
            for &m in ch {
                put(m as u64);
            }
        }
        for cs in &self.counters {
            for &c in cs {
                put(c);
            }
        }
        if with_ticks {
            put(self.ticks);
        }
        out
    }

    pub fn max_channel_len(&self) -> usize {
        self.channels.iter().map(Vec::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum StepLabel {
    /// One process fires one of its transitions.
    Local { process: usize, transition: usize },
    /// Every process fires the listed tick transition (indexed by process).
    Tick { transitions: Vec<usize> },
}

impl StepLabel {
    pub fn processes(&self) -> Vec<usize> {
        match self {
            StepLabel::Local { process, .. } => vec![*process],
            StepLabel::Tick { transitions } => (0..transitions.len()).collect(),
        }
    }

    pub fn is_tick(&self) -> bool {
        matches!(self, StepLabel::Tick { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub label: StepLabel,
    pub config: GlobalConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub initial: GlobalConfig,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &GlobalConfig {
        self.steps.last().map_or(&self.initial, |s| &s.config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("explicit exploration needs a discrete system, got {0} time")]
    FlavorMismatch(DelayDomain),
    #[error("malformed configuration: {0}")]
    MalformedConfig(String),
}

pub fn initial_configs(net: &Network) -> Vec<GlobalConfig> {
    let choices: Vec<Vec<u32>> = net.processes.iter().map(|p| p.initial.clone()).collect();
    cartesian(&choices)
        .into_iter()
        .map(|locs| GlobalConfig {
            locs,
            channels: vec![Vec::new(); net.channels.len()],
            counters: net
                .processes
                .iter()
                .map(|p| vec![0; p.counters.len()])
                .collect(),
            ticks: 0,
        })
        .collect()
}

fn check_config(net: &Network, cfg: &GlobalConfig) -> Result<(), SemanticsError> {
    let bad = |m: String| Err(SemanticsError::MalformedConfig(m));
    if cfg.locs.len() != net.processes.len() {
        return bad(format!(
            "{} locations for {} processes",
            cfg.locs.len(),
            net.processes.len()
        ));
    }
    if cfg.channels.len() != net.channels.len() {
        return bad(format!(
            "{} channel words for {} channels",
            cfg.channels.len(),
            net.channels.len()
        ));
    }
    if cfg.counters.len() != net.processes.len() {
        return bad("counter vector count differs from process count".into());
    }
    for (i, p) in net.processes.iter().enumerate() {
        if cfg.locs[i] as usize >= p.locations.len() {
            return bad(format!("process {} at location index {}", p.name, cfg.locs[i]));
        }
        if cfg.counters[i].len() != p.counters.len() {
            return bad(format!("process {} has wrong counter arity", p.name));
        }
    }
    if cfg
        .channels
        .iter()
        .flatten()
        .any(|&m| m as usize >= net.messages.len())
    {
        return bad("channel holds a message outside the alphabet".into());
    }
    Ok(())
}

/// Fire transition `t` of process `p` if it is enabled.
fn fire_local(net: &Network, cfg: &GlobalConfig, p: usize, t: usize) -> Option<GlobalConfig> {
    let proc_ = &net.processes[p];
    let tr = proc_.transitions.get(t)?;
    if tr.from != cfg.locs[p] {
        return None;
    }
    let mut next = cfg.clone();
    match tr.op {
        Op::Tick => return None,
        Op::Internal => {}
        Op::Send { channel, message } => next.channels[channel].push(message),
        Op::Recv { channel, message } => {
            if next.channels[channel].first() != Some(&message) {
                return None;
            }
            next.channels[channel].remove(0);
        }
        Op::TestEmpty { channel } => {
            if !cfg.channels[channel].is_empty() {
                return None;
            }
        }
        Op::Inc(x) => next.counters[p][x] += 1,
        Op::Dec(x) => {
            if next.counters[p][x] == 0 {
                return None;
            }
            next.counters[p][x] -= 1;
        }
        Op::ZeroTest(x) => {
            if cfg.counters[p][x] != 0 {
                return None;
            }
        }
    }
    next.locs[p] = tr.to;
    Some(next)
}

fn fire_tick(net: &Network, cfg: &GlobalConfig, ts: &[usize]) -> Option<GlobalConfig> {
    if ts.len() != net.processes.len() || ts.is_empty() {
        return None;
    }
    let mut next = cfg.clone();
    for (p, &t) in ts.iter().enumerate() {
        let tr = net.processes[p].transitions.get(t)?;
        if tr.op != Op::Tick || tr.from != cfg.locs[p] {
            return None;
        }
        next.locs[p] = tr.to;
    }
    next.ticks += 1;
    Some(next)
}

/// Apply a step label, returning `None` when it is not enabled.
pub fn apply(net: &Network, cfg: &GlobalConfig, label: &StepLabel) -> Option<GlobalConfig> {
    match label {
        StepLabel::Local {
            process,
            transition,
        } => {
            if *process >= net.processes.len() {
                return None;
            }
            fire_local(net, cfg, *process, *transition)
        }
        StepLabel::Tick { transitions } => fire_tick(net, cfg, transitions),
    }
}

/// All enabled steps from `cfg`: asynchronous moves by process then
/// declaration order, followed by every combination of tick transitions.
pub fn successors(
    net: &Network,
    cfg: &GlobalConfig,
) -> Result<Vec<(StepLabel, GlobalConfig)>, SemanticsError> {
    check_config(net, cfg)?;
    let mut out = Vec::new();
    let mut tick_choices: Vec<Vec<usize>> = Vec::with_capacity(net.processes.len());
    for (p, proc_) in net.processes.iter().enumerate() {
        let mut ticks = Vec::new();
        for &t in &proc_.outgoing[cfg.locs[p] as usize] {
            if proc_.transitions[t].op == Op::Tick {
                ticks.push(t);
            } else if let Some(next) = fire_local(net, cfg, p, t) {
                out.push((
                    StepLabel::Local {
                        process: p,
                        transition: t,
                    },
                    next,
                ));
            }
        }
        tick_choices.push(ticks);
    }
    if !net.processes.is_empty() && tick_choices.iter().all(|c| !c.is_empty()) {
        for ts in cartesian(&tick_choices) {
            let next = fire_tick(net, cfg, &ts).expect("tick combination is enabled");
            out.push((StepLabel::Tick { transitions: ts }, next));
        }
    }
    Ok(out)
}

/// Target locations plus the system's acceptance flags.
pub fn accepts(net: &Network, target: &ResolvedTarget, cfg: &GlobalConfig) -> bool {
    target.matches(net, &cfg.locs)
        && (!net.acceptance.require_empty_channels || cfg.channels.iter().all(Vec::is_empty))
        && (!net.acceptance.require_zero_counters || cfg.counters.iter().flatten().all(|&c| c == 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Limits {
    /// Maximum length of any channel word; longer configurations are pruned.
    pub channel_bound: Option<usize>,
    /// Maximum number of steps from an initial configuration.
    pub depth: Option<usize>,
    /// Maximum number of distinct configurations stored.
    pub max_states: Option<usize>,
}

impl Limits {
    pub fn bounded(channel_bound: usize) -> Self {
        Self {
            channel_bound: Some(channel_bound),
            depth: None,
            max_states: Some(1_000_000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExploreStats {
    pub states: usize,
    pub transitions: usize,
    pub max_depth: usize,
    pub pruned_by_bound: usize,
    pub pruned_by_depth: usize,
    pub budget_exhausted: bool,
}

impl ExploreStats {
    pub fn pruned(&self) -> bool {
        self.pruned_by_bound > 0 || self.pruned_by_depth > 0 || self.budget_exhausted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ReachOutcome {
    /// A minimal-length accepting trace.
    Reachable(Trace),
    /// The whole state space was explored without any pruning.
    Unreachable(ExploreStats),
    /// Nothing found, but some part of the state space was cut off.
    BoundExhausted(ExploreStats),
}

impl ReachOutcome {
    pub fn is_definite(&self) -> bool {
        !matches!(self, ReachOutcome::BoundExhausted(_))
    }

    pub fn is_reachable(&self) -> bool {
        matches!(self, ReachOutcome::Reachable(_))
    }
}

/// Breadth-first reachability. Visited configurations are keyed without the
/// tick count, so a witness is minimal in steps and `Unreachable` is only
/// claimed when exploration finished without pruning.
pub fn reach_explicit(
    net: &Network,
    target: &ResolvedTarget,
    limits: Limits,
) -> Result<ReachOutcome, SemanticsError> {
    if net.delay == DelayDomain::Dense {
        return Err(SemanticsError::FlavorMismatch(net.delay));
    }
    let mut stats = ExploreStats::default();
    let mut configs: Vec<GlobalConfig> = Vec::new();
    let mut parent: Vec<Option<(usize, StepLabel)>> = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let trace_to = |configs: &Vec<GlobalConfig>, parent: &Vec<Option<(usize, StepLabel)>>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((p, label)) = &parent[i] {
            steps.push(TraceStep {
                label: label.clone(),
                config: configs[i].clone(),
            });
            i = *p;
        }
        steps.reverse();
        Trace {
            initial: configs[i].clone(),
            steps,
        }
    };

    for init in initial_configs(net) {
        let key = init.canonical_bytes(false);
        if index.contains_key(&key) {
            continue;
        }
        let i = configs.len();
        index.insert(key, i);
        let ok = accepts(net, target, &init);
        configs.push(init);
        parent.push(None);
        depth.push(0);
        stats.states += 1;
        if ok {
            return Ok(ReachOutcome::Reachable(trace_to(&configs, &parent, i)));
        }
        queue.push_back(i);
    }

    'outer: while let Some(u) = queue.pop_front() {
        let succs = successors(net, &configs[u])?;
        if limits.depth.is_some_and(|d| depth[u] >= d) {
            if succs
                .iter()
                .any(|(_, c)| !index.contains_key(&c.canonical_bytes(false)))
            {
                stats.pruned_by_depth += 1;
            }
            continue;
        }
        for (label, next) in succs {
            stats.transitions += 1;
            if limits
                .channel_bound
                .is_some_and(|b| next.max_channel_len() > b)
            {
                stats.pruned_by_bound += 1;
                continue;
            }
            let key = next.canonical_bytes(false);
            if index.contains_key(&key) {
                continue;
            }
            if limits.max_states.is_some_and(|m| configs.len() >= m) {
                stats.budget_exhausted = true;
                break 'outer;
            }
            let i = configs.len();
            index.insert(key, i);
            let ok = accepts(net, target, &next);
            configs.push(next);
            parent.push(Some((u, label)));
            depth.push(depth[u] + 1);
            stats.states += 1;
            stats.max_depth = stats.max_depth.max(depth[u] + 1);
            if ok {
                return Ok(ReachOutcome::Reachable(trace_to(&configs, &parent, i)));
            }
            queue.push_back(i);
        }
    }
    Ok(if stats.pruned() {
        ReachOutcome::BoundExhausted(stats)
    } else {
        ReachOutcome::Unreachable(stats)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {}: {reason}", OptionIndex(*.index))]
pub struct ReplayError {
    /// Index of the first offending step; `None` for a bad initial configuration.
    pub index: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for OptionIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(i) => write!(f, "{i}"),
            None => f.write_str("initial"),
        }
    }
}

struct OptionIndex(Option<usize>);

/// Check that `trace` is a run of `net`.
pub fn replay(net: &Network, trace: &Trace) -> Result<(), ReplayError> {
    if check_config(net, &trace.initial).is_err() || !initial_configs(net).contains(&trace.initial) {
        return Err(ReplayError {
            index: None,
            reason: "initial configuration is not initial".into(),
        });
    }
    let mut cur = &trace.initial;
    for (i, step) in trace.steps.iter().enumerate() {
        let fail = |reason: String| ReplayError {
            index: Some(i),
            reason,
        };
        if let StepLabel::Tick { transitions } = &step.label {
            if transitions.len() != net.processes.len() {
                return Err(fail(format!(
                    "tick step involves {} of {} processes",
                    transitions.len(),
                    net.processes.len()
                )));
            }
        }
        match apply(net, cur, &step.label) {
            None => return Err(fail("step is not enabled".into())),
            Some(next) if next != step.config => {
                return Err(fail("recorded configuration differs from the step's effect".into()))
            }
            Some(_) => {}
        }
        cur = &step.config;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// Uniform choice among enabled steps.
    Random,
    /// Successor indices (in [`successors`] order), one per step.
    Script(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Simulation {
    pub trace: Trace,
    /// No step was enabled before the requested number of steps.
    pub deadlock: bool,
    pub seed: u64,
}

/// A run of at most `steps` steps, deterministic for a given seed.
pub fn simulate(
    net: &Network,
    steps: usize,
    seed: u64,
    policy: &Policy,
) -> Result<Simulation, SemanticsError> {
    if net.delay == DelayDomain::Dense {
        return Err(SemanticsError::FlavorMismatch(net.delay));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inits = initial_configs(net);
    let Some(init) = (if inits.is_empty() {
        None
    } else {
        Some(inits[rng.gen_range(0..inits.len())].clone())
    }) else {
        return Err(SemanticsError::MalformedConfig("no initial configuration".into()));
    };
    let mut trace = Trace {
        initial: init,
        steps: Vec::new(),
    };
    let mut deadlock = false;
    for i in 0..steps {
        let mut succs = successors(net, trace.last())?;
        if succs.is_empty() {
            deadlock = true;
            break;
        }
        let pick = match policy {
            Policy::Random => rng.gen_range(0..succs.len()),
            Policy::Script(choices) => match choices.get(i) {
                Some(&c) if c < succs.len() => c,
                Some(&c) => {
                    return Err(SemanticsError::MalformedConfig(format!(
                        "script choice {c} at step {i} but only {} steps enabled",
                        succs.len()
                    )))
                }
                None => break,
            },
        };
        let (label, config) = succs.swap_remove(pick);
        trace.steps.push(TraceStep { label, config });
    }
    Ok(Simulation {
        trace,
        deadlock,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("step {step}: per-process tick counts diverge ({counts:?})")]
    TickSync { step: usize, counts: Vec<u64> },
    #[error("step {step}: tick counter {ticks} differs from process tick count {expected}")]
    TickCounter { step: usize, ticks: u64, expected: u64 },
    #[error("step {step}: channel {channel} delivered messages out of order")]
    Fifo { step: usize, channel: String },
}

/// Tick synchronization and FIFO order along a trace.
///
/// Per-process tick counts are recomputed from the step labels and must stay
/// equal to each other and to the configuration's round counter. For every
/// channel, the received messages must form a prefix of the sent messages.
pub fn check_trace_invariants(net: &Network, trace: &Trace) -> Result<(), InvariantViolation> {
    let n = net.processes.len();
    let mut per_proc = vec![trace.initial.ticks; n];
    let mut sent: Vec<Vec<u32>> = vec![Vec::new(); net.channels.len()];
    let mut received: Vec<Vec<u32>> = vec![Vec::new(); net.channels.len()];
    for (i, ch) in trace.initial.channels.iter().enumerate() {
        sent[i].extend(ch);
    }
    for (step, s) in trace.steps.iter().enumerate() {
        match &s.label {
            StepLabel::Tick { .. } => {
                for p in s.label.processes() {
                    per_proc[p] += 1;
                }
            }
            StepLabel::Local {
                process,
                transition,
            } => match net.processes[*process].transitions[*transition].op {
                Op::Send { channel, message } => sent[channel].push(message),
                Op::Recv { channel, message } => {
                    received[channel].push(message);
                    if !sent[channel].starts_with(&received[channel]) {
                        return Err(InvariantViolation::Fifo {
                            step,
                            channel: net.channels[channel].name.clone(),
                        });
                    }
                }
                _ => {}
            },
        }
        if per_proc.iter().any(|&c| c != per_proc[0]) {
            return Err(InvariantViolation::TickSync {
                step,
                counts: per_proc,
            });
        }
        if n > 0 && per_proc[0] != s.config.ticks {
            return Err(InvariantViolation::TickCounter {
                step,
                ticks: s.config.ticks,
                expected: per_proc[0],
            });
        }
        for (c, word) in s.config.channels.iter().enumerate() {
            if sent[c][received[c].len()..] != word[..] {
                return Err(InvariantViolation::Fifo {
                    step,
                    channel: net.channels[c].name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Rank of each process in a topological order of the channel graph, or
/// `None` when the channel graph has a directed cycle (including self-loops).
pub fn topological_ranks(net: &Network) -> Option<Vec<usize>> {
    let n = net.processes.len();
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for ch in &net.channels {
        indeg[ch.target] += 1;
        succ[ch.source].push(ch.target);
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&p| indeg[p] == 0).collect();
    let mut rank = vec![usize::MAX; n];
    let mut next = 0;
    while let Some(p) = ready.pop_first() {
        rank[p] = next;
        next += 1;
        for &q in &succ[p] {
            indeg[q] -= 1;
            if indeg[q] == 0 {
                ready.insert(q);
            }
        }
    }
    (next == n).then_some(rank)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// Any interleaving.
    Free,
    /// Within each tick round, processes move in non-decreasing rank order.
    SlotNormalized(Vec<usize>),
}

/// Every configuration (tick count included) reachable in at most `depth`
/// steps under the given scheduler.
pub fn reachable_within(
    net: &Network,
    depth: usize,
    schedule: &Schedule,
) -> Result<HashSet<GlobalConfig>, SemanticsError> {
    // scheduler state: minimum rank allowed to move next in this round
    let mut seen: HashSet<(GlobalConfig, usize)> = HashSet::new();
    let mut configs: HashSet<GlobalConfig> = HashSet::new();
    let mut frontier: Vec<(GlobalConfig, usize)> = Vec::new();
    for init in initial_configs(net) {
        if seen.insert((init.clone(), 0)) {
            configs.insert(init.clone());
            frontier.push((init, 0));
        }
    }
    for _ in 0..depth {
        let mut next_frontier = Vec::new();
        for (cfg, slot) in &frontier {
            for (label, next) in successors(net, cfg)? {
                let next_slot = match (schedule, &label) {
                    (Schedule::Free, _) => 0,
                    (Schedule::SlotNormalized(_), StepLabel::Tick { .. }) => 0,
                    (Schedule::SlotNormalized(rank), StepLabel::Local { process, .. }) => {
                        if rank[*process] < *slot {
                            continue;
                        }
                        rank[*process]
                    }
                };
                let state = (next, next_slot);
                if !seen.contains(&state) {
                    seen.insert(state.clone());
                    configs.insert(state.0.clone());
                    next_frontier.push(state);
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(configs)
}

fn word(net: &Network, w: &[u32]) -> String {
    if w.is_empty() {
        "ε".to_string()
    } else {
        w.iter()
            .map(|&m| net.messages[m as usize].as_str())
            .collect::<Vec<_>>()
            .join(".")
    }
}

pub fn label_text(net: &Network, label: &StepLabel) -> (String, String) {
    match label {
        StepLabel::Local {
            process,
            transition,
        } => (
            net.processes[*process].name.clone(),
            net.processes[*process].transitions[*transition].action.to_string(),
        ),
        StepLabel::Tick { .. } => (
            net.processes
                .iter()
                .map(|p| p.name.as_str())
                .collect::<Vec<_>>()
                .join(","),
            "tick".to_string(),
        ),
    }
}

/// Line-oriented trace export:
/// `step <i>: [<procs>] <action> ; channels: c=<word> ; ticks=<k>`.
pub fn format_trace(net: &Network, trace: &Trace) -> String {
    let channels = |cfg: &GlobalConfig| {
        net.channels
            .iter()
            .zip(&cfg.channels)
            .map(|(c, w)| format!("{}={}", c.name, word(net, w)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "init: [{}] ; channels: {} ; ticks={}",
        locs_text(net, &trace.initial),
        channels(&trace.initial),
        trace.initial.ticks
    );
    for (i, s) in trace.steps.iter().enumerate() {
        let (procs, action) = label_text(net, &s.label);
        let _ = writeln!(
            out,
            "step {}: [{procs}] {action} ; channels: {} ; ticks={}",
            i + 1,
            channels(&s.config),
            s.config.ticks
        );
    }
    out
}

fn locs_text(net: &Network, cfg: &GlobalConfig) -> String {
    net.processes
        .iter()
        .zip(&cfg.locs)
        .map(|(p, &l)| format!("{}={}", p.name, p.locations[l as usize]))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigDump {
    pub locations: std::collections::BTreeMap<String, String>,
    pub channels: std::collections::BTreeMap<String, Vec<String>>,
    pub counters: std::collections::BTreeMap<String, std::collections::BTreeMap<String, u64>>,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepDump {
    pub processes: Vec<String>,
    pub action: String,
    pub config: ConfigDump,
}

/// Name-based structured form of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceDump {
    pub initial: ConfigDump,
    pub steps: Vec<StepDump>,
}

pub fn dump_config(net: &Network, cfg: &GlobalConfig) -> ConfigDump {
    ConfigDump {
        locations: net
            .processes
            .iter()
            .zip(&cfg.locs)
            .map(|(p, &l)| (p.name.clone(), p.locations[l as usize].clone()))
            .collect(),
        channels: net
            .channels
            .iter()
            .zip(&cfg.channels)
            .map(|(c, w)| {
                (
                    c.name.clone(),
                    w.iter().map(|&m| net.messages[m as usize].clone()).collect(),
                )
            })
            .collect(),
        counters: net
            .processes
            .iter()
            .zip(&cfg.counters)
            .filter(|(p, _)| !p.counters.is_empty())
            .map(|(p, vals)| {
                (
                    p.name.clone(),
                    p.counters.iter().cloned().zip(vals.iter().copied()).collect(),
                )
            })
            .collect(),
        ticks: cfg.ticks,
    }
}

pub fn dump_trace(net: &Network, trace: &Trace) -> TraceDump {
    TraceDump {
        initial: dump_config(net, &trace.initial),
        steps: trace
            .steps
            .iter()
            .map(|s| {
                let (_, action) = label_text(net, &s.label);
                StepDump {
                    processes: s
                        .label
                        .processes()
                        .into_iter()
                        .map(|p| net.processes[p].name.clone())
                        .collect(),
                    action,
                    config: dump_config(net, &s.config),
                }
            })
            .collect(),
    }
}
