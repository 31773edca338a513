//! Core data types: topologies, process automata and whole systems.
//!
//! A [`System`] is a topology of processes joined by directed FIFO channels,
//! a delay domain shared by every process, and one automaton per process.
//! The three automaton flavors (tick, counter, timed) share one
//! [`Process`] representation; which features a process may use is decided
//! by the system's [`DelayDomain`] and checked by [`validate_system`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub type ProcId = String;
pub type ChannelId = String;
pub type Loc = String;
pub type Msg = String;

/// A directed FIFO channel between two processes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub source: ProcId,
    pub target: ProcId,
    /// Whether the receiver may test this channel for emptiness.
    pub testable: bool,
}

/// Processes, channels and the global message alphabet.
///
/// Parallel channels and self-loops are allowed; both make the topology a
/// non-polyforest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub processes: BTreeSet<ProcId>,
    pub channels: BTreeMap<ChannelId, Channel>,
    pub messages: BTreeSet<Msg>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_process(mut self, p: &str) -> Self {
        self.processes.insert(p.to_string());
        self
    }

    pub fn with_channel(mut self, id: &str, source: &str, target: &str, testable: bool) -> Self {
        self.processes.insert(source.to_string());
        self.processes.insert(target.to_string());
        self.channels.insert(
            id.to_string(),
            Channel {
                source: source.to_string(),
                target: target.to_string(),
                testable,
            },
        );
        self
    }

    pub fn with_message(mut self, m: &str) -> Self {
        self.messages.insert(m.to_string());
        self
    }

    pub fn testable_channels(&self) -> impl Iterator<Item = &ChannelId> {
        self.channels
            .iter()
            .filter(|(_, c)| c.testable)
            .map(|(id, _)| id)
    }
}

/// The domain of delay actions. `None` for counter systems, `Tick` for
/// discrete time, `Dense` for non-negative reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DelayDomain {
    None,
    Tick,
    Dense,
}

impl DelayDomain {
    pub fn keyword(self) -> &'static str {
        match self {
            DelayDomain::None => "none",
            DelayDomain::Tick => "discrete",
            DelayDomain::Dense => "dense",
        }
    }

    pub fn is_discrete(self) -> bool {
        !matches!(self, DelayDomain::Dense)
    }
}

impl fmt::Display for DelayDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Send { channel: ChannelId, message: Msg },
    Recv { channel: ChannelId, message: Msg },
    TestEmpty { channel: ChannelId },
    Internal(String),
    Tick,
    Inc(String),
    Dec(String),
    ZeroTest(String),
}

impl Action {
    pub fn channel(&self) -> Option<&str> {
        match self {
            Action::Send { channel, .. }
            | Action::Recv { channel, .. }
            | Action::TestEmpty { channel } => Some(channel),
            _ => None,
        }
    }

    pub fn counter(&self) -> Option<&str> {
        match self {
            Action::Inc(x) | Action::Dec(x) | Action::ZeroTest(x) => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Send { channel, message } => write!(f, "send({channel}, {message})"),
            Action::Recv { channel, message } => write!(f, "recv({channel}, {message})"),
            Action::TestEmpty { channel } => write!(f, "empty({channel})"),
            Action::Internal(a) => write!(f, "internal({a})"),
            Action::Tick => f.write_str("tick"),
            Action::Inc(x) => write!(f, "inc {x}"),
            Action::Dec(x) => write!(f, "dec {x}"),
            Action::ZeroTest(x) => write!(f, "ztest {x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// One conjunct `clock # constant` of a guard.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClockAtom {
    pub clock: String,
    pub op: CmpOp,
    pub constant: u32,
}

impl ClockAtom {
    pub fn new(clock: &str, op: CmpOp, constant: u32) -> Self {
        Self {
            clock: clock.to_string(),
            op,
            constant,
        }
    }
}

impl fmt::Display for ClockAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.clock, self.op.symbol(), self.constant)
    }
}

/// A transition rule. `guard` and `resets` are only meaningful in dense systems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: Loc,
    pub to: Loc,
    pub action: Action,
    pub guard: Vec<ClockAtom>,
    pub resets: BTreeSet<String>,
}

impl Transition {
    pub fn new(from: &str, to: &str, action: Action) -> Self {
        Self {
            from: from.to_string(),
            to: to.to_string(),
            action,
            guard: Vec::new(),
            resets: BTreeSet::new(),
        }
    }

    pub fn when(mut self, atom: ClockAtom) -> Self {
        self.guard.push(atom);
        self
    }

    pub fn reset(mut self, clock: &str) -> Self {
        self.resets.insert(clock.to_string());
        self
    }
}

/// A process automaton `(L, L_I, L_F, Δ)` with optional clocks or counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Process {
    pub locations: BTreeSet<Loc>,
    pub initial: BTreeSet<Loc>,
    pub finals: BTreeSet<Loc>,
    pub clocks: BTreeSet<String>,
    pub counters: BTreeSet<String>,
    pub transitions: Vec<Transition>,
}

impl Process {
    pub fn new(initial: &str) -> Self {
        let mut p = Self::default();
        p.locations.insert(initial.to_string());
        p.initial.insert(initial.to_string());
        p
    }

    pub fn with_final(mut self, l: &str) -> Self {
        self.locations.insert(l.to_string());
        self.finals.insert(l.to_string());
        self
    }

    pub fn with_clock(mut self, x: &str) -> Self {
        self.clocks.insert(x.to_string());
        self
    }

    pub fn with_counter(mut self, x: &str) -> Self {
        self.counters.insert(x.to_string());
        self
    }

    pub fn with(mut self, t: Transition) -> Self {
        self.add(t);
        self
    }

    pub fn add(&mut self, t: Transition) {
        self.locations.insert(t.from.clone());
        self.locations.insert(t.to.clone());
        self.transitions.push(t);
    }

    /// Largest constant used in any guard (0 when there are none).
    pub fn max_constant(&self) -> u32 {
        self.transitions
            .iter()
            .flat_map(|t| t.guard.iter().map(|a| a.constant))
            .max()
            .unwrap_or(0)
    }
}

/// Acceptance conditions applied on top of target locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acceptance {
    pub require_empty_channels: bool,
    pub require_zero_counters: bool,
    pub require_zero_clocks: bool,
}

impl Default for Acceptance {
    fn default() -> Self {
        Self {
            require_empty_channels: true,
            require_zero_counters: true,
            require_zero_clocks: true,
        }
    }
}

/// Byte range plus human position of a syntactic element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpanKey {
    System,
    Process(ProcId),
    Channel(ChannelId),
    Transition(ProcId, usize),
}

/// Source locations retained by the parser. Never part of structural equality.
#[derive(Debug, Clone, Default)]
pub struct SourceMap(BTreeMap<SpanKey, SourceSpan>);

impl SourceMap {
    pub fn insert(&mut self, key: SpanKey, span: SourceSpan) {
        self.0.insert(key, span);
    }

    pub fn get(&self, key: &SpanKey) -> Option<SourceSpan> {
        self.0.get(key).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for SourceMap {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    pub name: String,
    pub topology: Topology,
    pub delay: DelayDomain,
    pub processes: BTreeMap<ProcId, Process>,
    pub acceptance: Acceptance,
    pub source_map: SourceMap,
}

impl System {
    pub fn new(name: &str, delay: DelayDomain, topology: Topology) -> Self {
        Self {
            name: name.to_string(),
            topology,
            delay,
            processes: BTreeMap::new(),
            acceptance: Acceptance::default(),
            source_map: SourceMap::default(),
        }
    }

    pub fn with_process(mut self, id: &str, p: Process) -> Self {
        self.topology.processes.insert(id.to_string());
        self.processes.insert(id.to_string(), p);
        self
    }

    pub fn with_acceptance(mut self, acceptance: Acceptance) -> Self {
        self.acceptance = acceptance;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnknownProcess,
    UnknownChannel,
    UnknownMessage,
    UnknownClock,
    UnknownCounter,
    UnknownLocation,
    WrongEndpoint,
    NotTestable,
    FlavorMismatch,
    MissingInitial,
    ProcessMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
    pub process: Option<ProcId>,
    pub channel: Option<ChannelId>,
    pub span: Option<SourceSpan>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = self.span {
            write!(f, "{span}: ")?;
        }
        f.write_str(&self.message)
    }
}

struct Collector<'a> {
    sys: &'a System,
    out: Vec<Diagnostic>,
}

impl Collector<'_> {
    fn push(
        &mut self,
        kind: DiagnosticKind,
        message: String,
        process: Option<&str>,
        channel: Option<&str>,
        key: SpanKey,
    ) {
        self.out.push(Diagnostic {
            kind,
            message,
            process: process.map(str::to_string),
            channel: channel.map(str::to_string),
            span: self.sys.source_map.get(&key),
        });
    }
}

/// Check every structural invariant of a system. An empty result means the
/// system is well formed.
pub fn validate_system(sys: &System) -> Vec<Diagnostic> {
    use DiagnosticKind::*;
    let mut c = Collector {
        sys,
        out: Vec::new(),
    };
    let topo = &sys.topology;

    for (id, ch) in &topo.channels {
        for end in [&ch.source, &ch.target] {
            if !topo.processes.contains(end) {
                c.push(
                    UnknownProcess,
                    format!("channel {id} refers to undeclared process {end}"),
                    Some(end),
                    Some(id),
                    SpanKey::Channel(id.clone()),
                );
            }
        }
    }

    for p in &topo.processes {
        if !sys.processes.contains_key(p) {
            c.push(
                ProcessMismatch,
                format!("process {p} has no automaton"),
                Some(p),
                None,
                SpanKey::System,
            );
        }
    }

    for (pid, proc_) in &sys.processes {
        let pkey = SpanKey::Process(pid.clone());
        if !topo.processes.contains(pid) {
            c.push(
                ProcessMismatch,
                format!("automaton {pid} is not a process of the topology"),
                Some(pid),
                None,
                pkey.clone(),
            );
        }
        if proc_.initial.is_empty() {
            c.push(
                MissingInitial,
                format!("process {pid} has no initial location"),
                Some(pid),
                None,
                pkey.clone(),
            );
        }
        for l in proc_.initial.iter().chain(&proc_.finals) {
            if !proc_.locations.contains(l) {
                c.push(
                    UnknownLocation,
                    format!("process {pid}: location {l} is not declared"),
                    Some(pid),
                    None,
                    pkey.clone(),
                );
            }
        }
        if !proc_.clocks.is_empty() && sys.delay != DelayDomain::Dense {
            c.push(
                FlavorMismatch,
                format!("process {pid} declares clocks but the system is not dense"),
                Some(pid),
                None,
                pkey.clone(),
            );
        }
        if !proc_.counters.is_empty() && sys.delay != DelayDomain::None {
            c.push(
                FlavorMismatch,
                format!(
                    "process {pid} declares counters but the delay domain is {} (counter systems require none)",
                    sys.delay
                ),
                Some(pid),
                None,
                pkey.clone(),
            );
        }

        for (i, t) in proc_.transitions.iter().enumerate() {
            validate_transition(&mut c, pid, proc_, i, t);
        }
    }
    c.out
}

fn validate_transition(c: &mut Collector<'_>, pid: &str, proc_: &Process, i: usize, t: &Transition) {
    use DiagnosticKind::*;
    let sys = c.sys;
    let topo = &sys.topology;
    let key = || SpanKey::Transition(pid.to_string(), i);

    for l in [&t.from, &t.to] {
        if !proc_.locations.contains(l) {
            c.push(
                UnknownLocation,
                format!("process {pid}: location {l} is not declared"),
                Some(pid),
                None,
                key(),
            );
        }
    }

    match &t.action {
        Action::Send { channel, message } | Action::Recv { channel, message } => {
            let sending = matches!(t.action, Action::Send { .. });
            match topo.channels.get(channel) {
                None => c.push(
                    UnknownChannel,
                    format!("process {pid}: undeclared channel {channel}"),
                    Some(pid),
                    Some(channel),
                    key(),
                ),
                Some(ch) => {
                    let (end, role) = if sending {
                        (&ch.source, "source")
                    } else {
                        (&ch.target, "target")
                    };
                    if end != pid {
                        c.push(
                            WrongEndpoint,
                            format!(
                                "process {pid} {} on channel {channel} but is not its {role}",
                                if sending { "sends" } else { "receives" }
                            ),
                            Some(pid),
                            Some(channel),
                            key(),
                        );
                    }
                }
            }
            if !topo.messages.contains(message) {
                c.push(
                    UnknownMessage,
                    format!("process {pid}: undeclared message {message}"),
                    Some(pid),
                    Some(channel),
                    key(),
                );
            }
        }
        Action::TestEmpty { channel } => match topo.channels.get(channel) {
            None => c.push(
                UnknownChannel,
                format!("process {pid}: undeclared channel {channel}"),
                Some(pid),
                Some(channel),
                key(),
            ),
            Some(ch) => {
                if ch.target != pid {
                    c.push(
                        WrongEndpoint,
                        format!("process {pid} tests channel {channel} but is not its receiver"),
                        Some(pid),
                        Some(channel),
                        key(),
                    );
                }
                if !ch.testable {
                    c.push(
                        NotTestable,
                        format!("process {pid} tests channel {channel}, which is not testable"),
                        Some(pid),
                        Some(channel),
                        key(),
                    );
                }
            }
        },
        Action::Internal(_) => {}
        Action::Tick => {
            if sys.delay != DelayDomain::Tick {
                c.push(
                    FlavorMismatch,
                    format!("process {pid}: tick transition in a {} system", sys.delay),
                    Some(pid),
                    None,
                    key(),
                );
            }
        }
        Action::Inc(x) | Action::Dec(x) | Action::ZeroTest(x) => {
            if sys.delay != DelayDomain::None {
                c.push(
                    FlavorMismatch,
                    format!("process {pid}: counter operation in a {} system", sys.delay),
                    Some(pid),
                    None,
                    key(),
                );
            }
            if !proc_.counters.contains(x) {
                c.push(
                    UnknownCounter,
                    format!("process {pid}: undeclared counter {x}"),
                    Some(pid),
                    None,
                    key(),
                );
            }
        }
    }

    if (!t.guard.is_empty() || !t.resets.is_empty()) && sys.delay != DelayDomain::Dense {
        c.push(
            FlavorMismatch,
            format!("process {pid}: clock guard or reset in a {} system", sys.delay),
            Some(pid),
            None,
            key(),
        );
    }
    for x in t.guard.iter().map(|a| &a.clock).chain(&t.resets) {
        if !proc_.clocks.contains(x) {
            c.push(
                UnknownClock,
                format!("process {pid}: undeclared clock {x}"),
                Some(pid),
                None,
                key(),
            );
        }
    }
}

/// An undirected edge of the underlying graph, carrying its channel id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UndirectedEdge {
    pub a: ProcId,
    pub b: ProcId,
    pub channel: ChannelId,
}

/// Undirected multigraph support of a topology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UndirectedGraph {
    pub nodes: Vec<ProcId>,
    pub edges: Vec<UndirectedEdge>,
}

impl UndirectedGraph {
    pub fn index_of(&self, p: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(p)).ok()
    }
}

/// Erase channel orientation: one edge per channel, self-loops kept.
pub fn underlying_graph(topo: &Topology) -> UndirectedGraph {
    let mut nodes: BTreeSet<ProcId> = topo.processes.clone();
    for ch in topo.channels.values() {
        nodes.insert(ch.source.clone());
        nodes.insert(ch.target.clone());
    }
    let edges = topo
        .channels
        .iter()
        .map(|(id, ch)| {
            let (a, b) = if ch.source <= ch.target {
                (ch.source.clone(), ch.target.clone())
            } else {
                (ch.target.clone(), ch.source.clone())
            };
            UndirectedEdge {
                a,
                b,
                channel: id.clone(),
            }
        })
        .collect();
    UndirectedGraph {
        nodes: nodes.into_iter().collect(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_proc_tick() -> System {
        let topo = Topology::new()
            .with_channel("c", "p", "q", false)
            .with_message("m");
        System::new("s", DelayDomain::Tick, topo)
            .with_process(
                "p",
                Process::new("l0")
                    .with_final("l1")
                    .with(Transition::new(
                        "l0",
                        "l1",
                        Action::Send {
                            channel: "c".into(),
                            message: "m".into(),
                        },
                    ))
                    .with(Transition::new("l1", "l1", Action::Tick)),
            )
            .with_process(
                "q",
                Process::new("k0")
                    .with_final("k1")
                    .with(Transition::new(
                        "k0",
                        "k1",
                        Action::Recv {
                            channel: "c".into(),
                            message: "m".into(),
                        },
                    ))
                    .with(Transition::new("k1", "k1", Action::Tick)),
            )
    }

    #[test]
    fn well_formed_tick_system_has_no_diagnostics() {
        assert_eq!(validate_system(&two_proc_tick()), vec![]);
    }

    #[test]
    fn send_from_non_source_is_reported() {
        let mut sys = two_proc_tick();
        sys.processes.get_mut("q").unwrap().add(Transition::new(
            "k0",
            "k0",
            Action::Send {
                channel: "c".into(),
                message: "m".into(),
            },
        ));
        let diags = validate_system(&sys);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::WrongEndpoint);
        assert_eq!(diags[0].process.as_deref(), Some("q"));
        assert_eq!(diags[0].channel.as_deref(), Some("c"));
    }

    #[test]
    fn counter_process_in_tick_system_is_flavor_mismatch() {
        let sys = System::new("s", DelayDomain::Tick, Topology::new()).with_process(
            "p",
            Process::new("l0")
                .with_counter("x")
                .with(Transition::new("l0", "l0", Action::Inc("x".into()))),
        );
        let diags = validate_system(&sys);
        assert!(!diags.is_empty());
        assert!(diags.iter().all(|d| d.kind == DiagnosticKind::FlavorMismatch));
    }

    #[test]
    fn test_empty_requires_testable_receiver_side() {
        let mut sys = two_proc_tick();
        sys.processes
            .get_mut("q")
            .unwrap()
            .add(Transition::new("k0", "k0", Action::TestEmpty { channel: "c".into() }));
        let kinds: Vec<_> = validate_system(&sys).into_iter().map(|d| d.kind).collect();
        assert_eq!(kinds, vec![DiagnosticKind::NotTestable]);

        sys.topology.channels.get_mut("c").unwrap().testable = true;
        sys.processes
            .get_mut("p")
            .unwrap()
            .add(Transition::new("l0", "l0", Action::TestEmpty { channel: "c".into() }));
        let kinds: Vec<_> = validate_system(&sys).into_iter().map(|d| d.kind).collect();
        assert_eq!(kinds, vec![DiagnosticKind::WrongEndpoint]);
    }

    #[test]
    fn underlying_graph_erases_orientation() {
        let t1 = Topology::new()
            .with_channel("c1", "p", "q", false)
            .with_channel("c2", "q", "r", false);
        let t2 = Topology::new()
            .with_channel("c1", "p", "q", false)
            .with_channel("c2", "r", "q", false);
        let g1 = underlying_graph(&t1);
        let g2 = underlying_graph(&t2);
        assert_eq!(g1.nodes, vec!["p", "q", "r"]);
        let pairs = |g: &UndirectedGraph| {
            g.edges
                .iter()
                .map(|e| (e.a.clone(), e.b.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(pairs(&g1), pairs(&g2));
        assert_eq!(pairs(&g1), vec![("p".into(), "q".into()), ("q".into(), "r".into())]);

        let g3 = underlying_graph(&Topology::new().with_channel("c", "p", "p", false));
        assert_eq!(g3.nodes, vec!["p"]);
        assert_eq!(g3.edges.len(), 1);
        assert_eq!(g3.edges[0].a, g3.edges[0].b);
    }
}
