//! Vector addition systems with states: Karp–Miller coverability,
//! boundedness certificates, and reachability of a final state with all
//! counters at zero.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Debug, Write as _};
use std::hash::Hash;

use serde::Serialize;

pub struct VassEdge<S, L> {
    pub label: L,
    pub delta: Vec<i64>,
    pub target: S,
}

/// A VASS given by its successor function, so that large products can be
/// expanded on demand. Implementations must be deterministic.
pub trait Vass {
    type State: Clone + Eq + Hash + Debug;
    type Label: Clone + Debug;

    fn dim(&self) -> usize;
    /// Initial control states with their initial markings.
    fn initial(&self) -> Vec<(Self::State, Vec<u64>)>;
    fn successors(&self, state: &Self::State) -> Vec<VassEdge<Self::State, Self::Label>>;
    fn is_final(&self, state: &Self::State) -> bool;

    fn counter_name(&self, i: usize) -> String {
        format!("c{i}")
    }
    fn state_name(&self, state: &Self::State) -> String {
        format!("{state:?}")
    }
    fn label_name(&self, label: &Self::Label) -> String {
        format!("{label:?}")
    }
}

fn apply_delta(m: &[u64], delta: &[i64]) -> Option<Vec<u64>> {
    m.iter()
        .zip(delta)
        .map(|(&v, &d)| {
            let r = v as i128 + d as i128;
            (r >= 0).then_some(r as u64)
        })
        .collect()
}

/// A finite VASS with named places.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExplicitVass {
    pub counters: Vec<String>,
    pub states: Vec<String>,
    pub initial: Vec<(usize, Vec<u64>)>,
    pub finals: BTreeSet<usize>,
    pub transitions: Vec<ExplicitTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitTransition {
    pub from: usize,
    pub to: usize,
    pub delta: Vec<i64>,
    pub label: String,
}

impl ExplicitVass {
    pub fn new(dim: usize) -> Self {
        Self {
            counters: (0..dim).map(|i| format!("c{i}")).collect(),
            ..Self::default()
        }
    }

    pub fn state(&mut self, name: &str) -> usize {
        if let Some(i) = self.states.iter().position(|s| s == name) {
            return i;
        }
        self.states.push(name.to_string());
        self.states.len() - 1
    }

    pub fn with_initial(mut self, name: &str, marking: Vec<u64>) -> Self {
        let s = self.state(name);
        self.initial.push((s, marking));
        self
    }

    pub fn with_final(mut self, name: &str) -> Self {
        let s = self.state(name);
        self.finals.insert(s);
        self
    }

    pub fn with_transition(mut self, from: &str, to: &str, delta: Vec<i64>, label: &str) -> Self {
        assert_eq!(delta.len(), self.counters.len(), "delta arity");
        let from = self.state(from);
        let to = self.state(to);
        self.transitions.push(ExplicitTransition {
            from,
            to,
            delta,
            label: label.to_string(),
        });
        self
    }

    /// Flat text: a header, one `place` line per control state and one
    /// `trans` line per transition with its delta vector.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "counters {}", self.counters.join(" "));
        for (i, s) in self.states.iter().enumerate() {
            let mut tags = Vec::new();
            for (q, m) in &self.initial {
                if *q == i {
                    tags.push(format!(
                        "initial[{}]",
                        m.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
                    ));
                }
            }
            if self.finals.contains(&i) {
                tags.push("final".to_string());
            }
            let _ = writeln!(out, "place {s}{}{}", if tags.is_empty() { "" } else { " " }, tags.join(" "));
        }
        for t in &self.transitions {
            let delta = t
                .delta
                .iter()
                .map(|d| format!("{d:+}"))
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "trans {} -> {} [{delta}] {}",
                self.states[t.from], self.states[t.to], t.label
            );
        }
        out
    }
}

impl Vass for ExplicitVass {
    type State = usize;
    type Label = String;

    fn dim(&self) -> usize {
        self.counters.len()
    }

    fn initial(&self) -> Vec<(usize, Vec<u64>)> {
        self.initial.clone()
    }

    fn successors(&self, state: &usize) -> Vec<VassEdge<usize, String>> {
        self.transitions
            .iter()
            .filter(|t| t.from == *state)
            .map(|t| VassEdge {
                label: t.label.clone(),
                delta: t.delta.clone(),
                target: t.to,
            })
            .collect()
    }

    fn is_final(&self, state: &usize) -> bool {
        self.finals.contains(state)
    }

    fn counter_name(&self, i: usize) -> String {
        self.counters[i].clone()
    }

    fn state_name(&self, state: &usize) -> String {
        self.states[*state].clone()
    }

    fn label_name(&self, label: &String) -> String {
        label.clone()
    }
}

/// Expand the reachable control graph of a lazy VASS (ignoring counters).
/// Returns `None` when more than `max_states` control states are reachable.
pub fn materialize<V: Vass>(v: &V, max_states: usize) -> Option<ExplicitVass> {
    let mut out = ExplicitVass {
        counters: (0..v.dim()).map(|i| v.counter_name(i)).collect(),
        ..ExplicitVass::default()
    };
    let mut index: HashMap<V::State, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: &V::State, out: &mut ExplicitVass, queue: &mut VecDeque<V::State>| {
        if let Some(&i) = index.get(s) {
            return i;
        }
        let i = out.states.len();
        out.states.push(v.state_name(s));
        if v.is_final(s) {
            out.finals.insert(i);
        }
        index.insert(s.clone(), i);
        queue.push_back(s.clone());
        i
    };
    for (s, m) in v.initial() {
        let i = intern(&s, &mut out, &mut queue);
        out.initial.push((i, m));
    }
    while let Some(s) = queue.pop_front() {
        if out.states.len() > max_states {
            return None;
        }
        let from = intern(&s, &mut out, &mut queue);
        for e in v.successors(&s) {
            let to = intern(&e.target, &mut out, &mut queue);
            out.transitions.push(ExplicitTransition {
                from,
                to,
                delta: e.delta,
                label: v.label_name(&e.label),
            });
        }
    }
    Some(out)
}

/// A counter value in a coverability label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Omega {
    Fin(u64),
    Inf,
}

impl Omega {
    pub fn add(self, d: i64) -> Option<Omega> {
        match self {
            Omega::Inf => Some(Omega::Inf),
            Omega::Fin(v) => {
                let r = v as i128 + d as i128;
                (r >= 0).then_some(Omega::Fin(r as u64))
            }
        }
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Fin(v) => write!(f, "{v}"),
            Omega::Inf => f.write_str("ω"),
        }
    }
}

pub type OmegaMarking = Vec<Omega>;

pub fn omega_of(m: &[u64]) -> OmegaMarking {
    m.iter().map(|&v| Omega::Fin(v)).collect()
}

/// Pointwise comparison; `None` when incomparable.
pub fn omega_cmp(a: &[Omega], b: &[Omega]) -> Option<Ordering> {
    let mut le = true;
    let mut ge = true;
    for (x, y) in a.iter().zip(b) {
        le &= x <= y;
        ge &= x >= y;
    }
    match (le, ge) {
        (true, true) => Some(Ordering::Equal),
        (true, false) => Some(Ordering::Less),
        (false, true) => Some(Ordering::Greater),
        (false, false) => None,
    }
}

pub fn covers(big: &[Omega], small: &[u64]) -> bool {
    big.iter().zip(small).all(|(b, &s)| *b >= Omega::Fin(s))
}

#[derive(Debug, Clone)]
pub struct KmNode<S, L> {
    pub state: S,
    pub marking: OmegaMarking,
    pub parent: Option<usize>,
    pub label: Option<L>,
    pub children: Vec<usize>,
    /// Same state and marking as an ancestor; not expanded.
    pub duplicate: bool,
}

#[derive(Debug, Clone)]
pub struct KmTree<S, L> {
    pub nodes: Vec<KmNode<S, L>>,
    pub roots: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Coverability<S, L> {
    pub tree: KmTree<S, L>,
    /// Per counter: no ω appears for it anywhere in the tree.
    pub bounded: Vec<bool>,
    /// Exact per-counter maxima when every counter is bounded.
    pub bounds: Option<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub enum KmResult<S, L> {
    Complete(Coverability<S, L>),
    Budget { nodes: usize },
}

pub const DEFAULT_KM_NODES: usize = 1_000_000;

/// Classic Karp–Miller tree with ancestor acceleration.
pub fn karp_miller<V: Vass>(v: &V, max_nodes: usize) -> KmResult<V::State, V::Label> {
    let dim = v.dim();
    let mut nodes: Vec<KmNode<V::State, V::Label>> = Vec::new();
    let mut roots = Vec::new();
    let mut queue = VecDeque::new();
    for (s, m) in v.initial() {
        roots.push(nodes.len());
        queue.push_back(nodes.len());
        nodes.push(KmNode {
            state: s,
            marking: omega_of(&m),
            parent: None,
            label: None,
            children: Vec::new(),
            duplicate: false,
        });
    }
    while let Some(n) = queue.pop_front() {
        // an ancestor with the same label makes this node a leaf
        let mut a = nodes[n].parent;
        while let Some(i) = a {
            if nodes[i].state == nodes[n].state && nodes[i].marking == nodes[n].marking {
                nodes[n].duplicate = true;
                break;
            }
            a = nodes[i].parent;
        }
        if nodes[n].duplicate {
            continue;
        }
        for e in v.successors(&nodes[n].state) {
            let Some(mut m): Option<OmegaMarking> = nodes[n]
                .marking
                .iter()
                .zip(&e.delta)
                .map(|(x, &d)| x.add(d))
                .collect()
            else {
                continue;
            };
            let mut a = Some(n);
            while let Some(i) = a {
                if nodes[i].state == e.target
                    && omega_cmp(&nodes[i].marking, &m) == Some(Ordering::Less)
                {
                    for k in 0..dim {
                        if nodes[i].marking[k] < m[k] {
                            m[k] = Omega::Inf;
                        }
                    }
                }
                a = nodes[i].parent;
            }
            if nodes.len() >= max_nodes {
                return KmResult::Budget { nodes: nodes.len() };
            }
            let c = nodes.len();
            nodes.push(KmNode {
                state: e.target,
                marking: m,
                parent: Some(n),
                label: Some(e.label),
                children: Vec::new(),
                duplicate: false,
            });
            nodes[n].children.push(c);
            queue.push_back(c);
        }
    }
    let bounded: Vec<bool> = (0..dim)
        .map(|k| nodes.iter().all(|n| n.marking[k] != Omega::Inf))
        .collect();
    let bounds = bounded.iter().all(|&b| b).then(|| {
        (0..dim)
            .map(|k| {
                nodes
                    .iter()
                    .map(|n| match n.marking[k] {
                        Omega::Fin(v) => v,
                        Omega::Inf => unreachable!(),
                    })
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    });
    KmResult::Complete(Coverability {
        tree: KmTree { nodes, roots },
        bounded,
        bounds,
    })
}

impl<S, L> KmTree<S, L> {
    /// Indented rendering, one node per line.
    pub fn to_text<V: Vass<State = S, Label = L>>(&self, v: &V) -> String {
        let mut out = String::new();
        let mut stack: Vec<(usize, usize)> = self.roots.iter().rev().map(|&r| (r, 0)).collect();
        while let Some((n, depth)) = stack.pop() {
            let node = &self.nodes[n];
            let marking = node
                .marking
                .iter()
                .map(Omega::to_string)
                .collect::<Vec<_>>()
                .join(", ");
            let label = node
                .label
                .as_ref()
                .map(|l| format!("--{}--> ", v.label_name(l)))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{:indent$}{label}{} ({marking}){}",
                "",
                v.state_name(&node.state),
                if node.duplicate { " [seen]" } else { "" },
                indent = 2 * depth
            );
            for &c in node.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VassStep<S, L> {
    pub label: L,
    pub delta: Vec<i64>,
    pub state: S,
    pub marking: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VassPath<S, L> {
    pub initial: (S, Vec<u64>),
    pub steps: Vec<VassStep<S, L>>,
}

impl<S, L> VassPath<S, L> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Certificate {
    /// Every counter is bounded by the given vector and the finite state
    /// space was searched exhaustively.
    BoundedExhaustive { bounds: Vec<u64> },
    /// No final control state appears in the coverability tree.
    Uncoverable,
    /// A capped search never hit its cap.
    ExhaustiveUnderCap { cap: u64 },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::BoundedExhaustive { bounds } => {
                write!(f, "bounded by {bounds:?}, exhaustive")
            }
            Certificate::Uncoverable => f.write_str("final states uncoverable"),
            Certificate::ExhaustiveUnderCap { cap } => {
                write!(f, "search capped at {cap} never reached the cap")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VassAnswer<S, L> {
    Accepting(VassPath<S, L>),
    Rejecting(Certificate),
    Unknown(String),
}

impl<S, L> VassAnswer<S, L> {
    pub fn is_definite(&self) -> bool {
        !matches!(self, VassAnswer::Unknown(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VassMode {
    Auto,
    /// Plain search with every counter capped at the given value.
    Bounded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VassBudget {
    pub km_nodes: usize,
    pub states: usize,
    /// Largest counter cap tried by the iterative search.
    pub max_cap: u64,
}

impl Default for VassBudget {
    fn default() -> Self {
        Self {
            km_nodes: DEFAULT_KM_NODES,
            states: 1_000_000,
            max_cap: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct VassStats {
    pub km_nodes: usize,
    pub states: usize,
    pub last_cap: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct VassOutcome<S, L> {
    pub answer: VassAnswer<S, L>,
    pub stats: VassStats,
}

struct Search<S, L> {
    found: Option<VassPath<S, L>>,
    pruned: bool,
    budget_hit: bool,
    states: usize,
}

/// Breadth-first search for a final state with the zero marking; markings
/// with a component above `cap` are pruned.
fn bfs<V: Vass>(v: &V, cap: Option<u64>, max_states: usize) -> Search<V::State, V::Label> {
    type Key<S> = (S, Vec<u64>);
    let mut nodes: Vec<(Key<V::State>, Option<(usize, V::Label, Vec<i64>)>)> = Vec::new();
    let mut index: HashMap<Key<V::State>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut pruned = false;
    let accept = |s: &V::State, m: &[u64]| v.is_final(s) && m.iter().all(|&x| x == 0);

    let path_to = |nodes: &Vec<(Key<V::State>, Option<(usize, V::Label, Vec<i64>)>)>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((p, label, delta)) = &nodes[i].1 {
            steps.push(VassStep {
                label: label.clone(),
                delta: delta.clone(),
                state: nodes[i].0 .0.clone(),
                marking: nodes[i].0 .1.clone(),
            });
            i = *p;
        }
        steps.reverse();
        VassPath {
            initial: nodes[i].0.clone(),
            steps,
        }
    };

    for (s, m) in v.initial() {
        let key = (s, m);
        if index.contains_key(&key) {
            continue;
        }
        index.insert(key.clone(), nodes.len());
        let ok = accept(&key.0, &key.1);
        nodes.push((key, None));
        if ok {
            return Search {
                found: Some(path_to(&nodes, nodes.len() - 1)),
                pruned,
                budget_hit: false,
                states: nodes.len(),
            };
        }
        queue.push_back(nodes.len() - 1);
    }
    while let Some(u) = queue.pop_front() {
        let (state, marking) = nodes[u].0.clone();
        for e in v.successors(&state) {
            let Some(m) = apply_delta(&marking, &e.delta) else {
                continue;
            };
            if cap.is_some_and(|c| m.iter().any(|&x| x > c)) {
                pruned = true;
                continue;
            }
            let key = (e.target, m);
            if index.contains_key(&key) {
                continue;
            }
            if nodes.len() >= max_states {
                return Search {
                    found: None,
                    pruned: true,
                    budget_hit: true,
                    states: nodes.len(),
                };
            }
            index.insert(key.clone(), nodes.len());
            let ok = accept(&key.0, &key.1);
            nodes.push((key, Some((u, e.label, e.delta))));
            if ok {
                return Search {
                    found: Some(path_to(&nodes, nodes.len() - 1)),
                    pruned,
                    budget_hit: false,
                    states: nodes.len(),
                };
            }
            queue.push_back(nodes.len() - 1);
        }
    }
    Search {
        found: None,
        pruned,
        budget_hit: false,
        states: nodes.len(),
    }
}

fn capped_search<V: Vass>(
    v: &V,
    caps: impl IntoIterator<Item = u64>,
    budget: &VassBudget,
    stats: &mut VassStats,
) -> VassAnswer<V::State, V::Label> {
    let mut reason = "no cap tried".to_string();
    for cap in caps {
        let r = bfs(v, Some(cap), budget.states);
        stats.states = stats.states.max(r.states);
        stats.last_cap = Some(cap);
        if let Some(p) = r.found {
            return VassAnswer::Accepting(p);
        }
        if !r.pruned {
            return VassAnswer::Rejecting(Certificate::ExhaustiveUnderCap { cap });
        }
        if r.budget_hit {
            return VassAnswer::Unknown(format!("state budget exhausted at counter cap {cap}"));
        }
        reason = format!("counter cap {cap} reached without a verdict");
    }
    VassAnswer::Unknown(reason)
}

/// Reachability of a final control state with every counter at zero.
pub fn vass_reach<V: Vass>(
    v: &V,
    mode: VassMode,
    budget: &VassBudget,
) -> VassOutcome<V::State, V::Label> {
    let mut stats = VassStats::default();
    let answer = match mode {
        VassMode::Bounded(k) => capped_search(v, [k], budget, &mut stats),
        VassMode::Auto => {
            let caps = std::iter::successors(Some(1u64), |c| Some(c * 2))
                .take_while(|&c| c <= budget.max_cap.max(1));
            match karp_miller(v, budget.km_nodes) {
                KmResult::Budget { nodes } => {
                    stats.km_nodes = nodes;
                    capped_search(v, caps, budget, &mut stats)
                }
                KmResult::Complete(cov) => {
                    stats.km_nodes = cov.tree.nodes.len();
                    if !cov.tree.nodes.iter().any(|n| v.is_final(&n.state)) {
                        VassAnswer::Rejecting(Certificate::Uncoverable)
                    } else if let Some(bounds) = cov.bounds {
                        let r = bfs(v, None, budget.states);
                        stats.states = r.states;
                        match r.found {
                            Some(p) => VassAnswer::Accepting(p),
                            None if r.budget_hit => {
                                VassAnswer::Unknown("state budget exhausted".into())
                            }
                            None => VassAnswer::Rejecting(Certificate::BoundedExhaustive { bounds }),
                        }
                    } else {
                        capped_search(v, caps, budget, &mut stats)
                    }
                }
            }
        }
    };
    VassOutcome { answer, stats }
}

/// Check a path against the VASS step relation.
pub fn replay_path<V: Vass>(v: &V, path: &VassPath<V::State, V::Label>) -> Result<(), String>
where
    V::Label: PartialEq,
{
    if !v.initial().contains(&path.initial) {
        return Err("path does not start in an initial state".into());
    }
    let (mut state, mut marking) = path.initial.clone();
    for (i, step) in path.steps.iter().enumerate() {
        let ok = v.successors(&state).into_iter().any(|e| {
            e.label == step.label && e.delta == step.delta && e.target == step.state
        });
        if !ok {
            return Err(format!("step {i} is not a transition"));
        }
        marking = apply_delta(&marking, &step.delta)
            .ok_or_else(|| format!("step {i} drives a counter negative"))?;
        if marking != step.marking {
            return Err(format!("step {i} records the wrong marking"));
        }
        state = step.state.clone();
    }
    Ok(())
}
