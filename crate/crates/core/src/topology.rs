//! Decidability classification of communication topologies.
//!
//! Reachability is decidable for:
//! - discrete time (tick, and counter components communicating
//!   asynchronously): polyforest topologies where every weakly-connected
//!   component has at most one testable channel;
//! - dense time without emptiness tests: polyforest topologies.
//!
//! Dense time with two testable channels in one weakly-connected component
//! is undecidable, and a dense polyforest with at most one testable channel
//! per component is reported `Open`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::model::{
    underlying_graph, Action, ChannelId, DelayDomain, ProcId, System, Topology,
};

/// An undirected cycle, listed as the channels along it in traversal order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cycle {
    pub channels: Vec<ChannelId>,
    /// Processes visited; `processes[i]` and `processes[i+1]` (cyclically)
    /// are the endpoints of `channels[i]`.
    pub processes: Vec<ProcId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PolyforestCheck {
    Forest,
    Cycle(Cycle),
}

impl PolyforestCheck {
    pub fn is_forest(&self) -> bool {
        matches!(self, PolyforestCheck::Forest)
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Whether the undirected support of the topology is a forest. The first
/// edge closing a cycle yields the witness: the tree path between its
/// endpoints plus the edge itself.
pub fn is_polyforest(topo: &Topology) -> PolyforestCheck {
    let g = underlying_graph(topo);
    let n = g.nodes.len();
    let mut uf = UnionFind::new(n);
    // spanning-forest adjacency: node -> (neighbor, edge index)
    let mut tree: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (ei, e) in g.edges.iter().enumerate() {
        let a = g.index_of(&e.a).expect("endpoint is a node");
        let b = g.index_of(&e.b).expect("endpoint is a node");
        if uf.union(a, b) {
            tree[a].push((b, ei));
            tree[b].push((a, ei));
            continue;
        }
        // path a -> b in the spanning forest (empty when a == b)
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &(v, via) in &tree[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, via));
                    queue.push_back(v);
                }
            }
        }
        let mut path_edges = Vec::new();
        let mut path_nodes = vec![b];
        let mut cur = b;
        while let Some((u, via)) = prev[cur] {
            path_edges.push(via);
            path_nodes.push(u);
            cur = u;
        }
        path_edges.reverse();
        path_nodes.reverse();
        // path_nodes runs a .. b; closing edge returns b -> a
        let mut channels: Vec<ChannelId> =
            path_edges.iter().map(|&i| g.edges[i].channel.clone()).collect();
        channels.push(e.channel.clone());
        let processes = path_nodes.iter().map(|&i| g.nodes[i].clone()).collect();
        return PolyforestCheck::Cycle(Cycle {
            channels,
            processes,
        });
    }
    PolyforestCheck::Forest
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub processes: BTreeSet<ProcId>,
    pub channels: Vec<ChannelId>,
    pub testable: Vec<ChannelId>,
}

impl Component {
    pub fn testable_count(&self) -> usize {
        self.testable.len()
    }
}

/// Weakly-connected components, ordered by their smallest process id.
pub fn weak_components(topo: &Topology) -> Vec<Component> {
    let g = underlying_graph(topo);
    let mut uf = UnionFind::new(g.nodes.len());
    for e in &g.edges {
        let a = g.index_of(&e.a).expect("endpoint is a node");
        let b = g.index_of(&e.b).expect("endpoint is a node");
        uf.union(a, b);
    }
    let mut by_root: BTreeMap<usize, Component> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::new();
    for i in 0..g.nodes.len() {
        let r = uf.find(i);
        by_root
            .entry(r)
            .or_insert_with(|| {
                order.push(r);
                Component {
                    processes: BTreeSet::new(),
                    channels: Vec::new(),
                    testable: Vec::new(),
                }
            })
            .processes
            .insert(g.nodes[i].clone());
    }
    for (id, ch) in &topo.channels {
        let a = g.index_of(&ch.source).expect("endpoint is a node");
        let r = uf.find(a);
        let comp = by_root.get_mut(&r).expect("component exists");
        comp.channels.push(id.clone());
        if ch.testable {
            comp.testable.push(id.clone());
        }
    }
    order
        .into_iter()
        .map(|r| by_root.remove(&r).expect("component exists"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Status {
    Decidable,
    Open,
    Undecidable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Decidable => "Decidable",
            Status::Open => "Open",
            Status::Undecidable => "Undecidable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// Undirected cycle in the topology.
    NotPolyforest,
    /// A weakly-connected component with two or more testable channels.
    MultipleTestsInComponent,
    /// Discrete time, polyforest, at most one testable channel per component.
    DiscretePolyforestSingleTest,
    /// Dense time, polyforest, no emptiness tests.
    DensePolyforestTestFree,
    /// Dense time, polyforest, some component with exactly one testable channel.
    DenseSingleTestUnresolved,
    /// Informational: counter component with zero tests.
    CounterZeroTests,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::NotPolyforest => "not-polyforest",
            Rule::MultipleTestsInComponent => "multiple-tests-in-component",
            Rule::DiscretePolyforestSingleTest => "discrete-polyforest-single-test",
            Rule::DensePolyforestTestFree => "dense-polyforest-test-free",
            Rule::DenseSingleTestUnresolved => "dense-single-test-open",
            Rule::CounterZeroTests => "counter-zero-tests",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Witness {
    None,
    Cycle(Cycle),
    TestableChannels(Vec<ChannelId>),
    Counters { process: ProcId, counters: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reason {
    pub rule: Rule,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentVerdict {
    pub processes: BTreeSet<ProcId>,
    pub status: Status,
    pub testable: Vec<ChannelId>,
    pub cycle: Option<Cycle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub flavor: DelayDomain,
    pub reasons: Vec<Reason>,
    pub components: Vec<ComponentVerdict>,
    /// Informational notes that do not affect `status`.
    pub notes: Vec<Reason>,
}

impl Verdict {
    /// Line-oriented report.
    pub fn report(&self) -> String {
        let mut out = format!("verdict: {} ({} time)\n", self.status, self.flavor);
        for r in self.reasons.iter().chain(&self.notes) {
            out.push_str(&format!("reason: {}", r.rule.id()));
            match &r.witness {
                Witness::None => {}
                Witness::Cycle(c) => out.push_str(&format!(
                    " cycle=[{}] via [{}]",
                    c.channels.join(","),
                    c.processes.join(",")
                )),
                Witness::TestableChannels(cs) => {
                    out.push_str(&format!(" testable=[{}]", cs.join(",")))
                }
                Witness::Counters { process, counters } => {
                    out.push_str(&format!(" process={process} counters=[{}]", counters.join(",")))
                }
            }
            out.push('\n');
        }
        for c in &self.components {
            out.push_str(&format!(
                "component {{{}}}: {} testable=[{}]\n",
                c.processes.iter().cloned().collect::<Vec<_>>().join(","),
                c.status,
                c.testable.join(",")
            ));
        }
        out
    }
}

/// Classify a topology under a delay domain.
pub fn classify(topo: &Topology, flavor: DelayDomain) -> Verdict {
    let components = weak_components(topo);
    let mut reasons = Vec::new();
    let mut verdicts = Vec::new();

    let global_cycle = is_polyforest(topo);
    if let PolyforestCheck::Cycle(c) = &global_cycle {
        reasons.push(Reason {
            rule: Rule::NotPolyforest,
            witness: Witness::Cycle(c.clone()),
        });
    }

    for comp in &components {
        let sub = restrict(topo, comp);
        let cycle = match is_polyforest(&sub) {
            PolyforestCheck::Forest => None,
            PolyforestCheck::Cycle(c) => Some(c),
        };
        let tests = comp.testable_count();
        if tests >= 2 {
            reasons.push(Reason {
                rule: Rule::MultipleTestsInComponent,
                witness: Witness::TestableChannels(comp.testable.clone()),
            });
        }
        let status = if cycle.is_some() || tests >= 2 {
            Status::Undecidable
        } else if flavor == DelayDomain::Dense && tests == 1 {
            Status::Open
        } else {
            Status::Decidable
        };
        verdicts.push(ComponentVerdict {
            processes: comp.processes.clone(),
            status,
            testable: comp.testable.clone(),
            cycle,
        });
    }

    let status = verdicts
        .iter()
        .map(|c| c.status)
        .max()
        .unwrap_or(Status::Decidable);

    match status {
        Status::Decidable => reasons.push(Reason {
            rule: if flavor == DelayDomain::Dense {
                Rule::DensePolyforestTestFree
            } else {
                Rule::DiscretePolyforestSingleTest
            },
            witness: Witness::None,
        }),
        Status::Open => reasons.push(Reason {
            rule: Rule::DenseSingleTestUnresolved,
            witness: Witness::TestableChannels(topo.testable_channels().cloned().collect()),
        }),
        Status::Undecidable => {}
    }

    Verdict {
        status,
        flavor,
        reasons,
        components: verdicts,
        notes: Vec::new(),
    }
}

/// Classify a whole system, adding informational notes for counter
/// components that use zero tests.
pub fn classify_system(sys: &System) -> Verdict {
    let mut v = classify(&sys.topology, sys.delay);
    if sys.delay == DelayDomain::None {
        for (pid, p) in &sys.processes {
            let tested: BTreeSet<String> = p
                .transitions
                .iter()
                .filter_map(|t| match &t.action {
                    Action::ZeroTest(x) => Some(x.clone()),
                    _ => None,
                })
                .collect();
            if !tested.is_empty() {
                v.notes.push(Reason {
                    rule: Rule::CounterZeroTests,
                    witness: Witness::Counters {
                        process: pid.clone(),
                        counters: tested.into_iter().collect(),
                    },
                });
            }
        }
    }
    v
}

fn restrict(topo: &Topology, comp: &Component) -> Topology {
    Topology {
        processes: comp.processes.clone(),
        channels: comp
            .channels
            .iter()
            .map(|id| (id.clone(), topo.channels[id].clone()))
            .collect(),
        messages: BTreeSet::new(),
    }
}

/// Check that a witness really supports an `Undecidable` verdict: cycles
/// close up through real channels, testable sets lie in one component.
pub fn witness_is_valid(topo: &Topology, reason: &Reason) -> bool {
    match (&reason.rule, &reason.witness) {
        (Rule::NotPolyforest, Witness::Cycle(c)) => cycle_is_valid(topo, c),
        (Rule::MultipleTestsInComponent, Witness::TestableChannels(cs)) => {
            if cs.len() < 2 || cs.iter().any(|c| !topo.channels.get(c).is_some_and(|ch| ch.testable)) {
                return false;
            }
            let comps = weak_components(topo);
            comps.iter().any(|comp| cs.iter().all(|c| comp.channels.contains(c)))
        }
        _ => true,
    }
}

fn cycle_is_valid(topo: &Topology, c: &Cycle) -> bool {
    let k = c.channels.len();
    if k == 0 || c.processes.len() != k {
        return false;
    }
    let distinct: BTreeSet<&ChannelId> = c.channels.iter().collect();
    if distinct.len() != k {
        return false;
    }
    (0..k).all(|i| {
        let (u, v) = (&c.processes[i], &c.processes[(i + 1) % k]);
        topo.channels.get(&c.channels[i]).is_some_and(|ch| {
            (&ch.source == u && &ch.target == v) || (&ch.source == v && &ch.target == u)
        })
    })
}
