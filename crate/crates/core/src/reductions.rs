//! Topology-preserving translations between flavors.
//!
//! * [`tick_to_vass`]: a test-free polyforest tick system becomes a VASS
//!   with one lag counter per channel, accepting with all counters at zero.
//! * [`counters_to_channels`]: counters become self-loop channels over a
//!   unary alphabet, zero tests become emptiness tests.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Action, Channel, DelayDomain, Process, System, Transition};
use crate::network::{Network, NetworkError, Op, ResolvedTarget, Target};
use crate::semantics::{self, GlobalConfig, StepLabel, Trace, TraceStep};
use crate::topology::{is_polyforest, weak_components, PolyforestCheck};
use crate::vass::{vass_reach, Vass, VassAnswer, VassBudget, VassEdge, VassMode, VassOutcome, VassPath};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("emptiness tests unsupported by VASS reduction (testable: {})", .0.join(", "))]
    TestableChannels(Vec<String>),
    #[error("VASS reduction needs a polyforest topology; undirected cycle through {}", .0.join(", "))]
    NotPolyforest(Vec<String>),
    #[error("expected a {expected} system, got {found}")]
    Flavor {
        expected: DelayDomain,
        found: DelayDomain,
    },
    #[error("channel acceptance and counter acceptance differ; cannot encode counters as channels")]
    AcceptanceMismatch,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("VASS path does not lift to a run: {0}")]
    Lift(String),
}

/// A lag counter: local ticks of `target` minus local ticks of `source`.
/// Virtual edges carry no messages and only tie components' clocks together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LagEdge {
    pub source: usize,
    pub target: usize,
    pub channel: Option<usize>,
}

/// What a VASS transition stands for in the original system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Provenance {
    Internal { process: usize, transition: usize },
    Tick { process: usize, transition: usize },
    /// A send fused with the matching receive.
    Rendezvous {
        channel: usize,
        sender: (usize, usize),
        receiver: (usize, usize),
    },
    /// A send whose message is never received.
    Orphan {
        channel: usize,
        process: usize,
        transition: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TickVassState {
    pub locs: Vec<u32>,
    /// Per channel: sends are now orphans and receives are disabled.
    /// Empty unless orphan mode is on.
    pub discard: Vec<bool>,
}

/// The lazily expanded lag-rendezvous VASS of a tick system.
#[derive(Debug, Clone)]
pub struct TickVass {
    pub net: Network,
    pub target: ResolvedTarget,
    pub edges: Vec<LagEdge>,
    pub orphans: bool,
}

fn ensure_vass_reducible(sys: &System) -> Result<(), ReductionError> {
    if sys.delay != DelayDomain::Tick {
        return Err(ReductionError::Flavor {
            expected: DelayDomain::Tick,
            found: sys.delay,
        });
    }
    let testable: Vec<String> = sys.topology.testable_channels().cloned().collect();
    if !testable.is_empty() {
        return Err(ReductionError::TestableChannels(testable));
    }
    if let PolyforestCheck::Cycle(c) = is_polyforest(&sys.topology) {
        return Err(ReductionError::NotPolyforest(c.channels));
    }
    Ok(())
}

/// Build the lag-rendezvous VASS. Orphan sends are allowed exactly when the
/// system does not require empty channels on acceptance.
pub fn tick_to_vass(sys: &System, target: &Target) -> Result<TickVass, ReductionError> {
    ensure_vass_reducible(sys)?;
    let net = Network::new(sys)?;
    let target = net.resolve_target(target)?;
    let mut edges: Vec<LagEdge> = net
        .channels
        .iter()
        .enumerate()
        .map(|(i, c)| LagEdge {
            source: c.source,
            target: c.target,
            channel: Some(i),
        })
        .collect();
    // chain one representative per component so all local clocks must agree
    let reps: Vec<usize> = weak_components(&sys.topology)
        .iter()
        .filter_map(|c| c.processes.first())
        .filter_map(|p| net.process_index(p))
        .collect();
    for w in reps.windows(2) {
        edges.push(LagEdge {
            source: w[0],
            target: w[1],
            channel: None,
        });
    }
    Ok(TickVass {
        orphans: !net.acceptance.require_empty_channels,
        net,
        target,
        edges,
    })
}

impl TickVass {
    fn tick_delta(&self, p: usize) -> Vec<i64> {
        self.edges
            .iter()
            .map(|e| {
                if e.source == p {
                    -1
                } else if e.target == p {
                    1
                } else {
                    0
                }
            })
            .collect()
    }
}

impl Vass for TickVass {
    type State = TickVassState;
    type Label = Provenance;

    fn dim(&self) -> usize {
        self.edges.len()
    }

    fn initial(&self) -> Vec<(TickVassState, Vec<u64>)> {
        let discard = if self.orphans {
            vec![false; self.net.channels.len()]
        } else {
            Vec::new()
        };
        semantics::initial_configs(&self.net)
            .into_iter()
            .map(|c| {
                (
                    TickVassState {
                        locs: c.locs,
                        discard: discard.clone(),
                    },
                    vec![0; self.edges.len()],
                )
            })
            .collect()
    }

    fn successors(&self, s: &TickVassState) -> Vec<VassEdge<TickVassState, Provenance>> {
        let zero = vec![0i64; self.edges.len()];
        let mut out = Vec::new();
        for (p, proc_) in self.net.processes.iter().enumerate() {
            for &t in &proc_.outgoing[s.locs[p] as usize] {
                let tr = &proc_.transitions[t];
                let mut next = s.clone();
                next.locs[p] = tr.to;
                match tr.op {
                    Op::Internal => out.push(VassEdge {
                        label: Provenance::Internal {
                            process: p,
                            transition: t,
                        },
                        delta: zero.clone(),
                        target: next,
                    }),
                    Op::Tick => out.push(VassEdge {
                        label: Provenance::Tick {
                            process: p,
                            transition: t,
                        },
                        delta: self.tick_delta(p),
                        target: next,
                    }),
                    Op::Send { channel, message } => {
                        let discarding = self.orphans && s.discard[channel];
                        let q = self.net.channels[channel].target;
                        if !discarding {
                            let qp = &self.net.processes[q];
                            for &u in &qp.outgoing[s.locs[q] as usize] {
                                let rt = &qp.transitions[u];
                                if rt.op == (Op::Recv { channel, message }) {
                                    let mut both = next.clone();
                                    both.locs[q] = rt.to;
                                    out.push(VassEdge {
                                        label: Provenance::Rendezvous {
                                            channel,
                                            sender: (p, t),
                                            receiver: (q, u),
                                        },
                                        delta: zero.clone(),
                                        target: both,
                                    });
                                }
                            }
                        }
                        if self.orphans {
                            let mut orphan = next.clone();
                            orphan.discard[channel] = true;
                            out.push(VassEdge {
                                label: Provenance::Orphan {
                                    channel,
                                    process: p,
                                    transition: t,
                                },
                                delta: zero.clone(),
                                target: orphan,
                            });
                        }
                    }
                    // receives only happen fused with their send; tests and
                    // counter operations are excluded by the preconditions
                    Op::Recv { .. }
                    | Op::TestEmpty { .. }
                    | Op::Inc(_)
                    | Op::Dec(_)
                    | Op::ZeroTest(_) => {}
                }
            }
        }
        out
    }

    fn is_final(&self, s: &TickVassState) -> bool {
        self.target.matches(&self.net, &s.locs)
    }

    fn counter_name(&self, i: usize) -> String {
        let e = &self.edges[i];
        match e.channel {
            Some(c) => format!("lag_{}", self.net.channels[c].name),
            None => format!(
                "lag_{}_{}",
                self.net.processes[e.source].name, self.net.processes[e.target].name
            ),
        }
    }

    fn state_name(&self, s: &TickVassState) -> String {
        let mut name = self
            .net
            .processes
            .iter()
            .zip(&s.locs)
            .map(|(p, &l)| format!("{}.{}", p.name, p.locations[l as usize]))
            .collect::<Vec<_>>()
            .join("|");
        for (c, &d) in s.discard.iter().enumerate() {
            if d {
                name.push_str(&format!("|drop.{}", self.net.channels[c].name));
            }
        }
        name
    }

    fn label_name(&self, l: &Provenance) -> String {
        let tr = |p: usize, t: usize| {
            format!(
                "{}:{}",
                self.net.processes[p].name, self.net.processes[p].transitions[t].action
            )
        };
        match l {
            Provenance::Internal { process, transition } | Provenance::Tick { process, transition } => {
                tr(*process, *transition)
            }
            Provenance::Rendezvous {
                sender, receiver, ..
            } => format!("{}+{}", tr(sender.0, sender.1), tr(receiver.0, receiver.1)),
            Provenance::Orphan {
                process, transition, ..
            } => format!("{}(orphan)", tr(*process, *transition)),
        }
    }
}

/// Turn an accepting VASS path into a run of the original system: rounds are
/// replayed one by one, processes in topological order within each round,
/// then the global tick. The result is checked by replay.
pub fn lift_path(
    v: &TickVass,
    path: &VassPath<TickVassState, Provenance>,
) -> Result<Trace, ReductionError> {
    let net = &v.net;
    let n = net.processes.len();
    let err = |m: String| ReductionError::Lift(m);
    // per process: events grouped by local round, and the tick transitions
    let mut rounds: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new()]; n];
    let mut ticks: Vec<Vec<usize>> = vec![Vec::new(); n];
    let local = |p: usize, t: usize, rounds: &mut Vec<Vec<Vec<usize>>>| {
        rounds[p].last_mut().expect("at least one round").push(t);
    };
    for step in &path.steps {
        match step.label {
            Provenance::Internal { process, transition }
            | Provenance::Orphan {
                process, transition, ..
            } => local(process, transition, &mut rounds),
            Provenance::Rendezvous {
                sender, receiver, ..
            } => {
                local(sender.0, sender.1, &mut rounds);
                local(receiver.0, receiver.1, &mut rounds);
            }
            Provenance::Tick { process, transition } => {
                ticks[process].push(transition);
                rounds[process].push(Vec::new());
            }
        }
    }
    let total = ticks.first().map_or(0, Vec::len);
    if ticks.iter().any(|t| t.len() != total) {
        return Err(err(format!(
            "processes end with different tick counts: {:?}",
            ticks.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let ranks = semantics::topological_ranks(net)
        .ok_or_else(|| err("channel graph has a directed cycle".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&p| ranks[p]);

    let initial = GlobalConfig {
        locs: path.initial.0.locs.clone(),
        channels: vec![Vec::new(); net.channels.len()],
        counters: vec![Vec::new(); n],
        ticks: 0,
    };
    let mut steps = Vec::new();
    let mut cur = initial.clone();
    let mut push = |label: StepLabel, cur: &mut GlobalConfig| -> Result<(), ReductionError> {
        let next = semantics::apply(net, cur, &label)
            .ok_or_else(|| err(format!("step {} ({label:?}) is not enabled", steps.len())))?;
        *cur = next.clone();
        steps.push(TraceStep {
            label,
            config: next,
        });
        Ok(())
    };
    for r in 0..=total {
        for &p in &order {
            for &t in &rounds[p][r] {
                push(
                    StepLabel::Local {
                        process: p,
                        transition: t,
                    },
                    &mut cur,
                )?;
            }
        }
        if r < total {
            push(
                StepLabel::Tick {
                    transitions: (0..n).map(|p| ticks[p][r]).collect(),
                },
                &mut cur,
            )?;
        }
    }
    let trace = Trace { initial, steps };
    semantics::replay(net, &trace).map_err(|e| err(e.to_string()))?;
    if !semantics::accepts(net, &v.target, trace.last()) {
        return Err(err("lifted run does not end in an accepting configuration".into()));
    }
    Ok(trace)
}

/// Run a VASS backend on the reduction.
pub fn vass_acceptance(
    v: &TickVass,
    mode: VassMode,
    budget: &VassBudget,
) -> VassOutcome<TickVassState, Provenance> {
    vass_reach(v, mode, budget)
}

#[derive(Debug, Clone)]
pub struct VassCheck {
    pub outcome: VassOutcome<TickVassState, Provenance>,
    /// The lifted run when the answer is accepting.
    pub trace: Option<Trace>,
}

/// Reduce, decide, and lift an accepting path back to a checked run.
pub fn check_via_vass(
    sys: &System,
    target: &Target,
    mode: VassMode,
    budget: &VassBudget,
) -> Result<(TickVass, VassCheck), ReductionError> {
    let v = tick_to_vass(sys, target)?;
    let outcome = vass_acceptance(&v, mode, budget);
    let trace = match &outcome.answer {
        VassAnswer::Accepting(p) => Some(lift_path(&v, p)?),
        _ => None,
    };
    Ok((v, VassCheck { outcome, trace }))
}

/// Message used on counter channels.
pub const TOKEN: &str = "tok";

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded supply of names")
}

/// Channel encoding a counter: `ch_<x>` for single-process systems,
/// `ch_<p>_<x>` otherwise.
pub fn counter_channel_name(single: bool, process: &str, counter: &str) -> String {
    if single {
        format!("ch_{counter}")
    } else {
        format!("ch_{process}_{counter}")
    }
}

/// The counter-to-channel dictionary for one action; other actions are kept.
pub fn translate_counter_action(action: &Action, channel: impl Fn(&str) -> String, token: &str) -> Action {
    match action {
        Action::Inc(x) => Action::Send {
            channel: channel(x),
            message: token.to_string(),
        },
        Action::Dec(x) => Action::Recv {
            channel: channel(x),
            message: token.to_string(),
        },
        Action::ZeroTest(x) => Action::TestEmpty { channel: channel(x) },
        other => other.clone(),
    }
}

/// Encode each counter as a self-loop channel over a one-letter alphabet.
/// The result is a tick system with a tick self-loop on every location, so
/// time never constrains it.
pub fn counters_to_channels(sys: &System) -> Result<System, ReductionError> {
    if sys.delay != DelayDomain::None {
        return Err(ReductionError::Flavor {
            expected: DelayDomain::None,
            found: sys.delay,
        });
    }
    let has_counters = sys.processes.values().any(|p| !p.counters.is_empty());
    let acc = sys.acceptance;
    if !sys.topology.channels.is_empty()
        && has_counters
        && acc.require_empty_channels != acc.require_zero_counters
    {
        return Err(ReductionError::AcceptanceMismatch);
    }
    let token = fresh(TOKEN, &sys.topology.messages);
    let single = sys.processes.len() == 1;
    let mut taken: BTreeSet<String> = sys.topology.channels.keys().cloned().collect();
    let mut names = std::collections::BTreeMap::new();
    let mut topology = sys.topology.clone();
    for (pid, p) in &sys.processes {
        for x in &p.counters {
            let name = fresh(&counter_channel_name(single, pid, x), &taken);
            taken.insert(name.clone());
            let tested = p
                .transitions
                .iter()
                .any(|t| t.action == Action::ZeroTest(x.clone()));
            topology.channels.insert(
                name.clone(),
                Channel {
                    source: pid.clone(),
                    target: pid.clone(),
                    testable: tested,
                },
            );
            names.insert((pid.clone(), x.clone()), name);
        }
    }
    if has_counters {
        topology.messages.insert(token.clone());
    }
    let mut out = System::new(&sys.name, DelayDomain::Tick, topology);
    out.acceptance = sys.acceptance;
    out.acceptance.require_empty_channels = if has_counters {
        acc.require_zero_counters
    } else {
        acc.require_empty_channels
    };
    for (pid, p) in &sys.processes {
        let mut q = Process {
            locations: p.locations.clone(),
            initial: p.initial.clone(),
            finals: p.finals.clone(),
            ..Process::default()
        };
        for t in &p.transitions {
            let action =
                translate_counter_action(&t.action, |x| names[&(pid.clone(), x.to_string())].clone(), &token);
            q.add(Transition::new(&t.from, &t.to, action));
        }
        for l in &p.locations {
            q.add(Transition::new(l, l, Action::Tick));
        }
        out.processes.insert(pid.clone(), q);
    }
    Ok(out)
}
