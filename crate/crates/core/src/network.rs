//! Index-based view of a [`System`] used by the exploration engines.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::model::{
    validate_system, Acceptance, Action, CmpOp, DelayDomain, Diagnostic, System,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("system is not well formed: {}", .0.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown process {0} in target")]
    UnknownProcess(String),
    #[error("process {process} has no location {location}")]
    UnknownLocation { process: String, location: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Internal,
    Tick,
    Send { channel: usize, message: u32 },
    Recv { channel: usize, message: u32 },
    TestEmpty { channel: usize },
    Inc(usize),
    Dec(usize),
    ZeroTest(usize),
}

#[derive(Debug, Clone)]
pub struct CompiledTransition {
    pub from: u32,
    pub to: u32,
    pub op: Op,
    /// `(clock index, op, constant)`
    pub guard: Vec<(usize, CmpOp, u32)>,
    pub resets: Vec<usize>,
    pub action: Action,
}

#[derive(Debug, Clone)]
pub struct ProcessInfo {
    pub name: String,
    pub locations: Vec<String>,
    pub initial: Vec<u32>,
    pub finals: Vec<bool>,
    pub counters: Vec<String>,
    pub clocks: Vec<String>,
    pub transitions: Vec<CompiledTransition>,
    /// Outgoing transition indices per location, in declaration order.
    pub outgoing: Vec<Vec<usize>>,
}

impl ProcessInfo {
    pub fn location_index(&self, name: &str) -> Option<u32> {
        self.locations
            .binary_search_by(|l| l.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }
}

#[derive(Debug, Clone)]
pub struct ChannelInfo {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub testable: bool,
}

/// A validated system with every identifier replaced by a dense index.
/// Processes, channels, locations and messages are indexed in sorted order.
#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub delay: DelayDomain,
    pub acceptance: Acceptance,
    pub processes: Vec<ProcessInfo>,
    pub channels: Vec<ChannelInfo>,
    pub messages: Vec<String>,
}

impl Network {
    pub fn new(sys: &System) -> Result<Self, NetworkError> {
        let diags = validate_system(sys);
        if !diags.is_empty() {
            return Err(NetworkError::Invalid(diags));
        }
        let proc_index: HashMap<&str, usize> = sys
            .processes
            .keys()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let chan_index: HashMap<&str, usize> = sys
            .topology
            .channels
            .keys()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let messages: Vec<String> = sys.topology.messages.iter().cloned().collect();
        let msg_index: HashMap<&str, u32> = messages
            .iter()
            .enumerate()
            .map(|(i, m)| (m.as_str(), i as u32))
            .collect();

        let channels = sys
            .topology
            .channels
            .iter()
            .map(|(id, ch)| ChannelInfo {
                name: id.clone(),
                source: proc_index[ch.source.as_str()],
                target: proc_index[ch.target.as_str()],
                testable: ch.testable,
            })
            .collect();

        let mut processes = Vec::with_capacity(sys.processes.len());
        for (pid, p) in &sys.processes {
            let locations: Vec<String> = p.locations.iter().cloned().collect();
            let loc = |l: &str| locations.binary_search_by(|x| x.as_str().cmp(l)).unwrap() as u32;
            let counters: Vec<String> = p.counters.iter().cloned().collect();
            let clocks: Vec<String> = p.clocks.iter().cloned().collect();
            let ctr = |x: &str| counters.binary_search_by(|c| c.as_str().cmp(x)).unwrap();
            let clk = |x: &str| clocks.binary_search_by(|c| c.as_str().cmp(x)).unwrap();
            let mut outgoing = vec![Vec::new(); locations.len()];
            let transitions: Vec<CompiledTransition> = p
                .transitions
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let from = loc(&t.from);
                    outgoing[from as usize].push(i);
                    let op = match &t.action {
                        Action::Internal(_) => Op::Internal,
                        Action::Tick => Op::Tick,
                        Action::Send { channel, message } => Op::Send {
                            channel: chan_index[channel.as_str()],
                            message: msg_index[message.as_str()],
                        },
                        Action::Recv { channel, message } => Op::Recv {
                            channel: chan_index[channel.as_str()],
                            message: msg_index[message.as_str()],
                        },
                        Action::TestEmpty { channel } => Op::TestEmpty {
                            channel: chan_index[channel.as_str()],
                        },
                        Action::Inc(x) => Op::Inc(ctr(x)),
                        Action::Dec(x) => Op::Dec(ctr(x)),
                        Action::ZeroTest(x) => Op::ZeroTest(ctr(x)),
                    };
                    CompiledTransition {
                        from,
                        to: loc(&t.to),
                        op,
                        guard: t
                            .guard
                            .iter()
                            .map(|a| (clk(&a.clock), a.op, a.constant))
                            .collect(),
                        resets: t.resets.iter().map(|x| clk(x)).collect(),
                        action: t.action.clone(),
                    }
                })
                .collect();
            processes.push(ProcessInfo {
                name: pid.clone(),
                initial: p.initial.iter().map(|l| loc(l)).collect(),
                finals: locations.iter().map(|l| p.finals.contains(l)).collect(),
                locations,
                counters,
                clocks,
                transitions,
                outgoing,
            });
        }

        Ok(Self {
            name: sys.name.clone(),
            delay: sys.delay,
            acceptance: sys.acceptance,
            processes,
            channels,
            messages,
        })
    }

    pub fn process_index(&self, name: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.name == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// Resolve name-based targets to per-process location constraints.
    pub fn resolve_target(&self, target: &Target) -> Result<ResolvedTarget, NetworkError> {
        match target {
            Target::Final => Ok(ResolvedTarget::Final),
            Target::Locations(alts) => {
                let mut out = Vec::with_capacity(alts.len());
                for alt in alts {
                    let mut want = vec![None; self.processes.len()];
                    for (p, l) in alt {
                        let pi = self
                            .process_index(p)
                            .ok_or_else(|| NetworkError::UnknownProcess(p.clone()))?;
                        let li = self.processes[pi].location_index(l).ok_or_else(|| {
                            NetworkError::UnknownLocation {
                                process: p.clone(),
                                location: l.clone(),
                            }
                        })?;
                        want[pi] = Some(li);
                    }
                    out.push(want);
                }
                Ok(ResolvedTarget::Locations(out))
            }
        }
    }

    /// Largest guard constant over all processes.
    pub fn max_constant(&self) -> u32 {
        self.processes
            .iter()
            .flat_map(|p| p.transitions.iter().flat_map(|t| t.guard.iter().map(|g| g.2)))
            .max()
            .unwrap_or(0)
    }
}

/// Location targets. `Final` asks for every process in a final location;
/// `Locations` is a disjunction of partial location maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Final,
    Locations(Vec<BTreeMap<String, String>>),
}

impl Target {
    /// Parse `p=loc,q=loc` into a single-alternative target.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut alt = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, l) = part
                .split_once('=')
                .ok_or_else(|| format!("malformed target entry `{part}` (expected process=location)"))?;
            alt.insert(p.trim().to_string(), l.trim().to_string());
        }
        if alt.is_empty() {
            return Err("empty target".to_string());
        }
        Ok(Target::Locations(vec![alt]))
    }

    pub fn locations<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Target::Locations(vec![pairs
            .into_iter()
            .map(|(p, l)| (p.to_string(), l.to_string()))
            .collect()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolvedTarget {
    Final,
    Locations(Vec<Vec<Option<u32>>>),
}

impl ResolvedTarget {
    pub fn matches(&self, net: &Network, locs: &[u32]) -> bool {
        match self {
            ResolvedTarget::Final => locs
                .iter()
                .zip(&net.processes)
                .all(|(&l, p)| p.finals[l as usize]),
            ResolvedTarget::Locations(alts) => alts.iter().any(|want| {
                want.iter()
                    .zip(locs)
                    .all(|(w, &l)| w.is_none_or(|w| w == l))
            }),
        }
    }
}

/// Cartesian product of per-process choices, in lexicographic order.
pub(crate) fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for opts in choices {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for o in opts {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}
