//! Seeded random systems for differential testing.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    Action, Channel, ClockAtom, CmpOp, DelayDomain, Process, System, Topology, Transition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Connected, no undirected cycle.
    Polytree,
    /// No undirected cycle; possibly disconnected.
    Polyforest,
    /// Contains an undirected cycle.
    Cycle,
    /// Every other process sends to the first one.
    StarIn,
    /// The first process sends to every other one.
    StarOut,
    /// Arbitrary directed graph, self-loops included.
    Free,
}

impl Shape {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "polytree" => Shape::Polytree,
            "polyforest" => Shape::Polyforest,
            "cycle" => Shape::Cycle,
            "star-in" => Shape::StarIn,
            "star-out" => Shape::StarOut,
            "free" => Shape::Free,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenProfile {
    pub flavor: DelayDomain,
    /// Inclusive range of process counts.
    pub processes: (usize, usize),
    /// Inclusive range of locations per process.
    pub locations: (usize, usize),
    pub messages: usize,
    pub shape: Shape,
    /// Maximum number of testable channels.
    pub testable: usize,
    /// Probability that a location carries a tick self-loop.
    pub tick_density: f64,
    /// Largest guard constant (dense).
    pub max_constant: u32,
    /// Clocks per process (dense).
    pub clocks: usize,
    /// Counters per process (counter flavor).
    pub counters: usize,
    /// Inclusive range of non-loop transitions leaving each location.
    pub out_degree: (usize, usize),
}

impl Default for GenProfile {
    fn default() -> Self {
        Self {
            flavor: DelayDomain::Tick,
            processes: (2, 3),
            locations: (2, 4),
            messages: 2,
            shape: Shape::Polytree,
            testable: 0,
            tick_density: 1.0,
            max_constant: 3,
            clocks: 1,
            counters: 2,
            out_degree: (1, 2),
        }
    }
}

impl GenProfile {
    pub fn tick(shape: Shape) -> Self {
        Self {
            shape,
            ..Self::default()
        }
    }

    pub fn dense(shape: Shape) -> Self {
        Self {
            flavor: DelayDomain::Dense,
            shape,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible profile: {0}")]
    Infeasible(String),
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

fn check(profile: &GenProfile) -> Result<(), GenError> {
    let bad = |m: &str| Err(GenError::Infeasible(m.to_string()));
    let (lo, hi) = profile.processes;
    if lo == 0 || lo > hi {
        return bad("process range must be nonempty and start at 1 or more");
    }
    if profile.locations.0 == 0 || profile.locations.0 > profile.locations.1 {
        return bad("location range must be nonempty and start at 1 or more");
    }
    if profile.out_degree.0 > profile.out_degree.1 {
        return bad("empty out-degree range");
    }
    if profile.shape == Shape::Cycle && hi < 2 {
        return bad("a cycle needs at least 2 processes");
    }
    if !(0.0..=1.0).contains(&profile.tick_density) {
        return bad("tick density must lie in [0, 1]");
    }
    Ok(())
}

fn edges_for(shape: Shape, n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let orient = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            (a, b)
        } else {
            (b, a)
        }
    };
    let mut edges = Vec::new();
    match shape {
        Shape::Polytree => {
            for i in 1..n {
                let j = rng.gen_range(0..i);
                edges.push(orient(i, j, rng));
            }
        }
        Shape::Polyforest => {
            for i in 1..n {
                if rng.gen_bool(0.6) {
                    let j = rng.gen_range(0..i);
                    edges.push(orient(i, j, rng));
                }
            }
        }
        Shape::Cycle => {
            for i in 1..n {
                let j = rng.gen_range(0..i);
                edges.push(orient(i, j, rng));
            }
            // close a cycle: a parallel edge for two processes, otherwise a
            // chord between two nodes of the tree
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            edges.push(orient(a, b, rng));
        }
        Shape::StarIn => edges.extend((1..n).map(|i| (i, 0))),
        Shape::StarOut => edges.extend((1..n).map(|i| (0, i))),
        Shape::Free => {
            for a in 0..n {
                for b in 0..n {
                    let p = if a == b { 0.1 } else { 0.35 };
                    if rng.gen_bool(p) {
                        edges.push((a, b));
                    }
                }
            }
        }
    }
    edges
}

/// A random system for `profile`, fully determined by `seed`.
pub fn generate(profile: &GenProfile, seed: u64) -> Result<System, GenError> {
    check(profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = if profile.shape == Shape::Cycle {
        profile.processes.0.max(2)
    } else {
        profile.processes.0
    };
    let n = rng.gen_range(lo..=profile.processes.1);
    let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let messages: Vec<String> = (0..profile.messages).map(|i| format!("m{i}")).collect();

    let edges = edges_for(profile.shape, n, &mut rng);
    let mut topo = Topology::new();
    for p in &names {
        topo = topo.with_process(p);
    }
    for m in &messages {
        topo = topo.with_message(m);
    }
    let mut chans: Vec<(String, usize, usize)> = Vec::new();
    for (i, &(a, b)) in edges.iter().enumerate() {
        let id = format!("c{i}");
        topo = topo.with_channel(&id, &names[a], &names[b], false);
        chans.push((id, a, b));
    }
    let mut order: Vec<usize> = (0..chans.len()).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(profile.testable) {
        topo.channels.get_mut(&chans[i].0).unwrap().testable = true;
    }

    let mut sys = System::new(&format!("gen{seed}"), profile.flavor, topo);
    for (pi, name) in names.iter().enumerate() {
        let nl = range(&mut rng, profile.locations);
        let locs: Vec<String> = (0..nl).map(|i| format!("l{i}")).collect();
        let mut p = Process::new(&locs[0]);
        for l in &locs {
            p.locations.insert(l.clone());
        }
        let nf = rng.gen_range(1..=nl);
        let mut finals: Vec<&String> = locs.iter().collect();
        finals.shuffle(&mut rng);
        for l in finals.into_iter().take(nf) {
            p.finals.insert(l.clone());
        }
        let clocks: Vec<String> = if profile.flavor == DelayDomain::Dense {
            (0..profile.clocks).map(|i| format!("x{i}")).collect()
        } else {
            Vec::new()
        };
        let counters: Vec<String> = if profile.flavor == DelayDomain::None {
            (0..profile.counters).map(|i| format!("k{i}")).collect()
        } else {
            Vec::new()
        };
        p.clocks.extend(clocks.iter().cloned());
        p.counters.extend(counters.iter().cloned());

        let outgoing: Vec<&String> = chans
            .iter()
            .filter(|c| c.1 == pi)
            .map(|c| &c.0)
            .collect();
        let incoming: Vec<&String> = chans
            .iter()
            .filter(|c| c.2 == pi)
            .map(|c| &c.0)
            .collect();
        let tested: Vec<&String> = incoming
            .iter()
            .copied()
            .filter(|c| sys.topology.channels[*c].testable)
            .collect();

        for l in &locs {
            let k = range(&mut rng, profile.out_degree);
            for _ in 0..k {
                let to = locs.choose(&mut rng).unwrap().clone();
                let action = random_action(
                    &mut rng,
                    profile.flavor,
                    &outgoing,
                    &incoming,
                    &tested,
                    &messages,
                    &counters,
                );
                let mut t = Transition::new(l, &to, action);
                if !clocks.is_empty() {
                    if rng.gen_bool(0.5) {
                        let x = clocks.choose(&mut rng).unwrap();
                        let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt]
                            .choose(&mut rng)
                            .unwrap();
                        t = t.when(ClockAtom::new(x, op, rng.gen_range(0..=profile.max_constant)));
                    }
                    if rng.gen_bool(0.3) {
                        t = t.reset(clocks.choose(&mut rng).unwrap());
                    }
                }
                p.add(t);
            }
            if profile.flavor == DelayDomain::Tick && rng.gen_bool(profile.tick_density) {
                p.add(Transition::new(l, l, Action::Tick));
            }
        }
        sys = sys.with_process(name, p);
    }
    Ok(sys)
}

fn random_action(
    rng: &mut ChaCha8Rng,
    flavor: DelayDomain,
    outgoing: &[&String],
    incoming: &[&String],
    tested: &[&String],
    messages: &[String],
    counters: &[String],
) -> Action {
    let mut kinds = vec![0u8];
    if !messages.is_empty() && !outgoing.is_empty() {
        kinds.extend([1, 1]);
    }
    if !messages.is_empty() && !incoming.is_empty() {
        kinds.extend([2, 2]);
    }
    if !tested.is_empty() {
        kinds.push(3);
    }
    if flavor == DelayDomain::Tick {
        kinds.push(4);
    }
    if !counters.is_empty() {
        kinds.extend([5, 6, 7]);
    }
    match *kinds.choose(rng).unwrap() {
        1 => Action::Send {
            channel: outgoing.choose(rng).unwrap().to_string(),
            message: messages.choose(rng).unwrap().clone(),
        },
        2 => Action::Recv {
            channel: incoming.choose(rng).unwrap().to_string(),
            message: messages.choose(rng).unwrap().clone(),
        },
        3 => Action::TestEmpty {
            channel: tested.choose(rng).unwrap().to_string(),
        },
        4 => Action::Tick,
        5 => Action::Inc(counters.choose(rng).unwrap().clone()),
        6 => Action::Dec(counters.choose(rng).unwrap().clone()),
        7 => Action::ZeroTest(counters.choose(rng).unwrap().clone()),
        _ => Action::Internal(["a", "b"].choose(rng).unwrap().to_string()),
    }
}

/// A single-process machine over counters `x` and `y`.
pub fn counter_machine(seed: u64, locations: usize, out_degree: usize) -> System {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counters = ["x".to_string(), "y".to_string()];
    let locs: Vec<String> = (0..locations.max(1)).map(|i| format!("l{i}")).collect();
    let mut p = Process::new(&locs[0]);
    for c in &counters {
        p.counters.insert(c.clone());
    }
    p.finals.insert(locs.choose(&mut rng).unwrap().clone());
    for l in &locs {
        p.locations.insert(l.clone());
        for _ in 0..rng.gen_range(1..=out_degree.max(1)) {
            let to = locs.choose(&mut rng).unwrap();
            let x = counters.choose(&mut rng).unwrap().clone();
            let action = match rng.gen_range(0..4) {
                0 => Action::Inc(x),
                1 => Action::Dec(x),
                2 => Action::ZeroTest(x),
                _ => Action::Internal("a".into()),
            };
            p.add(Transition::new(l, to, action));
        }
    }
    System::new(&format!("cm{seed}"), DelayDomain::None, Topology::new()).with_process("p", p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    AddTestable,
    RemoveTestable,
    AddCycleEdge,
}

/// Apply a topology mutation; `None` when it does not apply (for example
/// no channel left to flag). Automata are left untouched.
pub fn mutate(sys: &System, mutation: Mutation, seed: u64) -> Option<System> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = sys.clone();
    match mutation {
        Mutation::AddTestable | Mutation::RemoveTestable => {
            let want = mutation == Mutation::RemoveTestable;
            let ids: Vec<String> = sys
                .topology
                .channels
                .iter()
                .filter(|(_, c)| c.testable == want)
                .map(|(id, _)| id.clone())
                .collect();
            let id = ids.choose(&mut rng)?;
            out.topology.channels.get_mut(id).unwrap().testable = !want;
        }
        Mutation::AddCycleEdge => {
            let procs: Vec<&String> = sys.topology.processes.iter().collect();
            if procs.is_empty() {
                return None;
            }
            // parallel to an existing channel, or a self-loop without one
            let (a, b) = match sys.topology.channels.values().collect::<Vec<_>>().choose(&mut rng) {
                Some(Channel { source, target, .. }) => {
                    if rng.gen_bool(0.5) {
                        (source.clone(), target.clone())
                    } else {
                        (target.clone(), source.clone())
                    }
                }
                None => {
                    let p = procs.choose(&mut rng).unwrap();
                    ((*p).clone(), (*p).clone())
                }
            };
            let taken: BTreeSet<&String> = sys.topology.channels.keys().collect();
            let id = (0..)
                .map(|i| format!("cyc{i}"))
                .find(|n| !taken.contains(n))
                .unwrap();
            out.topology.channels.insert(
                id,
                Channel {
                    source: a,
                    target: b,
                    testable: false,
                },
            );
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::serialize;
    use crate::model::validate_system;
    use crate::topology::is_polyforest;

    #[test]
    fn polytree_seed_seven() {
        let s = generate(&GenProfile::tick(Shape::Polytree), 7).unwrap();
        assert!(is_polyforest(&s.topology).is_forest());
        assert!(validate_system(&s).is_empty());
    }

    #[test]
    fn cycle_profile_is_not_polyforest() {
        for seed in 0..20 {
            let s = generate(&GenProfile::tick(Shape::Cycle), seed).unwrap();
            assert!(!is_polyforest(&s.topology).is_forest());
        }
    }

    #[test]
    fn same_seed_same_output() {
        let p = GenProfile::dense(Shape::Polyforest);
        assert_eq!(
            serialize(&generate(&p, 3).unwrap()),
            serialize(&generate(&p, 3).unwrap())
        );
    }

    #[test]
    fn infeasible_cycle() {
        let p = GenProfile {
            processes: (1, 1),
            ..GenProfile::tick(Shape::Cycle)
        };
        assert!(generate(&p, 0).is_err());
    }

    #[test]
    fn stars_have_expected_orientation() {
        let p = GenProfile {
            processes: (3, 3),
            ..GenProfile::tick(Shape::StarIn)
        };
        let s = generate(&p, 1).unwrap();
        assert!(s.topology.channels.values().all(|c| c.target == "p0"));
        let s = generate(&GenProfile { shape: Shape::StarOut, ..p }, 1).unwrap();
        assert!(s.topology.channels.values().all(|c| c.source == "p0"));
    }

    #[test]
    fn counter_machine_is_valid() {
        for seed in 0..10 {
            assert!(validate_system(&counter_machine(seed, 4, 2)).is_empty());
        }
    }

    #[test]
    fn mutations() {
        let s = generate(&GenProfile::tick(Shape::Polytree), 2).unwrap();
        let t = mutate(&s, Mutation::AddTestable, 0).unwrap();
        assert_eq!(t.topology.testable_channels().count(), 1);
        assert!(mutate(&s, Mutation::RemoveTestable, 0).is_none());
        let c = mutate(&s, Mutation::AddCycleEdge, 0).unwrap();
        assert!(!is_polyforest(&c.topology).is_forest());
    }
}
