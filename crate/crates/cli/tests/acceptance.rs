//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary lines are
//! printed in order; exits nonzero if any criterion fails.

use std::collections::{HashSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ctp_core::dense::{self, zone_reach, Dbm, ZoneLimits, ZoneOutcome, Q};
use ctp_core::gen::{self, GenProfile, Shape};
use ctp_core::reductions::{check_via_vass, counters_to_channels};
use ctp_core::semantics::{
    check_trace_invariants, reach_explicit, reachable_within, replay, simulate, topological_ranks,
    Policy, Schedule,
};
use ctp_core::vass::{
    karp_miller, replay_path, ExplicitVass, KmResult, Vass, VassAnswer, VassBudget, VassMode,
};
use ctp_core::{parse, DelayDomain, Limits, Network, ReachOutcome, Target};

struct Outcome {
    pass: bool,
    detail: String,
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    Outcome { pass: ok, detail }
}

fn main() {
    let only: Option<usize> = std::env::var("CTP_ACCEPTANCE_ONLY")
        .ok()
        .and_then(|s| s.parse().ok());
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("verdict table", verdict_table),
        ("oracle/reduction agreement", oracle_reduction_agreement),
        ("counters/channels round trip", counters_round_trip),
        ("tick-synchronization fuzz", tick_fuzz),
        ("slot normalization", slot_normalization),
        ("no bounded reordering", intro_example),
        ("DBM and Karp-Miller properties", dbm_and_km),
        ("discretizer agreement", discretizer_agreement),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let out = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| fail(format!("panicked: {}", panic_text(&e))));
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {} ({:.2?})",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            start.elapsed()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// 1. verdict table through the binary

const TABLE: &[(&str, &str, i32)] = &[
    (
        "chain_free",
        "delay discrete; msgs { m };
         channel c1 : p -> q; channel c2 : q -> r;",
        0,
    ),
    (
        "chain_both",
        "delay discrete; msgs { m };
         channel c1 : p -> q testable; channel c2 : q -> r testable;",
        4,
    ),
    (
        "chain_one",
        "delay discrete; msgs { m };
         channel c1 : p -> q testable; channel c2 : q -> r;",
        0,
    ),
    (
        "in_star_dense",
        "delay dense; msgs { m };
         channel c1 : p -> q testable; channel c2 : r -> q testable;",
        4,
    ),
    (
        "out_star_dense",
        "delay dense; msgs { m };
         channel c1 : q -> p testable; channel c2 : q -> r testable;",
        4,
    ),
    (
        "two_cycle_discrete",
        "delay discrete; msgs { m };
         channel c1 : p -> q; channel c2 : q -> p;",
        4,
    ),
    (
        "two_cycle_dense",
        "delay dense; msgs { m };
         channel c1 : p -> q; channel c2 : q -> p;",
        4,
    ),
    (
        "chain_free_dense",
        "delay dense; msgs { m };
         channel c1 : p -> q; channel c2 : q -> r;",
        0,
    ),
    (
        "pair_one_dense",
        "delay dense; msgs { m };
         channel c1 : p -> q testable;",
        5,
    ),
];

fn table_system(name: &str, header: &str) -> String {
    let procs: Vec<&str> = ["p", "q", "r"]
        .into_iter()
        .filter(|p| header.contains(&format!(" {p} ")) || header.contains(&format!(" {p};")))
        .collect();
    let mut s = format!("system {name} {{ {header}\n");
    for p in procs {
        s.push_str(&format!("  process {p} {{ init a; final a; }}\n"));
    }
    s.push_str("}\n");
    s
}

fn verdict_table() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for (name, header, want) in TABLE {
        let path = dir.path().join(format!("{name}.ctp"));
        std::fs::write(&path, table_system(name, header)).unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_ctp"))
            .arg("classify")
            .arg(&path)
            .output()
            .expect("run ctp");
        let got = out.status.code().unwrap_or(-1);
        if got != *want {
            mismatches.push(format!("{name}: exit {got}, expected {want}"));
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(1);
    verdict(
        ok,
        if mismatches.is_empty() {
            format!("{} rows exact in {elapsed:.2?}", TABLE.len())
        } else {
            mismatches.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 2. VASS reduction against the explicit oracle

fn oracle_reduction_agreement() -> Outcome {
    let start = Instant::now();
    let profile = GenProfile::tick(Shape::Polytree);
    let budget = VassBudget {
        km_nodes: 200_000,
        states: 200_000,
        max_cap: 16,
    };
    let limits = Limits {
        channel_bound: Some(8),
        depth: None,
        max_states: Some(200_000),
    };
    let (mut systems, mut seed) = (0, 0u64);
    let mut disagreements = Vec::new();
    let mut replay_failures = Vec::new();
    let (mut both_definite, mut vass_only, mut explicit_only, mut neither) = (0, 0, 0, 0);
    let mut accepting = 0;
    while systems < 200 {
        seed += 1;
        let Ok(sys) = gen::generate(&profile, seed) else { continue };
        systems += 1;
        let net = Network::new(&sys).unwrap();
        let target = net.resolve_target(&Target::Final).unwrap();
        let explicit = reach_explicit(&net, &target, limits).unwrap();
        let (v, check) = match check_via_vass(&sys, &Target::Final, VassMode::Auto, &budget) {
            Ok(r) => r,
            Err(e) => {
                replay_failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        if let VassAnswer::Accepting(path) = &check.outcome.answer {
            accepting += 1;
            let ok = replay_path(&v, path).is_ok()
                && check.trace.as_ref().is_some_and(|t| replay(&net, t).is_ok());
            if !ok {
                replay_failures.push(format!("seed {seed}"));
            }
        }
        let vass_def = check.outcome.answer.is_definite();
        if verbose() {
            eprintln!(
                "seed {seed}: explicit {} ({} states), vass {} ({:?}) at {:.2?}",
                explicit_kind(&explicit),
                explicit_states(&explicit),
                vass_kind(&check.outcome.answer),
                check.outcome.stats,
                start.elapsed()
            );
        }
        match (vass_def, explicit.is_definite()) {
            (true, true) => both_definite += 1,
            (true, false) => vass_only += 1,
            (false, true) => explicit_only += 1,
            (false, false) => neither += 1,
        }
        if vass_def && explicit.is_definite() {
            let vass_yes = matches!(check.outcome.answer, VassAnswer::Accepting(_));
            if vass_yes != explicit.is_reachable() {
                disagreements.push(seed);
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = disagreements.is_empty()
        && replay_failures.is_empty()
        && elapsed < Duration::from_secs(600);
    verdict(
        ok,
        format!(
            "{systems} systems, {} disagreements, {} replay failures, {accepting} accepting \
             witnesses replayed; definite on both {both_definite}, vass only {vass_only}, \
             explicit only {explicit_only}, neither {neither}{}",
            disagreements.len(),
            replay_failures.len(),
            if disagreements.is_empty() && replay_failures.is_empty() {
                String::new()
            } else {
                format!(" (seeds {disagreements:?} {replay_failures:?})")
            }
        ),
    )
}

fn verbose() -> bool {
    std::env::var_os("CTP_ACCEPTANCE_VERBOSE").is_some()
}

fn explicit_kind(o: &ReachOutcome) -> &'static str {
    match o {
        ReachOutcome::Reachable(_) => "reachable",
        ReachOutcome::Unreachable(_) => "unreachable",
        ReachOutcome::BoundExhausted(_) => "bound exhausted",
    }
}

fn explicit_states(o: &ReachOutcome) -> usize {
    match o {
        ReachOutcome::Reachable(t) => t.len(),
        ReachOutcome::Unreachable(s) | ReachOutcome::BoundExhausted(s) => s.states,
    }
}

fn vass_kind<S, L>(a: &VassAnswer<S, L>) -> String {
    match a {
        VassAnswer::Accepting(_) => "accepting".into(),
        VassAnswer::Rejecting(c) => format!("rejecting ({c})"),
        VassAnswer::Unknown(w) => format!("unknown ({w})"),
    }
}

// ---------------------------------------------------------------------------
// 3. counter machines against their channel encoding

fn counters_round_trip() -> Outcome {
    let limits = Limits {
        channel_bound: None,
        depth: Some(20),
        max_states: Some(1_000_000),
    };
    let mut disagreements = Vec::new();
    let (mut accepted, mut kinds_differ) = (0, 0);
    for seed in 0..100u64 {
        let machine = gen::counter_machine(seed, 4, 2);
        let channels = counters_to_channels(&machine).unwrap();
        let run = |sys: &ctp_core::System| {
            let net = Network::new(sys).unwrap();
            let t = net.resolve_target(&Target::Final).unwrap();
            reach_explicit(&net, &t, limits).unwrap()
        };
        let (a, b) = (run(&machine), run(&channels));
        if a.is_reachable() != b.is_reachable() {
            disagreements.push(seed);
        }
        if std::mem::discriminant(&a) != std::mem::discriminant(&b) {
            kinds_differ += 1;
        }
        if a.is_reachable() {
            accepted += 1;
        }
    }
    verdict(
        disagreements.is_empty(),
        format!(
            "100 machines, {accepted} accepting, {} disagreements{}, {kinds_differ} outcome kinds differ",
            disagreements.len(),
            if disagreements.is_empty() { String::new() } else { format!(" {disagreements:?}") }
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. random walks never break tick synchronization or FIFO order

fn tick_fuzz() -> Outcome {
    let shapes = [
        Shape::Polytree,
        Shape::Polyforest,
        Shape::Cycle,
        Shape::StarIn,
        Shape::StarOut,
        Shape::Free,
    ];
    let (mut steps, mut ticks, mut runs, mut seed) = (0usize, 0usize, 0usize, 0u64);
    let mut violations = Vec::new();
    while steps < 100_000 {
        seed += 1;
        let shape = shapes[seed as usize % shapes.len()];
        let profile = GenProfile {
            testable: (seed % 3) as usize,
            tick_density: 0.8,
            ..GenProfile::tick(shape)
        };
        let Ok(sys) = gen::generate(&profile, seed) else { continue };
        let net = Network::new(&sys).unwrap();
        let sim = simulate(&net, 500, seed, &Policy::Random).unwrap();
        runs += 1;
        steps += sim.trace.len().max(1);
        ticks += sim.trace.steps.iter().filter(|s| s.label.is_tick()).count();
        if let Err(e) = check_trace_invariants(&net, &sim.trace) {
            violations.push(format!("seed {seed}: {e}"));
        }
        if let Err(e) = replay(&net, &sim.trace) {
            violations.push(format!("seed {seed}: replay {e}"));
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "{steps} steps over {runs} runs ({ticks} ticks), {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. sender-before-receiver scheduling loses no configuration

fn slot_normalization() -> Outcome {
    let profile = GenProfile::tick(Shape::Polytree);
    let (mut systems, mut seed, mut total) = (0, 0u64, 0usize);
    let mut differ = Vec::new();
    while systems < 100 {
        seed += 1;
        let Ok(sys) = gen::generate(&profile, seed) else { continue };
        systems += 1;
        let net = Network::new(&sys).unwrap();
        let ranks = topological_ranks(&net).expect("polytrees are acyclic");
        let free = reachable_within(&net, 8, &Schedule::Free).unwrap();
        let slot = reachable_within(&net, 8, &Schedule::SlotNormalized(ranks)).unwrap();
        total += free.len();
        if free != slot {
            differ.push(seed);
        }
    }
    verdict(
        differ.is_empty(),
        format!(
            "{systems} systems, {total} configurations, {} sets differ{}",
            differ.len(),
            if differ.is_empty() { String::new() } else { format!(" {differ:?}") }
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. dense intro system: k deliveries need channel bound k

fn intro_system(k: usize) -> String {
    let finals: Vec<String> = (0..=k).map(|i| format!("q{i}")).collect();
    let mut recvs = String::new();
    for i in 0..k {
        recvs.push_str(&format!("    q{i} -> q{} : recv(c, m) when y >= 1;\n", i + 1));
    }
    format!(
        "system intro{k} {{
  delay dense;
  msgs {{ m }};
  channel c : p -> q;
  process p {{ init a; final a; clocks {{ x }}; a -> a : send(c, m) when x < 1; }}
  process q {{ init q0; final {};
    clocks {{ y }};
{recvs}  }}
  relax {{ clocks }};
}}
",
        finals.join(", ")
    )
}

fn intro_example() -> Outcome {
    let start = Instant::now();
    let mut wrong = Vec::new();
    for k in 1..=4usize {
        let sys = parse(&intro_system(k)).expect("intro system parses");
        let net = Network::new(&sys).unwrap();
        let target = Target::parse(&format!("q=q{k}")).unwrap();
        let resolved = net.resolve_target(&target).unwrap();
        match zone_reach(&net, &resolved, ZoneLimits::bounded(k)).unwrap() {
            ZoneOutcome::Reachable(tr) => {
                if dense::replay_timed(&net, &resolved, &tr).is_err() {
                    wrong.push(format!("k={k}: witness fails replay"));
                }
            }
            other => wrong.push(format!("k={k} bound {k}: {}", kind(&other))),
        }
        let below = zone_reach(&net, &resolved, ZoneLimits::bounded(k - 1)).unwrap();
        if !matches!(below, ZoneOutcome::BoundExhausted(_)) {
            wrong.push(format!("k={k} bound {}: {}", k - 1, kind(&below)));
        }
    }
    let ok = wrong.is_empty() && start.elapsed() < Duration::from_secs(60);
    verdict(
        ok,
        if wrong.is_empty() {
            "k=1..4 reachable at bound k, bound exhausted at k-1".into()
        } else {
            wrong.join("; ")
        },
    )
}

fn kind(o: &ZoneOutcome) -> &'static str {
    match o {
        ZoneOutcome::Reachable(_) => "reachable",
        ZoneOutcome::Unreachable(_) => "unreachable",
        ZoneOutcome::BoundExhausted(_) => "bound exhausted",
    }
}

// ---------------------------------------------------------------------------
// 7. zones against a sampling oracle, Karp-Miller against explicit BFS

/// `x_i - x_j < or <= c` over clocks `1..=n`, index 0 being the constant 0.
#[derive(Clone, Copy, Debug)]
struct Constraint {
    i: usize,
    j: usize,
    c: i64,
    strict: bool,
}

impl Constraint {
    fn holds(&self, v: &[Q]) -> bool {
        let val = |k: usize| if k == 0 { Q::from(0) } else { v[k - 1] };
        let d = val(self.i) - val(self.j);
        if self.strict {
            d < Q::from(self.c)
        } else {
            d <= Q::from(self.c)
        }
    }
}

/// Grid of valuations with step `1/(n+1)` in `[0, n*C + 2]`; every
/// nonempty zone with integer constants in `[-C, C]` contains one of them.
fn grid(n: usize, max_c: i64) -> Vec<Vec<Q>> {
    let den = n as i64 + 1;
    let top = (n as i64 * max_c + 2) * den;
    let axis: Vec<Q> = (0..=top).map(|k| Ratio::new(k, den)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |a| {
                    let mut q = p.clone();
                    q.push(*a);
                    q
                })
            })
            .collect();
    }
    out
}

fn random_zone(rng: &mut ChaCha8Rng, n: usize, max_c: i64) -> (Dbm, Vec<Constraint>) {
    let mut z = Dbm::universe(n);
    let mut cs = Vec::new();
    for _ in 0..rng.gen_range(1..=n + 1) {
        let i = rng.gen_range(0..=n);
        let mut j = rng.gen_range(0..=n);
        if i == j {
            j = (j + 1) % (n + 1);
        }
        let c = rng.gen_range(-max_c..=max_c);
        let strict = rng.gen_bool(0.5);
        cs.push(Constraint { i, j, c, strict });
        z = z.constrain(i, j, dense::bound(c, strict));
    }
    (z.canonicalize(), cs)
}

fn dbm_and_km() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let max_c = 2;
    let grids: Vec<Vec<Vec<Q>>> = (0..=3).map(|n| grid(n, max_c)).collect();
    let mut failures: Vec<String> = Vec::new();
    let mut empties = 0;
    for round in 0..10_000 {
        let n = 1 + round % 3;
        let (z, cs) = random_zone(&mut rng, n, max_c);
        let g = &grids[n];
        // membership and emptiness against the raw constraints
        for _ in 0..200 {
            let v = &g[rng.gen_range(0..g.len())];
            if z.contains(v) != cs.iter().all(|c| c.holds(v)) {
                failures.push(format!("zone {round}: membership of {v:?}"));
                break;
            }
        }
        let inside: Vec<&Vec<Q>> = g
            .iter()
            .filter(|v| cs.iter().all(|c| c.holds(v)))
            .take(8)
            .collect();
        if inside.iter().any(|v| !z.contains(v)) {
            failures.push(format!("zone {round}: member rejected"));
        }
        if z.is_empty() != inside.is_empty() {
            failures.push(format!("zone {round}: emptiness"));
        }
        if z.is_empty() {
            empties += 1;
            continue;
        }
        // canonicalization is idempotent
        if z.clone().canonicalize() != z {
            failures.push(format!("zone {round}: canonicalize not idempotent"));
        }
        // delay is monotone and extensive, and closed under time shifts
        let up = z.clone().delay_closure();
        if !up.includes(&z) {
            failures.push(format!("zone {round}: delay not extensive"));
        }
        let (w, _) = random_zone(&mut rng, n, max_c);
        let both = cs
            .iter()
            .fold(w.clone(), |acc, c| acc.constrain(c.i, c.j, dense::bound(c.c, c.strict)))
            .canonicalize();
        if !both.is_empty() && !z.clone().delay_closure().includes(&both.clone().delay_closure()) {
            failures.push(format!("zone {round}: delay not monotone"));
        }
        for v in inside.iter().take(4) {
            let d = Ratio::new(rng.gen_range(0..8), n as i64 + 1);
            let shifted: Vec<Q> = v.iter().map(|x| x + d).collect();
            if !up.contains(&shifted) {
                failures.push(format!("zone {round}: delayed point missing"));
            }
        }
        // reset: x is zero afterwards, and pinning x to zero changes nothing
        let x = rng.gen_range(1..=n);
        let r = z.clone().reset(x);
        if r.clone().intersect_atom(x, ctp_core::CmpOp::Eq, 0) != r {
            failures.push(format!("zone {round}: reset then x=0 not identity"));
        }
        for v in inside.iter().take(4) {
            let mut reset_v = (*v).clone();
            reset_v[x - 1] = Q::from(0);
            if !r.contains(&reset_v) {
                failures.push(format!("zone {round}: reset image missing"));
            }
        }
        if failures.len() > 5 {
            break;
        }
    }

    let (km_nets, km_fail) = km_against_bfs();
    failures.extend(km_fail);

    let pump = ExplicitVass::new(1)
        .with_initial("q", vec![0])
        .with_final("q")
        .with_transition("q", "q", vec![1], "inc");
    let pump_ok = match karp_miller(&pump, 1000) {
        KmResult::Complete(c) => c.bounded == vec![false],
        KmResult::Budget { .. } => false,
    };
    if !pump_ok {
        failures.push("pump is not reported unbounded".into());
    }
    verdict(
        failures.is_empty(),
        format!(
            "10000 zones ({empties} empty), {km_nets} bounded nets, pump gives ω; {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
        ),
    )
}

/// Token-conserving nets: every transition moves tokens between counters,
/// so the reachable set is finite and BFS gives exact maxima.
fn bounded_net(seed: u64) -> ExplicitVass {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(1..=3);
    let places = rng.gen_range(1..=3);
    let init: Vec<u64> = (0..dim).map(|_| rng.gen_range(0..=3)).collect();
    let mut v = ExplicitVass::new(dim).with_initial("s0", init).with_final("s0");
    for t in 0..rng.gen_range(1..=5) {
        let from = format!("s{}", rng.gen_range(0..places));
        let to = format!("s{}", rng.gen_range(0..places));
        let mut delta = vec![0i64; dim];
        if dim > 1 {
            let a = rng.gen_range(0..dim);
            let b = (a + rng.gen_range(1..dim)) % dim;
            let k = rng.gen_range(1..=2);
            delta[a] -= k;
            delta[b] += k;
        }
        v = v.with_transition(&from, &to, delta, &format!("t{t}"));
    }
    v
}

fn bfs_maxima(v: &ExplicitVass) -> Vec<u64> {
    let mut max = vec![0u64; v.dim()];
    let mut seen = HashSet::new();
    let mut queue: VecDeque<(usize, Vec<u64>)> = v.initial().into_iter().collect();
    while let Some((s, m)) = queue.pop_front() {
        if !seen.insert((s, m.clone())) {
            continue;
        }
        for (k, x) in m.iter().enumerate() {
            max[k] = max[k].max(*x);
        }
        for e in v.successors(&s) {
            let next: Option<Vec<u64>> = m
                .iter()
                .zip(&e.delta)
                .map(|(&x, &d)| u64::try_from(x as i64 + d).ok())
                .collect();
            if let Some(next) = next {
                queue.push_back((e.target, next));
            }
        }
    }
    max
}

fn km_against_bfs() -> (usize, Vec<String>) {
    let mut failures = Vec::new();
    let nets = 50;
    for seed in 0..nets as u64 {
        let v = bounded_net(seed);
        let want = bfs_maxima(&v);
        match karp_miller(&v, 100_000) {
            KmResult::Complete(c) => {
                if c.bounded.iter().any(|b| !b) || c.bounds.as_ref() != Some(&want) {
                    failures.push(format!("net {seed}: km {:?} vs bfs {want:?}", c.bounds));
                }
            }
            KmResult::Budget { .. } => failures.push(format!("net {seed}: budget")),
        }
    }
    (nets, failures)
}

// ---------------------------------------------------------------------------
// 8. discretize + explicit against zones

fn discretizer_agreement() -> Outcome {
    let profile = GenProfile {
        processes: (1, 2),
        max_constant: 3,
        testable: 0,
        ..GenProfile::dense(Shape::Polyforest)
    };
    let (mut systems, mut seed) = (0, 0u64);
    let mut disagreements = Vec::new();
    let mut lift_failures = Vec::new();
    let (mut definite, mut reachable) = (0, 0);
    while systems < 100 {
        seed += 1;
        let Ok(sys) = gen::generate(&profile, seed) else { continue };
        assert_eq!(sys.delay, DelayDomain::Dense);
        systems += 1;
        let dense_net = Network::new(&sys).unwrap();
        let dense_target = dense_net.resolve_target(&Target::Final).unwrap();
        let zones = zone_reach(&dense_net, &dense_target, ZoneLimits::bounded(3)).unwrap();

        let d = dense::discretize(&sys).unwrap();
        let disc_net = Network::new(&d.system).unwrap();
        let disc_target = disc_net
            .resolve_target(&d.lift_target(&Target::Final))
            .unwrap();
        let explicit = reach_explicit(&disc_net, &disc_target, Limits::bounded(3)).unwrap();

        if let ReachOutcome::Reachable(trace) = &explicit {
            let ok = d
                .lift_trace(&dense_net, &disc_net, trace)
                .ok()
                .is_some_and(|tt| dense::replay_timed(&dense_net, &dense_target, &tt).is_ok());
            if !ok {
                lift_failures.push(seed);
            }
        }
        if zones.is_definite() && explicit.is_definite() {
            definite += 1;
            if zones.is_reachable() {
                reachable += 1;
            }
        }
        if zones.is_reachable() != explicit.is_reachable()
            && (zones.is_definite() || explicit.is_definite())
        {
            disagreements.push(seed);
        }
    }
    verdict(
        disagreements.is_empty() && lift_failures.is_empty(),
        format!(
            "{systems} systems ({definite} definite on both, {reachable} reachable), {} \
             disagreements, {} witnesses failed to lift{}",
            disagreements.len(),
            lift_failures.len(),
            if disagreements.is_empty() && lift_failures.is_empty() {
                String::new()
            } else {
                format!(" (seeds {disagreements:?} / {lift_failures:?})")
            }
        ),
    )
}
