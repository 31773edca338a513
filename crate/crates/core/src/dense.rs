//! Dense time: difference-bound matrices, a joint-zone explorer for
//! communicating timed automata with bounded channels, and a region-based
//! translation into tick automata.
//!
//! All delays are global: one delay step advances every clock of every
//! process by the same amount. Arithmetic is exact throughout.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Action, CmpOp, DelayDomain, Process, System, Transition};
use crate::network::{cartesian, Network, NetworkError, Op, ProcessInfo, ResolvedTarget, Target};
use crate::semantics::{StepLabel, Trace};

pub type Q = Ratio<i64>;

/// Encoded bound `(c, strict)` as `2c` for `< c` and `2c + 1` for `<= c`,
/// so tighter bounds compare smaller.
pub type Raw = i64;
pub const INF: Raw = i64::MAX;
pub const LE_ZERO: Raw = 1;

pub fn bound(c: i64, strict: bool) -> Raw {
    (c << 1) | if strict { 0 } else { 1 }
}

pub fn bound_value(b: Raw) -> i64 {
    b >> 1
}

pub fn is_strict(b: Raw) -> bool {
    b & 1 == 0
}

fn add(a: Raw, b: Raw) -> Raw {
    if a == INF || b == INF {
        INF
    } else {
        (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)
    }
}

/// A zone over clocks `1..dim` with reference clock `0`; entry `(i, j)`
/// bounds `x_i - x_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    m: Vec<Raw>,
    empty: bool,
}

impl Dbm {
    /// All clocks equal to zero.
    pub fn zero(clocks: usize) -> Self {
        let dim = clocks + 1;
        Self {
            dim,
            m: vec![LE_ZERO; dim * dim],
            empty: false,
        }
    }

    /// All nonnegative valuations.
    pub fn universe(clocks: usize) -> Self {
        let dim = clocks + 1;
        let mut m = vec![INF; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = LE_ZERO;
            m[i] = LE_ZERO;
        }
        Self {
            dim,
            m,
            empty: false,
        }
    }

    pub fn clocks(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, i: usize, j: usize) -> Raw {
        self.m[i * self.dim + j]
    }

    /// Overwrite one entry without closing; call [`Dbm::canonicalize`] after.
    pub fn set_raw(&mut self, i: usize, j: usize, b: Raw) {
        self.m[i * self.dim + j] = b;
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Shortest-path closure; detects emptiness.
    pub fn canonicalize(mut self) -> Self {
        if self.empty {
            return self;
        }
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik == INF {
                    continue;
                }
                for j in 0..n {
                    let c = add(ik, self.m[k * n + j]);
                    if c < self.m[i * n + j] {
                        self.m[i * n + j] = c;
                    }
                }
            }
        }
        if (0..n).any(|i| self.m[i * n + i] < LE_ZERO) {
            self.empty = true;
        }
        self
    }

    /// Let time pass: drop every upper bound.
    pub fn delay_closure(mut self) -> Self {
        if self.empty {
            return self;
        }
        for i in 1..self.dim {
            self.m[i * self.dim] = INF;
        }
        self
    }

    /// Set clock `x` (1-based) to zero. Keeps canonical form.
    pub fn reset(mut self, x: usize) -> Self {
        if self.empty {
            return self;
        }
        let n = self.dim;
        for j in 0..n {
            self.m[x * n + j] = self.m[j];
            self.m[j * n + x] = self.m[j * n];
        }
        self.m[x * n + x] = LE_ZERO;
        self.m[x * n] = LE_ZERO;
        self.m[x] = LE_ZERO;
        self
    }

    /// Conjoin `x_i - x_j ⋈ b` and re-close.
    pub fn constrain(mut self, i: usize, j: usize, b: Raw) -> Self {
        if self.empty || b >= self.get(i, j) {
            return self;
        }
        let n = self.dim;
        if add(self.get(j, i), b) < LE_ZERO {
            self.empty = true;
            return self;
        }
        self.m[i * n + j] = b;
        // incremental closure through the tightened edge
        for k in 0..n {
            let ki = self.m[k * n + i];
            if ki == INF {
                continue;
            }
            for l in 0..n {
                let c = add(add(ki, b), self.m[j * n + l]);
                if c < self.m[k * n + l] {
                    self.m[k * n + l] = c;
                }
            }
        }
        self
    }

    pub fn intersect_atom(self, x: usize, op: CmpOp, c: u32) -> Self {
        let c = c as i64;
        match op {
            CmpOp::Lt => self.constrain(x, 0, bound(c, true)),
            CmpOp::Le => self.constrain(x, 0, bound(c, false)),
            CmpOp::Gt => self.constrain(0, x, bound(-c, true)),
            CmpOp::Ge => self.constrain(0, x, bound(-c, false)),
            CmpOp::Eq => self
                .constrain(x, 0, bound(c, false))
                .constrain(0, x, bound(-c, false)),
        }
    }

    pub fn intersect_guard(self, guard: &[(usize, CmpOp, u32)]) -> Self {
        guard
            .iter()
            .fold(self, |z, &(x, op, c)| z.intersect_atom(x, op, c))
    }

    /// Zone inclusion `other ⊆ self` for canonical zones.
    pub fn includes(&self, other: &Dbm) -> bool {
        if other.empty {
            return true;
        }
        if self.empty {
            return false;
        }
        self.m.iter().zip(&other.m).all(|(a, b)| b <= a)
    }

    /// Classic maximal-constant extrapolation; `max[i]` is the largest
    /// constant clock `i` is compared with (`max[0]` is ignored).
    pub fn extrapolate(mut self, max: &[i64]) -> Self {
        if self.empty {
            return self;
        }
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mi = if i == 0 { 0 } else { max[i] };
                let mj = if j == 0 { 0 } else { max[j] };
                let b = self.m[i * n + j];
                if b != INF && b > bound(mi, false) {
                    self.m[i * n + j] = INF;
                } else if b < bound(-mj, true) {
                    self.m[i * n + j] = bound(-mj, true);
                }
            }
        }
        self.canonicalize()
    }

    /// Membership of a valuation (`vals[i]` for clock `i + 1`).
    pub fn contains(&self, vals: &[Q]) -> bool {
        if self.empty {
            return false;
        }
        let v = |i: usize| if i == 0 { Q::from(0) } else { vals[i - 1] };
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| {
                let b = self.get(i, j);
                if b == INF {
                    return true;
                }
                let d = v(i) - v(j);
                let c = Q::from(bound_value(b));
                if is_strict(b) {
                    d < c
                } else {
                    d <= c
                }
            })
        })
    }

    /// Nonempty intersection with the valuation where every clock is zero.
    pub fn admits_zero(&self) -> bool {
        !self.empty
            && (1..self.dim).all(|i| self.get(0, i) >= LE_ZERO && self.get(i, 0) >= LE_ZERO)
            && (1..self.dim).all(|i| (1..self.dim).all(|j| self.get(i, j) >= LE_ZERO))
    }
}

impl fmt::Display for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return f.write_str("empty");
        }
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let b = self.get(i, j);
                    if b == INF {
                        "inf".to_string()
                    } else {
                        format!("{}{}", if is_strict(b) { "<" } else { "<=" }, bound_value(b))
                    }
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DenseError {
    #[error("zone exploration needs a dense system, got {0} time")]
    FlavorMismatch(DelayDomain),
    #[error("discretization needs a dense system, got {0} time")]
    NotDense(DelayDomain),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("no timing satisfies the path: {0}")]
    Timing(String),
}

/// Global clock layout: clock `k` of process `p` is DBM index `offset[p] + k`.
#[derive(Debug, Clone)]
pub struct ClockLayout {
    pub offset: Vec<usize>,
    pub total: usize,
    /// Per DBM index, the largest constant the clock is compared with.
    pub max: Vec<i64>,
}

impl ClockLayout {
    pub fn new(net: &Network) -> Self {
        let mut offset = Vec::with_capacity(net.processes.len());
        let mut next = 1;
        let mut max = vec![0i64];
        for p in &net.processes {
            offset.push(next);
            next += p.clocks.len();
            let mut local = vec![0i64; p.clocks.len()];
            for t in &p.transitions {
                for &(x, _, c) in &t.guard {
                    local[x] = local[x].max(c as i64);
                }
            }
            max.extend(local);
        }
        Self {
            offset,
            total: next - 1,
            max,
        }
    }

    pub fn index(&self, p: usize, x: usize) -> usize {
        self.offset[p] + x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZoneLimits {
    pub channel_bound: usize,
    pub max_states: usize,
}

impl ZoneLimits {
    pub fn bounded(channel_bound: usize) -> Self {
        Self {
            channel_bound,
            max_states: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ZoneStats {
    pub states: usize,
    pub transitions: usize,
    pub pruned_by_bound: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimedStep {
    pub process: usize,
    pub transition: usize,
    #[serde(serialize_with = "ser_q")]
    pub time: Q,
}

/// A run with exact firing times; `end` is when acceptance is checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimedTrace {
    pub initial: Vec<u32>,
    pub steps: Vec<TimedStep>,
    #[serde(serialize_with = "ser_q")]
    pub end: Q,
}

fn ser_q<S: serde::Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_q(q))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ZoneOutcome {
    Reachable(TimedTrace),
    Unreachable(ZoneStats),
    BoundExhausted(ZoneStats),
}

impl ZoneOutcome {
    pub fn is_definite(&self) -> bool {
        !matches!(self, ZoneOutcome::BoundExhausted(_))
    }

    pub fn is_reachable(&self) -> bool {
        matches!(self, ZoneOutcome::Reachable(_))
    }
}

#[derive(Clone)]
struct SymState {
    locs: Vec<u32>,
    channels: Vec<Vec<u32>>,
    zone: Dbm,
}

fn discrete_step(
    p: &ProcessInfo,
    pi: usize,
    t: usize,
    locs: &[u32],
    channels: &[Vec<u32>],
) -> Option<(Vec<u32>, Vec<Vec<u32>>)> {
    let tr = &p.transitions[t];
    if tr.from != locs[pi] {
        return None;
    }
    let mut ch = channels.to_vec();
    match tr.op {
        Op::Internal => {}
        Op::Send { channel, message } => ch[channel].push(message),
        Op::Recv { channel, message } => {
            if ch[channel].first() != Some(&message) {
                return None;
            }
            ch[channel].remove(0);
        }
        Op::TestEmpty { channel } => {
            if !ch[channel].is_empty() {
                return None;
            }
        }
        Op::Tick | Op::Inc(_) | Op::Dec(_) | Op::ZeroTest(_) => return None,
    }
    let mut l = locs.to_vec();
    l[pi] = tr.to;
    Some((l, ch))
}

fn zone_accepts(net: &Network, target: &ResolvedTarget, s: &SymState) -> bool {
    target.matches(net, &s.locs)
        && (!net.acceptance.require_empty_channels || s.channels.iter().all(Vec::is_empty))
        && (!net.acceptance.require_zero_clocks || s.zone.admits_zero())
}

/// Symbolic reachability over (locations, channel words, joint zone).
/// `Unreachable` is only returned when no configuration was pruned.
pub fn zone_reach(
    net: &Network,
    target: &ResolvedTarget,
    limits: ZoneLimits,
) -> Result<ZoneOutcome, DenseError> {
    if net.delay != DelayDomain::Dense {
        return Err(DenseError::FlavorMismatch(net.delay));
    }
    let layout = ClockLayout::new(net);
    let mut stats = ZoneStats::default();
    let mut states: Vec<SymState> = Vec::new();
    let mut parent: Vec<Option<(usize, usize, usize)>> = Vec::new();
    let mut passed: HashMap<(Vec<u32>, Vec<Vec<u32>>), Vec<usize>> = HashMap::new();
    let mut queue = VecDeque::new();

    let path_to = |parent: &Vec<Option<(usize, usize, usize)>>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((u, p, t)) = parent[i] {
            steps.push((p, t));
            i = u;
        }
        steps.reverse();
        (i, steps)
    };

    let init_zone = Dbm::zero(layout.total).delay_closure().extrapolate(&layout.max);
    for locs in cartesian(&net.processes.iter().map(|p| p.initial.clone()).collect::<Vec<_>>()) {
        let s = SymState {
            locs,
            channels: vec![Vec::new(); net.channels.len()],
            zone: init_zone.clone(),
        };
        let key = (s.locs.clone(), s.channels.clone());
        if passed.contains_key(&key) {
            continue;
        }
        passed.insert(key, vec![states.len()]);
        states.push(s);
        parent.push(None);
        stats.states += 1;
        queue.push_back(states.len() - 1);
    }

    let mut found = None;
    for i in 0..states.len() {
        if zone_accepts(net, target, &states[i]) {
            found = Some(i);
            break;
        }
    }

    'outer: while found.is_none() {
        let Some(u) = queue.pop_front() else { break };
        for (pi, p) in net.processes.iter().enumerate() {
            let from = states[u].locs[pi] as usize;
            for &t in &p.outgoing[from] {
                let Some((locs, channels)) =
                    discrete_step(p, pi, t, &states[u].locs, &states[u].channels)
                else {
                    continue;
                };
                let tr = &p.transitions[t];
                let guard: Vec<(usize, CmpOp, u32)> = tr
                    .guard
                    .iter()
                    .map(|&(x, op, c)| (layout.index(pi, x), op, c))
                    .collect();
                let mut zone = states[u].zone.clone().intersect_guard(&guard);
                if zone.is_empty() {
                    continue;
                }
                for &x in &tr.resets {
                    zone = zone.reset(layout.index(pi, x));
                }
                let zone = zone.delay_closure().extrapolate(&layout.max);
                stats.transitions += 1;
                if channels.iter().any(|w| w.len() > limits.channel_bound) {
                    stats.pruned_by_bound += 1;
                    continue;
                }
                let key = (locs.clone(), channels.clone());
                let bucket = passed.entry(key).or_default();
                if bucket.iter().any(|&k| states[k].zone.includes(&zone)) {
                    continue;
                }
                if states.len() >= limits.max_states {
                    stats.budget_exhausted = true;
                    break 'outer;
                }
                let idx = states.len();
                bucket.push(idx);
                states.push(SymState {
                    locs,
                    channels,
                    zone,
                });
                parent.push(Some((u, pi, t)));
                stats.states += 1;
                if zone_accepts(net, target, &states[idx]) {
                    found = Some(idx);
                    break 'outer;
                }
                queue.push_back(idx);
            }
        }
    }

    if let Some(i) = found {
        let (root, path) = path_to(&parent, i);
        let initial = states[root].locs.clone();
        let windows = vec![Window::ANY; path.len()];
        let (times, end) = solve_timing(
            net,
            &path,
            &windows,
            Window::ANY,
            net.acceptance.require_zero_clocks,
        )
        .ok_or_else(|| DenseError::Timing("symbolic path has no concrete timing".into()))?;
        let trace = TimedTrace {
            initial,
            steps: path
                .iter()
                .zip(times)
                .map(|(&(process, transition), time)| TimedStep {
                    process,
                    transition,
                    time,
                })
                .collect(),
            end,
        };
        return Ok(ZoneOutcome::Reachable(trace));
    }
    Ok(
        if stats.pruned_by_bound > 0 || stats.budget_exhausted {
            ZoneOutcome::BoundExhausted(stats)
        } else {
            ZoneOutcome::Unreachable(stats)
        },
    )
}

/// Bound on one time variable, in absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub lo: Option<(i64, bool)>,
    pub hi: Option<(i64, bool)>,
}

impl Window {
    pub const ANY: Window = Window { lo: None, hi: None };

    /// Time window of the `h`-th half-unit slot: even slots are the instant
    /// `h/2`, odd slots the open interval between two integers.
    pub fn half_slot(h: u64) -> Window {
        let k = (h / 2) as i64;
        if h % 2 == 0 {
            Window {
                lo: Some((k, false)),
                hi: Some((k, false)),
            }
        } else {
            Window {
                lo: Some((k, true)),
                hi: Some((k + 1, true)),
            }
        }
    }

    pub fn contains(&self, t: Q) -> bool {
        self.lo.is_none_or(|(c, s)| if s { t > Q::from(c) } else { t >= Q::from(c) })
            && self.hi.is_none_or(|(c, s)| if s { t < Q::from(c) } else { t <= Q::from(c) })
    }
}

/// Difference bound over rationals; `None` is +∞.
type RBound = Option<(Q, bool)>;

fn r_add(a: RBound, b: RBound) -> RBound {
    Some((a?.0 + b?.0, a?.1 || b?.1))
}

fn r_lt(a: RBound, b: RBound) -> bool {
    match (a, b) {
        (_, None) => a.is_some(),
        (None, Some(_)) => false,
        (Some((x, sx)), Some((y, sy))) => x < y || (x == y && sx && !sy),
    }
}

struct RDbm {
    n: usize,
    m: Vec<RBound>,
}

impl RDbm {
    fn new(n: usize) -> Self {
        let mut m = vec![None; n * n];
        for i in 0..n {
            m[i * n + i] = Some((Q::from(0), false));
        }
        Self { n, m }
    }

    /// Conjoin `v_i - v_j ⋈ c`.
    fn add(&mut self, i: usize, j: usize, c: Q, strict: bool) {
        let b = Some((c, strict));
        if r_lt(b, self.m[i * self.n + j]) {
            self.m[i * self.n + j] = b;
        }
    }

    fn close(&mut self) -> bool {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let c = r_add(self.m[i * n + k], self.m[k * n + j]);
                    if r_lt(c, self.m[i * n + j]) {
                        self.m[i * n + j] = c;
                    }
                }
            }
        }
        (0..n).all(|i| !r_lt(self.m[i * n + i], Some((Q::from(0), false))))
    }
}

/// Concrete firing times for a sequence of `(process, transition)` steps:
/// times are nondecreasing from 0, every guard holds, each step lies in its
/// window, and with `zero_end` all clocks are zero at the end time.
/// Picks the earliest closed bound where possible.
pub fn solve_timing(
    net: &Network,
    steps: &[(usize, usize)],
    windows: &[Window],
    end_window: Window,
    zero_end: bool,
) -> Option<(Vec<Q>, Q)> {
    let layout = ClockLayout::new(net);
    let k = steps.len();
    // variable 0 is time zero, 1..=k the steps, k + 1 the end
    let n = k + 2;
    let mut d = RDbm::new(n);
    let q = |c: i64| Q::from(c);
    let mut last_reset = vec![0usize; layout.total + 1];
    for (i, &(p, t)) in steps.iter().enumerate() {
        let v = i + 1;
        d.add(v - 1, v, q(0), false);
        let tr = &net.processes[p].transitions[t];
        for &(x, op, c) in &tr.guard {
            let r = last_reset[layout.index(p, x)];
            let c = c as i64;
            match op {
                CmpOp::Lt => d.add(v, r, q(c), true),
                CmpOp::Le => d.add(v, r, q(c), false),
                CmpOp::Gt => d.add(r, v, q(-c), true),
                CmpOp::Ge => d.add(r, v, q(-c), false),
                CmpOp::Eq => {
                    d.add(v, r, q(c), false);
                    d.add(r, v, q(-c), false);
                }
            }
        }
        for &x in &tr.resets {
            last_reset[layout.index(p, x)] = v;
        }
    }
    let end = k + 1;
    d.add(k, end, q(0), false);
    if zero_end {
        for &r in &last_reset[1..] {
            d.add(end, r, q(0), false);
        }
    } else {
        d.add(end, k, q(0), false);
    }
    for (i, w) in windows.iter().chain(std::iter::once(&end_window)).enumerate() {
        let v = i + 1;
        if let Some((c, s)) = w.lo {
            d.add(0, v, q(-c), s);
        }
        if let Some((c, s)) = w.hi {
            d.add(v, 0, q(c), s);
        }
    }
    if !d.close() {
        return None;
    }
    let half = Q::new(1, 2);
    let mut values = Vec::with_capacity(n - 1);
    for v in 1..n {
        let (lo, lo_strict) = d.m[v].map(|(c, s)| (-c, s))?;
        let hi = d.m[v * n];
        let value = if !lo_strict {
            lo
        } else {
            match hi {
                Some((h, _)) => lo + ((h - lo) / 2).min(half),
                None => lo + half,
            }
        };
        d.add(v, 0, value, false);
        d.add(0, v, -value, false);
        if !d.close() {
            return None;
        }
        values.push(value);
    }
    let end_time = values.pop()?;
    Some((values, end_time))
}

/// Execute a timed trace on concrete rational valuations.
pub fn replay_timed(
    net: &Network,
    target: &ResolvedTarget,
    trace: &TimedTrace,
) -> Result<(), String> {
    let layout = ClockLayout::new(net);
    let inits = cartesian(&net.processes.iter().map(|p| p.initial.clone()).collect::<Vec<_>>());
    if !inits.contains(&trace.initial) {
        return Err("trace does not start in an initial configuration".into());
    }
    let mut locs = trace.initial.clone();
    let mut channels = vec![Vec::new(); net.channels.len()];
    let mut clocks = vec![Q::from(0); layout.total + 1];
    let mut now = Q::from(0);
    for (i, s) in trace.steps.iter().enumerate() {
        if s.time < now {
            return Err(format!("step {i}: time goes backwards"));
        }
        let d = s.time - now;
        clocks.iter_mut().skip(1).for_each(|c| *c += d);
        now = s.time;
        let p = &net.processes[s.process];
        let (l, ch) = discrete_step(p, s.process, s.transition, &locs, &channels)
            .ok_or_else(|| format!("step {i}: transition not enabled"))?;
        let tr = &p.transitions[s.transition];
        for &(x, op, c) in &tr.guard {
            let v = clocks[layout.index(s.process, x)];
            let c = Q::from(c as i64);
            let ok = match op {
                CmpOp::Lt => v < c,
                CmpOp::Le => v <= c,
                CmpOp::Eq => v == c,
                CmpOp::Ge => v >= c,
                CmpOp::Gt => v > c,
            };
            if !ok {
                return Err(format!("step {i}: guard {} {} {c} fails at {v}", p.clocks[x], op.symbol()));
            }
        }
        for &x in &tr.resets {
            clocks[layout.index(s.process, x)] = Q::from(0);
        }
        locs = l;
        channels = ch;
    }
    if trace.end < now {
        return Err("end time precedes the last step".into());
    }
    let d = trace.end - now;
    clocks.iter_mut().skip(1).for_each(|c| *c += d);
    if !target.matches(net, &locs) {
        return Err("final locations do not match the target".into());
    }
    if net.acceptance.require_empty_channels && channels.iter().any(|w| !w.is_empty()) {
        return Err("channels are not empty at the end".into());
    }
    if net.acceptance.require_zero_clocks && clocks.iter().any(|c| *c != Q::from(0)) {
        return Err("clocks are not zero at the end".into());
    }
    Ok(())
}

pub fn format_q(q: &Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// One line per step: `t=<num/den> [<proc>] <action>`, then `end t=<num/den>`.
pub fn format_timed_trace(net: &Network, trace: &TimedTrace) -> String {
    let mut out = String::new();
    let init: Vec<String> = net
        .processes
        .iter()
        .zip(&trace.initial)
        .map(|(p, &l)| format!("{}={}", p.name, p.locations[l as usize]))
        .collect();
    let _ = writeln!(out, "init: [{}]", init.join(","));
    for (i, s) in trace.steps.iter().enumerate() {
        let p = &net.processes[s.process];
        let _ = writeln!(
            out,
            "step {}: t={} [{}] {}",
            i + 1,
            format_q(&s.time),
            p.name,
            p.transitions[s.transition].action
        );
    }
    let _ = writeln!(out, "end: t={}", format_q(&trace.end));
    out
}

/// Clock region of one process, with a slot clock at index 0 whose integer
/// part is not tracked. Clocks above the ceiling carry `int = ceiling + 1`
/// and take no part in the fractional order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub int: Vec<u32>,
    /// Clocks with zero fractional part, sorted.
    pub zero: Vec<usize>,
    /// Clocks with positive fractional part, grouped by equal fraction,
    /// in increasing order.
    pub order: Vec<Vec<usize>>,
}

impl Region {
    pub fn initial(clocks: usize) -> Self {
        Self {
            int: vec![0; clocks + 1],
            zero: (0..=clocks).collect(),
            order: Vec::new(),
        }
    }

    fn capped(&self, x: usize, ceiling: u32) -> bool {
        self.int[x] > ceiling
    }

    /// Truth of `x ⋈ c` (x is 1-based) for every valuation in the region.
    pub fn satisfies(&self, x: usize, op: CmpOp, c: u32, ceiling: u32) -> bool {
        let i = self.int[x];
        if self.capped(x, ceiling) {
            return matches!(op, CmpOp::Gt | CmpOp::Ge);
        }
        if self.zero.contains(&x) {
            match op {
                CmpOp::Lt => i < c,
                CmpOp::Le => i <= c,
                CmpOp::Eq => i == c,
                CmpOp::Ge => i >= c,
                CmpOp::Gt => i > c,
            }
        } else {
            match op {
                CmpOp::Lt | CmpOp::Le => i < c,
                CmpOp::Eq => false,
                CmpOp::Ge | CmpOp::Gt => i >= c,
            }
        }
    }

    pub fn reset(&mut self, x: usize) {
        self.order.iter_mut().for_each(|g| g.retain(|&y| y != x));
        self.order.retain(|g| !g.is_empty());
        self.int[x] = 0;
        if let Err(pos) = self.zero.binary_search(&x) {
            self.zero.insert(pos, x);
        }
    }

    /// Immediate time successor. Returns whether the slot clock moved,
    /// i.e. whether this is a slot boundary.
    pub fn time_successor(&self, ceiling: u32) -> (Region, bool) {
        let mut r = self.clone();
        if !r.zero.is_empty() {
            let moved = r.zero.contains(&0);
            let mut group = Vec::new();
            for x in std::mem::take(&mut r.zero) {
                if x != 0 && r.int[x] >= ceiling {
                    r.int[x] = ceiling + 1;
                } else {
                    group.push(x);
                }
            }
            if !group.is_empty() {
                r.order.insert(0, group);
            }
            (r, moved)
        } else {
            let top = r.order.pop().expect("slot clock is always bounded");
            let moved = top.contains(&0);
            for &x in &top {
                if x != 0 {
                    r.int[x] += 1;
                }
            }
            r.zero = top;
            (r, moved)
        }
    }

    /// All process clocks are exactly zero.
    pub fn clocks_zero(&self) -> bool {
        (1..self.int.len()).all(|x| self.int[x] == 0 && self.zero.contains(&x))
    }
}

/// Where a transition of a discretized process comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StepOrigin {
    Action(usize),
    /// Time passing inside a slot.
    Elapse,
    /// Time crossing a slot boundary.
    Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscreteLocation {
    pub location: String,
    pub clocks_zero: bool,
}

/// A tick system obtained from a dense one, with provenance.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub system: System,
    /// Per process: discretized location → original location and whether
    /// all of the process's clocks are zero there.
    pub locations: BTreeMap<String, BTreeMap<String, DiscreteLocation>>,
    /// Per process: origin of each transition, in declaration order.
    pub origins: BTreeMap<String, Vec<StepOrigin>>,
    /// Whether acceptance asks for zero clocks in the source system.
    pub zero_clocks: bool,
}

/// Action used for time passing inside a slot.
pub const ELAPSE: &str = "elapse";

struct RegionGraph {
    states: Vec<(u32, Region)>,
    edges: Vec<Vec<(Action, StepOrigin, usize)>>,
    initial: Vec<usize>,
}

fn region_graph(p: &ProcessInfo) -> RegionGraph {
    let ceiling = p
        .transitions
        .iter()
        .flat_map(|t| t.guard.iter().map(|g| g.2))
        .max()
        .unwrap_or(0);
    let mut index: HashMap<(u32, Region), usize> = HashMap::new();
    let mut g = RegionGraph {
        states: Vec::new(),
        edges: Vec::new(),
        initial: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let mut intern = |s: (u32, Region), g: &mut RegionGraph, queue: &mut VecDeque<usize>| {
        if let Some(&i) = index.get(&s) {
            return i;
        }
        let i = g.states.len();
        index.insert(s.clone(), i);
        g.states.push(s);
        g.edges.push(Vec::new());
        queue.push_back(i);
        i
    };
    for &l in &p.initial {
        let i = intern((l, Region::initial(p.clocks.len())), &mut g, &mut queue);
        g.initial.push(i);
    }
    while let Some(u) = queue.pop_front() {
        let (loc, region) = g.states[u].clone();
        for &t in &p.outgoing[loc as usize] {
            let tr = &p.transitions[t];
            if !tr
                .guard
                .iter()
                .all(|&(x, op, c)| region.satisfies(x + 1, op, c, ceiling))
            {
                continue;
            }
            let mut r = region.clone();
            for &x in &tr.resets {
                r.reset(x + 1);
            }
            let v = intern((tr.to, r), &mut g, &mut queue);
            g.edges[u].push((tr.action.clone(), StepOrigin::Action(t), v));
        }
        let (r, boundary) = region.time_successor(ceiling);
        let v = intern((loc, r), &mut g, &mut queue);
        if boundary {
            g.edges[u].push((Action::Tick, StepOrigin::Tick, v));
        } else {
            g.edges[u].push((Action::Internal(ELAPSE.into()), StepOrigin::Elapse, v));
        }
    }
    g
}

/// Coarsest strong bisimulation refining the partition by
/// (location, clocks-zero).
fn minimize(g: &RegionGraph) -> Vec<usize> {
    let mut block: Vec<usize> = {
        let mut ids: BTreeMap<(u32, bool), usize> = BTreeMap::new();
        g.states
            .iter()
            .map(|(l, r)| {
                let n = ids.len();
                *ids.entry((*l, r.clocks_zero())).or_insert(n)
            })
            .collect()
    };
    loop {
        let mut ids: HashMap<(usize, Vec<(StepOrigin, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..g.states.len())
            .map(|s| {
                let mut sig: Vec<(StepOrigin, usize)> =
                    g.edges[s].iter().map(|(_, o, v)| (*o, block[*v])).collect();
                sig.sort();
                sig.dedup();
                let n = ids.len();
                *ids.entry((block[s], sig)).or_insert(n)
            })
            .collect();
        let stable = ids.len() == block.iter().max().map_or(0, |m| m + 1);
        block = next;
        if stable {
            return block;
        }
    }
}

/// Translate every process into a tick automaton over clock regions.
/// Each time unit is split into two slots: the integer instant and the open
/// interval after it, separated by ticks.
pub fn discretize(sys: &System) -> Result<Discretized, DenseError> {
    if sys.delay != DelayDomain::Dense {
        return Err(DenseError::NotDense(sys.delay));
    }
    let net = Network::new(sys)?;
    let zero_clocks = sys.acceptance.require_zero_clocks;
    let mut out = System::new(&sys.name, DelayDomain::Tick, sys.topology.clone());
    out.acceptance = sys.acceptance;
    let mut locations = BTreeMap::new();
    let mut origins = BTreeMap::new();
    for p in &net.processes {
        let g = region_graph(p);
        let block = minimize(&g);
        let nblocks = block.iter().max().map_or(0, |m| m + 1);
        let mut rep = vec![usize::MAX; nblocks];
        for (s, &b) in block.iter().enumerate() {
            if rep[b] == usize::MAX {
                rep[b] = s;
            }
        }
        let name = |b: usize| {
            let (l, _) = &g.states[rep[b]];
            format!("{}__{b}", p.locations[*l as usize])
        };
        let mut proc_ = Process::default();
        let mut locs = BTreeMap::new();
        let mut origin = Vec::new();
        for b in 0..nblocks {
            let (l, r) = &g.states[rep[b]];
            let n = name(b);
            proc_.locations.insert(n.clone());
            if p.finals[*l as usize] && (!zero_clocks || r.clocks_zero()) {
                proc_.finals.insert(n.clone());
            }
            locs.insert(
                n,
                DiscreteLocation {
                    location: p.locations[*l as usize].clone(),
                    clocks_zero: r.clocks_zero(),
                },
            );
        }
        for &i in &g.initial {
            proc_.initial.insert(name(block[i]));
        }
        for b in 0..nblocks {
            let mut seen = Vec::new();
            for (action, o, v) in &g.edges[rep[b]] {
                let key = (*o, block[*v]);
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                proc_.add(Transition::new(&name(b), &name(block[*v]), action.clone()));
                origin.push(*o);
            }
        }
        locations.insert(p.name.clone(), locs);
        origins.insert(p.name.clone(), origin);
        out.processes.insert(p.name.clone(), proc_);
    }
    Ok(Discretized {
        system: out,
        locations,
        origins,
        zero_clocks,
    })
}

impl Discretized {
    /// The same target over discretized locations. With zero-clock
    /// acceptance, every process must sit where its clocks are zero.
    pub fn lift_target(&self, target: &Target) -> Target {
        let alts = match target {
            Target::Final => return Target::Final,
            Target::Locations(alts) => alts,
        };
        let mut out = Vec::new();
        for alt in alts {
            let mut choices: Vec<Vec<(String, String)>> = Vec::new();
            for (p, locs) in &self.locations {
                let want = alt.get(p);
                if want.is_none() && !self.zero_clocks {
                    continue;
                }
                choices.push(
                    locs.iter()
                        .filter(|(_, d)| want.is_none_or(|w| *w == d.location))
                        .filter(|(_, d)| !self.zero_clocks || d.clocks_zero)
                        .map(|(n, _)| (p.clone(), n.clone()))
                        .collect(),
                );
            }
            // an unknown location name stays unmatched and is reported on resolve
            for (p, l) in alt {
                if !self.locations.contains_key(p)
                    || !self.locations[p].values().any(|d| d.location == *l)
                {
                    choices.push(vec![(p.clone(), l.clone())]);
                }
            }
            for combo in cartesian(&choices) {
                out.push(combo.into_iter().collect());
            }
        }
        Target::Locations(out)
    }

    /// Map a run of the discretized system back to a timed run of the
    /// source, timing each action inside its slot.
    pub fn lift_trace(
        &self,
        dense: &Network,
        discrete: &Network,
        trace: &Trace,
    ) -> Result<TimedTrace, DenseError> {
        let mut steps = Vec::new();
        let mut windows = Vec::new();
        let mut slot = 0u64;
        for s in &trace.steps {
            match &s.label {
                StepLabel::Tick { .. } => slot += 1,
                StepLabel::Local {
                    process,
                    transition,
                } => {
                    let name = &discrete.processes[*process].name;
                    match self.origins[name][*transition] {
                        StepOrigin::Action(t) => {
                            let p = dense
                                .process_index(name)
                                .ok_or_else(|| DenseError::Timing(format!("no process {name}")))?;
                            steps.push((p, t));
                            windows.push(Window::half_slot(slot));
                        }
                        StepOrigin::Elapse | StepOrigin::Tick => {}
                    }
                }
            }
        }
        let (times, end) = solve_timing(
            dense,
            &steps,
            &windows,
            Window::half_slot(slot),
            self.zero_clocks,
        )
        .ok_or_else(|| DenseError::Timing("slot assignment admits no timing".into()))?;
        let initial = trace
            .initial
            .locs
            .iter()
            .enumerate()
            .map(|(pi, &l)| {
                let p = &discrete.processes[pi];
                let orig = &self.locations[&p.name][&p.locations[l as usize]].location;
                dense.processes[pi]
                    .location_index(orig)
                    .expect("discretized location maps to a source location")
            })
            .collect();
        Ok(TimedTrace {
            initial,
            steps: steps
                .into_iter()
                .zip(times)
                .map(|((process, transition), time)| TimedStep {
                    process,
                    transition,
                    time,
                })
                .collect(),
            end,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::semantics::{reach_explicit, Limits, ReachOutcome};

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn zero_zone_guards() {
        let z = Dbm::zero(1);
        assert!(!z.clone().delay_closure().intersect_atom(1, CmpOp::Ge, 1).is_empty());
        assert!(!z.clone().intersect_atom(1, CmpOp::Lt, 1).is_empty());
        assert!(z.clone().intersect_atom(1, CmpOp::Ge, 1).is_empty());
    }

    #[test]
    fn contradictory_guard_is_empty() {
        let z = Dbm::zero(1)
            .delay_closure()
            .intersect_atom(1, CmpOp::Eq, 1)
            .intersect_atom(1, CmpOp::Ge, 2);
        assert!(z.is_empty());
    }

    #[test]
    fn reset_keeps_differences() {
        let z = Dbm::zero(2)
            .delay_closure()
            .intersect_atom(1, CmpOp::Ge, 2)
            .reset(2)
            .delay_closure();
        // x - y >= 2 everywhere
        assert!(z.contains(&[q(5, 2), q(1, 2)]));
        assert!(!z.contains(&[q(3, 2), q(0, 1)]));
        assert!(z.contains(&[q(2, 1), q(0, 1)]));
    }

    #[test]
    fn extrapolation_forgets_large_bounds() {
        let z = Dbm::zero(1)
            .delay_closure()
            .intersect_atom(1, CmpOp::Ge, 5)
            .extrapolate(&[0, 2]);
        assert!(z.contains(&[q(5, 2)]));
        assert!(!z.contains(&[q(2, 1)]));
    }

    #[test]
    fn admits_zero() {
        assert!(Dbm::zero(2).delay_closure().admits_zero());
        assert!(!Dbm::zero(1).delay_closure().intersect_atom(1, CmpOp::Gt, 0).admits_zero());
    }

    fn dense(text: &str) -> (System, Network) {
        let s = parse(text).unwrap();
        let n = Network::new(&s).unwrap();
        (s, n)
    }

    #[test]
    fn single_guard_reached_at_one() {
        let (_, n) = dense("system s { delay dense; relax { clocks };
            process p { init a; final b; clocks { x }; a -> b : internal(go) when x >= 1; } }");
        let ZoneOutcome::Reachable(tr) = zone_reach(&n, &ResolvedTarget::Final, ZoneLimits::bounded(1)).unwrap()
        else {
            panic!()
        };
        assert_eq!(tr.steps[0].time, q(1, 1));
        assert_eq!(tr.end, q(1, 1));
        replay_timed(&n, &ResolvedTarget::Final, &tr).unwrap();
        assert_eq!(format_timed_trace(&n, &tr).lines().nth(1), Some("step 1: t=1/1 [p] internal(go)"));
    }

    #[test]
    fn strict_guard_gets_rational_time() {
        let (_, n) = dense("system s { delay dense; relax { clocks };
            process p { init a; final b; clocks { x }; a -> b : internal(go) when x > 1 && x < 2; } }");
        let ZoneOutcome::Reachable(tr) = zone_reach(&n, &ResolvedTarget::Final, ZoneLimits::bounded(1)).unwrap()
        else {
            panic!()
        };
        assert_eq!(tr.steps[0].time, q(3, 2));
        replay_timed(&n, &ResolvedTarget::Final, &tr).unwrap();
    }

    #[test]
    fn empty_guard_unreachable() {
        let (_, n) = dense("system s { delay dense;
            process p { init a; final b; clocks { x }; a -> b : internal(go) when x == 1 && x >= 2; } }");
        assert!(matches!(
            zone_reach(&n, &ResolvedTarget::Final, ZoneLimits::bounded(1)).unwrap(),
            ZoneOutcome::Unreachable(_)
        ));
    }

    #[test]
    fn zero_clock_acceptance_needs_reset() {
        let text = "system s { delay dense;
            process p { init a; final b; clocks { x }; a -> b : internal(go) when x >= 1 RESET; } }";
        let (_, n) = dense(&text.replace("RESET", ""));
        assert!(matches!(
            zone_reach(&n, &ResolvedTarget::Final, ZoneLimits::bounded(1)).unwrap(),
            ZoneOutcome::Unreachable(_)
        ));
        let (_, n) = dense(&text.replace("RESET", "reset { x }"));
        let ZoneOutcome::Reachable(tr) = zone_reach(&n, &ResolvedTarget::Final, ZoneLimits::bounded(1)).unwrap()
        else {
            panic!()
        };
        replay_timed(&n, &ResolvedTarget::Final, &tr).unwrap();
    }

    #[test]
    fn region_time_successors_alternate_slots() {
        let r = Region::initial(0);
        let (r1, b1) = r.time_successor(0);
        let (r2, b2) = r1.time_successor(0);
        assert!(b1 && b2);
        assert_eq!(r2, r);
    }

    #[test]
    fn clock_free_process_is_one_tick_loop() {
        let (s, _) = dense("system s { delay dense; process p { init a; } }");
        let d = discretize(&s).unwrap();
        let p = &d.system.processes["p"];
        assert_eq!(p.locations.len(), 1);
        assert_eq!(p.transitions.len(), 1);
        assert_eq!(p.transitions[0].action, Action::Tick);
        assert_eq!(p.transitions[0].from, p.transitions[0].to);
    }

    #[test]
    fn guard_one_needs_two_ticks() {
        let (s, dn) = dense("system s { delay dense; relax { clocks };
            process p { init a; final b; clocks { x }; a -> b : internal(go) when x >= 1; } }");
        let d = discretize(&s).unwrap();
        let n = Network::new(&d.system).unwrap();
        let ReachOutcome::Reachable(tr) =
            reach_explicit(&n, &ResolvedTarget::Final, Limits::default()).unwrap()
        else {
            panic!()
        };
        assert_eq!(tr.last().ticks, 2);
        let timed = d.lift_trace(&dn, &n, &tr).unwrap();
        replay_timed(&dn, &ResolvedTarget::Final, &timed).unwrap();
        assert_eq!(timed.steps[0].time, q(1, 1));
    }

    #[test]
    fn strict_guard_lands_in_open_slot() {
        let (s, dn) = dense("system s { delay dense; relax { clocks };
            process p { init a; final b; clocks { x }; a -> b : internal(go) when x > 1; } }");
        let d = discretize(&s).unwrap();
        let n = Network::new(&d.system).unwrap();
        let ReachOutcome::Reachable(tr) =
            reach_explicit(&n, &ResolvedTarget::Final, Limits::default()).unwrap()
        else {
            panic!()
        };
        assert_eq!(tr.last().ticks, 3);
        let timed = d.lift_trace(&dn, &n, &tr).unwrap();
        assert!(Window::half_slot(3).contains(timed.steps[0].time));
        replay_timed(&dn, &ResolvedTarget::Final, &timed).unwrap();
    }

    #[test]
    fn half_slot_windows() {
        assert!(Window::half_slot(2).contains(q(1, 1)));
        assert!(!Window::half_slot(2).contains(q(3, 2)));
        assert!(Window::half_slot(3).contains(q(3, 2)));
        assert!(!Window::half_slot(3).contains(q(2, 1)));
    }
}
