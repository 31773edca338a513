//! Communicating tick, counter and timed automata over FIFO channels:
//! a textual format, a topology-based decidability classifier, and
//! reachability engines for each flavor.

pub mod dense;
pub mod dsl;
pub mod gen;
pub mod model;
pub mod network;
pub mod reductions;
pub mod semantics;
pub mod topology;
pub mod vass;

pub use dsl::{parse, serialize, ParseError, ParseErrorKind};
pub use model::{
    Acceptance, Action, Channel, ClockAtom, CmpOp, DelayDomain, Diagnostic, DiagnosticKind,
    Process, SourceSpan, System, Topology, Transition,
};
pub use network::{Network, NetworkError, ResolvedTarget, Target};
pub use semantics::{GlobalConfig, Limits, ReachOutcome, StepLabel, Trace};
pub use topology::{classify, classify_system, Status, Verdict};
