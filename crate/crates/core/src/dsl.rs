//! The `.ctp` text format.
//!
//! ```text
//! system intro {
//!   delay discrete;
//!   msgs { m };
//!   channel c : p -> q;
//!   process p {
//!     init a; final b;
//!     a -> a : send(c, m);
//!     a -> b : tick;
//!     b -> b : tick;
//!   }
//!   process q { init k0; final k1; k0 -> k1 : recv(c, m); k1 -> k1 : tick; }
//! }
//! ```
//!
//! Dense transitions take `when x >= 1 && y < 2 reset { x }`; counter
//! transitions use `inc x`, `dec x`, `ztest x`; `empty(c)` is an emptiness
//! test. An optional `relax { channels, counters, clocks };` drops the
//! corresponding acceptance requirements. Comments start with `#`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{
    validate_system, Acceptance, Action, Channel, ClockAtom, CmpOp, DelayDomain, DiagnosticKind,
    Process, SourceMap, SourceSpan, SpanKey, System, Topology, Transition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Semantic,
    FlavorMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
    /// Tokens that would have been accepted (syntax errors only).
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u32),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    Arrow,
    Lt,
    Le,
    EqEq,
    Ge,
    Gt,
    AndAnd,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::AndAnd => f.write_str("`&&`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "system", "delay", "msgs", "process", "channel", "relax", "init", "final", "clocks",
    "counters", "locations", "send", "recv", "empty", "tick", "inc", "dec", "ztest", "internal",
    "when", "reset", "testable", "discrete", "dense", "none",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.pos;
            let (line, column) = (self.line, self.col);
            let span = |end: usize| SourceSpan {
                start,
                end,
                line,
                column,
            };
            let Some(c) = self.bump() else {
                out.push((Tok::Eof, span(start)));
                return Ok(out);
            };
            let tok = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '-' if self.peek_char() == Some('>') => {
                    self.bump();
                    Tok::Arrow
                }
                '<' if self.peek_char() == Some('=') => {
                    self.bump();
                    Tok::Le
                }
                '<' => Tok::Lt,
                '>' if self.peek_char() == Some('=') => {
                    self.bump();
                    Tok::Ge
                }
                '>' => Tok::Gt,
                '=' => {
                    if self.peek_char() == Some('=') {
                        self.bump();
                    }
                    Tok::EqEq
                }
                '&' if self.peek_char() == Some('&') => {
                    self.bump();
                    Tok::AndAnd
                }
                c if c.is_ascii_digit() => {
                    while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                        self.bump();
                    }
                    let text = &self.src[start..self.pos];
                    match text.parse::<u32>() {
                        Ok(n) => Tok::Number(n),
                        Err(_) => {
                            return Err(ParseError {
                                kind: ParseErrorKind::Lexical,
                                message: format!("integer literal `{text}` out of range"),
                                span: span(self.pos),
                                expected: vec![],
                            })
                        }
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    while self
                        .peek_char()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                    {
                        self.bump();
                    }
                    Tok::Ident(self.src[start..self.pos].to_string())
                }
                other => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Lexical,
                        message: format!("unexpected character {other:?}"),
                        span: span(self.pos),
                        expected: vec![],
                    })
                }
            };
            out.push((tok, span(self.pos)));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            kind: ParseErrorKind::Syntax,
            message: format!(
                "unexpected {}, expected {}",
                self.peek(),
                expected.join(" or ")
            ),
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            let name = tok.to_string();
            self.fail(&[&name])
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.at_keyword(kw) {
            Ok(self.advance().1)
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let sp = self.advance().1;
                Ok((s, sp))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn number(&mut self) -> PResult<u32> {
        match *self.peek() {
            Tok::Number(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.fail(&["number"]),
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    /// `{ a, b, c }` with an optional trailing `;`.
    fn braced_list(&mut self) -> PResult<Vec<(String, SourceSpan)>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        if !self.eat(Tok::RBrace) {
            loop {
                out.push(self.ident()?);
                if self.eat(Tok::Comma) {
                    continue;
                }
                self.expect(Tok::RBrace)?;
                break;
            }
        }
        self.eat(Tok::Semi);
        Ok(out)
    }

    /// `a, b, c ;`
    fn list_stmt(&mut self) -> PResult<Vec<(String, SourceSpan)>> {
        let mut out = vec![self.ident()?];
        while self.eat(Tok::Comma) {
            out.push(self.ident()?);
        }
        self.expect(Tok::Semi)?;
        Ok(out)
    }
}

#[derive(Default)]
struct Builder {
    errors: Vec<ParseError>,
}

impl Builder {
    fn semantic(&mut self, span: SourceSpan, message: String) {
        self.errors.push(ParseError {
            kind: ParseErrorKind::Semantic,
            message,
            span,
            expected: vec![],
        });
    }
}

/// Parse a `.ctp` document. On success the system passes [`validate_system`].
pub fn parse(text: &str) -> Result<System, Vec<ParseError>> {
    let toks = Lexer::new(text).tokens().map_err(|e| vec![e])?;
    let mut p = Parser { toks, pos: 0 };
    let mut b = Builder::default();
    let sys = parse_system(&mut p, &mut b).map_err(|e| vec![e])?;
    if !b.errors.is_empty() {
        return Err(b.errors);
    }
    let diags = validate_system(&sys);
    if diags.is_empty() {
        Ok(sys)
    } else {
        let fallback = sys.source_map.get(&SpanKey::System).unwrap_or_default();
        Err(diags
            .into_iter()
            .map(|d| ParseError {
                kind: if d.kind == DiagnosticKind::FlavorMismatch {
                    ParseErrorKind::FlavorMismatch
                } else {
                    ParseErrorKind::Semantic
                },
                span: d.span.unwrap_or(fallback),
                message: d.message,
                expected: vec![],
            })
            .collect())
    }
}

fn parse_system(p: &mut Parser, b: &mut Builder) -> PResult<System> {
    let sys_span = p.keyword("system")?;
    let (name, _) = p.ident()?;
    p.expect(Tok::LBrace)?;

    let mut delay: Option<DelayDomain> = None;
    let mut topo = Topology::new();
    let mut processes = std::collections::BTreeMap::new();
    let mut acceptance = Acceptance::default();
    let mut source_map = SourceMap::default();
    source_map.insert(SpanKey::System, sys_span);

    loop {
        let (tok, span) = (p.peek().clone(), p.span());
        match tok {
            Tok::RBrace => {
                p.advance();
                break;
            }
            Tok::Ident(kw) if kw == "delay" => {
                p.advance();
                let d = match p.peek() {
                    Tok::Ident(s) if s == "discrete" => DelayDomain::Tick,
                    Tok::Ident(s) if s == "dense" => DelayDomain::Dense,
                    Tok::Ident(s) if s == "none" => DelayDomain::None,
                    _ => return p.fail(&["`discrete`", "`dense`", "`none`"]),
                };
                p.advance();
                p.expect(Tok::Semi)?;
                if delay.replace(d).is_some() {
                    b.semantic(span, "duplicate delay declaration".into());
                }
            }
            Tok::Ident(kw) if kw == "msgs" => {
                p.advance();
                for (m, sp) in p.braced_list()? {
                    if !topo.messages.insert(m.clone()) {
                        b.semantic(sp, format!("duplicate message {m}"));
                    }
                }
            }
            Tok::Ident(kw) if kw == "channel" => {
                p.advance();
                let (id, sp) = p.ident()?;
                p.expect(Tok::Colon)?;
                let (source, _) = p.ident()?;
                p.expect(Tok::Arrow)?;
                let (target, _) = p.ident()?;
                let testable = if p.at_keyword("testable") {
                    p.advance();
                    true
                } else {
                    false
                };
                p.expect(Tok::Semi)?;
                if topo.channels.contains_key(&id) {
                    b.semantic(sp, format!("duplicate channel {id}"));
                } else {
                    source_map.insert(SpanKey::Channel(id.clone()), sp);
                    topo.channels.insert(
                        id,
                        Channel {
                            source,
                            target,
                            testable,
                        },
                    );
                }
            }
            Tok::Ident(kw) if kw == "relax" => {
                p.advance();
                for (what, sp) in relax_list(p)? {
                    match what.as_str() {
                        "channels" => acceptance.require_empty_channels = false,
                        "counters" => acceptance.require_zero_counters = false,
                        "clocks" => acceptance.require_zero_clocks = false,
                        other => b.semantic(
                            sp,
                            format!("unknown acceptance condition {other} (expected channels, counters or clocks)"),
                        ),
                    }
                }
            }
            Tok::Ident(kw) if kw == "process" => {
                p.advance();
                let (id, sp) = p.ident()?;
                let proc_ = parse_process(p, b, &id, &mut source_map)?;
                if processes.contains_key(&id) {
                    b.semantic(sp, format!("duplicate process {id}"));
                } else {
                    source_map.insert(SpanKey::Process(id.clone()), sp);
                    topo.processes.insert(id.clone());
                    processes.insert(id, proc_);
                }
            }
            _ => {
                return p.fail(&[
                    "`delay`",
                    "`msgs`",
                    "`channel`",
                    "`process`",
                    "`relax`",
                    "`}`",
                ])
            }
        }
    }
    if *p.peek() != Tok::Eof {
        return p.fail(&["end of input"]);
    }
    let Some(delay) = delay else {
        return Err(ParseError {
            kind: ParseErrorKind::Semantic,
            message: format!("system {name} has no delay declaration"),
            span: sys_span,
            expected: vec![],
        });
    };

    Ok(System {
        name,
        topology: topo,
        delay,
        processes,
        acceptance,
        source_map,
    })
}

fn relax_list(p: &mut Parser) -> PResult<Vec<(String, SourceSpan)>> {
    // `channels`/`counters`/`clocks` are keywords in other positions, so
    // accept any word here.
    p.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    loop {
        match p.peek().clone() {
            Tok::Ident(s) => out.push((s, p.advance().1)),
            _ => return p.fail(&["`channels`", "`counters`", "`clocks`"]),
        }
        if p.eat(Tok::Comma) {
            continue;
        }
        p.expect(Tok::RBrace)?;
        break;
    }
    p.eat(Tok::Semi);
    Ok(out)
}

fn parse_process(
    p: &mut Parser,
    b: &mut Builder,
    pid: &str,
    source_map: &mut SourceMap,
) -> PResult<Process> {
    p.expect(Tok::LBrace)?;
    let mut proc_ = Process::default();
    loop {
        let (tok, span) = (p.peek().clone(), p.span());
        match tok {
            Tok::RBrace => {
                p.advance();
                return Ok(proc_);
            }
            Tok::Ident(kw) if kw == "init" => {
                p.advance();
                for (l, _) in p.list_stmt()? {
                    proc_.locations.insert(l.clone());
                    proc_.initial.insert(l);
                }
            }
            Tok::Ident(kw) if kw == "final" => {
                p.advance();
                for (l, _) in p.list_stmt()? {
                    proc_.locations.insert(l.clone());
                    proc_.finals.insert(l);
                }
            }
            Tok::Ident(kw) if kw == "locations" => {
                p.advance();
                for (l, _) in p.braced_list()? {
                    proc_.locations.insert(l);
                }
            }
            Tok::Ident(kw) if kw == "clocks" => {
                p.advance();
                for (x, sp) in p.braced_list()? {
                    if !proc_.clocks.insert(x.clone()) {
                        b.semantic(sp, format!("process {pid}: duplicate clock {x}"));
                    }
                }
            }
            Tok::Ident(kw) if kw == "counters" => {
                p.advance();
                for (x, sp) in p.braced_list()? {
                    if !proc_.counters.insert(x.clone()) {
                        b.semantic(sp, format!("process {pid}: duplicate counter {x}"));
                    }
                }
            }
            Tok::Ident(ref s) if !is_keyword(s) => {
                let t = parse_transition(p)?;
                source_map.insert(
                    SpanKey::Transition(pid.to_string(), proc_.transitions.len()),
                    span,
                );
                proc_.add(t);
            }
            _ => {
                return p.fail(&[
                    "`init`",
                    "`final`",
                    "`clocks`",
                    "`counters`",
                    "`locations`",
                    "transition",
                    "`}`",
                ])
            }
        }
    }
}

fn parse_transition(p: &mut Parser) -> PResult<Transition> {
    let (from, _) = p.ident()?;
    p.expect(Tok::Arrow)?;
    let (to, _) = p.ident()?;
    p.expect(Tok::Colon)?;
    let action = parse_action(p)?;
    let mut t = Transition::new(&from, &to, action);
    if p.at_keyword("when") {
        p.advance();
        loop {
            let (clock, _) = p.ident()?;
            let op = match p.peek() {
                Tok::Lt => CmpOp::Lt,
                Tok::Le => CmpOp::Le,
                Tok::EqEq => CmpOp::Eq,
                Tok::Ge => CmpOp::Ge,
                Tok::Gt => CmpOp::Gt,
                _ => return p.fail(&["`<`", "`<=`", "`==`", "`>=`", "`>`"]),
            };
            p.advance();
            let constant = p.number()?;
            t.guard.push(ClockAtom {
                clock,
                op,
                constant,
            });
            if !p.eat(Tok::AndAnd) {
                break;
            }
        }
    }
    if p.at_keyword("reset") {
        p.advance();
        p.expect(Tok::LBrace)?;
        if !p.eat(Tok::RBrace) {
            loop {
                let (x, _) = p.ident()?;
                t.resets.insert(x);
                if p.eat(Tok::Comma) {
                    continue;
                }
                p.expect(Tok::RBrace)?;
                break;
            }
        }
    }
    p.expect(Tok::Semi)?;
    Ok(t)
}

fn parse_action(p: &mut Parser) -> PResult<Action> {
    let kw = match p.peek() {
        Tok::Ident(s) => s.clone(),
        _ => return p.fail(&ACTION_EXPECTED),
    };
    match kw.as_str() {
        "send" | "recv" => {
            p.advance();
            p.expect(Tok::LParen)?;
            let (channel, _) = p.ident()?;
            p.expect(Tok::Comma)?;
            let (message, _) = p.ident()?;
            p.expect(Tok::RParen)?;
            Ok(if kw == "send" {
                Action::Send { channel, message }
            } else {
                Action::Recv { channel, message }
            })
        }
        "empty" => {
            p.advance();
            p.expect(Tok::LParen)?;
            let (channel, _) = p.ident()?;
            p.expect(Tok::RParen)?;
            Ok(Action::TestEmpty { channel })
        }
        "internal" => {
            p.advance();
            p.expect(Tok::LParen)?;
            let (a, _) = p.ident()?;
            p.expect(Tok::RParen)?;
            Ok(Action::Internal(a))
        }
        "tick" => {
            p.advance();
            Ok(Action::Tick)
        }
        "inc" | "dec" | "ztest" => {
            p.advance();
            let (x, _) = p.ident()?;
            Ok(match kw.as_str() {
                "inc" => Action::Inc(x),
                "dec" => Action::Dec(x),
                _ => Action::ZeroTest(x),
            })
        }
        _ => p.fail(&ACTION_EXPECTED),
    }
}

const ACTION_EXPECTED: [&str; 8] = [
    "`send`",
    "`recv`",
    "`empty`",
    "`internal`",
    "`tick`",
    "`inc`",
    "`dec`",
    "`ztest`",
];

/// Canonical text for a system. Declarations are emitted in sorted order;
/// transitions keep their stored order.
pub fn serialize(sys: &System) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system {} {{", sys.name);
    let _ = writeln!(out, "  delay {};", sys.delay.keyword());
    if !sys.topology.messages.is_empty() {
        let _ = writeln!(out, "  msgs {{ {} }};", join(&sys.topology.messages));
    }
    for (id, ch) in &sys.topology.channels {
        let _ = writeln!(
            out,
            "  channel {id} : {} -> {}{};",
            ch.source,
            ch.target,
            if ch.testable { " testable" } else { "" }
        );
    }
    for (pid, proc_) in &sys.processes {
        let _ = writeln!(out, "  process {pid} {{");
        if !proc_.initial.is_empty() {
            let _ = writeln!(out, "    init {};", join(&proc_.initial));
        }
        if !proc_.finals.is_empty() {
            let _ = writeln!(out, "    final {};", join(&proc_.finals));
        }
        let mentioned: BTreeSet<&String> = proc_
            .initial
            .iter()
            .chain(&proc_.finals)
            .chain(proc_.transitions.iter().flat_map(|t| [&t.from, &t.to]))
            .collect();
        let isolated: BTreeSet<&String> = proc_
            .locations
            .iter()
            .filter(|l| !mentioned.contains(l))
            .collect();
        if !isolated.is_empty() {
            let _ = writeln!(out, "    locations {{ {} }};", join(isolated));
        }
        if !proc_.clocks.is_empty() {
            let _ = writeln!(out, "    clocks {{ {} }};", join(&proc_.clocks));
        }
        if !proc_.counters.is_empty() {
            let _ = writeln!(out, "    counters {{ {} }};", join(&proc_.counters));
        }
        for t in &proc_.transitions {
            let _ = write!(out, "    {} -> {} : {}", t.from, t.to, t.action);
            if !t.guard.is_empty() {
                let atoms: Vec<String> = t.guard.iter().map(ToString::to_string).collect();
                let _ = write!(out, " when {}", atoms.join(" && "));
            }
            if !t.resets.is_empty() {
                let _ = write!(out, " reset {{ {} }}", join(&t.resets));
            }
            out.push_str(";\n");
        }
        out.push_str("  }\n");
    }
    let a = sys.acceptance;
    let relaxed: Vec<&str> = [
        (!a.require_empty_channels, "channels"),
        (!a.require_zero_counters, "counters"),
        (!a.require_zero_clocks, "clocks"),
    ]
    .into_iter()
    .filter_map(|(on, w)| on.then_some(w))
    .collect();
    if !relaxed.is_empty() {
        let _ = writeln!(out, "  relax {{ {} }};", relaxed.join(", "));
    }
    out.push_str("}\n");
    out
}

fn join<I, S>(items: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items
        .into_iter()
        .map(|s| s.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
