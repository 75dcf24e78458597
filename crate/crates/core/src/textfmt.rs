//! Concrete syntax: parser and printer for processes, global types, queues,
//! networks and `.sess` session files.
//!
//! ```text
//! process   P ::= A (+) A ...        output choice (same peer)
//!              |  A + A ...          input choice (same peer)
//!              |  A
//! atom      A ::= q!l [; A] | q?l [; A] | 0 | Name | ( P )
//! global    G ::= B [+] B ...        output choice (same channel)
//!              |  B
//! atom      B ::= p->q!l [; B] | p->q?l [; B] | End | Name | ( G )
//! queue     M ::= empty | <p l q> . <p l q> ...   (or nothing)
//! network   N ::= p :: P | q :: Q ... [|- M]
//! ```
//!
//! Identifiers match `[A-Za-z][A-Za-z0-9_]*` optionally followed by primes
//! (`l'`, `G''`). `End`, `empty`, `def`, `net`, `type` and `expect` are
//! reserved.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::kernel::{
    AsyncType, DefEnv, Dir, Global, GlobalTerm, KernelError, Label, Message, Name, Network, Participant,
    Process, ProcessTerm, Queue,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError { line, col, msg: msg.into() }
    }
    /// Render as `file:line:col: message`.
    pub fn with_file(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

const RESERVED: &[&str] = &["End", "empty", "def", "net", "type", "expect"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    Bang,
    Quest,
    Semi,
    Arrow,
    OPlus,
    Plus,
    GPlus,
    LParen,
    RParen,
    Lt,
    Gt,
    Dot,
    ColonColon,
    Bar,
    Turnstile,
    Eq,
    Comma,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Zero => "`0`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Quest => "`?`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::OPlus => "`(+)`".into(),
        Tok::Plus => "`+`".into(),
        Tok::GPlus => "`[+]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Lt => "`<`".into(),
        Tok::Gt => "`>`".into(),
        Tok::Dot => "`.`".into(),
        Tok::ColonColon => "`::`".into(),
        Tok::Bar => "`|`".into(),
        Tok::Turnstile => "`|-`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eof => "end of input".into(),
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str, line0: usize, col0: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, line0, col0);
    while i < chars.len() {
        let c = chars[i];
        let (l, cl) = (line, col);
        let rest = |k: usize| chars.get(i + k).copied();
        let mut push = |t: Tok, n: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok: t, line: l, col: cl });
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' if rest(1) == Some('+') && rest(2) == Some(')') => push(Tok::OPlus, 3, &mut i, &mut col),
            '[' if rest(1) == Some('+') && rest(2) == Some(']') => push(Tok::GPlus, 3, &mut i, &mut col),
            '-' if rest(1) == Some('>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '|' if rest(1) == Some('-') => push(Tok::Turnstile, 2, &mut i, &mut col),
            ':' if rest(1) == Some(':') => push(Tok::ColonColon, 2, &mut i, &mut col),
            '|' => push(Tok::Bar, 1, &mut i, &mut col),
            '!' => push(Tok::Bang, 1, &mut i, &mut col),
            '?' => push(Tok::Quest, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '<' => push(Tok::Lt, 1, &mut i, &mut col),
            '>' => push(Tok::Gt, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '0' if !rest(1).is_some_and(|d| d.is_ascii_alphanumeric() || d == '_') => {
                push(Tok::Zero, 1, &mut i, &mut col)
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                while i < chars.len() && chars[i] == '\'' {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(s), line: l, col: cl });
            }
            other => return Err(ParseError::new(l, cl, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// A name reference found while parsing, with its position.
#[derive(Debug, Clone)]
struct RefSite {
    name: Name,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    proc_refs: Vec<RefSite>,
    global_refs: Vec<RefSite>,
}

impl Parser {
    fn new(text: &str, line0: usize, col0: usize) -> Result<Self, ParseError> {
        Ok(Self::from_tokens(lex(text, line0, col0)?))
    }
    fn from_tokens(toks: Vec<Spanned>) -> Self {
        Parser { toks, pos: 0, proc_refs: vec![], global_refs: vec![] }
    }
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }
    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (l, c) = self.here();
        Err(ParseError::new(l, c, msg))
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }
    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", describe(t), describe(self.peek())))
        }
    }
    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected {what}, found {}", describe(&t))),
        }
    }
    fn end(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err(format!("unexpected {}", describe(self.peek())))
        }
    }

    // ---- processes ----

    fn process(&mut self) -> Result<Process, ParseError> {
        let start = self.here();
        let first = self.process_atom()?;
        let op = match self.peek() {
            Tok::OPlus => Tok::OPlus,
            Tok::Plus => Tok::Plus,
            _ => return Ok(first),
        };
        let dir = if op == Tok::OPlus { Dir::Out } else { Dir::In };
        let mut alts = vec![(start, first)];
        while self.peek() == &Tok::OPlus || self.peek() == &Tok::Plus {
            if self.peek() != &op {
                return self.err("cannot mix `(+)` and `+` without parentheses");
            }
            self.bump();
            let at = self.here();
            alts.push((at, self.process_atom()?));
        }
        let mut peer: Option<Participant> = None;
        let mut branches = Vec::new();
        for ((l, c), alt) in alts {
            let Some((d, p, bs)) = alt.as_choice() else {
                return Err(ParseError::new(l, c, "choice alternative must start with an action"));
            };
            if d != dir {
                let kind = if dir == Dir::Out { "output" } else { "input" };
                return Err(ParseError::new(l, c, format!("alternative of an {kind} choice has the wrong direction")));
            }
            match &peer {
                None => peer = Some(p.clone()),
                Some(q) if q != p => {
                    return Err(ParseError::new(l, c, format!("choice mixes peers `{q}` and `{p}`")));
                }
                _ => {}
            }
            branches.extend(bs.iter().cloned());
        }
        Process::choice(dir, peer.expect("nonempty"), branches)
            .map_err(|e| ParseError::new(start.0, start.1, e.to_string()))
    }

    fn process_atom(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(Process::zero())
            }
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(&Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Bang | Tok::Quest) => {
                let peer = self.ident("participant")?;
                let dir = if self.bump() == Tok::Bang { Dir::Out } else { Dir::In };
                let label = self.ident("label")?;
                let cont = if self.eat(&Tok::Semi) { self.process_atom()? } else { Process::zero() };
                Ok(Process::choice(dir, peer.as_str(), vec![(Label::new(&label), cont)]).expect("single branch"))
            }
            Tok::Ident(_) => {
                let (line, col) = self.here();
                let n = self.ident("process name")?;
                self.proc_refs.push(RefSite { name: Name::new(&n), line, col });
                Ok(Process::reference(n.as_str()))
            }
            t => self.err(format!("expected a process, found {}", describe(&t))),
        }
    }

    // ---- global types ----

    fn global(&mut self) -> Result<Global, ParseError> {
        let start = self.here();
        let first = self.global_atom()?;
        if self.peek() != &Tok::GPlus {
            return Ok(first);
        }
        let mut alts = vec![(start, first)];
        while self.eat(&Tok::GPlus) {
            let at = self.here();
            alts.push((at, self.global_atom()?));
        }
        let mut chan: Option<(Participant, Participant)> = None;
        let mut branches = Vec::new();
        for ((l, c), alt) in alts {
            let GlobalTerm::Out { sender, receiver, branches: bs } = &*alt else {
                return Err(ParseError::new(l, c, "alternative of `[+]` must start with an output `p->q!l`"));
            };
            match &chan {
                None => chan = Some((sender.clone(), receiver.clone())),
                Some((s, r)) if s != sender || r != receiver => {
                    return Err(ParseError::new(
                        l,
                        c,
                        format!("choice mixes channels `{s}->{r}` and `{sender}->{receiver}`"),
                    ));
                }
                _ => {}
            }
            branches.extend(bs.iter().cloned());
        }
        let (s, r) = chan.expect("nonempty");
        Global::out(s, r, branches).map_err(|e| ParseError::new(start.0, start.1, e.to_string()))
    }

    fn global_atom(&mut self) -> Result<Global, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "End" => {
                self.bump();
                Ok(Global::end())
            }
            Tok::LParen => {
                self.bump();
                let g = self.global()?;
                self.expect(&Tok::RParen)?;
                Ok(g)
            }
            Tok::Ident(_) if self.peek_at(1) == &Tok::Arrow => {
                let p = self.ident("participant")?;
                self.expect(&Tok::Arrow)?;
                let q = self.ident("participant")?;
                let dir = match self.bump() {
                    Tok::Bang => Dir::Out,
                    Tok::Quest => Dir::In,
                    t => return self.err(format!("expected `!` or `?`, found {}", describe(&t))),
                };
                let label = self.ident("label")?;
                let cont = if self.eat(&Tok::Semi) { self.global_atom()? } else { Global::end() };
                Ok(match dir {
                    Dir::Out => Global::out(p.as_str(), q.as_str(), vec![(Label::new(&label), cont)])
                        .expect("single branch"),
                    Dir::In => Global::inp(p.as_str(), q.as_str(), label.as_str(), cont),
                })
            }
            Tok::Ident(_) => {
                let (line, col) = self.here();
                let n = self.ident("global type name")?;
                self.global_refs.push(RefSite { name: Name::new(&n), line, col });
                Ok(Global::reference(n.as_str()))
            }
            t => self.err(format!("expected a global type, found {}", describe(&t))),
        }
    }

    // ---- queues and networks ----

    fn queue(&mut self) -> Result<Queue, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if s == "empty" {
                self.bump();
                return Ok(Queue::empty());
            }
        }
        let mut msgs = Vec::new();
        if self.peek() != &Tok::Lt {
            return Ok(Queue::empty());
        }
        loop {
            self.expect(&Tok::Lt)?;
            let p = self.ident("sender")?;
            let l = self.ident("label")?;
            let q = self.ident("receiver")?;
            self.expect(&Tok::Gt)?;
            msgs.push(Message::of(&p, &l, &q));
            if !self.eat(&Tok::Dot) {
                break;
            }
        }
        Ok(Queue(msgs))
    }

    fn network(&mut self) -> Result<Network, ParseError> {
        let mut procs: Vec<(Participant, Process)> = Vec::new();
        let mut seen = BTreeSet::new();
        if !matches!(self.peek(), Tok::Turnstile | Tok::Eof) {
            loop {
                let (l, c) = self.here();
                let p = self.ident("participant")?;
                if !seen.insert(p.clone()) {
                    return Err(ParseError::new(l, c, format!("participant `{p}` occurs twice in network")));
                }
                self.expect(&Tok::ColonColon)?;
                let body = self.process()?;
                procs.push((Participant::new(&p), body));
                if !self.eat(&Tok::Bar) {
                    break;
                }
            }
        }
        let queue = if self.eat(&Tok::Turnstile) { self.queue()? } else { Queue::empty() };
        Ok(Network::new(procs, queue).expect("distinct participants checked"))
    }

    fn async_type(&mut self) -> Result<AsyncType, ParseError> {
        let g = self.global()?;
        let queue = if self.eat(&Tok::Turnstile) { self.queue()? } else { Queue::empty() };
        Ok(AsyncType::new(g, queue))
    }
}

fn check_refs(sites: &[RefSite], defined: impl Fn(&Name) -> bool, what: &str) -> Result<(), ParseError> {
    for s in sites {
        if !defined(&s.name) {
            return Err(ParseError::new(s.line, s.col, format!("undefined {what} `{}`", s.name)));
        }
    }
    Ok(())
}

fn kernel_err(e: KernelError) -> ParseError {
    ParseError::new(1, 1, e.to_string())
}

/// Parse a process; every name must be defined (as a process) in `env`.
pub fn parse_process(text: &str, env: &DefEnv) -> Result<Process, ParseError> {
    let mut p = Parser::new(text, 1, 1)?;
    let t = p.process()?;
    p.end()?;
    check_refs(&p.proc_refs, |n| env.process(n).is_some(), "process")?;
    env.check_process(&t).map_err(kernel_err)?;
    Ok(t)
}

/// Parse a global type; every name must be defined (as a global type) in `env`.
pub fn parse_global(text: &str, env: &DefEnv) -> Result<Global, ParseError> {
    let mut p = Parser::new(text, 1, 1)?;
    let t = p.global()?;
    p.end()?;
    check_refs(&p.global_refs, |n| env.global(n).is_some(), "global type")?;
    env.check_global(&t).map_err(kernel_err)?;
    Ok(t)
}

pub fn parse_queue(text: &str) -> Result<Queue, ParseError> {
    let mut p = Parser::new(text, 1, 1)?;
    let q = p.queue()?;
    p.end()?;
    Ok(q)
}

pub fn parse_network(text: &str, env: &DefEnv) -> Result<Network, ParseError> {
    let mut p = Parser::new(text, 1, 1)?;
    let n = p.network()?;
    p.end()?;
    check_refs(&p.proc_refs, |n| env.process(n).is_some(), "process")?;
    for body in n.procs.values() {
        env.check_process(body).map_err(kernel_err)?;
    }
    Ok(n)
}

/// Parse `G |- M` (the queue part is optional).
pub fn parse_async_type(text: &str, env: &DefEnv) -> Result<AsyncType, ParseError> {
    let mut p = Parser::new(text, 1, 1)?;
    let t = p.async_type()?;
    p.end()?;
    check_refs(&p.global_refs, |n| env.global(n).is_some(), "global type")?;
    env.check_global(&t.global).map_err(kernel_err)?;
    Ok(t)
}

/// Parse a communication `p->q!l` / `p->q?l`.
pub fn parse_comm(text: &str) -> Result<crate::kernel::Comm, ParseError> {
    let mut p = Parser::new(text, 1, 1)?;
    let s = p.ident("participant")?;
    p.expect(&Tok::Arrow)?;
    let r = p.ident("participant")?;
    let dir = match p.bump() {
        Tok::Bang => Dir::Out,
        Tok::Quest => Dir::In,
        t => return p.err(format!("expected `!` or `?`, found {}", describe(&t))),
    };
    let l = p.ident("label")?;
    p.end()?;
    Ok(crate::kernel::Comm::new(dir, s.as_str(), r.as_str(), l.as_str()))
}

/// Parse a trace: communications separated by `.` or `,` (empty text is ε).
pub fn parse_trace(text: &str) -> Result<Vec<crate::kernel::Comm>, ParseError> {
    let parts: Vec<&str> = text.split([',', ' ', '\t']).filter(|s| !s.trim().is_empty()).collect();
    let mut out = Vec::new();
    for part in parts {
        for c in part.split('.').filter(|s| !s.trim().is_empty()) {
            out.push(parse_comm(c.trim())?);
        }
    }
    Ok(out)
}

// ---- session files ----

/// Kind of assertion in an `expect` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExpectKind {
    /// `typable(N, T)`
    Typable,
    /// `balanced(T)`
    Balanced,
    /// `bounded(T)`
    Bounded,
    /// `wellformed(T)`
    WellFormed,
    /// `projectable(T, r)`
    Projectable,
}

impl ExpectKind {
    fn parse(s: &str) -> Option<(Self, usize)> {
        Some(match s {
            "typable" => (ExpectKind::Typable, 2),
            "balanced" => (ExpectKind::Balanced, 1),
            "bounded" => (ExpectKind::Bounded, 1),
            "wellformed" => (ExpectKind::WellFormed, 1),
            "projectable" => (ExpectKind::Projectable, 2),
            _ => return None,
        })
    }
    pub fn name(self) -> &'static str {
        match self {
            ExpectKind::Typable => "typable",
            ExpectKind::Balanced => "balanced",
            ExpectKind::Bounded => "bounded",
            ExpectKind::WellFormed => "wellformed",
            ExpectKind::Projectable => "projectable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub line: usize,
    pub kind: ExpectKind,
    pub args: Vec<String>,
    pub expected: bool,
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({}) = {}", self.kind.name(), self.args.join(", "), self.expected)
    }
}

/// Contents of a `.sess` file.
#[derive(Debug, Clone, Default)]
pub struct SessionFile {
    pub defs: DefEnv,
    pub networks: Vec<(String, Network)>,
    pub types: Vec<(String, AsyncType)>,
    pub expectations: Vec<Expectation>,
}

impl SessionFile {
    pub fn network(&self, name: &str) -> Option<&Network> {
        self.networks.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
    pub fn async_type(&self, name: &str) -> Option<&AsyncType> {
        self.types.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

struct Block {
    keyword: String,
    line: usize,
    /// Text after the keyword.
    body: String,
    /// Column where the body starts on the first line.
    col: usize,
}

fn split_blocks(text: &str) -> Result<Vec<Block>, ParseError> {
    let mut blocks: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            if let Some(b) = blocks.last_mut() {
                b.body.push('\n');
            }
            continue;
        }
        let starts_block = !raw.starts_with(char::is_whitespace);
        let first = content.split_whitespace().next().unwrap_or("");
        if starts_block {
            if !["def", "net", "type", "expect"].contains(&first) {
                return Err(ParseError::new(line, 1, format!("expected `def`, `net`, `type` or `expect`, found `{first}`")));
            }
            let off = raw.find(first).unwrap_or(0) + first.len();
            blocks.push(Block { keyword: first.to_string(), line, body: content[off..].to_string(), col: off + 1 });
        } else {
            match blocks.last_mut() {
                Some(b) => {
                    b.body.push('\n');
                    b.body.push_str(content);
                }
                None => return Err(ParseError::new(line, 1, "continuation line outside of a block")),
            }
        }
    }
    Ok(blocks)
}

enum DefBody {
    Proc(Process, Vec<RefSite>),
    Glob(Global, Vec<RefSite>),
    Alias(RefSite),
}

fn parse_def_body(toks: Vec<Spanned>) -> Result<DefBody, ParseError> {
    let mut pp = Parser::from_tokens(toks.clone());
    let pres = pp.process().and_then(|t| pp.end().map(|_| t));
    let mut pg = Parser::from_tokens(toks);
    let gres = pg.global().and_then(|t| pg.end().map(|_| t));
    match (pres, gres) {
        (Ok(p), Ok(_)) => {
            if let ProcessTerm::Ref(_) = &*p {
                Ok(DefBody::Alias(pp.proc_refs[0].clone()))
            } else {
                Ok(DefBody::Proc(p, pp.proc_refs))
            }
        }
        (Ok(p), Err(_)) => Ok(DefBody::Proc(p, pp.proc_refs)),
        (Err(_), Ok(g)) => Ok(DefBody::Glob(g, pg.global_refs)),
        (Err(a), Err(b)) => Err(if (a.line, a.col) >= (b.line, b.col) { a } else { b }),
    }
}

fn parse_name_eq(p: &mut Parser) -> Result<String, ParseError> {
    let n = p.ident("name")?;
    p.expect(&Tok::Eq)?;
    Ok(n)
}

/// Parse the contents of a `.sess` file.
///
/// ```text
/// # comment
/// def P = q!l;P (+) q!l'
/// def G = p->q!l; p->q?l; G
/// net N = p :: P | q :: p?l;Q |- empty
/// type T = G |- <p l q>
/// expect typable(N, T) = true
/// ```
pub fn parse_session(text: &str) -> Result<SessionFile, ParseError> {
    let blocks = split_blocks(text)?;
    let mut sf = SessionFile::default();
    let mut proc_sites = Vec::new();
    let mut glob_sites = Vec::new();
    let mut aliases: Vec<(Name, RefSite, usize)> = Vec::new();
    let mut pending_nets = Vec::new();
    let mut pending_types = Vec::new();
    let mut names = BTreeSet::new();
    let mut def_lines = std::collections::BTreeMap::new();

    for b in &blocks {
        match b.keyword.as_str() {
            "def" => {
                let mut p = Parser::new(&b.body, b.line, b.col)?;
                let name = parse_name_eq(&mut p)?;
                let (l, c) = (b.line, b.col);
                let parsed = parse_def_body(p.toks[p.pos..].to_vec())?;
                let n = Name::new(&name);
                if sf.defs.contains(&n) || aliases.iter().any(|a| a.0 == n) {
                    return Err(ParseError::new(l, c, format!("name `{name}` defined twice")));
                }
                def_lines.insert(n.clone(), b.line);
                match parsed {
                    DefBody::Proc(t, sites) => {
                        proc_sites.extend(sites);
                        sf.defs.add_process(n, t).map_err(|e| ParseError::new(l, c, e.to_string()))?;
                    }
                    DefBody::Glob(t, sites) => {
                        glob_sites.extend(sites);
                        sf.defs.add_global(n, t).map_err(|e| ParseError::new(l, c, e.to_string()))?;
                    }
                    DefBody::Alias(site) => aliases.push((n, site, b.line)),
                }
            }
            "net" | "type" => {
                let mut p = Parser::new(&b.body, b.line, b.col)?;
                let name = parse_name_eq(&mut p)?;
                if !names.insert(name.clone()) {
                    return Err(ParseError::new(b.line, b.col, format!("`{name}` defined twice")));
                }
                if b.keyword == "net" {
                    let n = p.network().and_then(|n| p.end().map(|_| n))?;
                    proc_sites.extend(p.proc_refs.iter().cloned());
                    pending_nets.push((name, n));
                } else {
                    let t = p.async_type().and_then(|t| p.end().map(|_| t))?;
                    glob_sites.extend(p.global_refs.iter().cloned());
                    pending_types.push((name, t));
                }
            }
            "expect" => {
                let mut p = Parser::new(&b.body, b.line, b.col)?;
                let e = parse_expect(&mut p, b.line)?;
                sf.expectations.push(e);
            }
            _ => unreachable!("checked by split_blocks"),
        }
    }

    // Aliases take the kind of their target; resolve chains iteratively.
    let mut remaining = aliases;
    loop {
        let before = remaining.len();
        let mut next = Vec::new();
        for (n, site, line) in remaining {
            if sf.defs.process(&site.name).is_some() {
                sf.defs.add_process(n, Process::reference(site.name.clone())).map_err(|e| ParseError::new(line, 1, e.to_string()))?;
            } else if sf.defs.global(&site.name).is_some() {
                sf.defs.add_global(n, Global::reference(site.name.clone())).map_err(|e| ParseError::new(line, 1, e.to_string()))?;
            } else {
                next.push((n, site, line));
            }
        }
        if next.is_empty() {
            break;
        }
        if next.len() == before {
            let (_, site, _) = &next[0];
            return Err(ParseError::new(site.line, site.col, format!("undefined name `{}`", site.name)));
        }
        remaining = next;
    }

    check_refs(&proc_sites, |n| sf.defs.process(n).is_some(), "process")?;
    check_refs(&glob_sites, |n| sf.defs.global(n).is_some(), "global type")?;
    for (n, p) in sf.defs.processes() {
        sf.defs.check_process(p).map_err(|e| ParseError::new(def_lines.get(n).copied().unwrap_or(1), 1, e.to_string()))?;
    }
    for (n, g) in sf.defs.globals() {
        sf.defs.check_global(g).map_err(|e| ParseError::new(def_lines.get(n).copied().unwrap_or(1), 1, e.to_string()))?;
    }
    sf.networks = pending_nets;
    sf.types = pending_types;
    for e in &sf.expectations {
        let needs = |name: &str, net: bool| -> Result<(), ParseError> {
            let ok = if net { sf.network(name).is_some() } else { sf.async_type(name).is_some() };
            if ok {
                Ok(())
            } else {
                let what = if net { "network" } else { "type" };
                Err(ParseError::new(e.line, 1, format!("undefined {what} `{name}`")))
            }
        };
        match e.kind {
            ExpectKind::Typable => {
                needs(&e.args[0], true)?;
                needs(&e.args[1], false)?;
            }
            _ => needs(&e.args[0], false)?,
        }
    }
    Ok(sf)
}

fn parse_expect(p: &mut Parser, line: usize) -> Result<Expectation, ParseError> {
    let (l, c) = p.here();
    let kw = p.ident("assertion")?;
    let Some((kind, arity)) = ExpectKind::parse(&kw) else {
        return Err(ParseError::new(
            l,
            c,
            format!("unknown assertion `{kw}` (expected typable, balanced, bounded, wellformed or projectable)"),
        ));
    };
    p.expect(&Tok::LParen)?;
    let mut args = vec![p.ident("name")?];
    while p.eat(&Tok::Comma) {
        args.push(p.ident("name")?);
    }
    p.expect(&Tok::RParen)?;
    if args.len() != arity {
        return Err(ParseError::new(l, c, format!("`{kw}` takes {arity} argument(s)")));
    }
    let expected = if p.eat(&Tok::Eq) {
        match p.ident("true or false")?.as_str() {
            "true" => true,
            "false" => false,
            other => return p.err(format!("expected `true` or `false`, found `{other}`")),
        }
    } else {
        true
    };
    p.end()?;
    Ok(Expectation { line, kind, args, expected })
}

// ---- printers ----

/// Print a process in the concrete syntax.
pub fn print_process(p: &Process) -> String {
    let mut s = String::new();
    write_process(&mut s, p, false);
    s
}

fn write_process(out: &mut String, p: &Process, nested: bool) {
    match &**p {
        ProcessTerm::Inaction => out.push('0'),
        ProcessTerm::Ref(n) => out.push_str(n.as_str()),
        ProcessTerm::Out(peer, bs) | ProcessTerm::In(peer, bs) => {
            let (sym, sep) = if matches!(&**p, ProcessTerm::Out(..)) { ('!', " (+) ") } else { ('?', " + ") };
            let paren = nested && bs.len() > 1;
            if paren {
                out.push('(');
            }
            for (i, (l, k)) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                let _ = write!(out, "{peer}{sym}{l}");
                if !k.is_inaction() {
                    out.push_str("; ");
                    write_process(out, k, true);
                }
            }
            if paren {
                out.push(')');
            }
        }
    }
}

/// Print a global type in the concrete syntax.
pub fn print_global(g: &Global) -> String {
    let mut s = String::new();
    write_global(&mut s, g, false);
    s
}

fn write_global(out: &mut String, g: &Global, nested: bool) {
    match &**g {
        GlobalTerm::End => out.push_str("End"),
        GlobalTerm::Ref(n) => out.push_str(n.as_str()),
        GlobalTerm::In { sender, receiver, label, cont } => {
            let _ = write!(out, "{sender}->{receiver}?{label}");
            if !cont.is_end() {
                out.push_str("; ");
                write_global(out, cont, true);
            }
        }
        GlobalTerm::Out { sender, receiver, branches } => {
            let paren = nested && branches.len() > 1;
            if paren {
                out.push('(');
            }
            for (i, (l, k)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" [+] ");
                }
                let _ = write!(out, "{sender}->{receiver}!{l}");
                if !k.is_end() {
                    out.push_str("; ");
                    write_global(out, k, true);
                }
            }
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn print_queue(q: &Queue) -> String {
    q.to_string()
}

pub fn print_network(n: &Network) -> String {
    let parts: Vec<String> = n.procs.iter().map(|(p, t)| format!("{p} :: {}", print_process(t))).collect();
    if parts.is_empty() {
        format!("|- {}", print_queue(&n.queue))
    } else {
        format!("{} |- {}", parts.join(" | "), print_queue(&n.queue))
    }
}

pub fn print_async_type(t: &AsyncType) -> String {
    format!("{} |- {}", print_global(&t.global), print_queue(&t.queue))
}

/// Print the equations of an environment as `def` lines.
pub fn print_defs(env: &DefEnv) -> String {
    let mut s = String::new();
    for (n, p) in env.processes() {
        let _ = writeln!(s, "def {n} = {}", print_process(p));
    }
    for (n, g) in env.globals() {
        let _ = writeln!(s, "def {n} = {}", print_global(g));
    }
    s
}

/// Print a whole session file.
pub fn print_session(sf: &SessionFile) -> String {
    let mut s = print_defs(&sf.defs);
    for (n, net) in &sf.networks {
        let _ = writeln!(s, "net {n} = {}", print_network(net));
    }
    for (n, t) in &sf.types {
        let _ = writeln!(s, "type {n} = {}", print_async_type(t));
    }
    for e in &sf.expectations {
        let _ = writeln!(s, "expect {e}");
    }
    s
}
