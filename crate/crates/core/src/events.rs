//! Event structures of processes (p-events), networks (n-events, flow
//! event structures) and asynchronous types (t-events, prime event
//! structures), with the residual/retrieval operators that move events
//! across one communication.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{Action, AsyncType, Comm, DefEnv, Dir, Global, Network, Participant, Process};
use crate::traces::{
    actionseq_proj, canonical_trace, cross_flow_splits, equiv_class, filter_trace, otr, otrace_canonical, pointed,
    trace_proj, weak_dual, well_formed_trace, OTrace, TraceError, DEFAULT_CAP,
};
use crate::semantics::Trace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EventError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("the trace {0} is empty or not well formed with respect to the queue")]
    IllFormed(String),
}

fn show_trace(t: &[Comm]) -> String {
    if t.is_empty() {
        "ε".into()
    } else {
        t.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(".")
    }
}

// ------------------------------------------------------------ p-events

/// A nonempty sequence of actions; its last action is the one it stands for.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PEvent(pub Vec<Action>);

impl PEvent {
    pub fn act(&self) -> &Action {
        self.0.last().expect("p-events are nonempty")
    }
    /// The causal history (all actions but the last).
    pub fn history(&self) -> &[Action] {
        &self.0[..self.0.len() - 1]
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}
impl fmt::Debug for PEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prefix order on action sequences.
pub fn pevent_leq(a: &[Action], b: &[Action]) -> bool {
    a.len() <= b.len() && a == &b[..a.len()]
}

/// `ζ·π·ζ′ # ζ·π′·ζ″` with `π ≠ π′`.
pub fn pevent_conflict(a: &[Action], b: &[Action]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some()
}

// -------------------------------------------------- event structures

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EsKind {
    /// Causality is a partial order; `causes` lists its strict part.
    Prime,
    /// `causes` is the flow relation.
    Flow,
}

/// A finite event structure with events indexed by position.
#[derive(Clone, Debug, Serialize)]
pub struct EventStructure<E> {
    pub kind: EsKind,
    pub events: Vec<E>,
    /// Pairs `(i, j)`: `e_i < e_j` (prime) or `e_i ≺ e_j` (flow).
    pub causes: BTreeSet<(usize, usize)>,
    /// Symmetric: both `(i, j)` and `(j, i)` are present.
    pub conflict: BTreeSet<(usize, usize)>,
    /// The o-trace shared by all events (empty for processes).
    pub otrace: OTrace,
}

impl<E: PartialEq> EventStructure<E> {
    pub fn len(&self) -> usize {
        self.events.len()
    }
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
    pub fn prec(&self, i: usize, j: usize) -> bool {
        self.causes.contains(&(i, j))
    }
    pub fn conflicting(&self, i: usize, j: usize) -> bool {
        self.conflict.contains(&(i, j))
    }
    pub fn index_of(&self, e: &E) -> Option<usize> {
        self.events.iter().position(|x| x == e)
    }
    /// Conflict pairs listed once, `i < j`.
    pub fn conflict_pairs(&self) -> Vec<(usize, usize)> {
        self.conflict.iter().copied().filter(|(i, j)| i < j).collect()
    }

    /// The axioms of prime resp. flow event structures.
    pub fn check_laws(&self) -> Result<(), String> {
        let n = self.len();
        for &(i, j) in &self.conflict {
            if i == j {
                return Err(format!("event {i} conflicts with itself"));
            }
            if !self.conflicting(j, i) {
                return Err(format!("conflict {i}#{j} is not symmetric"));
            }
        }
        for &(i, j) in &self.causes {
            if i == j {
                return Err(format!("event {i} causes itself"));
            }
        }
        if self.kind == EsKind::Prime {
            for &(i, j) in &self.causes {
                if self.prec(j, i) {
                    return Err(format!("causality between {i} and {j} is not antisymmetric"));
                }
                for k in 0..n {
                    if self.prec(j, k) && !self.prec(i, k) {
                        return Err(format!("causality {i}<{j}<{k} is not transitive"));
                    }
                }
            }
            for &(i, j) in &self.conflict {
                for k in 0..n {
                    if self.prec(j, k) && !self.conflicting(i, k) {
                        return Err(format!("conflict {i}#{j} is not inherited by {k}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// What a node of an event structure stands for, used in tables and DOT.
pub trait EventLabel {
    fn io_label(&self) -> String;
}

impl EventLabel for PEvent {
    fn io_label(&self) -> String {
        self.act().to_string()
    }
}

/// All p-events of `P` of length at most `k`.
pub fn pes_of_process(p: &Process, env: &DefEnv, k: usize) -> EventStructure<PEvent> {
    let mut events = Vec::new();
    fn walk(p: &Process, env: &DefEnv, k: usize, path: &mut Vec<Action>, out: &mut Vec<PEvent>) {
        if path.len() >= k {
            return;
        }
        let p = env.whnf_p(p);
        if let Some((dir, peer, branches)) = p.as_choice() {
            for (l, cont) in branches {
                path.push(Action::new(dir, peer.clone(), l.clone()));
                out.push(PEvent(path.clone()));
                walk(cont, env, k, path, out);
                path.pop();
            }
        }
    }
    walk(p, env, k, &mut Vec::new(), &mut events);
    events.sort();
    let n = events.len();
    let mut causes = BTreeSet::new();
    let mut conflict = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && pevent_leq(&events[i].0, &events[j].0) {
                causes.insert((i, j));
            }
            if pevent_conflict(&events[i].0, &events[j].0) {
                conflict.insert((i, j));
            }
        }
    }
    EventStructure { kind: EsKind::Prime, events, causes, conflict, otrace: vec![] }
}

// ------------------------------------------------------------ n-events

/// A p-event located at a participant. The ambient o-trace is carried by
/// the enclosing structure.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NEvent {
    pub loc: Participant,
    pub ev: PEvent,
}

impl NEvent {
    pub fn new(loc: impl Into<Participant>, acts: Vec<Action>) -> Self {
        NEvent { loc: loc.into(), ev: PEvent(acts) }
    }
    pub fn is_input(&self) -> bool {
        self.ev.act().dir == Dir::In
    }
}

impl fmt::Display for NEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.loc, self.ev)
    }
}
impl fmt::Debug for NEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The communication an n-event represents.
pub fn nevent_io(rho: &NEvent) -> Comm {
    let a = rho.ev.act();
    match a.dir {
        Dir::Out => Comm::new(Dir::Out, rho.loc.clone(), a.peer.clone(), a.label.clone()),
        Dir::In => Comm::new(Dir::In, a.peer.clone(), rho.loc.clone(), a.label.clone()),
    }
}

impl EventLabel for NEvent {
    fn io_label(&self) -> String {
        nevent_io(self).to_string()
    }
}

/// Projection of an n-event on a participant.
pub fn proj_nevent(rho: &NEvent, p: &Participant) -> Option<PEvent> {
    (&rho.loc == p).then(|| rho.ev.clone())
}

/// The `ω`-flow relation: local prefixes, and cross-flows from an output
/// to a matching input whose histories are weakly dual.
pub fn nevent_flow(a: &NEvent, b: &NEvent, w: &[Comm]) -> Result<bool, TraceError> {
    nevent_flow_capped(a, b, w, DEFAULT_CAP)
}

pub fn nevent_flow_capped(a: &NEvent, b: &NEvent, w: &[Comm], cap: usize) -> Result<bool, TraceError> {
    if a.loc == b.loc {
        return Ok(a.ev.len() < b.ev.len() && pevent_leq(&a.ev.0, &b.ev.0));
    }
    let (p, q) = (&a.loc, &b.loc);
    let (oa, ib) = (a.ev.act(), b.ev.act());
    if oa.dir != Dir::Out || ib.dir != Dir::In || &oa.peer != q || &ib.peer != p || oa.label != ib.label {
        return Ok(false);
    }
    let mut out_side = trace_proj(w, p);
    out_side.extend_from_slice(a.ev.history());
    let out_side = actionseq_proj(&out_side, q);
    // The receiver's outputs still in the queue may be postponed past the
    // input like the ones in its history, so they take part in the split.
    let mut in_side = actionseq_proj(&trace_proj(w, q), p);
    in_side.extend(actionseq_proj(&b.ev.0, p));
    for theta in cross_flow_splits(&in_side, &ib.label, cap)? {
        if weak_dual(&out_side, &theta, cap)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether an input n-event consumes a message already in the queue `ω`.
pub fn queue_justified(rho: &NEvent, w: &[Comm]) -> Result<bool, TraceError> {
    if !rho.is_input() {
        return Ok(false);
    }
    let io = nevent_io(rho);
    let (p, q) = (&io.sender, &io.receiver);
    for (idx, c) in w.iter().enumerate() {
        if c.dir == Dir::Out && &c.sender == p && &c.receiver == q && c.label == io.label {
            let mut acts = trace_proj(&w[..idx], p);
            acts.push(Action::new(Dir::Out, q.clone(), io.label.clone()));
            if nevent_flow(&NEvent { loc: p.clone(), ev: PEvent(acts) }, rho, &[])? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Greatest subset of `events` closed under local predecessors in which
/// every input is queue-justified or justified by a member.
pub fn narrowing(events: &[NEvent], w: &[Comm]) -> Result<Vec<NEvent>, TraceError> {
    let n = events.len();
    let mut qj = vec![false; n];
    let mut justifiers: Vec<Vec<usize>> = vec![vec![]; n];
    for j in 0..n {
        if events[j].is_input() {
            qj[j] = queue_justified(&events[j], w)?;
            for i in 0..n {
                if events[i].loc != events[j].loc && nevent_flow(&events[i], &events[j], w)? {
                    justifiers[j].push(i);
                }
            }
        }
    }
    let index: HashMap<&NEvent, usize> = events.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for j in 0..n {
            if !alive[j] {
                continue;
            }
            let e = &events[j];
            let pred_ok = e.ev.len() == 1 || {
                let pred = NEvent { loc: e.loc.clone(), ev: PEvent(e.ev.history().to_vec()) };
                index.get(&pred).is_some_and(|&i| alive[i])
            };
            let just_ok = !e.is_input() || qj[j] || justifiers[j].iter().any(|&i| alive[i]);
            if !(pred_ok && just_ok) {
                alive[j] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(events.iter().zip(alive).filter(|(_, a)| *a).map(|(e, _)| e.clone()).collect())
}

/// The flow event structure of `N ∥ M`, with p-events truncated at length `k`.
pub fn fes_of_network(n: &Network, env: &DefEnv, k: usize) -> Result<EventStructure<NEvent>, TraceError> {
    let w = otr(&n.queue);
    let mut de = Vec::new();
    for (p, proc_) in &n.procs {
        for ev in pes_of_process(proc_, env, k).events {
            de.push(NEvent { loc: p.clone(), ev });
        }
    }
    let mut events = narrowing(&de, &w)?;
    events.sort();
    let mut causes = BTreeSet::new();
    let mut conflict = BTreeSet::new();
    for i in 0..events.len() {
        for j in 0..events.len() {
            if i != j && nevent_flow(&events[i], &events[j], &w)? {
                causes.insert((i, j));
            }
            if events[i].loc == events[j].loc && pevent_conflict(&events[i].ev.0, &events[j].ev.0) {
                conflict.insert((i, j));
            }
        }
    }
    Ok(EventStructure { kind: EsKind::Flow, events, causes, conflict, otrace: w })
}

// ------------------------------------------------------------ t-events

/// `[ω, τ]` with `τ` nonempty and `ω`-pointed, stored in canonical form:
/// `ω` sorted by channel and `τ` the least member of its `≈_ω` class.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TEvent {
    pub otrace: OTrace,
    pub trace: Trace,
}

impl TEvent {
    /// Build from a pointed pair, canonicalizing both components.
    pub fn new(w: &[Comm], tau: &[Comm]) -> Result<TEvent, EventError> {
        if tau.is_empty() || !pointed(tau, w) {
            return Err(EventError::IllFormed(show_trace(tau)));
        }
        let otrace = otrace_canonical(w);
        let trace = canonical_trace(tau, &otrace)?;
        Ok(TEvent { otrace, trace })
    }
    pub fn io(&self) -> &Comm {
        self.trace.last().expect("t-events are nonempty")
    }
}

impl fmt::Display for TEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", show_trace(&self.otrace), show_trace(&self.trace))
    }
}
impl fmt::Debug for TEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl EventLabel for TEvent {
    fn io_label(&self) -> String {
        self.io().to_string()
    }
}

/// `ev(ω, τ) = [ω, ⟨τ⟩_ω ε]`.
pub fn ev(w: &[Comm], tau: &[Comm]) -> Result<TEvent, EventError> {
    if tau.is_empty() || !well_formed_trace(tau, w) {
        return Err(EventError::IllFormed(show_trace(tau)));
    }
    TEvent::new(w, &filter_trace(tau, w))
}

pub fn tevent_equal(a: &TEvent, b: &TEvent) -> bool {
    a == b
}

/// `[ω, τ] ≤ [ω, τ′]` iff `τ′ ≈_ω τ·τ1` for some `τ1`.
pub fn tevent_leq(a: &TEvent, b: &TEvent) -> Result<bool, TraceError> {
    if a.otrace != b.otrace || a.trace.len() > b.trace.len() {
        return Ok(false);
    }
    let k = a.trace.len();
    for m in equiv_class(&b.trace, &b.otrace, DEFAULT_CAP)? {
        if canonical_trace(&m[..k], &a.otrace)? == a.trace {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Conflict: some participant acts differently after a common history.
pub fn tevent_conflict(a: &TEvent, b: &TEvent) -> bool {
    if a.otrace != b.otrace {
        return false;
    }
    let players: BTreeSet<&Participant> = a.trace.iter().chain(&b.trace).map(|c| c.player()).collect();
    players.into_iter().any(|p| pevent_conflict(&trace_proj(&a.trace, p), &trace_proj(&b.trace, p)))
}

/// Finite paths of length at most `k` from the root of `G`'s tree.
pub fn fpaths(g: &Global, env: &DefEnv, k: usize) -> Vec<Trace> {
    let mut out = Vec::new();
    fn walk(g: &Global, env: &DefEnv, k: usize, path: &mut Trace, out: &mut Vec<Trace>) {
        if path.len() >= k {
            return;
        }
        for (c, next) in env.whnf_g(g).edges() {
            path.push(c);
            out.push(path.clone());
            walk(&next, env, k, path, out);
            path.pop();
        }
    }
    walk(g, env, k, &mut Vec::new(), &mut out);
    out
}

/// The prime event structure of `G ∥ M`, over paths of length at most `k`.
pub fn pes_of_type(t: &AsyncType, env: &DefEnv, k: usize) -> Result<EventStructure<TEvent>, EventError> {
    let w = otrace_canonical(&otr(&t.queue));
    let mut set = BTreeSet::new();
    for tau in fpaths(&t.global, env, k) {
        set.insert(ev(&w, &tau)?);
    }
    pes_of_tevents(set, &w)
}

/// The prime event structure on a given set of t-events sharing `ω`.
pub fn pes_of_tevents(set: BTreeSet<TEvent>, w: &[Comm]) -> Result<EventStructure<TEvent>, EventError> {
    let w = otrace_canonical(w);
    let events: Vec<TEvent> = set.into_iter().collect();
    let mut causes = BTreeSet::new();
    let mut conflict = BTreeSet::new();
    for i in 0..events.len() {
        for j in 0..events.len() {
            if i != j && tevent_leq(&events[i], &events[j])? {
                causes.insert((i, j));
            }
            if tevent_conflict(&events[i], &events[j]) {
                conflict.insert((i, j));
            }
        }
    }
    Ok(EventStructure { kind: EsKind::Prime, events, causes, conflict, otrace: w })
}

// --------------------------------------------- residuals and retrievals

/// Residual of an n-event after `β`: strips `β`'s action when located at
/// its player; undefined if the event is that very action or starts
/// differently.
pub fn nevent_residual(rho: &NEvent, beta: &Comm) -> Option<NEvent> {
    let head = trace_proj(std::slice::from_ref(beta), &rho.loc);
    match head.first() {
        None => Some(rho.clone()),
        Some(a) if rho.ev.len() > 1 && &rho.ev.0[0] == a => {
            Some(NEvent { loc: rho.loc.clone(), ev: PEvent(rho.ev.0[1..].to_vec()) })
        }
        Some(_) => None,
    }
}

/// Retrieval of an n-event before `β`.
pub fn nevent_retrieval(rho: &NEvent, beta: &Comm) -> NEvent {
    let mut acts = trace_proj(std::slice::from_ref(beta), &rho.loc);
    acts.extend(rho.ev.0.iter().cloned());
    NEvent { loc: rho.loc.clone(), ev: PEvent(acts) }
}

/// `β ▶ ω`: the o-trace after executing `β`.
pub fn queue_map_fwd(beta: &Comm, w: &[Comm]) -> Option<OTrace> {
    match beta.dir {
        Dir::Out => {
            let mut v = w.to_vec();
            v.push(beta.clone());
            Some(v)
        }
        Dir::In => {
            let k = w.iter().position(|c| c.sender == beta.sender && c.receiver == beta.receiver)?;
            if w[k].label != beta.label {
                return None;
            }
            let mut v = w.to_vec();
            v.remove(k);
            Some(v)
        }
    }
}

/// `β ▷ ω`: the o-trace before executing `β`.
pub fn queue_map_bwd(beta: &Comm, w: &[Comm]) -> Option<OTrace> {
    match beta.dir {
        Dir::Out => {
            let k = w.iter().rposition(|c| c.sender == beta.sender && c.receiver == beta.receiver)?;
            if w[k] != *beta {
                return None;
            }
            let mut v = w.to_vec();
            v.remove(k);
            Some(v)
        }
        Dir::In => {
            let mut v = vec![Comm::new(Dir::Out, beta.sender.clone(), beta.receiver.clone(), beta.label.clone())];
            v.extend_from_slice(w);
            Some(v)
        }
    }
}

fn players(tau: &[Comm]) -> BTreeSet<&Participant> {
    tau.iter().map(|c| c.player()).collect()
}

/// `δ • β`: the t-event after `β`.
pub fn tevent_residual(d: &TEvent, beta: &Comm) -> Result<Option<TEvent>, EventError> {
    let Some(w2) = queue_map_fwd(beta, &d.otrace) else { return Ok(None) };
    if !players(&d.trace).contains(beta.player()) {
        return Ok(Some(TEvent::new(&w2, &d.trace)?));
    }
    for m in equiv_class(&d.trace, &d.otrace, DEFAULT_CAP)? {
        if m.len() > 1 && &m[0] == beta {
            return Ok(Some(TEvent::new(&w2, &m[1..])?));
        }
    }
    Ok(None)
}

/// `β ∘ δ`: the t-event before `β`.
pub fn tevent_retrieval(beta: &Comm, d: &TEvent) -> Result<Option<TEvent>, EventError> {
    let Some(w0) = queue_map_bwd(beta, &d.otrace) else { return Ok(None) };
    let mut bt = vec![beta.clone()];
    bt.extend(d.trace.iter().cloned());
    if pointed(&bt, &w0) {
        return Ok(Some(TEvent::new(&w0, &bt)?));
    }
    if !players(&d.trace).contains(beta.player()) {
        return Ok(Some(TEvent::new(&w0, &d.trace)?));
    }
    Ok(None)
}

/// The n-events of the successive steps of `τ`.
pub fn nec(tau: &[Comm]) -> Vec<NEvent> {
    (1..=tau.len())
        .map(|i| {
            let p = tau[i - 1].player().clone();
            let acts = trace_proj(&tau[..i], &p);
            NEvent { loc: p, ev: PEvent(acts) }
        })
        .collect()
}

/// The t-events of the successive prefixes of `τ`.
pub fn tec(w: &[Comm], tau: &[Comm]) -> Result<Vec<TEvent>, EventError> {
    (1..=tau.len()).map(|i| ev(w, &tau[..i])).collect()
}

/// Events grouped by location, for printing.
pub fn by_location(es: &EventStructure<NEvent>) -> BTreeMap<Participant, Vec<usize>> {
    let mut m: BTreeMap<Participant, Vec<usize>> = BTreeMap::new();
    for (i, e) in es.events.iter().enumerate() {
        m.entry(e.loc.clone()).or_default().push(i);
    }
    m
}
