//! Trace machinery: o-traces, projections on participants, matching,
//! well-formedness, the swapping equivalence, pointedness, filtering and
//! the duality relations on undirected action sequences.
//!
//! Positions are 1-based throughout, as in `τ[i]`.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{Action, Comm, Dir, Label, Participant, Queue};
use crate::semantics::Trace;

/// Sequence of outputs standing for a queue.
pub type OTrace = Vec<Comm>;
/// Sequence of actions of one participant (`ζ`).
pub type ActionSeq = Vec<Action>;

/// Default bound on the size of closures computed by breadth-first search.
pub const DEFAULT_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("position {index} out of range for a trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{what} exceeded the cap of {cap} elements")]
    CapExceeded { what: &'static str, cap: usize },
}

/// An undirected action `!l` or `?l`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UAct {
    pub dir: Dir,
    pub label: Label,
}

impl UAct {
    pub fn out(l: &str) -> Self {
        UAct { dir: Dir::Out, label: Label::new(l) }
    }
    pub fn inp(l: &str) -> Self {
        UAct { dir: Dir::In, label: Label::new(l) }
    }
}

impl fmt::Display for UAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.dir.symbol(), self.label)
    }
}
impl fmt::Debug for UAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub type USeq = Vec<UAct>;

// ------------------------------------------------------------ o-traces

pub fn otr(m: &Queue) -> OTrace {
    m.iter().map(|msg| msg.as_output()).collect()
}

/// Canonical representative modulo `≅` (stable sort by channel).
pub fn otrace_canonical(w: &[Comm]) -> OTrace {
    let mut v = w.to_vec();
    v.sort_by(|a, b| a.channel().cmp(&b.channel()));
    v
}

/// `ω ≅ ω′`: equal per-channel subsequences.
pub fn otrace_equiv(a: &[Comm], b: &[Comm]) -> bool {
    otrace_canonical(a) == otrace_canonical(b)
}

/// Back from an o-trace to a queue.
pub fn queue_of(w: &[Comm]) -> Queue {
    Queue::from_msgs(w.iter().map(|c| c.message()))
}

// --------------------------------------------------------- projections

/// `τ↾r`: the actions played by `r`.
pub fn trace_proj(tau: &[Comm], r: &Participant) -> ActionSeq {
    tau.iter()
        .filter_map(|c| match c.dir {
            Dir::Out if &c.sender == r => Some(Action::new(Dir::Out, c.receiver.clone(), c.label.clone())),
            Dir::In if &c.receiver == r => Some(Action::new(Dir::In, c.sender.clone(), c.label.clone())),
            _ => None,
        })
        .collect()
}

/// `ζ↾r`: the actions towards/from `r`, undirected.
pub fn actionseq_proj(zeta: &[Action], r: &Participant) -> USeq {
    zeta.iter().filter(|a| &a.peer == r).map(|a| UAct { dir: a.dir, label: a.label.clone() }).collect()
}

// -------------------------------------------------- matching and wf-ness

/// Number of communications `pq†` in `τ`.
pub fn multiplicity(tau: &[Comm], p: &Participant, q: &Participant, dir: Dir) -> usize {
    tau.iter().filter(|c| c.dir == dir && &c.sender == p && &c.receiver == q).count()
}

/// `i ⋈_τ j`: the input at `j` consumes the output at `i` (1-based).
pub fn matches(tau: &[Comm], i: usize, j: usize) -> bool {
    if i == 0 || j == 0 || i >= j || j > tau.len() {
        return false;
    }
    let (o, x) = (&tau[i - 1], &tau[j - 1]);
    o.dir == Dir::Out
        && x.dir == Dir::In
        && o.sender == x.sender
        && o.receiver == x.receiver
        && o.label == x.label
        && multiplicity(&tau[..i - 1], &o.sender, &o.receiver, Dir::Out)
            == multiplicity(&tau[..j - 1], &x.sender, &x.receiver, Dir::In)
}

/// The position of the output matched by the input at `j`, if any.
pub fn matched_output(tau: &[Comm], j: usize) -> Option<usize> {
    let x = tau.get(j.checked_sub(1)?)?;
    if x.dir != Dir::In {
        return None;
    }
    let n = multiplicity(&tau[..j - 1], &x.sender, &x.receiver, Dir::In);
    let mut seen = 0;
    for (k, c) in tau[..j - 1].iter().enumerate() {
        if c.dir == Dir::Out && c.sender == x.sender && c.receiver == x.receiver {
            if seen == n {
                return (c.label == x.label).then_some(k + 1);
            }
            seen += 1;
        }
    }
    None
}

fn concat(a: &[Comm], b: &[Comm]) -> Trace {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// `τ` is `prefix`-well formed: every input of `prefix·τ` matches an output.
pub fn well_formed_trace(tau: &[Comm], prefix: &[Comm]) -> bool {
    let all = concat(prefix, tau);
    (1..=all.len()).all(|j| all[j - 1].dir == Dir::Out || matched_output(&all, j).is_some())
}

// ------------------------------------------------------------ swapping

/// Swap positions `i` and `i+1` of the `ω`-well-formed `τ`, if their
/// players differ and they do not match inside `ω·τ`.
pub fn swap_step(tau: &[Comm], i: usize, w: &[Comm]) -> Result<Option<Trace>, TraceError> {
    if i == 0 || i + 1 > tau.len() {
        return Err(TraceError::IndexOutOfRange { index: i, len: tau.len() });
    }
    let (a, b) = (&tau[i - 1], &tau[i]);
    if a.player() == b.player() {
        return Ok(None);
    }
    let all = concat(w, tau);
    if matches(&all, i + w.len(), i + 1 + w.len()) {
        return Ok(None);
    }
    let mut t = tau.to_vec();
    t.swap(i - 1, i);
    Ok(Some(t))
}

/// The `≈_ω` class of `τ`, by breadth-first closure under swaps.
pub fn equiv_class(tau: &[Comm], w: &[Comm], cap: usize) -> Result<BTreeSet<Trace>, TraceError> {
    let mut seen: BTreeSet<Trace> = BTreeSet::new();
    let mut todo = VecDeque::from([tau.to_vec()]);
    seen.insert(tau.to_vec());
    while let Some(t) = todo.pop_front() {
        for i in 1..t.len() {
            if let Some(s) = swap_step(&t, i, w)? {
                if seen.insert(s.clone()) {
                    if seen.len() > cap {
                        return Err(TraceError::CapExceeded { what: "swap closure", cap });
                    }
                    todo.push_back(s);
                }
            }
        }
    }
    Ok(seen)
}

/// `τ ≈_ω τ′`.
pub fn trace_equiv(a: &[Comm], b: &[Comm], w: &[Comm]) -> Result<bool, TraceError> {
    if a.len() != b.len() {
        return Ok(false);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort();
    sb.sort();
    if sa != sb {
        return Ok(false);
    }
    Ok(equiv_class(a, w, DEFAULT_CAP)?.contains(b))
}

/// The least member of the `≈_ω` class of `τ`.
pub fn canonical_trace(tau: &[Comm], w: &[Comm]) -> Result<Trace, TraceError> {
    Ok(equiv_class(tau, w, DEFAULT_CAP)?.into_iter().next().unwrap_or_default())
}

// -------------------------------------------------------- pointedness

/// `τ[i]` is required: its player plays again later.
pub fn required(tau: &[Comm], i: usize) -> bool {
    if i == 0 || i > tau.len() {
        return false;
    }
    let p = tau[i - 1].player();
    tau[i..].iter().any(|c| c.player() == p)
}

/// `τ` is `prefix`-pointed.
pub fn pointed(tau: &[Comm], prefix: &[Comm]) -> bool {
    if !well_formed_trace(tau, prefix) {
        return false;
    }
    let all = concat(prefix, tau);
    let k = prefix.len();
    let n = tau.len();
    (1..n).all(|i| required(tau, i) || (i + 1..=n).any(|j| matches(&all, i + k, j + k)))
}

/// `⟨τ⟩_ω ε`: scan right to left, keeping the communications that leave
/// the kept suffix pointed.
pub fn filter_trace(tau: &[Comm], w: &[Comm]) -> Trace {
    let mut kept: Trace = Vec::new();
    for i in (1..=tau.len()).rev() {
        let prefix = concat(w, &tau[..i - 1]);
        let mut cand = Vec::with_capacity(kept.len() + 1);
        cand.push(tau[i - 1].clone());
        cand.extend(kept.iter().cloned());
        if pointed(&cand, &prefix) {
            kept = cand;
        }
    }
    kept
}

// ------------------------------------------------------------- duality

/// All `ϑ′` with `ϑ ≾ ϑ′`: outputs delayed past immediately following
/// inputs, repeatedly.
pub fn precsim_closure(th: &[UAct], cap: usize) -> Result<BTreeSet<USeq>, TraceError> {
    let mut seen: BTreeSet<USeq> = BTreeSet::new();
    seen.insert(th.to_vec());
    let mut todo = VecDeque::from([th.to_vec()]);
    while let Some(t) = todo.pop_front() {
        for k in 1..t.len() {
            if t[k - 1].dir == Dir::Out && t[k].dir == Dir::In {
                let mut s = t.clone();
                s.swap(k - 1, k);
                if seen.insert(s.clone()) {
                    if seen.len() > cap {
                        return Err(TraceError::CapExceeded { what: "output-delay closure", cap });
                    }
                    todo.push_back(s);
                }
            }
        }
    }
    Ok(seen)
}

/// `ϑ1 ⋈ ϑ2`: pointwise complementary.
pub fn dual(a: &[UAct], b: &[UAct]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.label == y.label && x.dir == y.dir.flip())
}

fn complement(a: &[UAct]) -> USeq {
    a.iter().map(|x| UAct { dir: x.dir.flip(), label: x.label.clone() }).collect()
}

/// Weak duality: some `≾`-successors of the two sequences are dual.
pub fn weak_dual(a: &[UAct], b: &[UAct], cap: usize) -> Result<bool, TraceError> {
    if a.len() != b.len() {
        return Ok(false);
    }
    let ua = precsim_closure(a, cap)?;
    let ub = precsim_closure(b, cap)?;
    Ok(ub.iter().any(|y| ua.contains(&complement(y))))
}

/// The candidate histories `θ` of a cross-flow: for each `Y` with
/// `hist ≾ Y`, each split `Y = θ·?l·χ` with `χ` outputs only.
pub fn cross_flow_splits(hist: &[UAct], label: &Label, cap: usize) -> Result<Vec<USeq>, TraceError> {
    let mut out: HashSet<USeq> = HashSet::new();
    for y in precsim_closure(hist, cap)? {
        for k in 0..y.len() {
            if y[k].dir == Dir::In && &y[k].label == label && y[k + 1..].iter().all(|a| a.dir == Dir::Out) {
                out.insert(y[..k].to_vec());
            }
        }
    }
    let mut v: Vec<USeq> = out.into_iter().collect();
    v.sort();
    Ok(v)
}
