//! Projection, depth and boundedness, balancing, well-formedness, the
//! process preorder, network typing and progress witnesses.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kernel::{
    is_cyclic, players_global, reachable_globals, self_communications, AsyncType, Comm, DefEnv, Dir, Global,
    GlobalTerm, Label, Message, Network, Participant, Process, ProcessTerm, Queue,
};
use crate::semantics::{net_run, Trace};
use crate::textfmt::{print_async_type, print_global, ExpectKind, Expectation, SessionFile};

/// A located, coded diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    /// The term (or judgement) the diagnostic refers to.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &str, location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { code: code.to_string(), location: location.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} (at {})", self.code, self.message, self.location)
    }
}

// ---------------------------------------------------------------- projection

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum PKey {
    /// `G ↾ r`
    Proj(Global, Participant),
    /// Position `j` of the factored projection `π⃗; Σ p?l_i; P_i` of a
    /// multi-branch output choice onto its receiver.
    Factor(Global, Participant, usize),
}

#[derive(Clone, Debug)]
enum Head {
    Zero,
    Choice(Dir, Participant, Vec<(Label, PKey)>),
}

#[derive(Clone)]
struct Factoring {
    prefix: Vec<(Dir, Participant, Label)>,
    sender: Participant,
    conts: Vec<(Label, PKey)>,
}

struct Projector<'a> {
    env: &'a DefEnv,
    limit: usize,
    memo: HashMap<PKey, Result<Head, Diagnostic>>,
    in_progress: HashSet<PKey>,
    players: HashMap<Global, BTreeSet<Participant>>,
    factors: HashMap<(Global, Participant), Result<Factoring, Diagnostic>>,
}

impl<'a> Projector<'a> {
    fn new(env: &'a DefEnv, root: &Global) -> Self {
        Projector {
            env,
            limit: 2 * reachable_globals(root, env).len() + 2,
            memo: HashMap::new(),
            in_progress: HashSet::new(),
            players: HashMap::new(),
            factors: HashMap::new(),
        }
    }

    fn plays(&mut self, g: &Global, r: &Participant) -> bool {
        if !self.players.contains_key(g) {
            let ps = players_global(g, self.env);
            self.players.insert(g.clone(), ps);
        }
        self.players[g].contains(r)
    }

    fn head(&mut self, key: &PKey) -> Result<Head, Diagnostic> {
        if let Some(r) = self.memo.get(key) {
            return r.clone();
        }
        if self.in_progress.contains(key) {
            let loc = match key {
                PKey::Proj(g, _) | PKey::Factor(g, _, _) => print_global(g),
            };
            return Err(Diagnostic::new(
                "projection.unproductive",
                loc,
                "the projection revisits this subterm without producing an action",
            ));
        }
        self.in_progress.insert(key.clone());
        let r = self.compute(key);
        self.in_progress.remove(key);
        self.memo.insert(key.clone(), r.clone());
        r
    }

    fn compute(&mut self, key: &PKey) -> Result<Head, Diagnostic> {
        match key {
            PKey::Factor(g, q, j) => {
                let f = self.factor(g, q)?;
                Ok(if *j < f.prefix.len() {
                    let (d, peer, l) = f.prefix[*j].clone();
                    Head::Choice(d, peer, vec![(l, PKey::Factor(g.clone(), q.clone(), j + 1))])
                } else {
                    Head::Choice(Dir::In, f.sender.clone(), f.conts.clone())
                })
            }
            PKey::Proj(g, r) => {
                let g = self.env.whnf_g(g);
                if !self.plays(&g, r) {
                    return Ok(Head::Zero);
                }
                match &*g {
                    GlobalTerm::End | GlobalTerm::Ref(_) => Ok(Head::Zero),
                    GlobalTerm::In { sender, receiver, label, cont } => {
                        if receiver == r {
                            Ok(Head::Choice(
                                Dir::In,
                                sender.clone(),
                                vec![(label.clone(), PKey::Proj(cont.clone(), r.clone()))],
                            ))
                        } else {
                            self.head(&PKey::Proj(cont.clone(), r.clone()))
                        }
                    }
                    GlobalTerm::Out { sender, receiver, branches } => {
                        if sender == r {
                            Ok(Head::Choice(
                                Dir::Out,
                                receiver.clone(),
                                branches.iter().map(|(l, gi)| (l.clone(), PKey::Proj(gi.clone(), r.clone()))).collect(),
                            ))
                        } else if receiver == r && branches.len() == 1 {
                            self.head(&PKey::Proj(branches[0].1.clone(), r.clone()))
                        } else if receiver == r {
                            self.head(&PKey::Factor(g.clone(), r.clone(), 0))
                        } else {
                            self.outsider(key, &g, r, branches)
                        }
                    }
                }
            }
        }
    }

    /// Participant `r` is neither sender nor receiver of the choice: it must
    /// play in every branch and behave identically in all of them.
    fn outsider(
        &mut self,
        key: &PKey,
        g: &Global,
        r: &Participant,
        branches: &[(Label, Global)],
    ) -> Result<Head, Diagnostic> {
        for (l, gi) in branches {
            let gi = self.env.whnf_g(gi);
            if !self.plays(&gi, r) {
                return Err(Diagnostic::new(
                    "projection.outsider-absent",
                    print_global(g),
                    format!("`{r}` is not involved in the choice and does not play in branch `{l}`"),
                ));
            }
        }
        let first = PKey::Proj(branches[0].1.clone(), r.clone());
        let h = self.head(&first)?;
        // Tentatively fix the head so that recursive occurrences inside the
        // branch comparison are taken coinductively.
        self.memo.insert(key.clone(), Ok(h.clone()));
        for (l, gi) in &branches[1..] {
            if !self.bisimilar(&PKey::Proj(gi.clone(), r.clone()), &first)? {
                return Err(Diagnostic::new(
                    "projection.outsider-mismatch",
                    print_global(g),
                    format!(
                        "`{r}` is not involved in the choice but behaves differently in branches `{}` and `{l}`",
                        branches[0].0
                    ),
                ));
            }
        }
        Ok(h)
    }

    fn bisimilar(&mut self, a: &PKey, b: &PKey) -> Result<bool, Diagnostic> {
        let mut seen: HashSet<(PKey, PKey)> = HashSet::new();
        let mut todo = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = todo.pop() {
            if x == y || !seen.insert((x.clone(), y.clone())) {
                continue;
            }
            match (self.head(&x)?, self.head(&y)?) {
                (Head::Zero, Head::Zero) => {}
                (Head::Choice(dx, px, bx), Head::Choice(dy, py, by)) => {
                    if dx != dy || px != py || bx.len() != by.len() {
                        return Ok(false);
                    }
                    for ((lx, kx), (ly, ky)) in bx.into_iter().zip(by) {
                        if lx != ly {
                            return Ok(false);
                        }
                        todo.push((kx, ky));
                    }
                }
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Factor the branch projections of a multi-branch choice `p→q` onto `q`
    /// as `π⃗; p?l_i; P_i`.
    fn factor(&mut self, g: &Global, q: &Participant) -> Result<Factoring, Diagnostic> {
        let fkey = (g.clone(), q.clone());
        if let Some(f) = self.factors.get(&fkey) {
            return f.clone();
        }
        let r = self.compute_factor(g, q);
        self.factors.insert(fkey, r.clone());
        r
    }

    fn compute_factor(&mut self, g: &Global, q: &Participant) -> Result<Factoring, Diagnostic> {
        let GlobalTerm::Out { sender: p, branches, .. } = &**g else {
            unreachable!("factoring applies to output choices")
        };
        let loc = print_global(g);
        let mut cur: Vec<PKey> = branches.iter().map(|(_, gi)| PKey::Proj(gi.clone(), q.clone())).collect();
        let mut prefix = Vec::new();
        for _ in 0..=self.limit {
            let mut steps = Vec::with_capacity(cur.len());
            for k in &cur {
                match self.head(k)? {
                    Head::Choice(d, peer, bs) if bs.len() == 1 => {
                        let (l, next) = bs.into_iter().next().expect("one branch");
                        steps.push((d, peer, l, next));
                    }
                    _ => {
                        return Err(Diagnostic::new(
                            "projection.no-factorization",
                            loc,
                            format!("`{q}` must read the label chosen by `{p}` before branching"),
                        ))
                    }
                }
            }
            let reads_choice = steps
                .iter()
                .zip(branches)
                .all(|((d, peer, l, _), (li, _))| *d == Dir::In && peer == p && l == li);
            if reads_choice {
                return Ok(Factoring {
                    prefix,
                    sender: p.clone(),
                    conts: steps.into_iter().map(|(_, _, l, k)| (l, k)).collect(),
                });
            }
            let (d0, p0, l0, _) = &steps[0];
            if steps.iter().any(|(d, peer, l, _)| (d, peer, l) != (d0, p0, l0)) {
                return Err(Diagnostic::new(
                    "projection.no-factorization",
                    loc,
                    format!("the branch projections onto `{q}` have no common prefix followed by the input of the chosen label"),
                ));
            }
            prefix.push((*d0, p0.clone(), l0.clone()));
            cur = steps.into_iter().map(|s| s.3).collect();
        }
        Err(Diagnostic::new(
            "projection.guard",
            loc,
            format!("no factorization of the projections onto `{q}` within {} steps", self.limit),
        ))
    }
}

/// A successful projection: the process, and the environment extended with
/// the equations it needs.
#[derive(Debug, Clone)]
pub struct Projection {
    pub process: Process,
    pub env: DefEnv,
}

fn name_prefix(r: &Participant) -> String {
    let base: String = r.as_str().chars().map(|c| if c == '\'' { '_' } else { c }).collect();
    format!("Proj_{base}_")
}

/// `G ↾ r`, synthesized as a regular process.
pub fn project(g: &Global, r: &Participant, env: &DefEnv) -> Result<Projection, Diagnostic> {
    let mut pj = Projector::new(env, g);
    let root = PKey::Proj(g.clone(), r.clone());
    // Discover all reachable keys and their heads.
    let mut order: Vec<PKey> = Vec::new();
    let mut index: HashMap<PKey, usize> = HashMap::new();
    let mut heads: Vec<Head> = Vec::new();
    let mut todo = VecDeque::from([root.clone()]);
    while let Some(k) = todo.pop_front() {
        if index.contains_key(&k) {
            continue;
        }
        let h = pj.head(&k)?;
        index.insert(k.clone(), order.len());
        order.push(k);
        if let Head::Choice(_, _, bs) = &h {
            for (_, c) in bs {
                todo.push_back(c.clone());
            }
        }
        heads.push(h);
    }
    let succ: Vec<Vec<usize>> = heads
        .iter()
        .map(|h| match h {
            Head::Zero => vec![],
            Head::Choice(_, _, bs) => bs.iter().map(|(_, c)| index[c]).collect(),
        })
        .collect();
    // A key needs a name iff it lies on a cycle.
    let on_cycle: Vec<bool> = (0..order.len())
        .map(|i| {
            let mut seen = vec![false; order.len()];
            let mut st: Vec<usize> = succ[i].clone();
            while let Some(j) = st.pop() {
                if j == i {
                    return true;
                }
                if !seen[j] {
                    seen[j] = true;
                    st.extend(succ[j].iter().copied());
                }
            }
            false
        })
        .collect();
    let mut out_env = env.clone();
    let prefix = name_prefix(r);
    let mut names: Vec<Option<crate::kernel::Name>> = vec![None; order.len()];
    for i in 0..order.len() {
        if on_cycle[i] {
            let n = out_env.fresh_name(&prefix);
            out_env.add_process(n.clone(), Process::zero()).expect("fresh");
            names[i] = Some(n);
        }
    }
    fn build(i: usize, at_def: bool, heads: &[Head], succ: &[Vec<usize>], names: &[Option<crate::kernel::Name>]) -> Process {
        if let (Some(n), false) = (&names[i], at_def) {
            return Process::reference(n.clone());
        }
        match &heads[i] {
            Head::Zero => Process::zero(),
            Head::Choice(d, peer, bs) => {
                let branches =
                    bs.iter().zip(&succ[i]).map(|((l, _), &j)| (l.clone(), build(j, false, heads, succ, names))).collect();
                Process::choice(*d, peer.clone(), branches).expect("labels of a projected choice are distinct")
            }
        }
    }
    let mut final_env = env.clone();
    for i in 0..order.len() {
        if let Some(n) = &names[i] {
            final_env.add_process(n.clone(), build(i, true, &heads, &succ, &names)).expect("fresh");
        }
    }
    Ok(Projection { process: build(0, false, &heads, &succ, &names), env: final_env })
}

// -------------------------------------------------------------- depth

/// A natural number or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Depth {
    Finite(usize),
    Infinite,
}

impl Depth {
    pub fn is_finite(self) -> bool {
        matches!(self, Depth::Finite(_))
    }
    pub fn finite(self) -> Option<usize> {
        match self {
            Depth::Finite(n) => Some(n),
            Depth::Infinite => None,
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(n) => write!(f, "{n}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}

/// `ord(τ, p)`: the 1-based position of the first communication played by
/// `p`, or 0.
pub fn ord(tau: &[Comm], p: &Participant) -> usize {
    tau.iter().position(|c| c.player() == p).map_or(0, |i| i + 1)
}

/// `depth(G, p)`: supremum of `ord(τ, p)` over the paths of `G`.
pub fn depth(g: &Global, p: &Participant, env: &DefEnv) -> Depth {
    let root = env.whnf_g(g);
    if !players_global(&root, env).contains(p) {
        return Depth::Finite(0);
    }
    if root.head_player() == Some(p) {
        return Depth::Finite(1);
    }
    // p-free region reachable from the root.
    let mut idx: HashMap<Global, usize> = HashMap::new();
    let mut nodes: Vec<Global> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut hits_p: Vec<bool> = Vec::new();
    let mut todo = vec![root.clone()];
    idx.insert(root.clone(), 0);
    nodes.push(root);
    succ.push(vec![]);
    hits_p.push(false);
    while let Some(n) = todo.pop() {
        let i = idx[&n];
        for (_, c) in n.edges() {
            let c = env.whnf_g(&c);
            if c.head_player() == Some(p) {
                hits_p[i] = true;
                continue;
            }
            let j = match idx.get(&c) {
                Some(&j) => j,
                None => {
                    let j = nodes.len();
                    idx.insert(c.clone(), j);
                    nodes.push(c.clone());
                    succ.push(vec![]);
                    hits_p.push(false);
                    todo.push(c);
                    j
                }
            };
            succ[i].push(j);
        }
    }
    // Keep nodes from which a p-node is reachable.
    let n = nodes.len();
    let mut live = hits_p.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !live[i] && succ[i].iter().any(|&j| live[j]) {
                live[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Longest path over live nodes; a cycle among them means infinity.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done(usize),
    }
    let mut mark = vec![Mark::New; n];
    fn longest(i: usize, succ: &[Vec<usize>], live: &[bool], mark: &mut [Mark]) -> Option<usize> {
        match mark[i] {
            Mark::Done(d) => return Some(d),
            Mark::Active => return None,
            Mark::New => {}
        }
        mark[i] = Mark::Active;
        let mut best = 1usize;
        for &j in &succ[i] {
            if live[j] {
                best = best.max(1 + longest(j, succ, live, mark)?);
            }
        }
        mark[i] = Mark::Done(best);
        Some(best)
    }
    match longest(0, &succ, &live, &mut mark) {
        // `best` counts p-free nodes on the path; add the p-communication.
        Some(d) => Depth::Finite(d + 1),
        None => Depth::Infinite,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundedReport {
    pub bounded: bool,
    /// Subterms (printed) and participants with infinite depth.
    pub offending: Vec<(String, Participant)>,
}

/// Whether `depth(G′, p)` is finite for every subterm `G′` and player `p`.
pub fn bounded(g: &Global, env: &DefEnv) -> BoundedReport {
    let mut offending = Vec::new();
    for n in reachable_globals(g, env) {
        for p in players_global(&n, env) {
            if !depth(&n, &p, env).is_finite() {
                offending.push((print_global(&n), p));
            }
        }
    }
    BoundedReport { bounded: offending.is_empty(), offending }
}

// ------------------------------------------------------------ balancing

/// A judgement `G ∥ M` as used in the assumption set of the balancing
/// derivation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Judgement {
    pub node: Global,
    pub queue: Queue,
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// The divergence guard was hit.
    pub diverged: bool,
    /// Derivation steps, one line per judgement visited (indented by depth).
    pub derivation: Vec<String>,
    pub failure: Option<Diagnostic>,
}

struct Balancer<'a> {
    env: &'a DefEnv,
    guard: usize,
    derivation: Vec<String>,
    diverged: bool,
    failure: Option<Diagnostic>,
    cyclic: HashMap<Global, bool>,
}

impl Balancer<'_> {
    fn judge(&mut self, g: &Global, m: &Queue, assumed: &mut Vec<Judgement>, depth: usize) -> bool {
        let g = self.env.whnf_g(g);
        let j = Judgement { node: g.clone(), queue: m.canonical() };
        let shown = format!("{}{} |- {}", "  ".repeat(depth), print_global(&g), m);
        if assumed.contains(&j) {
            self.derivation.push(format!("{shown}   [assumption]"));
            return true;
        }
        if m.len() > self.guard {
            self.diverged = true;
            self.fail("balance.divergence", &g, m, "the queue grows beyond the divergence guard");
            self.derivation.push(format!("{shown}   [diverges]"));
            return false;
        }
        match &*g {
            GlobalTerm::End | GlobalTerm::Ref(_) => {
                let ok = m.is_empty();
                self.derivation.push(format!("{shown}   [End]"));
                if !ok {
                    self.fail("balance.unread", &g, m, "messages left in the queue are never read");
                }
                ok
            }
            GlobalTerm::In { sender, receiver, label, cont } => {
                self.derivation.push(format!("{shown}   [In]"));
                match m.pop_front_msg(sender, label, receiver) {
                    None => {
                        self.fail("balance.missing-message", &g, m, "the input has no matching message in the queue");
                        false
                    }
                    Some(rest) => {
                        assumed.push(j);
                        let ok = self.judge(cont, &rest, assumed, depth + 1);
                        assumed.pop();
                        ok
                    }
                }
            }
            GlobalTerm::Out { sender, receiver, branches } => {
                self.derivation.push(format!("{shown}   [Out]"));
                if !m.is_empty() {
                    let env = self.env;
                    let cyc = *self.cyclic.entry(g.clone()).or_insert_with(|| is_cyclic(&g, env));
                    if cyc {
                        self.fail("balance.cyclic-nonempty", &g, m, "a cyclic type is entered with a nonempty queue");
                        return false;
                    }
                }
                assumed.push(j);
                let mut ok = true;
                for (l, gi) in branches {
                    let m2 = m.pushed(Message::new(sender.clone(), l.clone(), receiver.clone()));
                    if !self.judge(gi, &m2, assumed, depth + 1) {
                        ok = false;
                        break;
                    }
                }
                assumed.pop();
                ok
            }
        }
    }

    fn fail(&mut self, code: &str, g: &Global, m: &Queue, msg: &str) {
        if self.failure.is_none() {
            self.failure = Some(Diagnostic::new(code, format!("{} |- {}", print_global(g), m), msg));
        }
    }
}

/// Decide `⊢ G ∥ M` coinductively.
pub fn balanced(t: &AsyncType, env: &DefEnv) -> BalanceReport {
    let guard = t.queue.len() + reachable_globals(&t.global, env).len();
    let mut b = Balancer { env, guard, derivation: vec![], diverged: false, failure: None, cyclic: HashMap::new() };
    let ok = b.judge(&t.global, &t.queue, &mut Vec::new(), 0);
    BalanceReport { balanced: ok, diverged: b.diverged, derivation: b.derivation, failure: b.failure }
}

// ------------------------------------------------------- well-formedness

#[derive(Debug, Clone, Serialize)]
pub struct WellFormedReport {
    pub well_formed: bool,
    pub balanced: bool,
    pub bounded: bool,
    pub projectable: bool,
    pub diagnostics: Vec<Diagnostic>,
    /// Non-fatal findings (e.g. self-communications).
    pub warnings: Vec<Diagnostic>,
}

/// Balanced, projectable on every player, and bounded.
pub fn well_formed(t: &AsyncType, env: &DefEnv) -> WellFormedReport {
    let mut diagnostics = Vec::new();
    let bal = balanced(t, env);
    if let Some(d) = bal.failure.clone().filter(|_| !bal.balanced) {
        diagnostics.push(d);
    } else if !bal.balanced {
        diagnostics.push(Diagnostic::new("balance.failed", print_async_type(t), "not balanced"));
    }
    let bnd = bounded(&t.global, env);
    for (node, p) in &bnd.offending {
        diagnostics.push(Diagnostic::new(
            "bounded.infinite-depth",
            node.clone(),
            format!("`{p}` may be postponed forever (infinite depth)"),
        ));
    }
    let mut projectable = true;
    for p in players_global(&t.global, env) {
        if let Err(d) = project(&t.global, &p, env) {
            projectable = false;
            diagnostics.push(Diagnostic { message: format!("not projectable on `{p}`: {}", d.message), ..d });
        }
    }
    let warnings = self_communications(&t.global, env)
        .into_iter()
        .map(|c| Diagnostic::new("lint.self-communication", c.to_string(), "participant communicates with itself"))
        .collect();
    WellFormedReport {
        well_formed: bal.balanced && bnd.bounded && projectable,
        balanced: bal.balanced,
        bounded: bnd.bounded,
        projectable,
        diagnostics,
        warnings,
    }
}

// ------------------------------------------------------------- preorder

/// The structural preorder `P ≤ Q`: outputs match exactly, inputs on the
/// left may offer more branches.
pub fn proc_leq(p: &Process, q: &Process, env: &DefEnv) -> bool {
    let mut seen: HashSet<(Process, Process)> = HashSet::new();
    let mut todo = vec![(p.clone(), q.clone())];
    while let Some((x, y)) = todo.pop() {
        let x = env.whnf_p(&x);
        let y = env.whnf_p(&y);
        if !seen.insert((x.clone(), y.clone())) {
            continue;
        }
        match (&*x, &*y) {
            (ProcessTerm::Inaction, ProcessTerm::Inaction) => {}
            (ProcessTerm::Out(px, bx), ProcessTerm::Out(py, by)) => {
                if px != py || bx.len() != by.len() {
                    return false;
                }
                for ((lx, kx), (ly, ky)) in bx.iter().zip(by) {
                    if lx != ly {
                        return false;
                    }
                    todo.push((kx.clone(), ky.clone()));
                }
            }
            (ProcessTerm::In(px, bx), ProcessTerm::In(py, by)) => {
                if px != py {
                    return false;
                }
                for (ly, ky) in by {
                    match bx.iter().find(|(lx, _)| lx == ly) {
                        Some((_, kx)) => todo.push((kx.clone(), ky.clone())),
                        None => return false,
                    }
                }
            }
            _ => return false,
        }
    }
    true
}

// --------------------------------------------------------------- typing

#[derive(Debug, Clone, Serialize)]
pub struct TypecheckReport {
    pub typable: bool,
    pub well_formed: WellFormedReport,
    pub diagnostics: Vec<Diagnostic>,
}

/// Rule Net: `N ∥ M` is typed by `G ∥ M`.
pub fn typecheck(n: &Network, t: &AsyncType, env: &DefEnv) -> TypecheckReport {
    let wf = well_formed(t, env);
    let mut diagnostics = Vec::new();
    if !n.queue.equiv(&t.queue) {
        diagnostics.push(Diagnostic::new(
            "typing.queue-mismatch",
            format!("{} vs {}", n.queue, t.queue),
            "the network and the type have different queues",
        ));
    }
    let players = players_global(&t.global, env);
    for p in &players {
        if !n.procs.contains_key(p) {
            diagnostics.push(Diagnostic::new(
                "typing.missing-player",
                p.to_string(),
                format!("`{p}` plays in the type but is not in the network"),
            ));
        }
    }
    if wf.projectable {
        for (p, proc_) in &n.procs {
            match project(&t.global, p, env) {
                Ok(pr) => {
                    if !proc_leq(proc_, &pr.process, &pr.env) {
                        diagnostics.push(Diagnostic::new(
                            "typing.preorder",
                            p.to_string(),
                            format!(
                                "process of `{p}` is not below its projection {}",
                                crate::textfmt::print_process(&pr.process)
                            ),
                        ));
                    }
                }
                Err(d) => diagnostics.push(d),
            }
        }
    }
    TypecheckReport { typable: wf.well_formed && diagnostics.is_empty(), well_formed: wf, diagnostics }
}

// ------------------------------------------------------------- progress

/// `idepth(G, pq?l)`: the input depth of an input in a global type.
pub fn idepth(g: &Global, input: &Comm, env: &DefEnv) -> Depth {
    fn go(g: &Global, input: &Comm, env: &DefEnv, memo: &mut HashMap<Global, Depth>, active: &mut HashSet<Global>) -> Depth {
        let g = env.whnf_g(g);
        if let Some(d) = memo.get(&g) {
            return *d;
        }
        if !active.insert(g.clone()) {
            return Depth::Infinite;
        }
        let d = match &*g {
            GlobalTerm::End | GlobalTerm::Ref(_) => Depth::Infinite,
            GlobalTerm::In { sender, receiver, label, cont } => {
                if input.dir == Dir::In && &input.sender == sender && &input.receiver == receiver && &input.label == label {
                    Depth::Finite(1)
                } else {
                    match go(cont, input, env, memo, active) {
                        Depth::Finite(n) => Depth::Finite(n + 1),
                        Depth::Infinite => Depth::Infinite,
                    }
                }
            }
            GlobalTerm::Out { branches, .. } => {
                let mut best = Depth::Finite(0);
                for (_, gi) in branches {
                    best = best.max(go(gi, input, env, memo, active));
                }
                match best {
                    Depth::Finite(n) => Depth::Finite(n + 1),
                    Depth::Infinite => Depth::Infinite,
                }
            }
        };
        active.remove(&g);
        memo.insert(g, d);
        d
    }
    go(g, input, env, &mut HashMap::new(), &mut HashSet::new())
}

/// What a progress witness should reach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProgressTarget {
    /// Some communication played by this participant.
    Participant(Participant),
    /// The input consuming this queued message (which must be first on its
    /// channel).
    Message(Message),
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgressWitness {
    pub trace: Trace,
    pub bound: Depth,
}

/// A trace `τ·β` of the network reaching the target, obtained by following
/// Ext-Out (first branch) / Ext-In moves of the type and replayed on the
/// network. Its length is at most `depth(G, p)` resp. `idepth(G, pq?l)`.
pub fn progress_witness(
    n: &Network,
    t: &AsyncType,
    target: &ProgressTarget,
    env: &DefEnv,
) -> Result<ProgressWitness, Diagnostic> {
    let loc = print_async_type(t);
    let tc = typecheck(n, t, env);
    if !tc.typable {
        return Err(Diagnostic::new("progress.untyped", loc, "the network is not typed by the given type"));
    }
    let bound = match target {
        ProgressTarget::Participant(p) => {
            if n.procs.get(p).is_none_or(|q| env.whnf_p(q).is_inaction()) {
                return Err(Diagnostic::new("progress.precondition", p.to_string(), "the participant has no pending action"));
            }
            depth(&t.global, p, env)
        }
        ProgressTarget::Message(m) => {
            match t.queue.first_on(&m.sender, &m.receiver) {
                Some((_, first)) if first == m => {}
                _ => {
                    return Err(Diagnostic::new(
                        "progress.precondition",
                        m.to_string(),
                        "the message is not at the head of its channel in the queue",
                    ))
                }
            }
            idepth(&t.global, &Comm::new(Dir::In, m.sender.clone(), m.receiver.clone(), m.label.clone()), env)
        }
    };
    let limit = match bound {
        Depth::Finite(b) => b,
        Depth::Infinite => {
            return Err(Diagnostic::new("progress.unbounded", loc, "the bound for the target is infinite"));
        }
    };
    let mut g = env.whnf_g(&t.global);
    let mut trace = Vec::new();
    loop {
        if trace.len() >= limit {
            return Err(Diagnostic::new("progress.bound-exceeded", loc, format!("no witness within {limit} steps")));
        }
        let (beta, next) = g.edges().into_iter().next().ok_or_else(|| {
            Diagnostic::new("progress.stuck", print_global(&g), "the type terminates before the target is reached")
        })?;
        let hit = match target {
            ProgressTarget::Participant(p) => beta.player() == p,
            ProgressTarget::Message(m) => beta.dir == Dir::In && beta.message() == *m,
        };
        trace.push(beta);
        if hit {
            break;
        }
        g = env.whnf_g(&next);
    }
    net_run(n, &trace, env)
        .map_err(|e| Diagnostic::new("progress.replay", loc.clone(), format!("the witness does not replay on the network: {e}")))?;
    Ok(ProgressWitness { trace, bound })
}

/// Evaluate an `expect` assertion of a session file.
pub fn evaluate_expectation(sf: &SessionFile, e: &Expectation) -> Result<bool, Diagnostic> {
    let ty = |name: &str| {
        sf.async_type(name)
            .ok_or_else(|| Diagnostic::new("session.undefined", name.to_string(), "undefined type"))
    };
    Ok(match e.kind {
        ExpectKind::Typable => {
            let n = sf
                .network(&e.args[0])
                .ok_or_else(|| Diagnostic::new("session.undefined", e.args[0].clone(), "undefined network"))?;
            typecheck(n, ty(&e.args[1])?, &sf.defs).typable
        }
        ExpectKind::Balanced => balanced(ty(&e.args[0])?, &sf.defs).balanced,
        ExpectKind::Bounded => bounded(&ty(&e.args[0])?.global, &sf.defs).bounded,
        ExpectKind::WellFormed => well_formed(ty(&e.args[0])?, &sf.defs).well_formed,
        ExpectKind::Projectable => {
            project(&ty(&e.args[0])?.global, &Participant::new(&e.args[1]), &sf.defs).is_ok()
        }
    })
}
