//! Seeded generators and property checks shared by the property and
//! acceptance test targets. Every property takes a seed and returns a
//! description of the first counterexample it finds.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sessfes::domains::{
    enumerate_configurations, exact_depth_network, exact_depth_type, is_configuration, is_proving_sequence,
    Configuration,
};
use sessfes::events::{
    ev, fes_of_network, nec, nevent_flow, nevent_residual, nevent_retrieval, pes_of_process, pes_of_tevents,
    pes_of_type, pevent_conflict, proj_nevent, queue_justified, queue_map_bwd, queue_map_fwd, tec,
    tevent_conflict, tevent_leq, tevent_residual, tevent_retrieval, EsKind, EventStructure, NEvent, PEvent,
    TEvent,
};
use sessfes::kernel::{
    players_global, queue_equiv, regular_equal_g, regular_equal_p, unfold_global, unfold_process, Action,
    AsyncType, Comm, DefEnv, Dir, Global, GlobalTerm, Label, Message, Network, Participant, Process,
    ProcessTerm, Queue,
};
use sessfes::semantics::{net_enabled, net_run, net_step, net_traces, type_enabled, type_step, type_traces, Trace};
use sessfes::textfmt::{
    parse_global, parse_process, parse_session, print_global, print_process, SessionFile,
};
use sessfes::traces::{
    canonical_trace, equiv_class, filter_trace, otr, pointed, swap_step, trace_equiv,
    well_formed_trace,
};
use sessfes::typing::{balanced, project, proc_leq, typecheck, well_formed};

pub type Check = Result<(), String>;

const PS: [&str; 3] = ["p", "q", "r"];
const LS: [&str; 2] = ["a", "b"];

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn show(tau: &[Comm]) -> String {
    if tau.is_empty() {
        return "ε".into();
    }
    tau.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" . ")
}

// ------------------------------------------------------------ generators

/// A network together with an asynchronous type that types it.
#[derive(Clone, Debug)]
pub struct TypedPair {
    pub name: String,
    pub net: Network,
    pub typ: AsyncType,
    pub env: DefEnv,
}

impl TypedPair {
    pub fn is_finite(&self) -> bool {
        exact_depth_network(&self.net, &self.env).is_some() && exact_depth_type(&self.typ, &self.env).is_some()
    }
}

fn pick<'a, T>(rng: &mut StdRng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

fn random_channel(rng: &mut StdRng) -> (&'static str, &'static str) {
    let p = *pick(rng, &PS);
    let q = *pick(rng, &PS.iter().copied().filter(|x| *x != p).collect::<Vec<_>>());
    (p, q)
}

struct GlobalGen<'a> {
    rng: &'a mut StdRng,
    loops: bool,
}

impl GlobalGen<'_> {
    /// A global type in which every message in `pending` (FIFO per channel)
    /// is eventually read on every path; at most `budget` nodes.
    fn node(&mut self, pending: &[Message], budget: usize, at_root: bool) -> Global {
        let need = pending.len();
        let can_out = budget >= need + 2;
        if pending.is_empty() {
            let r = self.rng.gen_range(0..10);
            if !can_out || r < 2 {
                return Global::end();
            }
            if self.loops && !at_root && r < 4 {
                return Global::reference("G");
            }
            return self.output(pending, budget);
        }
        if can_out && self.rng.gen_bool(0.45) {
            return self.output(pending, budget);
        }
        // Read one message that is first on its channel.
        let heads: Vec<usize> = (0..pending.len())
            .filter(|&i| !pending[..i].iter().any(|m| m.same_channel(&pending[i])))
            .collect();
        let i = *pick(self.rng, &heads);
        let m = pending[i].clone();
        let mut rest = pending.to_vec();
        rest.remove(i);
        let cont = self.node(&rest, budget - 1, false);
        Global::inp(m.sender.clone(), m.receiver.clone(), m.label.clone(), cont)
    }

    fn output(&mut self, pending: &[Message], budget: usize) -> Global {
        let (p, q) = random_channel(self.rng);
        let per_branch = pending.len() + 1;
        let two = budget > 2 * per_branch && self.rng.gen_bool(0.4);
        let labels: Vec<&str> = if two { LS.to_vec() } else { vec![*pick(self.rng, &LS)] };
        let mut left = budget - 1;
        let mut branches = Vec::new();
        for (k, l) in labels.iter().enumerate() {
            let reserve = (labels.len() - k - 1) * per_branch;
            let mine = left - reserve;
            let mut pend = pending.to_vec();
            pend.push(Message::of(p, l, q));
            let g = self.node(&pend, mine, false);
            left -= size(&g).min(mine);
            branches.push((Label::new(l), g));
        }
        Global::out(p, q, branches).expect("distinct labels")
    }
}

/// Number of communication nodes of a (finite, unfolded) global tree.
fn size(g: &Global) -> usize {
    match g.term() {
        GlobalTerm::End | GlobalTerm::Ref(_) => 0,
        GlobalTerm::In { cont, .. } => 1 + size(cont),
        GlobalTerm::Out { branches, .. } => 1 + branches.iter().map(|(_, g)| size(g)).sum::<usize>(),
    }
}

/// A random typed pair whose global type has at most six communication
/// nodes. The network is assembled from the projections; candidates that do
/// not typecheck are discarded.
pub fn gen_typed_pair(seed: u64) -> TypedPair {
    let mut rng = rng(seed);
    for attempt in 0..500 {
        let queue = if rng.gen_bool(0.3) {
            let (p, q) = random_channel(&mut rng);
            Queue::from_msgs([Message::of(p, pick(&mut rng, &LS), q)])
        } else {
            Queue::empty()
        };
        let loops = queue.is_empty() && rng.gen_bool(0.3);
        let body = GlobalGen { rng: &mut rng, loops }.node(&queue.0, 6, true);
        let mut env = DefEnv::new();
        let global = if loops && body.is_end() {
            continue;
        } else if loops {
            if env.add_global("G", body).is_err() {
                continue;
            }
            Global::reference("G")
        } else {
            body
        };
        let typ = AsyncType::new(global, queue.clone());
        let mut parts: BTreeSet<Participant> = players_global(&typ.global, &env);
        for m in queue.iter() {
            parts.insert(m.sender.clone());
            parts.insert(m.receiver.clone());
        }
        let mut procs = Vec::new();
        let mut ok = true;
        let mut full = env.clone();
        for p in &parts {
            match project(&typ.global, p, &env) {
                Ok(pr) => {
                    match full.merged(&pr.env) {
                        Ok(e) => full = e,
                        Err(_) => ok = false,
                    }
                    procs.push((p.clone(), pr.process));
                }
                Err(_) => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let net = Network::new(procs, queue).expect("distinct participants");
        if typecheck(&net, &typ, &full).typable {
            return TypedPair { name: format!("seed {seed} attempt {attempt}"), net, typ, env: full };
        }
    }
    panic!("no typed pair found for seed {seed}");
}

/// A random `ω` with a trace `τ` that is `ω`-well formed, built by running
/// FIFO channels: inputs always read the head of a nonempty channel.
pub fn gen_wf_trace(rng: &mut StdRng, max_w: usize, max_len: usize) -> (Trace, Trace) {
    let nw = rng.gen_range(0..=max_w);
    let w: Trace = (0..nw)
        .map(|_| {
            let (p, q) = random_channel(rng);
            Comm::out(p, q, pick(rng, &LS))
        })
        .collect();
    let mut queue: VecDeque<Comm> = w.iter().cloned().collect();
    let n = rng.gen_range(1..=max_len);
    let mut tau = Vec::new();
    for _ in 0..n {
        let heads: Vec<Comm> = queue
            .iter()
            .enumerate()
            .filter(|(i, c)| !queue.iter().take(*i).any(|d| d.channel() == c.channel()))
            .map(|(_, c)| c.clone())
            .collect();
        if !heads.is_empty() && rng.gen_bool(0.5) {
            let c = pick(rng, &heads).clone();
            let i = queue.iter().position(|d| *d == c).unwrap();
            queue.remove(i);
            tau.push(c.dual());
        } else {
            let (p, q) = random_channel(rng);
            let c = Comm::out(p, q, pick(rng, &LS));
            queue.push_back(c.clone());
            tau.push(c);
        }
    }
    (w, tau)
}

pub fn gen_comm(rng: &mut StdRng) -> Comm {
    let (p, q) = random_channel(rng);
    let l = pick(rng, &LS);
    if rng.gen_bool(0.5) {
        Comm::out(p, q, l)
    } else {
        Comm::inp(p, q, l)
    }
}

/// A random event structure on at most eight events with unit payloads.
/// Prime ones satisfy the prime laws (candidates that do not are redrawn).
pub fn gen_abstract_es(rng: &mut StdRng, kind: EsKind) -> EventStructure<usize> {
    loop {
        let n = rng.gen_range(0..=8);
        let mut causes = BTreeSet::new();
        let mut conflict = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let forward = kind == EsKind::Flow || i < j;
                if forward && rng.gen_bool(0.2) {
                    causes.insert((i, j));
                }
                if i < j && rng.gen_bool(0.12) {
                    conflict.insert((i, j));
                    conflict.insert((j, i));
                }
            }
        }
        if kind == EsKind::Prime {
            // transitive closure, then inherit conflicts along causality
            loop {
                let extra: Vec<(usize, usize)> = causes
                    .iter()
                    .flat_map(|&(a, b)| causes.iter().filter(move |&&(c, _)| c == b).map(move |&(_, d)| (a, d)))
                    .filter(|p| !causes.contains(p))
                    .collect();
                if extra.is_empty() {
                    break;
                }
                causes.extend(extra);
            }
            loop {
                let extra: Vec<(usize, usize)> = conflict
                    .iter()
                    .flat_map(|&(a, b)| causes.iter().filter(move |&&(c, _)| c == b).map(move |&(_, d)| (a, d)))
                    .flat_map(|(a, d)| [(a, d), (d, a)])
                    .filter(|p| !conflict.contains(p))
                    .collect();
                if extra.is_empty() {
                    break;
                }
                conflict.extend(extra);
            }
        }
        let es = EventStructure { kind, events: (0..n).collect(), causes, conflict, otrace: vec![] };
        if es.check_laws().is_ok() {
            return es;
        }
    }
}

fn gen_process(rng: &mut StdRng, depth: usize, rec: bool) -> Process {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rec && rng.gen_bool(0.5) { Process::reference("X") } else { Process::zero() };
    }
    let peer = *pick(rng, &["p", "q"]);
    let dir = if rng.gen_bool(0.5) { Dir::Out } else { Dir::In };
    let n = rng.gen_range(1..=2);
    let branches = LS[..n]
        .iter()
        .map(|l| (Label::new(l), gen_process(rng, depth - 1, rec)))
        .collect();
    Process::choice(dir, peer, branches).expect("distinct labels")
}

fn subst_p(p: &Process, body: &Process) -> Process {
    match p.term() {
        ProcessTerm::Ref(_) => body.clone(),
        ProcessTerm::Inaction => p.clone(),
        ProcessTerm::Out(peer, bs) | ProcessTerm::In(peer, bs) => {
            let dir = if matches!(p.term(), ProcessTerm::Out(..)) { Dir::Out } else { Dir::In };
            let bs = bs.iter().map(|(l, k)| (l.clone(), subst_p(k, body))).collect();
            Process::choice(dir, peer.clone(), bs).unwrap()
        }
    }
}

/// A guarded body for `X`, as a recursion equation.
fn gen_rec_process(rng: &mut StdRng) -> (DefEnv, Process) {
    let head = Action::new(if rng.gen_bool(0.5) { Dir::Out } else { Dir::In }, "p", "a");
    let body = Process::prefix(&head, gen_process(rng, 2, true));
    let mut env = DefEnv::new();
    env.add_process("X", body.clone()).unwrap();
    (env, body)
}

// ------------------------------------------------ exploration helpers

/// Pairs reachable from a typed pair in at most `d` steps of the network.
fn reachable_pairs(tp: &TypedPair, d: usize) -> Result<Vec<(Network, AsyncType, Trace)>, String> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut todo = VecDeque::from([(tp.net.clone(), tp.typ.clone(), Vec::new())]);
    while let Some((n, t, tr)) = todo.pop_front() {
        if !seen.insert((n.canonical(&tp.env), t.canonical(&tp.env))) {
            continue;
        }
        out.push((n.clone(), t.clone(), tr.clone()));
        if tr.len() >= d {
            continue;
        }
        for b in net_enabled(&n, &tp.env) {
            let n2 = net_step(&n, &b, &tp.env).map_err(|e| e.to_string())?;
            let t2 = type_step(&t, &b, &tp.env)
                .map_err(|e| format!("{}: after {} the type cannot do {b}: {e}", tp.name, show(&tr)))?;
            let mut tr2 = tr.clone();
            tr2.push(b);
            todo.push_back((n2, t2, tr2));
        }
    }
    Ok(out)
}

fn nevent_conflict(a: &NEvent, b: &NEvent) -> bool {
    a.loc == b.loc && pevent_conflict(&a.ev.0, &b.ev.0)
}

fn fes_of(tp: &TypedPair, cap: usize) -> Result<(EventStructure<NEvent>, usize), String> {
    let k = exact_depth_network(&tp.net, &tp.env).unwrap_or(cap);
    fes_of_network(&tp.net, &tp.env, k).map(|es| (es, k)).map_err(|e| e.to_string())
}

/// The PES of a type, completed with the events of every LTS trace of
/// length ≤ `k` (paths of the tree alone miss some when it is cut).
fn pes_of(tp: &TypedPair, cap: usize) -> Result<(EventStructure<TEvent>, usize), String> {
    let k = exact_depth_type(&tp.typ, &tp.env).unwrap_or(cap);
    let base = pes_of_type(&tp.typ, &tp.env, k).map_err(|e| e.to_string())?;
    let w = base.otrace.clone();
    let mut set: BTreeSet<TEvent> = base.events.into_iter().collect();
    for tau in type_traces(&tp.typ, k, &tp.env).map_err(|e| e.to_string())? {
        set.extend(tec(&w, &tau).map_err(|e| e.to_string())?);
    }
    pes_of_tevents(set, &w).map(|es| (es, k)).map_err(|e| e.to_string())
}

// ------------------------------------------------ kernel and textfmt

pub fn prop_regular_equal_equivalence(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (env, body) = gen_rec_process(&mut rng);
    let x = Process::reference("X");
    let once = subst_p(&body, &body);
    let terms = [x.clone(), body.clone(), once.clone(), gen_process(&mut rng, 3, false)];
    for a in &terms {
        ensure(regular_equal_p(a, a, &env), || format!("not reflexive on {}", print_process(a)))?;
        for b in &terms {
            let ab = regular_equal_p(a, b, &env);
            ensure(ab == regular_equal_p(b, a, &env), || {
                format!("not symmetric on {} / {}", print_process(a), print_process(b))
            })?;
            for c in &terms {
                if ab && regular_equal_p(b, c, &env) {
                    ensure(regular_equal_p(a, c, &env), || "not transitive".into())?;
                }
            }
        }
    }
    ensure(regular_equal_p(&x, &once, &env), || format!("X and its unfolding {} differ", print_process(&once)))
}

pub fn prop_queue_equiv_oracle(seed: u64) -> Check {
    let mut rng = rng(seed);
    let gen = |rng: &mut StdRng| {
        let n = rng.gen_range(0..5);
        Queue::from_msgs((0..n).map(|_| {
            let (p, q) = random_channel(rng);
            Message::of(p, pick(rng, &LS), q)
        }))
    };
    let a = gen(&mut rng);
    // Either a shuffle of `a` or an independent queue.
    let b = if rng.gen_bool(0.6) {
        let mut v = a.0.clone();
        for i in (1..v.len()).rev() {
            let j = rng.gen_range(0..=i);
            v.swap(i, j);
        }
        Queue(v)
    } else {
        gen(&mut rng)
    };
    let per_channel = |q: &Queue| {
        let mut m: BTreeMap<(Participant, Participant), Vec<Label>> = BTreeMap::new();
        for x in q.iter() {
            m.entry((x.sender.clone(), x.receiver.clone())).or_default().push(x.label.clone());
        }
        m
    };
    let oracle = per_channel(&a) == per_channel(&b);
    ensure(queue_equiv(&a, &b) == oracle, || format!("queue_equiv({a}, {b}) disagrees with the oracle ({oracle})"))
}

pub fn prop_players_global_oracle(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let g = &tp.typ.global;
    let depth = 2 * 6 + 2;
    let mut seen = BTreeSet::new();
    for tau in sessfes::events::fpaths(g, &tp.env, depth) {
        for c in tau {
            seen.insert(c.player().clone());
        }
    }
    let got = players_global(g, &tp.env);
    ensure(got == seen, || format!("{}: players {:?} but paths show {:?}", print_global(g), got, seen))
}

pub fn prop_unfold_idempotent(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (env, _) = gen_rec_process(&mut rng);
    let x = Process::reference("X");
    let once = unfold_process(&x, &env).map_err(|e| e.to_string())?;
    let twice = unfold_process(&once, &env).map_err(|e| e.to_string())?;
    ensure(once == twice, || format!("unfold not idempotent on {}", print_process(&once)))?;
    let tp = gen_typed_pair(seed);
    let g1 = unfold_global(&tp.typ.global, &tp.env).map_err(|e| e.to_string())?;
    let g2 = unfold_global(&g1, &tp.env).map_err(|e| e.to_string())?;
    ensure(g1 == g2, || format!("unfold not idempotent on {}", print_global(&g1)))
}

pub fn prop_print_parse_roundtrip(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (env, body) = gen_rec_process(&mut rng);
    for p in [body.clone(), gen_process(&mut rng, 4, false), Process::reference("X")] {
        let text = print_process(&p);
        let back = parse_process(&text, &env).map_err(|e| format!("{text}: {}", e.with_file("gen")))?;
        ensure(regular_equal_p(&p, &back, &env), || format!("round trip changed {text}"))?;
    }
    let tp = gen_typed_pair(seed);
    for g in [tp.typ.global.clone(), unfold_global(&tp.typ.global, &tp.env).map_err(|e| e.to_string())?] {
        let text = print_global(&g);
        let back = parse_global(&text, &tp.env).map_err(|e| format!("{text}: {}", e.with_file("gen")))?;
        ensure(regular_equal_g(&g, &back, &tp.env), || format!("round trip changed {text}"))?;
    }
    Ok(())
}

pub fn prop_duplicate_labels_rejected(seed: u64) -> Check {
    let mut rng = rng(seed);
    let l = pick(&mut rng, &LS);
    let (p, q) = random_channel(&mut rng);
    let env = DefEnv::new();
    let texts = [
        format!("{q}!{l}; 0 (+) {q}!{l}"),
        format!("{q}?{l} + {q}?{l}; {q}!a"),
    ];
    for t in &texts {
        ensure(parse_process(t, &env).is_err(), || format!("accepted {t}"))?;
    }
    let g = format!("{p}->{q}!{l}; {p}->{q}?{l} [+] {p}->{q}!{l}; {p}->{q}?{l}");
    ensure(parse_global(&g, &env).is_err(), || format!("accepted {g}"))
}

// ------------------------------------------------ semantics and typing

/// Theorems of Subject Reduction and Session Fidelity, checked on every
/// pair reachable within four steps.
pub fn prop_subject_reduction_fidelity(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    for (n, t, tr) in reachable_pairs(&tp, 4)? {
        let tc = typecheck(&n, &t, &tp.env);
        ensure(tc.typable, || format!("{}: not typable after {}: {:?}", tp.name, show(&tr), tc.diagnostics))?;
        for b in type_enabled(&t, &tp.env).map_err(|e| e.to_string())? {
            let n2 = net_step(&n, &b, &tp.env)
                .map_err(|e| format!("{}: after {} the type does {b} but the network cannot: {e}", tp.name, show(&tr)))?;
            let t2 = type_step(&t, &b, &tp.env).map_err(|e| e.to_string())?;
            ensure(typecheck(&n2, &t2, &tp.env).typable, || {
                format!("{}: fidelity step {b} after {} breaks typing", tp.name, show(&tr))
            })?;
        }
    }
    Ok(())
}

pub fn prop_well_formed_preserved(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    for (_, t, tr) in reachable_pairs(&tp, 4)? {
        let wf = well_formed(&t, &tp.env);
        ensure(wf.well_formed, || format!("{}: ill formed after {}: {:?}", tp.name, show(&tr), wf.diagnostics))?;
    }
    Ok(())
}

/// Balanced types only have paths that are well formed for their queue.
pub fn prop_balanced_paths_well_formed(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    ensure(balanced(&tp.typ, &tp.env).balanced, || format!("{}: not balanced", tp.name))?;
    let w = otr(&tp.typ.queue);
    for tau in sessfes::events::fpaths(&tp.typ.global, &tp.env, 8) {
        ensure(well_formed_trace(&tau, &w), || format!("{}: path {} is not well formed", tp.name, show(&tau)))?;
    }
    Ok(())
}

pub fn prop_projection_deterministic(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    for p in PS {
        let p = Participant::new(p);
        let a = project(&tp.typ.global, &p, &tp.env);
        let b = project(&tp.typ.global, &p, &tp.env);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let env = a.env.merged(&b.env).unwrap_or(a.env.clone());
                ensure(regular_equal_p(&a.process, &b.process, &env), || format!("{}: projections on {p} differ", tp.name))?;
            }
            (Err(_), Err(_)) => {}
            _ => return Err(format!("{}: projection on {p} is not a function", tp.name)),
        }
    }
    Ok(())
}

pub fn prop_step_laws(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    for (n, _, tr) in reachable_pairs(&tp, 4)? {
        for b in net_enabled(&n, &tp.env) {
            ensure(!b.is_self_comm() && b.player() == if b.is_output() { &b.sender } else { &b.receiver }, || {
                format!("{b} does not have a single player")
            })?;
            let x = net_step(&n, &b, &tp.env).map_err(|e| e.to_string())?;
            let y = net_step(&n, &b, &tp.env).map_err(|e| e.to_string())?;
            ensure(x.canonical(&tp.env) == y.canonical(&tp.env), || "net_step is not deterministic".into())?;
        }
        // FIFO: the queue after a run equals the initial queue with outputs
        // appended and inputs removed from the channel heads.
        let end = net_run(&tp.net, &tr, &tp.env).map_err(|e| e.to_string())?;
        let mut per: BTreeMap<(Participant, Participant), VecDeque<Label>> = BTreeMap::new();
        for m in tp.net.queue.iter() {
            per.entry((m.sender.clone(), m.receiver.clone())).or_default().push_back(m.label.clone());
        }
        for c in &tr {
            let ch = per.entry((c.sender.clone(), c.receiver.clone())).or_default();
            match c.dir {
                Dir::Out => ch.push_back(c.label.clone()),
                Dir::In => {
                    ensure(ch.pop_front().as_ref() == Some(&c.label), || format!("{c} read out of order after {}", show(&tr)))?;
                }
            }
        }
        let mut got: BTreeMap<(Participant, Participant), VecDeque<Label>> = BTreeMap::new();
        for m in end.queue.iter() {
            got.entry((m.sender.clone(), m.receiver.clone())).or_default().push_back(m.label.clone());
        }
        per.retain(|_, v| !v.is_empty());
        ensure(per == got, || format!("queue after {} is {} (FIFO oracle disagrees)", show(&tr), end.queue))?;
    }
    Ok(())
}

pub fn prop_proc_leq_preorder(seed: u64) -> Check {
    let mut rng = rng(seed);
    let env = DefEnv::new();
    let p = gen_process(&mut rng, 3, false);
    let vary = |rng: &mut StdRng, p: &Process| -> Process {
        fn go(rng: &mut StdRng, p: &Process) -> Process {
            match p.as_choice() {
                None => p.clone(),
                Some((dir, peer, bs)) => {
                    let mut nb: Vec<(Label, Process)> = bs.iter().map(|(l, k)| (l.clone(), go(rng, k))).collect();
                    if dir == Dir::In && rng.gen_bool(0.3) {
                        if nb.len() > 1 {
                            nb.pop();
                        } else if !nb.iter().any(|(l, _)| l.as_str() == "b") {
                            nb.push((Label::new("b"), Process::zero()));
                        }
                    }
                    Process::choice(dir, peer.clone(), nb).unwrap()
                }
            }
        }
        go(rng, p)
    };
    let q = vary(&mut rng, &p);
    let r = vary(&mut rng, &q);
    for x in [&p, &q, &r] {
        ensure(proc_leq(x, x, &env), || format!("≤ not reflexive on {}", print_process(x)))?;
    }
    for (a, b, c) in [(&p, &q, &r), (&r, &q, &p)] {
        if proc_leq(a, b, &env) && proc_leq(b, c, &env) {
            ensure(proc_leq(a, c, &env), || {
                format!("≤ not transitive: {} / {} / {}", print_process(a), print_process(b), print_process(c))
            })?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------ traces

pub fn prop_swap_preserves_wf(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (w, tau) = gen_wf_trace(&mut rng, 2, 6);
    for i in 1..tau.len() {
        if let Some(t) = swap_step(&tau, i, &w).map_err(|e| e.to_string())? {
            ensure(well_formed_trace(&t, &w), || format!("swap {i} of {} in {} is ill formed", show(&tau), show(&w)))?;
        }
    }
    Ok(())
}

/// Pointed traces of random well-formed traces: their `≈_ω` class keeps
/// pointedness and the last communication.
pub fn prop_equiv_preserves_pointed_last(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (w, tau) = gen_wf_trace(&mut rng, 2, 6);
    let pt = filter_trace(&tau, &w);
    for m in equiv_class(&pt, &w, 10_000).map_err(|e| e.to_string())? {
        ensure(pointed(&m, &w), || format!("{} ≈ {} is not pointed", show(&m), show(&pt)))?;
        ensure(m.last() == pt.last(), || format!("{} ≈ {} changes last", show(&m), show(&pt)))?;
    }
    Ok(())
}

pub fn prop_prefix_well_formed(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (w, tau) = gen_wf_trace(&mut rng, 2, 6);
    ensure(well_formed_trace(&tau, &w), || format!("generator produced ill formed {}", show(&tau)))?;
    for i in 0..=tau.len() {
        ensure(well_formed_trace(&tau[..i], &w), || format!("prefix {i} of {} is ill formed", show(&tau)))?;
    }
    Ok(())
}

pub fn prop_filter_keeps_last(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (w, tau) = gen_wf_trace(&mut rng, 2, 6);
    let f = filter_trace(&tau, &w);
    ensure(!f.is_empty() && f.last() == tau.last(), || format!("filter of {} is {}", show(&tau), show(&f)))?;
    ensure(pointed(&f, &w), || format!("filter of {} is not pointed", show(&tau)))
}

pub fn prop_suffix_pointed(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (w, tau) = gen_wf_trace(&mut rng, 2, 6);
    let pt = filter_trace(&tau, &w);
    for i in 0..pt.len() {
        let mut pre = w.clone();
        pre.extend_from_slice(&pt[..i]);
        ensure(pointed(&pt[i..], &pre), || format!("suffix {i} of {} is not pointed", show(&pt)))?;
    }
    Ok(())
}

/// `≈_ω` against the linearisations of the order generated by player order
/// and output-before-matching-input.
pub fn prop_trace_equiv_oracle(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (w, tau) = gen_wf_trace(&mut rng, 2, 6);
    let n = tau.len();
    // The input at position j reads the output at position matched[j]
    // (positions into τ; outputs of ω are not in τ).
    let mut chans: BTreeMap<(Participant, Participant), VecDeque<Option<usize>>> = BTreeMap::new();
    for c in &w {
        chans.entry((c.sender.clone(), c.receiver.clone())).or_default().push_back(None);
    }
    let mut before: Vec<(usize, usize)> = Vec::new();
    for (j, c) in tau.iter().enumerate() {
        let ch = chans.entry((c.sender.clone(), c.receiver.clone())).or_default();
        match c.dir {
            Dir::Out => ch.push_back(Some(j)),
            Dir::In => {
                if let Some(Some(i)) = ch.pop_front() {
                    before.push((i, j));
                }
            }
        }
        for i in 0..j {
            if tau[i].player() == c.player() {
                before.push((i, j));
            }
        }
    }
    let mut oracle: BTreeSet<Trace> = BTreeSet::new();
    let mut perm: Vec<usize> = Vec::new();
    fn lin(n: usize, before: &[(usize, usize)], perm: &mut Vec<usize>, tau: &[Comm], out: &mut BTreeSet<Trace>) {
        if perm.len() == n {
            out.insert(perm.iter().map(|&i| tau[i].clone()).collect());
            return;
        }
        for e in 0..n {
            if perm.contains(&e) || before.iter().any(|&(a, b)| b == e && !perm.contains(&a)) {
                continue;
            }
            perm.push(e);
            lin(n, before, perm, tau, out);
            perm.pop();
        }
    }
    lin(n, &before, &mut perm, &tau, &mut oracle);
    let class = equiv_class(&tau, &w, 100_000).map_err(|e| e.to_string())?;
    ensure(class == oracle, || {
        format!("class of {} in {}: {} members, oracle {}", show(&tau), show(&w), class.len(), oracle.len())
    })?;
    let other = oracle.iter().last().unwrap();
    ensure(trace_equiv(&tau, other, &w).map_err(|e| e.to_string())?, || "trace_equiv misses a member".into())?;
    ensure(canonical_trace(other, &w).map_err(|e| e.to_string())? == *oracle.iter().next().unwrap(), || {
        "canonical form is not the least member".into()
    })
}

// ------------------------------------------------------------ events

/// Residual and retrieval of n-events are inverse, and preserve flow and
/// conflict (queues mapped by `▶` and `▷`).
pub fn prop_nevent_operators(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let (es, _) = fes_of(&tp, 6)?;
    let w = es.otrace.clone();
    let mut rng = rng(seed ^ 0x9e37);
    let mut betas = net_enabled(&tp.net, &tp.env);
    betas.push(gen_comm(&mut rng));
    for b in &betas {
        for r in &es.events {
            if let Some(post) = nevent_residual(r, b) {
                ensure(nevent_retrieval(&post, b) == *r, || format!("pre(post({r}, {b})) ≠ {r}"))?;
            }
            let pre = nevent_retrieval(r, b);
            ensure(nevent_residual(&pre, b).as_ref() == Some(r), || format!("post(pre({r}, {b})) ≠ {r}"))?;
        }
        let fwd = queue_map_fwd(b, &w);
        let bwd = queue_map_bwd(b, &w);
        for r1 in &es.events {
            for r2 in &es.events {
                let flow = nevent_flow(r1, r2, &w).map_err(|e| e.to_string())?;
                let conf = nevent_conflict(r1, r2);
                let (p1, p2) = (nevent_residual(r1, b), nevent_residual(r2, b));
                if let (Some(p1), Some(p2)) = (&p1, &p2) {
                    if let (true, Some(w2)) = (flow, &fwd) {
                        ensure(nevent_flow(p1, p2, w2).map_err(|e| e.to_string())?, || {
                            format!("{r1} ≺ {r2} lost by residual after {b}")
                        })?;
                    }
                    if conf {
                        ensure(nevent_conflict(p1, p2), || format!("{r1} # {r2} lost by residual after {b}"))?;
                    }
                }
                let (q1, q2) = (nevent_retrieval(r1, b), nevent_retrieval(r2, b));
                if let (true, Some(w0)) = (flow, &bwd) {
                    ensure(nevent_flow(&q1, &q2, w0).map_err(|e| e.to_string())?, || {
                        format!("{r1} ≺ {r2} lost by retrieval before {b}")
                    })?;
                }
                if conf {
                    ensure(nevent_conflict(&q1, &q2), || format!("{r1} # {r2} lost by retrieval before {b}"))?;
                }
            }
        }
    }
    Ok(())
}

fn random_tevent(rng: &mut StdRng) -> Result<TEvent, String> {
    let (w, tau) = gen_wf_trace(rng, 2, 5);
    ev(&w, &tau).map_err(|e| e.to_string())
}

/// `β ∘ (δ • β) = δ` and `(β ∘ δ) • β = δ` whenever defined.
pub fn prop_tevent_inverses(seed: u64) -> Check {
    let mut rng = rng(seed);
    let d = random_tevent(&mut rng)?;
    let mut betas: Vec<Comm> = (0..4).map(|_| gen_comm(&mut rng)).collect();
    betas.push(d.trace[0].clone());
    for b in &betas {
        if let Some(post) = tevent_residual(&d, b).map_err(|e| e.to_string())? {
            let back = tevent_retrieval(b, &post).map_err(|e| e.to_string())?;
            ensure(back.as_ref() == Some(&d), || format!("{b} ∘ ({d} • {b}) = {back:?}"))?;
        }
        if let Some(pre) = tevent_retrieval(b, &d).map_err(|e| e.to_string())? {
            let back = tevent_residual(&pre, b).map_err(|e| e.to_string())?;
            ensure(back.as_ref() == Some(&d), || format!("({b} ∘ {d}) • {b} = {back:?}"))?;
        }
    }
    Ok(())
}

/// Commutation of the t-event operators for player-disjoint communications.
pub fn prop_tevent_commutation(seed: u64) -> Check {
    let mut rng = rng(seed);
    let d = random_tevent(&mut rng)?;
    let mut betas: Vec<Comm> = (0..5).map(|_| gen_comm(&mut rng)).collect();
    betas.push(d.trace[0].clone());
    let err = |e: sessfes::events::EventError| e.to_string();
    for b1 in &betas {
        for b2 in &betas {
            if b1.player() == b2.player() {
                continue;
            }
            let pre1 = tevent_retrieval(b1, &d).map_err(err)?;
            let post2 = tevent_residual(&d, b2).map_err(err)?;
            if let (Some(pre1), Some(post2)) = (&pre1, &post2) {
                if let Some(rhs) = tevent_residual(pre1, b2).map_err(err)? {
                    let lhs = tevent_retrieval(b1, post2).map_err(err)?;
                    ensure(lhs.as_ref() == Some(&rhs), || {
                        format!("{b1} ∘ ({d} • {b2}) = {lhs:?} but ({b1} ∘ {d}) • {b2} = {rhs}")
                    })?;
                }
            }
            let pre2 = tevent_retrieval(b2, &d).map_err(err)?;
            if let (Some(pre1), Some(pre2)) = (&pre1, &pre2) {
                let l = tevent_retrieval(b1, pre2).map_err(err)?;
                let r = tevent_retrieval(b2, pre1).map_err(err)?;
                ensure(l.is_some() && l == r, || format!("{b1} ∘ ({b2} ∘ {d}) = {l:?} vs {b2} ∘ ({b1} ∘ {d}) = {r:?}"))?;
            }
        }
    }
    Ok(())
}

/// Causality and conflict between t-events of a type survive the
/// operators where defined.
pub fn prop_tevent_relations(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let (es, _) = pes_of(&tp, 5)?;
    let mut rng = rng(seed ^ 0x51);
    let mut betas = type_enabled(&tp.typ, &tp.env).map_err(|e| e.to_string())?;
    betas.push(gen_comm(&mut rng));
    let err = |e: sessfes::events::EventError| e.to_string();
    let terr = |e: sessfes::traces::TraceError| e.to_string();
    for b in &betas {
        let post: Vec<Option<TEvent>> = es.events.iter().map(|d| tevent_residual(d, b)).collect::<Result<_, _>>().map_err(err)?;
        let pre: Vec<Option<TEvent>> = es.events.iter().map(|d| tevent_retrieval(b, d)).collect::<Result<_, _>>().map_err(err)?;
        for i in 0..es.len() {
            for j in 0..es.len() {
                let (d1, d2) = (&es.events[i], &es.events[j]);
                if es.prec(i, j) {
                    if let (Some(a), Some(c)) = (&post[i], &post[j]) {
                        ensure(a != c && tevent_leq(a, c).map_err(terr)?, || format!("{d1} < {d2} lost by • {b}"))?;
                    }
                    if let Some(a) = &pre[i] {
                        let c = pre[j].as_ref().ok_or_else(|| format!("{b} ∘ {d1} defined but not {b} ∘ {d2}"))?;
                        ensure(a != c && tevent_leq(a, c).map_err(terr)?, || format!("{d1} < {d2} lost by {b} ∘"))?;
                    }
                }
                if es.conflicting(i, j) {
                    if let (Some(a), Some(c)) = (&pre[i], &pre[j]) {
                        ensure(tevent_conflict(a, c), || format!("{d1} # {d2} lost by {b} ∘"))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// `ev(ω, β·τ) • β = ev(β▶ω, τ)` and `β ∘ ev(ω, τ) = ev(β▷ω, β·τ)`.
pub fn prop_ev_coherence(seed: u64) -> Check {
    let mut rng = rng(seed);
    let err = |e: sessfes::events::EventError| e.to_string();
    let (w, bt) = gen_wf_trace(&mut rng, 2, 6);
    if bt.len() >= 2 {
        let (b, tau) = (&bt[0], &bt[1..]);
        let w2 = queue_map_fwd(b, &w).ok_or_else(|| format!("{b} ▶ {} undefined", show(&w)))?;
        let lhs = tevent_residual(&ev(&w, &bt).map_err(err)?, b).map_err(err)?;
        let rhs = ev(&w2, tau).map_err(err)?;
        ensure(lhs.as_ref() == Some(&rhs), || format!("ev({}, {}) • {b} = {lhs:?}, expected {rhs}", show(&w), show(&bt)))?;
    }
    let (w, tau) = gen_wf_trace(&mut rng, 2, 5);
    let d = ev(&w, &tau).map_err(err)?;
    let mut betas: Vec<Comm> = (0..4).map(|_| gen_comm(&mut rng)).collect();
    betas.extend(w.last().cloned());
    betas.extend(w.first().map(|c| c.dual()));
    for b in &betas {
        if let Some(w0) = queue_map_bwd(b, &w) {
            let mut bt = vec![b.clone()];
            bt.extend_from_slice(&tau);
            let lhs = tevent_retrieval(b, &d).map_err(err)?;
            let rhs = ev(&w0, &bt).map_err(err)?;
            ensure(lhs.as_ref() == Some(&rhs), || format!("{b} ∘ {d} = {lhs:?}, expected {rhs}"))?;
        }
    }
    Ok(())
}

/// Every input event of a network FES is queue-justified or has an output
/// cause, and two output causes of the same input conflict.
pub fn prop_narrowed_justification(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let (es, _) = fes_of(&tp, 6)?;
    let w = &es.otrace;
    for (j, r) in es.events.iter().enumerate() {
        if !r.is_input() {
            continue;
        }
        let causes: Vec<usize> = (0..es.len()).filter(|&i| es.prec(i, j) && !es.events[i].is_input() && es.events[i].loc != r.loc).collect();
        let qj = queue_justified(r, w).map_err(|e| e.to_string())?;
        ensure(qj || !causes.is_empty(), || format!("{}: input {r} is not justified", tp.name))?;
        for &a in &causes {
            for &b in &causes {
                if a != b {
                    ensure(es.conflicting(a, b), || {
                        format!("{}: justifiers {} and {} of {r} do not conflict", tp.name, es.events[a], es.events[b])
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Projections of network events are downward closed, and projecting a
/// configuration gives a configuration of the participant's process.
pub fn prop_projection_configurations(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let (es, k) = fes_of(&tp, 6)?;
    let ev_set: BTreeSet<&NEvent> = es.events.iter().collect();
    for r in &es.events {
        for i in 1..r.ev.len() {
            let shorter = NEvent { loc: r.loc.clone(), ev: PEvent(r.ev.0[..i].to_vec()) };
            ensure(ev_set.contains(&shorter), || format!("{}: {r} present but not {shorter}", tp.name))?;
        }
    }
    let dom = enumerate_configurations(&es, k);
    for p in tp.net.procs.keys() {
        let pes = pes_of_process(&tp.net.process_of(p), &tp.env, k);
        for x in &dom.configurations {
            let proj: Configuration = x
                .iter()
                .filter_map(|&i| proj_nevent(&es.events[i], p))
                .map(|pe| pes.index_of(&pe).ok_or_else(|| format!("{}: {pe} is not an event of {p}", tp.name)))
                .collect::<Result<_, _>>()?;
            ensure(is_configuration(&pes, &proj), || format!("{}: projection on {p} of {x:?} is not a configuration", tp.name))?;
        }
    }
    Ok(())
}

pub fn prop_es_laws(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let (fes, _) = fes_of(&tp, 6)?;
    fes.check_laws().map_err(|e| format!("{}: FES: {e}", tp.name))?;
    let (pes, _) = pes_of(&tp, 5)?;
    pes.check_laws().map_err(|e| format!("{}: type PES: {e}", tp.name))?;
    for (p, proc_) in &tp.net.procs {
        pes_of_process(proc_, &tp.env, 6).check_laws().map_err(|e| format!("{}: PES of {p}: {e}", tp.name))?;
    }
    Ok(())
}

// ------------------------------------------------------------ domains

/// Proving sequences by the definition: conflict-free prefixes, and every
/// missing flow predecessor of an event is in conflict with an earlier one
/// that flows to it.
fn proving_by_definition<E>(es: &EventStructure<E>, seq: &[usize]) -> bool {
    let prec = |a: usize, b: usize| es.causes.contains(&(a, b));
    for (k, &e) in seq.iter().enumerate() {
        let before = &seq[..k];
        if before.contains(&e) || before.iter().any(|&c| es.conflict.contains(&(c, e))) {
            return false;
        }
        for a in 0..es.events.len() {
            if prec(a, e) && !before.contains(&a) {
                let ok = es.kind == EsKind::Flow && before.iter().any(|&c| es.conflict.contains(&(a, c)) && prec(c, e));
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}

fn some_proving_enumeration<E>(es: &EventStructure<E>, x: &[usize], seq: &mut Vec<usize>) -> bool {
    if seq.len() == x.len() {
        return true;
    }
    for &e in x {
        if seq.contains(&e) {
            continue;
        }
        seq.push(e);
        if proving_by_definition(es, seq) && some_proving_enumeration(es, x, seq) {
            return true;
        }
        seq.pop();
    }
    false
}

/// Configurations are exactly the sets with a proving enumeration, on every
/// subset of a random structure with at most eight events.
pub fn prop_configurations_vs_proving(seed: u64) -> Check {
    let mut rng = rng(seed);
    for kind in [EsKind::Prime, EsKind::Flow] {
        let es = gen_abstract_es(&mut rng, kind);
        let n = es.len();
        for mask in 0u32..(1 << n) {
            let x: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let set: Configuration = x.iter().copied().collect();
            let brute = some_proving_enumeration(&es, &x, &mut Vec::new());
            ensure(is_configuration(&es, &set) == brute, || {
                format!("{kind:?} ES {:?} / # {:?}: {x:?} configuration={} brute={brute}", es.causes, es.conflict_pairs(), !brute)
            })?;
        }
        let dom = enumerate_configurations(&es, n);
        for x in &dom.configurations {
            ensure(is_configuration(&es, x), || format!("enumerated {x:?} is not a configuration"))?;
        }
        let count = (0u32..(1 << n))
            .filter(|m| is_configuration(&es, &(0..n).filter(|i| m & (1 << i) != 0).collect()))
            .count();
        ensure(dom.len() == count, || format!("{} configurations enumerated, {count} exist", dom.len()))?;
    }
    Ok(())
}

fn check_separation<E: PartialEq>(es: &EventStructure<E>, confs: &[Configuration], what: &str) -> Check {
    for x in confs {
        for y in confs {
            if x.len() < y.len() && x.is_subset(y) {
                let ok = y.difference(x).any(|&e| {
                    let mut z = x.clone();
                    z.insert(e);
                    is_configuration(es, &z)
                });
                ensure(ok, || format!("{what}: no single-step extension of {x:?} inside {y:?}"))?;
            }
        }
    }
    Ok(())
}

pub fn prop_separation(seed: u64) -> Check {
    let tp = gen_typed_pair(seed);
    let (fes, k) = fes_of(&tp, 5)?;
    check_separation(&fes, &enumerate_configurations(&fes, k).configurations, &tp.name)?;
    let (pes, k) = pes_of(&tp, 5)?;
    check_separation(&pes, &enumerate_configurations(&pes, k).configurations, &tp.name)?;
    let mut rng = rng(seed);
    let es = gen_abstract_es(&mut rng, EsKind::Prime);
    check_separation(&es, &enumerate_configurations(&es, 8).configurations, "random PES")
}

/// Proving sequences of length ≤ `k`, depth first, at most `cap` of them.
fn proving_sequences<E: PartialEq>(es: &EventStructure<E>, k: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut todo = vec![(Vec::<usize>::new(), Configuration::new())];
    while let Some((seq, x)) = todo.pop() {
        if out.len() >= cap {
            break;
        }
        if !seq.is_empty() {
            out.push(seq.clone());
        }
        if seq.len() >= k {
            continue;
        }
        for e in 0..es.len() {
            if sessfes::domains::can_extend(es, &x, e) {
                let mut s = seq.clone();
                s.push(e);
                let mut y = x.clone();
                y.insert(e);
                todo.push((s, y));
            }
        }
    }
    out
}

/// `nec`/`tec` of LTS traces are proving sequences, and proving sequences
/// read back as LTS traces.
pub fn check_traces_vs_proving(tp: &TypedPair, cap: usize) -> Check {
    let (fes, kn) = fes_of(tp, cap)?;
    for tau in net_traces(&tp.net, kn, &tp.env) {
        let seq: Vec<usize> = nec(&tau)
            .iter()
            .map(|r| fes.index_of(r).ok_or_else(|| format!("{}: {r} from {} not in the FES", tp.name, show(&tau))))
            .collect::<Result<_, _>>()?;
        ensure(is_proving_sequence(&fes, &seq), || format!("{}: nec({}) is not a proving sequence", tp.name, show(&tau)))?;
    }
    for seq in proving_sequences(&fes, kn, 3000) {
        let tau: Trace = seq.iter().map(|&i| sessfes::events::nevent_io(&fes.events[i])).collect();
        net_run(&tp.net, &tau, &tp.env).map_err(|e| format!("{}: proving sequence gives {} which the network cannot run: {e}", tp.name, show(&tau)))?;
    }
    let (pes, kt) = pes_of(tp, cap)?;
    let w = pes.otrace.clone();
    for tau in type_traces(&tp.typ, kt, &tp.env).map_err(|e| e.to_string())? {
        let seq: Vec<usize> = tec(&w, &tau)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|d| pes.index_of(d).ok_or_else(|| format!("{}: {d} from {} not in the PES", tp.name, show(&tau))))
            .collect::<Result<_, _>>()?;
        ensure(is_proving_sequence(&pes, &seq), || format!("{}: tec({}) is not a proving sequence", tp.name, show(&tau)))?;
    }
    for seq in proving_sequences(&pes, kt, 3000) {
        let tau: Trace = seq.iter().map(|&i| pes.events[i].io().clone()).collect();
        sessfes::semantics::type_run(&tp.typ, &tau, &tp.env)
            .map_err(|e| format!("{}: proving sequence gives {} which the type cannot run: {e}", tp.name, show(&tau)))?;
    }
    Ok(())
}

pub fn prop_traces_vs_proving(seed: u64) -> Check {
    check_traces_vs_proving(&gen_typed_pair(seed), 5)
}

// ------------------------------------------------------------ corpus

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn load(file: &str) -> SessionFile {
    let path = corpus_dir().join(file);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_session(&text).unwrap_or_else(|e| panic!("{}", e.with_file(file)))
}

/// Every (network, type) combination of every corpus file that typechecks.
pub fn corpus_typed_pairs() -> Vec<TypedPair> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".sess"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let sf = load(&f);
        for (nn, n) in &sf.networks {
            for (tn, t) in &sf.types {
                if typecheck(n, t, &sf.defs).typable {
                    out.push(TypedPair { name: format!("{f}:{nn}/{tn}"), net: n.clone(), typ: t.clone(), env: sf.defs.clone() });
                }
            }
        }
    }
    out
}

/// Run a property on seeds `0..n`, returning the failures.
pub fn run_seeds(n: u64, prop: fn(u64) -> Check) -> Vec<(u64, String)> {
    (0..n).filter_map(|s| prop(s).err().map(|e| (s, e))).collect()
}
