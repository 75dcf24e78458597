//! Labelled transition systems for networks and asynchronous types, trace
//! execution and bounded exploration.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{
    reachable_globals, AsyncType, Comm, DefEnv, Dir, Global, GlobalTerm, Network, Process, Queue,
};

/// A finite trace `τ`.
pub type Trace = Vec<Comm>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemError {
    #[error("communication {comm} (position {index}) is not enabled")]
    NotEnabled { index: usize, comm: Comm },
    #[error("the queue effect of {comm} differs between branches of the choice {node}")]
    BranchQueueMismatch { comm: Comm, node: String },
}

fn sort_comms(mut v: Vec<Comm>) -> Vec<Comm> {
    v.sort_by_key(|c| c.exploration_key());
    v.dedup();
    v
}

/// Communications enabled in a network (Rules Send and Rcv), in exploration
/// order `(player, kind, peer, label)`.
pub fn net_enabled(n: &Network, env: &DefEnv) -> Vec<Comm> {
    let mut out = Vec::new();
    for (p, proc_) in &n.procs {
        let t = env.whnf_p(proc_);
        let Some((dir, q, bs)) = t.as_choice() else { continue };
        match dir {
            Dir::Out => {
                for (l, _) in bs {
                    out.push(Comm::new(Dir::Out, p.clone(), q.clone(), l.clone()));
                }
            }
            Dir::In => {
                if let Some((_, m)) = n.queue.first_on(q, p) {
                    if bs.iter().any(|(l, _)| l == &m.label) {
                        out.push(Comm::new(Dir::In, q.clone(), p.clone(), m.label.clone()));
                    }
                }
            }
        }
    }
    sort_comms(out)
}

/// One network transition.
pub fn net_step(n: &Network, beta: &Comm, env: &DefEnv) -> Result<Network, SemError> {
    let not_enabled = || SemError::NotEnabled { index: 1, comm: beta.clone() };
    let player = beta.player();
    let t = env.whnf_p(&n.process_of(player));
    let Some((dir, peer, bs)) = t.as_choice() else { return Err(not_enabled()) };
    if dir != beta.dir {
        return Err(not_enabled());
    }
    let expected_peer = match beta.dir {
        Dir::Out => &beta.receiver,
        Dir::In => &beta.sender,
    };
    if peer != expected_peer {
        return Err(not_enabled());
    }
    let cont = bs.iter().find(|(l, _)| l == &beta.label).map(|b| b.1.clone()).ok_or_else(not_enabled)?;
    let queue = match beta.dir {
        Dir::Out => n.queue.pushed(beta.message()),
        Dir::In => n.queue.pop_front_msg(&beta.sender, &beta.label, &beta.receiver).ok_or_else(not_enabled)?,
    };
    let mut procs = n.procs.clone();
    procs.insert(player.clone(), cont);
    Ok(Network { procs, queue })
}

/// Run a trace; fails at the first disabled communication (1-based index).
pub fn net_run(n: &Network, tau: &[Comm], env: &DefEnv) -> Result<Network, SemError> {
    let mut cur = n.clone();
    for (i, b) in tau.iter().enumerate() {
        cur = net_step(&cur, b, env).map_err(|e| match e {
            SemError::NotEnabled { comm, .. } => SemError::NotEnabled { index: i + 1, comm },
            other => other,
        })?;
    }
    Ok(cur)
}

enum Step {
    Enabled(Global, Queue),
    Disabled,
}

struct TypeStepper<'a> {
    env: &'a DefEnv,
    beta: &'a Comm,
    guard: usize,
    visiting: HashSet<(Global, Queue)>,
    memo: HashMap<(Global, Queue), Option<(Global, Queue)>>,
}

impl TypeStepper<'_> {
    fn step(&mut self, g: &Global, m: &Queue, depth: usize) -> Result<Step, SemError> {
        let g = self.env.whnf_g(g);
        let key = (g.clone(), m.canonical());
        if let Some(r) = self.memo.get(&key) {
            return Ok(match r {
                Some((g, q)) => Step::Enabled(g.clone(), q.clone()),
                None => Step::Disabled,
            });
        }
        if depth > self.guard || self.visiting.contains(&key) {
            return Ok(Step::Disabled);
        }
        self.visiting.insert(key.clone());
        let r = self.step_node(&g, m, depth);
        self.visiting.remove(&key);
        let r = r?;
        self.memo.insert(
            key,
            match &r {
                Step::Enabled(g, q) => Some((g.clone(), q.clone())),
                Step::Disabled => None,
            },
        );
        Ok(r)
    }

    fn step_node(&mut self, g: &Global, m: &Queue, depth: usize) -> Result<Step, SemError> {
        let beta = self.beta;
        match &**g {
            GlobalTerm::End | GlobalTerm::Ref(_) => Ok(Step::Disabled),
            GlobalTerm::Out { sender: p, receiver: q, branches } => {
                if beta.dir == Dir::Out && &beta.sender == p && &beta.receiver == q {
                    // Ext-Out
                    return Ok(match branches.iter().find(|(l, _)| l == &beta.label) {
                        Some((_, gk)) => Step::Enabled(gk.clone(), m.pushed(beta.message())),
                        None => Step::Disabled,
                    });
                }
                if beta.player() == p {
                    return Ok(Step::Disabled);
                }
                // IComm-Out: β must not consume the message just added.
                let after = match beta.dir {
                    Dir::Out => m.pushed(beta.message()),
                    Dir::In => match m.pop_front_msg(&beta.sender, &beta.label, &beta.receiver) {
                        Some(q) => q,
                        None => return Ok(Step::Disabled),
                    },
                };
                let mut new_branches = Vec::with_capacity(branches.len());
                for (l, gi) in branches {
                    let msg = crate::kernel::Message::new(p.clone(), l.clone(), q.clone());
                    match self.step(gi, &m.pushed(msg.clone()), depth + 1)? {
                        Step::Disabled => return Ok(Step::Disabled),
                        Step::Enabled(gi2, qi) => {
                            if !qi.equiv(&after.pushed(msg)) {
                                return Err(SemError::BranchQueueMismatch {
                                    comm: beta.clone(),
                                    node: crate::textfmt::print_global(g),
                                });
                            }
                            new_branches.push((l.clone(), gi2));
                        }
                    }
                }
                Ok(Step::Enabled(Global::out(p.clone(), q.clone(), new_branches).expect("same labels"), after))
            }
            GlobalTerm::In { sender: p, receiver: q, label, cont } => {
                let Some(rest) = m.pop_front_msg(p, label, q) else {
                    return Ok(Step::Disabled);
                };
                if beta.dir == Dir::In && &beta.sender == p && &beta.receiver == q && &beta.label == label {
                    // Ext-In
                    return Ok(Step::Enabled(cont.clone(), rest));
                }
                if beta.player() == q {
                    return Ok(Step::Disabled);
                }
                // IComm-In
                match self.step(cont, &rest, depth + 1)? {
                    Step::Disabled => Ok(Step::Disabled),
                    Step::Enabled(g2, m2) => Ok(Step::Enabled(
                        Global::inp(p.clone(), q.clone(), label.clone(), g2),
                        m2.prepended(crate::kernel::Message::new(p.clone(), label.clone(), q.clone())),
                    )),
                }
            }
        }
    }
}

fn type_try_step(t: &AsyncType, beta: &Comm, env: &DefEnv) -> Result<Option<AsyncType>, SemError> {
    let guard = 2 * reachable_globals(&t.global, env).len() + 2;
    let mut st = TypeStepper { env, beta, guard, visiting: HashSet::new(), memo: HashMap::new() };
    Ok(match st.step(&t.global, &t.queue, 0)? {
        Step::Enabled(g, q) => Some(AsyncType::new(g, q)),
        Step::Disabled => None,
    })
}

/// Communications enabled in an asynchronous type (Rules Ext-Out, Ext-In,
/// IComm-Out, IComm-In), in exploration order.
pub fn type_enabled(t: &AsyncType, env: &DefEnv) -> Result<Vec<Comm>, SemError> {
    let candidates: BTreeSet<Comm> =
        reachable_globals(&t.global, env).iter().flat_map(|n| n.edges()).map(|e| e.0).collect();
    let mut out = Vec::new();
    for c in candidates {
        if type_try_step(t, &c, env)?.is_some() {
            out.push(c);
        }
    }
    Ok(sort_comms(out))
}

/// One transition of an asynchronous type.
pub fn type_step(t: &AsyncType, beta: &Comm, env: &DefEnv) -> Result<AsyncType, SemError> {
    type_try_step(t, beta, env)?.ok_or_else(|| SemError::NotEnabled { index: 1, comm: beta.clone() })
}

pub fn type_run(t: &AsyncType, tau: &[Comm], env: &DefEnv) -> Result<AsyncType, SemError> {
    let mut cur = t.clone();
    for (i, b) in tau.iter().enumerate() {
        cur = type_step(&cur, b, env).map_err(|e| match e {
            SemError::NotEnabled { comm, .. } => SemError::NotEnabled { index: i + 1, comm },
            other => other,
        })?;
    }
    Ok(cur)
}

/// Result of a bounded lock-step comparison of the two LTSs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BisimReport {
    pub ok: bool,
    /// Trace leading to the first state where the enabled sets differ.
    pub counterexample: Option<Trace>,
    pub network_only: Vec<Comm>,
    pub type_only: Vec<Comm>,
    pub states: usize,
}

/// Explore both LTSs in lock step for traces of length ≤ `k` and check that
/// they enable the same communications at every visited state.
pub fn bisimilar_to_depth(
    n: &Network,
    t: &AsyncType,
    k: usize,
    env: &DefEnv,
) -> Result<BisimReport, SemError> {
    let mut seen: HashSet<(Network, AsyncType)> = HashSet::new();
    let mut todo = VecDeque::from([(n.clone(), t.clone(), Vec::<Comm>::new())]);
    while let Some((n, t, tr)) = todo.pop_front() {
        if !seen.insert((n.canonical(env), t.canonical(env))) {
            continue;
        }
        let en = net_enabled(&n, env);
        let et = type_enabled(&t, env)?;
        if en != et {
            let network_only = en.iter().filter(|c| !et.contains(c)).cloned().collect();
            let type_only = et.iter().filter(|c| !en.contains(c)).cloned().collect();
            return Ok(BisimReport {
                ok: false,
                counterexample: Some(tr),
                network_only,
                type_only,
                states: seen.len(),
            });
        }
        if tr.len() >= k {
            continue;
        }
        for b in en {
            let n2 = net_step(&n, &b, env)?;
            let t2 = type_step(&t, &b, env)?;
            let mut tr2 = tr.clone();
            tr2.push(b);
            todo.push_back((n2, t2, tr2));
        }
    }
    Ok(BisimReport { ok: true, counterexample: None, network_only: vec![], type_only: vec![], states: seen.len() })
}

/// All network traces of length ≤ `k` (including ε), in exploration order.
pub fn net_traces(n: &Network, k: usize, env: &DefEnv) -> Vec<Trace> {
    let mut out = Vec::new();
    let mut todo = vec![(n.clone(), Vec::new())];
    while let Some((n, tr)) = todo.pop() {
        if tr.len() < k {
            for b in net_enabled(&n, env).into_iter().rev() {
                let n2 = net_step(&n, &b, env).expect("enabled");
                let mut tr2: Trace = tr.clone();
                tr2.push(b);
                todo.push((n2, tr2));
            }
        }
        out.push(tr);
    }
    out
}

/// All traces of an asynchronous type of length ≤ `k` (including ε).
pub fn type_traces(t: &AsyncType, k: usize, env: &DefEnv) -> Result<Vec<Trace>, SemError> {
    let mut out = Vec::new();
    let mut todo = vec![(t.clone(), Vec::new())];
    while let Some((t, tr)) = todo.pop() {
        if tr.len() < k {
            for b in type_enabled(&t, env)?.into_iter().rev() {
                let t2 = type_step(&t, &b, env)?;
                let mut tr2: Trace = tr.clone();
                tr2.push(b);
                todo.push((t2, tr2));
            }
        }
        out.push(tr);
    }
    Ok(out)
}

/// Whether every participant of the network is `0` and the queue is empty.
pub fn net_terminated(n: &Network, env: &DefEnv) -> bool {
    n.queue.is_empty() && n.procs.values().all(|p: &Process| env.whnf_p(p).is_inaction())
}
