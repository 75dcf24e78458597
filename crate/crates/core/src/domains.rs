//! Configurations, proving sequences, configuration domains, and a bounded
//! check that a typed network and its type have isomorphic domains.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::events::{
    fes_of_network, fpaths, nec, nevent_io, pes_of_process, pes_of_tevents, pes_of_type, tec, EsKind, EventError,
    EventStructure, TEvent,
};
use crate::kernel::{AsyncType, DefEnv, Global, Network, Process};
use crate::semantics::{net_traces, type_traces, Trace};
use crate::traces::{otr, otrace_canonical, TraceError};
use crate::typing::{typecheck, Diagnostic};

pub type Configuration = BTreeSet<usize>;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("the network is not typed by the asynchronous type")]
    Untyped(Vec<Diagnostic>),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Semantics(String),
}

/// Whether `X` is a configuration of `es` (downward closed, up to
/// conflicts for flow structures, and conflict-free).
pub fn is_configuration<E: PartialEq>(es: &EventStructure<E>, x: &Configuration) -> bool {
    if x.iter().any(|&i| i >= es.len()) {
        return false;
    }
    for &i in x {
        for &j in x {
            if es.conflicting(i, j) {
                return false;
            }
        }
    }
    match es.kind {
        EsKind::Prime => es.causes.iter().all(|&(a, b)| !x.contains(&b) || x.contains(&a)),
        EsKind::Flow => {
            let closed = es.causes.iter().all(|&(a, b)| {
                !x.contains(&b) || x.contains(&a) || x.iter().any(|&c| es.conflicting(a, c) && es.prec(c, b))
            });
            closed && acyclic_within(es, x)
        }
    }
}

fn acyclic_within<E>(es: &EventStructure<E>, x: &Configuration) -> bool {
    // Kahn's algorithm on the flow restricted to X.
    let mut indeg: BTreeMap<usize, usize> = x.iter().map(|&i| (i, 0)).collect();
    for &(a, b) in &es.causes {
        if x.contains(&a) && x.contains(&b) {
            *indeg.get_mut(&b).unwrap() += 1;
        }
    }
    let mut ready: Vec<usize> = indeg.iter().filter(|(_, d)| **d == 0).map(|(i, _)| *i).collect();
    let mut seen = 0;
    while let Some(a) = ready.pop() {
        seen += 1;
        for &(a2, b) in es.causes.range((a, 0)..(a + 1, 0)) {
            debug_assert_eq!(a2, a);
            if let Some(d) = indeg.get_mut(&b) {
                *d -= 1;
                if *d == 0 {
                    ready.push(b);
                }
            }
        }
    }
    seen == x.len()
}

/// Whether `e` can be appended to a proving sequence enumerating `x`.
pub fn can_extend<E: PartialEq>(es: &EventStructure<E>, x: &Configuration, e: usize) -> bool {
    if x.contains(&e) || x.iter().any(|&c| es.conflicting(c, e)) {
        return false;
    }
    es.causes.iter().filter(|&&(_, b)| b == e).all(|&(a, _)| {
        x.contains(&a) || (es.kind == EsKind::Flow && x.iter().any(|&c| es.conflicting(a, c) && es.prec(c, e)))
    })
}

/// Whether `seq` (indices into `es`) is a proving sequence.
pub fn is_proving_sequence<E: PartialEq>(es: &EventStructure<E>, seq: &[usize]) -> bool {
    let mut x = Configuration::new();
    for &e in seq {
        if e >= es.len() || !can_extend(es, &x, e) {
            return false;
        }
        x.insert(e);
    }
    true
}

/// Configurations ordered by inclusion.
#[derive(Clone, Debug, Serialize)]
pub struct DomainPoset {
    /// Sorted by size, then lexicographically; always contains `∅` first.
    pub configurations: Vec<Configuration>,
}

impl DomainPoset {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }
    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }
    pub fn nonempty(&self) -> usize {
        self.configurations.iter().filter(|c| !c.is_empty()).count()
    }
    pub fn contains(&self, x: &Configuration) -> bool {
        self.configurations.binary_search_by(|c| order(c, x)).is_ok()
    }
    /// Covering pairs of the inclusion order (indices into `configurations`).
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.configurations.iter().enumerate() {
            for (j, b) in self.configurations.iter().enumerate() {
                if b.len() == a.len() + 1 && a.is_subset(b) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn order(a: &Configuration, b: &Configuration) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// All configurations with at most `k` events, by breadth-first extension
/// of proving sequences.
pub fn enumerate_configurations<E: PartialEq>(es: &EventStructure<E>, k: usize) -> DomainPoset {
    let mut all: BTreeSet<Configuration> = BTreeSet::new();
    let mut layer: BTreeSet<Configuration> = BTreeSet::from([Configuration::new()]);
    for _ in 0..=k {
        let mut next = BTreeSet::new();
        for x in &layer {
            if x.len() < k {
                for e in 0..es.len() {
                    if can_extend(es, x, e) {
                        let mut y = x.clone();
                        y.insert(e);
                        next.insert(y);
                    }
                }
            }
        }
        all.extend(std::mem::take(&mut layer));
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    let mut configurations: Vec<Configuration> = all.into_iter().collect();
    configurations.sort_by(order);
    DomainPoset { configurations }
}

/// One pair of corresponding configurations.
#[derive(Clone, Debug, Serialize)]
pub struct IsoRow {
    pub network: Vec<String>,
    pub typ: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsoReport {
    pub isomorphic: bool,
    pub depth: usize,
    /// Largest configuration size compared: `depth - 1` when either
    /// structure was cut by the depth bound, otherwise unrestricted.
    pub compared_size: usize,
    pub truncated: bool,
    /// Counts exclude the empty configuration.
    pub network_configurations: usize,
    pub type_configurations: usize,
    pub bijection: Vec<IsoRow>,
    pub failure: Option<String>,
}

fn network_truncated(n: &Network, env: &DefEnv, k: usize) -> bool {
    n.procs.values().any(|p| pes_of_process(p, env, k + 1).len() > pes_of_process(p, env, k).len())
}

/// Length of the longest path of a finite tree, `None` if some path is
/// infinite (a node repeats on the current branch).
fn tree_height<T: Clone + Ord>(root: T, children: &dyn Fn(&T) -> Vec<T>) -> Option<usize> {
    fn go<T: Clone + Ord>(
        t: T,
        children: &dyn Fn(&T) -> Vec<T>,
        stack: &mut BTreeSet<T>,
        memo: &mut BTreeMap<T, usize>,
    ) -> Option<usize> {
        if let Some(&h) = memo.get(&t) {
            return Some(h);
        }
        if !stack.insert(t.clone()) {
            return None;
        }
        let mut h = 0;
        for c in children(&t) {
            h = h.max(1 + go(c, children, stack, memo)?);
        }
        stack.remove(&t);
        memo.insert(t, h);
        Some(h)
    }
    go(root, children, &mut BTreeSet::new(), &mut BTreeMap::new())
}

/// The least depth at which no p-event of the network is cut, if the
/// network is finite.
pub fn exact_depth_network(n: &Network, env: &DefEnv) -> Option<usize> {
    let kids = |p: &Process| -> Vec<Process> {
        env.whnf_p(p).as_choice().map(|(_, _, bs)| bs.iter().map(|(_, c)| env.whnf_p(c)).collect()).unwrap_or_default()
    };
    let mut h = 0;
    for p in n.procs.values() {
        h = h.max(tree_height(env.whnf_p(p), &kids)?);
    }
    Some(h.max(1))
}

/// The least depth at which no path of the type is cut, if the type is
/// finite.
pub fn exact_depth_type(t: &AsyncType, env: &DefEnv) -> Option<usize> {
    let kids = |g: &Global| -> Vec<Global> { env.whnf_g(g).edges().into_iter().map(|(_, c)| env.whnf_g(&c)).collect() };
    tree_height(env.whnf_g(&t.global), &kids).map(|h| h.max(1))
}

/// Bounded check that the configuration domains of a typed network and
/// its type are isomorphic. Configurations are paired through execution
/// traces: the n-events of the steps of `τ` against their t-events.
pub fn domain_iso(n: &Network, t: &AsyncType, env: &DefEnv, k: usize) -> Result<IsoReport, DomainError> {
    let tc = typecheck(n, t, env);
    if !tc.typable {
        return Err(DomainError::Untyped(tc.diagnostics));
    }
    let w = otrace_canonical(&otr(&t.queue));
    let truncated =
        network_truncated(n, env, k) || fpaths(&t.global, env, k + 1).len() > fpaths(&t.global, env, k).len();
    let fes = fes_of_network(n, env, k)?;
    // Untruncated structures are compared in full: every configuration is
    // reached by a trace of its own size.
    let kc = if truncated { k.saturating_sub(1) } else { k.max(fes.len()) };
    let mut traces: BTreeSet<Trace> = net_traces(n, kc, env).into_iter().collect();
    traces.extend(type_traces(t, kc, env).map_err(|e| DomainError::Semantics(e.to_string()))?);

    // Type paths are cut by length, which may hide short t-events far down
    // a path; the t-events of the traces themselves fill the gap.
    let mut tevents: BTreeSet<TEvent> = pes_of_type(t, env, k)?.events.into_iter().collect();
    for tau in traces.iter().filter(|t| !t.is_empty()) {
        tevents.extend(tec(&w, tau)?);
    }
    let pes = pes_of_tevents(tevents, &w)?;
    let dn = enumerate_configurations(&fes, kc);
    let dt = enumerate_configurations(&pes, kc);
    let mut report = IsoReport {
        isomorphic: false,
        depth: k,
        compared_size: kc,
        truncated,
        network_configurations: dn.nonempty(),
        type_configurations: dt.nonempty(),
        bijection: vec![],
        failure: None,
    };
    let fail = |mut r: IsoReport, msg: String| {
        r.failure = Some(msg);
        Ok(r)
    };

    let mut fwd: BTreeMap<Configuration, Configuration> = BTreeMap::new();
    let mut bwd: BTreeMap<Configuration, Configuration> = BTreeMap::new();
    fwd.insert(Configuration::new(), Configuration::new());
    bwd.insert(Configuration::new(), Configuration::new());
    for tau in traces.iter().filter(|t| !t.is_empty()) {
        let ns = nec(tau);
        let ts = tec(&w, tau)?;
        let (mut x, mut y) = (Configuration::new(), Configuration::new());
        for (ne, te) in ns.iter().zip(&ts) {
            let Some(i) = fes.index_of(ne) else {
                return fail(report, format!("n-event {ne} of a trace is missing from the network structure"));
            };
            let j = pes.index_of(te).expect("t-events of traces were added");
            if nevent_io(ne) != *te.io() {
                return fail(report, format!("{ne} and {te} have different communications"));
            }
            x.insert(i);
            y.insert(j);
        }
        if *fwd.entry(x.clone()).or_insert_with(|| y.clone()) != y || *bwd.entry(y.clone()).or_insert_with(|| x.clone()) != x {
            return fail(report, format!("the configuration correspondence is not a bijection at {x:?} / {y:?}"));
        }
    }
    for x in &dn.configurations {
        match fwd.get(x) {
            Some(y) if dt.contains(y) => {}
            Some(_) => return fail(report, format!("the image of network configuration {x:?} is not a configuration")),
            None => return fail(report, format!("network configuration {x:?} is not reached by any trace")),
        }
    }
    for y in &dt.configurations {
        if !bwd.get(y).is_some_and(|x| dn.contains(x)) {
            return fail(report, format!("type configuration {y:?} has no counterpart"));
        }
    }
    let pairs: Vec<(&Configuration, &Configuration)> =
        dn.configurations.iter().map(|x| (x, &fwd[x])).collect();
    for (x1, y1) in &pairs {
        for (x2, y2) in &pairs {
            if x1.is_subset(x2) != y1.is_subset(y2) {
                return fail(report, format!("inclusion between {x1:?} and {x2:?} is not preserved"));
            }
        }
    }
    report.bijection = pairs
        .iter()
        .map(|(x, y)| IsoRow {
            network: x.iter().map(|&i| fes.events[i].to_string()).collect(),
            typ: y.iter().map(|&j| pes.events[j].to_string()).collect(),
        })
        .collect();
    report.isomorphic = dn.len() == dt.len();
    if !report.isomorphic {
        report.failure = Some("the domains have different sizes".into());
    }
    Ok(report)
}
