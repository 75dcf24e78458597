//! `sessfes`: run the session analyses on `.sess` files.
//!
//! Exit codes: 0 success / verdict true, 1 verdict false, 2 input error,
//! 3 a search cap was exceeded.

mod dot;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use sessfes::domains::{domain_iso, enumerate_configurations, exact_depth_network, exact_depth_type, DomainError};
use sessfes::events::{fes_of_network, pes_of_type, EventError, EventLabel, EventStructure};
use sessfes::kernel::{AsyncType, Message, Network, Participant};
use sessfes::semantics::{net_enabled, net_run, net_step, net_traces, type_enabled, type_run, type_step, type_traces};
use sessfes::textfmt::{
    parse_async_type, parse_network, parse_queue, parse_session, parse_trace, print_async_type, print_defs,
    print_network, print_process, SessionFile,
};
use sessfes::traces::TraceError;
use sessfes::typing::{
    balanced, bounded, evaluate_expectation, progress_witness, project, typecheck, well_formed, Diagnostic,
    ProgressTarget,
};

use report::{Failure, Report};

const DEFAULT_DEPTH: usize = 8;

#[derive(Parser)]
#[command(name = "sessfes", version, about = "Asynchronous multiparty sessions and their event structures")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    /// Truncation depth for events and traces (default: exact when finite, else 8).
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck NET against TYPE; with a single name, check that type is
    /// well formed; with none, evaluate every `expect` line of the file.
    Check { file: PathBuf, net: Option<String>, typ: Option<String> },
    /// Project TYPE (a name or an inline global type) on PARTICIPANT.
    Project { file: PathBuf, typ: String, participant: String },
    /// Decide balancing of TYPE.
    Balance { file: PathBuf, typ: String },
    /// Decide boundedness of TYPE.
    Bounded { file: PathBuf, typ: String },
    /// Run or explore the transition system of a network or type.
    Sim {
        file: PathBuf,
        target: String,
        /// Communications to execute, e.g. "p->q!l, p->q?l".
        #[arg(long, conflicts_with_all = ["enumerate", "random"])]
        trace: Option<String>,
        /// List all traces up to this length.
        #[arg(long, conflicts_with = "random")]
        enumerate: Option<usize>,
        /// Take this many random steps.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the event structure of a network (flow) or type (prime).
    Events {
        file: PathBuf,
        target: String,
        /// Write the graph in DOT format to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List the configurations of the event structure.
    Domain { file: PathBuf, target: String },
    /// Check that the configuration domains of NET and TYPE are isomorphic.
    Iso { file: PathBuf, net: String, typ: String },
    /// Find progress witnesses for participants or queued messages.
    Progress {
        file: PathBuf,
        net: String,
        typ: String,
        /// A participant `p` or a message `<p l q>`; default: all of them.
        #[arg(long)]
        target: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let (report, code) = match run(cli) {
        Ok(r) => {
            let code = match r.verdict {
                Some(false) => 1,
                _ => 0,
            };
            (r, code)
        }
        Err(f) => {
            let code = f.exit_code();
            (Report::failure(f), code)
        }
    };
    report.emit(format);
    ExitCode::from(code)
}

fn load(file: &PathBuf) -> Result<SessionFile, Failure> {
    let text = if file.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| Failure::input(e.to_string()))?;
        s
    } else {
        std::fs::read_to_string(file).map_err(|e| Failure::input(format!("{}: {e}", file.display())))?
    };
    parse_session(&text).map_err(|e| Failure::input(e.with_file(&file.display().to_string())))
}

/// A declared type, or an inline `G [|- M]`.
fn resolve_type(sf: &SessionFile, s: &str) -> Result<AsyncType, Failure> {
    if let Some(t) = sf.async_type(s) {
        return Ok(t.clone());
    }
    parse_async_type(s, &sf.defs).map_err(|e| Failure::input(format!("type `{s}`: {e}")))
}

fn resolve_network(sf: &SessionFile, s: &str) -> Result<Network, Failure> {
    if let Some(n) = sf.network(s) {
        return Ok(n.clone());
    }
    parse_network(s, &sf.defs).map_err(|e| Failure::input(format!("network `{s}`: {e}")))
}

enum Target {
    Net(Network),
    Type(AsyncType),
}

fn resolve_target(sf: &SessionFile, s: &str) -> Result<Target, Failure> {
    if let Some(n) = sf.network(s) {
        return Ok(Target::Net(n.clone()));
    }
    if let Some(t) = sf.async_type(s) {
        return Ok(Target::Type(t.clone()));
    }
    if s.contains("::") {
        resolve_network(sf, s).map(Target::Net)
    } else {
        resolve_type(sf, s).map(Target::Type)
    }
}

fn diags(ds: &[Diagnostic]) -> Vec<Value> {
    ds.iter().map(|d| json!(d)).collect()
}

fn run(cli: Cli) -> Result<Report, Failure> {
    let depth = cli.depth;
    match cli.cmd {
        Cmd::Check { file, net, typ } => {
            let sf = load(&file)?;
            match (net, typ) {
                (Some(n), Some(t)) => {
                    let (n, t) = (resolve_network(&sf, &n)?, resolve_type(&sf, &t)?);
                    let r = typecheck(&n, &t, &sf.defs);
                    let mut text = vec![format!("typable: {}", r.typable)];
                    text.push(format!("well-formed: {}", r.well_formed.well_formed));
                    text.extend(r.diagnostics.iter().map(|d| d.to_string()));
                    text.extend(r.well_formed.warnings.iter().map(|d| format!("warning: {d}")));
                    Ok(Report::new("check", Some(r.typable), text, json!(r)).diagnostics(diags(&r.diagnostics)))
                }
                (Some(t), None) => {
                    let t = resolve_type(&sf, &t)?;
                    let r = well_formed(&t, &sf.defs);
                    let mut text = vec![format!("well-formed: {}", r.well_formed)];
                    text.push(format!("balanced: {}, bounded: {}, projectable: {}", r.balanced, r.bounded, r.projectable));
                    text.extend(r.diagnostics.iter().map(|d| d.to_string()));
                    text.extend(r.warnings.iter().map(|d| format!("warning: {d}")));
                    Ok(Report::new("check", Some(r.well_formed), text, json!(r)).diagnostics(diags(&r.diagnostics)))
                }
                _ => {
                    let mut ok = true;
                    let mut text = Vec::new();
                    let mut rows = Vec::new();
                    for e in &sf.expectations {
                        let got = evaluate_expectation(&sf, e).map_err(|d| Failure::input(d.to_string()))?;
                        let pass = got == e.expected;
                        ok &= pass;
                        text.push(format!("{} line {}: {e} (got {got})", if pass { "ok  " } else { "FAIL" }, e.line));
                        rows.push(json!({"line": e.line, "expectation": e.to_string(), "got": got, "pass": pass}));
                    }
                    text.push(format!("{} expectation(s), {}", rows.len(), if ok { "all hold" } else { "some fail" }));
                    Ok(Report::new("check", Some(ok), text, json!({ "expectations": rows })))
                }
            }
        }
        Cmd::Project { file, typ, participant } => {
            let sf = load(&file)?;
            let t = resolve_type(&sf, &typ)?;
            match project(&t.global, &Participant::new(&participant), &sf.defs) {
                Ok(pr) => {
                    let mut text = vec![print_process(&pr.process)];
                    let defs = print_defs(&pr.env);
                    text.extend(defs.lines().filter(|l| !l.is_empty()).map(str::to_string));
                    let art = json!({"process": print_process(&pr.process), "defs": defs});
                    Ok(Report::new("project", Some(true), text, art))
                }
                Err(d) => Ok(Report::new("project", Some(false), vec![format!("unprojectable: {d}")], Value::Null)
                    .diagnostics(vec![json!(d)])),
            }
        }
        Cmd::Balance { file, typ } => {
            let sf = load(&file)?;
            let t = resolve_type(&sf, &typ)?;
            let r = balanced(&t, &sf.defs);
            let mut text = vec![format!("balanced: {}", r.balanced)];
            if r.diverged {
                text.push("note: the derivation search hit its divergence guard".into());
            }
            text.extend(r.failure.iter().map(|d| d.to_string()));
            text.extend(r.derivation.iter().cloned());
            let ds = r.failure.iter().map(|d| json!(d)).collect();
            Ok(Report::new("balance", Some(r.balanced), text, json!(r)).diagnostics(ds))
        }
        Cmd::Bounded { file, typ } => {
            let sf = load(&file)?;
            let t = resolve_type(&sf, &typ)?;
            let r = bounded(&t.global, &sf.defs);
            let mut text = vec![format!("bounded: {}", r.bounded)];
            text.extend(r.offending.iter().map(|(g, p)| format!("infinite depth of {p} in {g}")));
            Ok(Report::new("bounded", Some(r.bounded), text, json!(r)))
        }
        Cmd::Sim { file, target, trace, enumerate, random, seed } => {
            let sf = load(&file)?;
            let target = resolve_target(&sf, &target)?;
            sim(&sf, target, trace, enumerate, random, seed)
        }
        Cmd::Events { file, target, dot } => {
            let sf = load(&file)?;
            let (es_json, text, graph, k) = match resolve_target(&sf, &target)? {
                Target::Net(n) => {
                    let k = depth.or(exact_depth_network(&n, &sf.defs)).unwrap_or(DEFAULT_DEPTH);
                    let es = fes_of_network(&n, &sf.defs, k).map_err(Failure::from_trace)?;
                    (es_table(&es), es_text(&es, "flow"), dot::render(&es, "network"), k)
                }
                Target::Type(t) => {
                    let k = depth.or(exact_depth_type(&t, &sf.defs)).unwrap_or(DEFAULT_DEPTH);
                    let es = pes_of_type(&t, &sf.defs, k).map_err(Failure::from_event)?;
                    (es_table(&es), es_text(&es, "causality"), dot::render(&es, "type"), k)
                }
            };
            if let Some(path) = dot {
                std::fs::write(&path, &graph).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            }
            let mut art = es_json;
            art["depth"] = json!(k);
            Ok(Report::new("events", None, text, art))
        }
        Cmd::Domain { file, target } => {
            let sf = load(&file)?;
            match resolve_target(&sf, &target)? {
                Target::Net(n) => {
                    let exact = exact_depth_network(&n, &sf.defs);
                    let k = depth.or(exact).unwrap_or(DEFAULT_DEPTH);
                    let es = fes_of_network(&n, &sf.defs, k).map_err(Failure::from_trace)?;
                    Ok(domain_report(&es, if depth.is_none() && exact.is_some() { es.len() } else { k }))
                }
                Target::Type(t) => {
                    let exact = exact_depth_type(&t, &sf.defs);
                    let k = depth.or(exact).unwrap_or(DEFAULT_DEPTH);
                    let es = pes_of_type(&t, &sf.defs, k).map_err(Failure::from_event)?;
                    Ok(domain_report(&es, if depth.is_none() && exact.is_some() { es.len() } else { k }))
                }
            }
        }
        Cmd::Iso { file, net, typ } => {
            let sf = load(&file)?;
            let (n, t) = (resolve_network(&sf, &net)?, resolve_type(&sf, &typ)?);
            let k = depth.unwrap_or_else(|| {
                match (exact_depth_network(&n, &sf.defs), exact_depth_type(&t, &sf.defs)) {
                    (Some(a), Some(b)) => a.max(b),
                    _ => DEFAULT_DEPTH,
                }
            });
            let r = match domain_iso(&n, &t, &sf.defs, k) {
                Ok(r) => r,
                Err(DomainError::Untyped(ds)) => {
                    let text = vec!["isomorphic: n/a (the network is not typed by the type)".to_string()];
                    return Ok(Report::new("iso", Some(false), text, Value::Null).diagnostics(diags(&ds)));
                }
                Err(DomainError::Event(e)) => return Err(Failure::from_event(e)),
                Err(DomainError::Trace(e)) => return Err(Failure::from_trace(e)),
                Err(e) => return Err(Failure::internal(e.to_string())),
            };
            let mut text = vec![format!("isomorphic: {}, configurations: {}", r.isomorphic, r.network_configurations)];
            if r.truncated {
                text.push(format!("note: depth {k} cuts the structures; configurations of size <= {} compared", r.compared_size));
            }
            text.extend(r.failure.iter().map(|f| format!("failure: {f}")));
            for row in &r.bijection {
                text.push(format!("  {{{}}}  <->  {{{}}}", row.network.join(", "), row.typ.join(", ")));
            }
            Ok(Report::new("iso", Some(r.isomorphic), text, json!(r)))
        }
        Cmd::Progress { file, net, typ, target } => {
            let sf = load(&file)?;
            let (n, t) = (resolve_network(&sf, &net)?, resolve_type(&sf, &typ)?);
            let targets = match target {
                Some(s) if s.trim_start().starts_with('<') => {
                    let q = parse_queue(&s).map_err(|e| Failure::input(e.to_string()))?;
                    q.iter().map(|m| ProgressTarget::Message(m.clone())).collect()
                }
                Some(s) => vec![ProgressTarget::Participant(Participant::new(s.trim()))],
                None => default_targets(&n, &t, &sf),
            };
            let mut ok = true;
            let mut text = Vec::new();
            let mut rows = Vec::new();
            for tg in &targets {
                let name = match tg {
                    ProgressTarget::Participant(p) => p.to_string(),
                    ProgressTarget::Message(m) => m.to_string(),
                };
                match progress_witness(&n, &t, tg, &sf.defs) {
                    Ok(w) => {
                        let tr = w.trace.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
                        text.push(format!("{name}: {tr}  (length {}, bound {})", w.trace.len(), w.bound));
                        rows.push(json!({"target": name, "witness": w}));
                    }
                    Err(d) => {
                        ok = false;
                        text.push(format!("{name}: no witness: {d}"));
                        rows.push(json!({"target": name, "diagnostic": d}));
                    }
                }
            }
            Ok(Report::new("progress", Some(ok), text, json!({ "targets": rows })))
        }
    }
}

/// Every participant with a pending action and the head message of every
/// channel in the queue.
fn default_targets(n: &Network, t: &AsyncType, sf: &SessionFile) -> Vec<ProgressTarget> {
    let mut out: Vec<ProgressTarget> = n
        .procs
        .iter()
        .filter(|(_, p)| !sf.defs.whnf_p(p).is_inaction())
        .map(|(p, _)| ProgressTarget::Participant(p.clone()))
        .collect();
    let mut heads: BTreeMap<(Participant, Participant), Message> = BTreeMap::new();
    for m in t.queue.iter() {
        heads.entry((m.sender.clone(), m.receiver.clone())).or_insert_with(|| m.clone());
    }
    out.extend(heads.into_values().map(ProgressTarget::Message));
    out
}

fn sim(
    sf: &SessionFile,
    target: Target,
    trace: Option<String>,
    enumerate: Option<usize>,
    random: Option<usize>,
    seed: u64,
) -> Result<Report, Failure> {
    let env = &sf.defs;
    let sem = |e: sessfes::semantics::SemError| Failure::input(e.to_string());
    if let Some(k) = enumerate {
        let traces = match &target {
            Target::Net(n) => net_traces(n, k, env),
            Target::Type(t) => type_traces(t, k, env).map_err(sem)?,
        };
        let shown: Vec<String> = traces.iter().map(|t| show(t)).collect();
        let mut text = vec![format!("{} trace(s) of length <= {k}", shown.len())];
        text.extend(shown.iter().map(|s| format!("  {s}")));
        return Ok(Report::new("sim", None, text, json!({ "traces": shown })));
    }
    let steps = match (trace, random) {
        (Some(s), _) => parse_trace(&s).map_err(|e| Failure::input(format!("trace: {e}")))?,
        (None, Some(n)) => {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut taken = Vec::new();
            let mut cur = match &target {
                Target::Net(n) => Target::Net(n.clone()),
                Target::Type(t) => Target::Type(t.clone()),
            };
            for _ in 0..n {
                let en = match &cur {
                    Target::Net(n) => net_enabled(n, env),
                    Target::Type(t) => type_enabled(t, env).map_err(sem)?,
                };
                if en.is_empty() {
                    break;
                }
                let b = en[rng.gen_range(0..en.len())].clone();
                cur = match cur {
                    Target::Net(n) => Target::Net(net_step(&n, &b, env).map_err(sem)?),
                    Target::Type(t) => Target::Type(type_step(&t, &b, env).map_err(sem)?),
                };
                taken.push(b);
            }
            taken
        }
        (None, None) => vec![],
    };
    let (state, enabled) = match &target {
        Target::Net(n) => {
            let m = net_run(n, &steps, env).map_err(sem)?;
            (print_network(&m), net_enabled(&m, env))
        }
        Target::Type(t) => {
            let m = type_run(t, &steps, env).map_err(sem)?;
            let en = type_enabled(&m, env).map_err(sem)?;
            (print_async_type(&m), en)
        }
    };
    let en: Vec<String> = enabled.iter().map(|c| c.to_string()).collect();
    let text = vec![
        format!("trace: {}", show(&steps)),
        format!("state: {state}"),
        format!("enabled: {}", if en.is_empty() { "none".to_string() } else { en.join(", ") }),
    ];
    Ok(Report::new("sim", None, text, json!({"trace": show(&steps), "state": state, "enabled": en})))
}

fn show(t: &[sessfes::kernel::Comm]) -> String {
    if t.is_empty() {
        "e".into()
    } else {
        t.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
    }
}

fn es_table<E: EventLabel + std::fmt::Display + PartialEq>(es: &EventStructure<E>) -> Value {
    let events: Vec<Value> = es
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| json!({"id": format!("e{i}"), "event": e.to_string(), "io": e.io_label()}))
        .collect();
    let causes: Vec<Value> = es.causes.iter().map(|(a, b)| json!([format!("e{a}"), format!("e{b}")])).collect();
    let conflict: Vec<Value> = es.conflict_pairs().iter().map(|(a, b)| json!([format!("e{a}"), format!("e{b}")])).collect();
    json!({"kind": format!("{:?}", es.kind).to_lowercase(), "events": events, "causes": causes, "conflict": conflict})
}

fn es_text<E: EventLabel + std::fmt::Display + PartialEq>(es: &EventStructure<E>, rel: &str) -> Vec<String> {
    let mut text = vec![format!("{} event(s)", es.len())];
    for (i, e) in es.events.iter().enumerate() {
        text.push(format!("  e{i}  {e}    [{}]", e.io_label()));
    }
    let pairs: Vec<String> = es.causes.iter().map(|(a, b)| format!("e{a}->e{b}")).collect();
    text.push(format!("{rel}: {}", pairs.join(" ")));
    let cs: Vec<String> = es.conflict_pairs().iter().map(|(a, b)| format!("e{a}#e{b}")).collect();
    text.push(format!("conflict: {}", cs.join(" ")));
    text
}

fn domain_report<E: EventLabel + std::fmt::Display + PartialEq>(es: &EventStructure<E>, k: usize) -> Report {
    let d = enumerate_configurations(es, k);
    let mut text = vec![format!("configurations: {} (plus the empty one)", d.nonempty())];
    let mut rows = Vec::new();
    for x in &d.configurations {
        let names: Vec<String> = x.iter().map(|&i| es.events[i].to_string()).collect();
        text.push(format!("  {{{}}}", names.join(", ")));
        rows.push(names);
    }
    let mut art = es_table(es);
    art["configurations"] = json!(rows);
    art["max_size"] = json!(k);
    Report::new("domain", None, text, art)
}

impl Failure {
    fn from_trace(e: TraceError) -> Failure {
        match e {
            TraceError::CapExceeded { .. } => Failure::cap(e.to_string()),
            _ => Failure::internal(e.to_string()),
        }
    }
    fn from_event(e: EventError) -> Failure {
        match e {
            EventError::Trace(t) => Failure::from_trace(t),
            EventError::IllFormed(_) => Failure::input(e.to_string()),
        }
    }
}
