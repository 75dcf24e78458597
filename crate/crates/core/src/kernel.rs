//! Core term language: participants, labels, actions, communications,
//! processes, global types, queues, networks and asynchronous types.
//!
//! Processes and global types are regular (possibly infinite) trees. They
//! are stored as finite trees whose leaves may be `Ref`s to named
//! equations held in a [`DefEnv`]. Every algorithm works on *unfolded*
//! nodes: terms whose head is a constructor. Since every unfolded node is a
//! subterm of the root or of some equation body, the set of nodes reachable
//! from a term is finite, which is what makes the coinductive checks
//! decidable.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! name_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: &str) -> Self {
                Self(Arc::from(s))
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self::new(s)
            }
        }
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

name_type!(
    /// A session participant (`p`, `q`, `r`, ...). Ordered lexicographically.
    Participant
);
name_type!(
    /// A message label.
    Label
);
name_type!(
    /// Name of a recursion equation.
    Name
);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("undefined name `{0}`")]
    Dangling(Name),
    #[error("unguarded recursion through `{0}`")]
    Unguarded(Name),
    #[error("duplicate label `{0}` in choice")]
    DuplicateLabel(Label),
    #[error("empty choice")]
    EmptyChoice,
    #[error("name `{0}` defined twice")]
    DuplicateName(Name),
    #[error("participant `{0}` occurs twice in network")]
    DuplicateParticipant(Participant),
}

/// Direction of an action or communication.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Dir {
    #[serde(rename = "!")]
    Out,
    #[serde(rename = "?")]
    In,
}

impl Dir {
    pub fn symbol(self) -> char {
        match self {
            Dir::Out => '!',
            Dir::In => '?',
        }
    }
    pub fn flip(self) -> Dir {
        match self {
            Dir::Out => Dir::In,
            Dir::In => Dir::Out,
        }
    }
}

/// An atomic action `q!l` or `q?l` seen from the acting participant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub dir: Dir,
    pub peer: Participant,
    pub label: Label,
}

impl Action {
    pub fn new(dir: Dir, peer: impl Into<Participant>, label: impl Into<Label>) -> Self {
        Action { dir, peer: peer.into(), label: label.into() }
    }
    pub fn send(peer: &str, label: &str) -> Self {
        Self::new(Dir::Out, peer, label)
    }
    pub fn recv(peer: &str, label: &str) -> Self {
        Self::new(Dir::In, peer, label)
    }
    pub fn is_output(&self) -> bool {
        self.dir == Dir::Out
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.peer, self.dir.symbol(), self.label)
    }
}
impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A communication `pq!l` (p puts `l` in the queue for q) or `pq?l`
/// (q reads `l` sent by p).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Comm {
    pub dir: Dir,
    pub sender: Participant,
    pub receiver: Participant,
    pub label: Label,
}

impl Comm {
    pub fn new(
        dir: Dir,
        sender: impl Into<Participant>,
        receiver: impl Into<Participant>,
        label: impl Into<Label>,
    ) -> Self {
        Comm { dir, sender: sender.into(), receiver: receiver.into(), label: label.into() }
    }
    /// `pq!l`
    pub fn out(p: &str, q: &str, l: &str) -> Self {
        Self::new(Dir::Out, p, q, l)
    }
    /// `pq?l`
    pub fn inp(p: &str, q: &str, l: &str) -> Self {
        Self::new(Dir::In, p, q, l)
    }
    pub fn is_output(&self) -> bool {
        self.dir == Dir::Out
    }
    /// The unique participant performing the communication.
    pub fn player(&self) -> &Participant {
        match self.dir {
            Dir::Out => &self.sender,
            Dir::In => &self.receiver,
        }
    }
    pub fn channel(&self) -> (&Participant, &Participant) {
        (&self.sender, &self.receiver)
    }
    pub fn is_self_comm(&self) -> bool {
        self.sender == self.receiver
    }
    pub fn message(&self) -> Message {
        Message::new(self.sender.clone(), self.label.clone(), self.receiver.clone())
    }
    /// The same communication with the other direction.
    pub fn dual(&self) -> Comm {
        Comm { dir: self.dir.flip(), ..self.clone() }
    }
    /// The action performed by the player.
    pub fn action(&self) -> Action {
        match self.dir {
            Dir::Out => Action::new(Dir::Out, self.receiver.clone(), self.label.clone()),
            Dir::In => Action::new(Dir::In, self.sender.clone(), self.label.clone()),
        }
    }
    /// Key used for deterministic exploration: (player, kind, peer, label).
    pub fn exploration_key(&self) -> (Participant, Dir, Participant, Label) {
        let peer = match self.dir {
            Dir::Out => self.receiver.clone(),
            Dir::In => self.sender.clone(),
        };
        (self.player().clone(), self.dir, peer, self.label.clone())
    }
}

impl fmt::Display for Comm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}{}{}", self.sender, self.receiver, self.dir.symbol(), self.label)
    }
}
impl fmt::Debug for Comm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Players of a sequence of communications.
pub fn players_comms<'a>(cs: impl IntoIterator<Item = &'a Comm>) -> BTreeSet<Participant> {
    cs.into_iter().map(|c| c.player().clone()).collect()
}

/// A queued message `<p l q>`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Message {
    pub sender: Participant,
    pub label: Label,
    pub receiver: Participant,
}

impl Message {
    pub fn new(sender: Participant, label: Label, receiver: Participant) -> Self {
        Message { sender, label, receiver }
    }
    pub fn of(p: &str, l: &str, q: &str) -> Self {
        Message::new(p.into(), l.into(), q.into())
    }
    pub fn same_channel(&self, other: &Message) -> bool {
        self.sender == other.sender && self.receiver == other.receiver
    }
    /// The output communication that produced this message.
    pub fn as_output(&self) -> Comm {
        Comm::new(Dir::Out, self.sender.clone(), self.receiver.clone(), self.label.clone())
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} {} {}>", self.sender, self.label, self.receiver)
    }
}
impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A message queue. Structural equality is syntactic; use
/// [`Queue::equiv`] for equality modulo swapping of messages on different
/// channels.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Queue(pub Vec<Message>);

impl Queue {
    pub fn empty() -> Self {
        Queue(Vec::new())
    }
    pub fn from_msgs(msgs: impl IntoIterator<Item = Message>) -> Self {
        Queue(msgs.into_iter().collect())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.0.iter()
    }
    /// `M · <p l q>`
    pub fn pushed(&self, m: Message) -> Queue {
        let mut v = self.0.clone();
        v.push(m);
        Queue(v)
    }
    /// `<p l q> · M`
    pub fn prepended(&self, m: Message) -> Queue {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(m);
        v.extend(self.0.iter().cloned());
        Queue(v)
    }
    /// The first message on channel p→q, i.e. the head of the queue modulo
    /// the structural equivalence.
    pub fn first_on(&self, p: &Participant, q: &Participant) -> Option<(usize, &Message)> {
        self.0.iter().enumerate().find(|(_, m)| &m.sender == p && &m.receiver == q)
    }
    /// If `self ≡ <p l q> · M'` return `M'`.
    pub fn pop_front_msg(&self, p: &Participant, l: &Label, q: &Participant) -> Option<Queue> {
        let (i, m) = self.first_on(p, q)?;
        if &m.label != l {
            return None;
        }
        let mut v = self.0.clone();
        v.remove(i);
        Some(Queue(v))
    }
    /// If `self ≡ M' · <p l q>` return `M'`.
    pub fn pop_back_msg(&self, p: &Participant, l: &Label, q: &Participant) -> Option<Queue> {
        let (i, m) = self
            .0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, m)| &m.sender == p && &m.receiver == q)?;
        if &m.label != l {
            return None;
        }
        let mut v = self.0.clone();
        v.remove(i);
        Some(Queue(v))
    }
    /// Canonical representative of the ≡-class: stable sort by channel.
    pub fn canonical(&self) -> Queue {
        let mut v = self.0.clone();
        v.sort_by(|a, b| (&a.sender, &a.receiver).cmp(&(&b.sender, &b.receiver)));
        Queue(v)
    }
    /// Equality modulo the structural equivalence ≡.
    pub fn equiv(&self, other: &Queue) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }
    pub fn concat(&self, other: &Queue) -> Queue {
        Queue(self.0.iter().chain(other.0.iter()).cloned().collect())
    }
}

impl fmt::Display for Queue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("empty");
        }
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" . ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}
impl fmt::Debug for Queue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `queue_equiv` of the term language.
pub fn queue_equiv(a: &Queue, b: &Queue) -> bool {
    a.equiv(b)
}

fn check_branches<T>(branches: &mut [(Label, T)]) -> Result<(), KernelError> {
    if branches.is_empty() {
        return Err(KernelError::EmptyChoice);
    }
    branches.sort_by(|a, b| a.0.cmp(&b.0));
    for w in branches.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(KernelError::DuplicateLabel(w[0].0.clone()));
        }
    }
    Ok(())
}

/// Process syntax. Branches are kept sorted by label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ProcessTerm {
    Inaction,
    Out(Participant, Vec<(Label, Process)>),
    In(Participant, Vec<(Label, Process)>),
    Ref(Name),
}

/// A shared process term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Process(Arc<ProcessTerm>);

impl Deref for Process {
    type Target = ProcessTerm;
    fn deref(&self) -> &ProcessTerm {
        &self.0
    }
}

impl Process {
    pub fn zero() -> Self {
        Process(Arc::new(ProcessTerm::Inaction))
    }
    pub fn reference(name: impl Into<Name>) -> Self {
        Process(Arc::new(ProcessTerm::Ref(name.into())))
    }
    /// An output (`Dir::Out`) or input (`Dir::In`) choice towards `peer`.
    pub fn choice(
        dir: Dir,
        peer: impl Into<Participant>,
        mut branches: Vec<(Label, Process)>,
    ) -> Result<Self, KernelError> {
        check_branches(&mut branches)?;
        let peer = peer.into();
        Ok(Process(Arc::new(match dir {
            Dir::Out => ProcessTerm::Out(peer, branches),
            Dir::In => ProcessTerm::In(peer, branches),
        })))
    }
    /// `π ; P`
    pub fn prefix(a: &Action, cont: Process) -> Self {
        Self::choice(a.dir, a.peer.clone(), vec![(a.label.clone(), cont)]).expect("single branch")
    }
    /// `π1; ...; πn; P`
    pub fn seq(actions: &[Action], cont: Process) -> Self {
        actions.iter().rev().fold(cont, |k, a| Self::prefix(a, k))
    }
    pub fn term(&self) -> &ProcessTerm {
        &self.0
    }
    pub fn is_inaction(&self) -> bool {
        matches!(**self, ProcessTerm::Inaction)
    }
    /// Direction, peer and branches of a constructor-headed choice.
    pub fn as_choice(&self) -> Option<(Dir, &Participant, &[(Label, Process)])> {
        match &**self {
            ProcessTerm::Out(p, bs) => Some((Dir::Out, p, bs)),
            ProcessTerm::In(p, bs) => Some((Dir::In, p, bs)),
            _ => None,
        }
    }
    fn children(&self) -> Vec<Process> {
        match &**self {
            ProcessTerm::Out(_, bs) | ProcessTerm::In(_, bs) => bs.iter().map(|b| b.1.clone()).collect(),
            _ => vec![],
        }
    }
}

impl fmt::Debug for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&**self, f)
    }
}

/// Global type syntax. Output branches are kept sorted by label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum GlobalTerm {
    End,
    Out { sender: Participant, receiver: Participant, branches: Vec<(Label, Global)> },
    In { sender: Participant, receiver: Participant, label: Label, cont: Global },
    Ref(Name),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Global(Arc<GlobalTerm>);

impl Deref for Global {
    type Target = GlobalTerm;
    fn deref(&self) -> &GlobalTerm {
        &self.0
    }
}

impl Global {
    pub fn end() -> Self {
        Global(Arc::new(GlobalTerm::End))
    }
    pub fn reference(name: impl Into<Name>) -> Self {
        Global(Arc::new(GlobalTerm::Ref(name.into())))
    }
    /// `pq!{l_i : G_i}`
    pub fn out(
        sender: impl Into<Participant>,
        receiver: impl Into<Participant>,
        mut branches: Vec<(Label, Global)>,
    ) -> Result<Self, KernelError> {
        check_branches(&mut branches)?;
        Ok(Global(Arc::new(GlobalTerm::Out {
            sender: sender.into(),
            receiver: receiver.into(),
            branches,
        })))
    }
    /// `pq?l; G`
    pub fn inp(
        sender: impl Into<Participant>,
        receiver: impl Into<Participant>,
        label: impl Into<Label>,
        cont: Global,
    ) -> Self {
        Global(Arc::new(GlobalTerm::In {
            sender: sender.into(),
            receiver: receiver.into(),
            label: label.into(),
            cont,
        }))
    }
    /// Prefix a communication: output prefixes become single-branch choices.
    pub fn prefix(c: &Comm, cont: Global) -> Self {
        match c.dir {
            Dir::Out => Global::out(c.sender.clone(), c.receiver.clone(), vec![(c.label.clone(), cont)])
                .expect("single branch"),
            Dir::In => Global::inp(c.sender.clone(), c.receiver.clone(), c.label.clone(), cont),
        }
    }
    /// `β1; ...; βn; G`
    pub fn seq(cs: &[Comm], cont: Global) -> Self {
        cs.iter().rev().fold(cont, |k, c| Global::prefix(c, k))
    }
    pub fn term(&self) -> &GlobalTerm {
        &self.0
    }
    pub fn is_end(&self) -> bool {
        matches!(**self, GlobalTerm::End)
    }
    /// The communications labelling the edges out of a constructor-headed
    /// node, with the corresponding subtrees.
    pub fn edges(&self) -> Vec<(Comm, Global)> {
        match &**self {
            GlobalTerm::Out { sender, receiver, branches } => branches
                .iter()
                .map(|(l, g)| (Comm::new(Dir::Out, sender.clone(), receiver.clone(), l.clone()), g.clone()))
                .collect(),
            GlobalTerm::In { sender, receiver, label, cont } => {
                vec![(Comm::new(Dir::In, sender.clone(), receiver.clone(), label.clone()), cont.clone())]
            }
            _ => vec![],
        }
    }
    /// The player of the head communication of a constructor-headed node.
    pub fn head_player(&self) -> Option<&Participant> {
        match &**self {
            GlobalTerm::Out { sender, .. } => Some(sender),
            GlobalTerm::In { receiver, .. } => Some(receiver),
            _ => None,
        }
    }
}

impl fmt::Debug for Global {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&**self, f)
    }
}

/// Named recursion equations for processes and global types. Both kinds
/// share one namespace.
#[derive(Clone, Default, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DefEnv {
    procs: BTreeMap<Name, Process>,
    globals: BTreeMap<Name, Global>,
}

impl DefEnv {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn contains(&self, name: &Name) -> bool {
        self.procs.contains_key(name) || self.globals.contains_key(name)
    }
    pub fn add_process(&mut self, name: impl Into<Name>, body: Process) -> Result<(), KernelError> {
        let name = name.into();
        if self.contains(&name) {
            return Err(KernelError::DuplicateName(name));
        }
        self.procs.insert(name, body);
        Ok(())
    }
    pub fn add_global(&mut self, name: impl Into<Name>, body: Global) -> Result<(), KernelError> {
        let name = name.into();
        if self.contains(&name) {
            return Err(KernelError::DuplicateName(name));
        }
        self.globals.insert(name, body);
        Ok(())
    }
    pub fn process(&self, name: &Name) -> Option<&Process> {
        self.procs.get(name)
    }
    pub fn global(&self, name: &Name) -> Option<&Global> {
        self.globals.get(name)
    }
    pub fn processes(&self) -> impl Iterator<Item = (&Name, &Process)> {
        self.procs.iter()
    }
    pub fn globals(&self) -> impl Iterator<Item = (&Name, &Global)> {
        self.globals.iter()
    }
    /// A name not yet used, built from `prefix`.
    pub fn fresh_name(&self, prefix: &str) -> Name {
        (0..)
            .map(|i| Name::new(&format!("{prefix}{i}")))
            .find(|n| !self.contains(n))
            .expect("unbounded supply of names")
    }
    /// Union of two environments; names defined in both must agree.
    pub fn merged(&self, other: &DefEnv) -> Result<DefEnv, KernelError> {
        let mut out = self.clone();
        for (n, p) in &other.procs {
            match out.procs.get(n) {
                Some(q) if q == p => {}
                Some(_) => return Err(KernelError::DuplicateName(n.clone())),
                None if out.globals.contains_key(n) => return Err(KernelError::DuplicateName(n.clone())),
                None => {
                    out.procs.insert(n.clone(), p.clone());
                }
            }
        }
        for (n, g) in &other.globals {
            match out.globals.get(n) {
                Some(h) if h == g => {}
                Some(_) => return Err(KernelError::DuplicateName(n.clone())),
                None if out.procs.contains_key(n) => return Err(KernelError::DuplicateName(n.clone())),
                None => {
                    out.globals.insert(n.clone(), g.clone());
                }
            }
        }
        Ok(out)
    }

    /// Check that every reference resolves and every recursion is guarded.
    pub fn validate(&self) -> Result<(), KernelError> {
        for (_, body) in self.procs.iter() {
            self.check_process(body)?;
        }
        for (_, body) in self.globals.iter() {
            self.check_global(body)?;
        }
        Ok(())
    }

    /// Check that all names reachable from `p` resolve and are guarded.
    pub fn check_process(&self, p: &Process) -> Result<(), KernelError> {
        let mut seen = HashSet::new();
        let mut todo = vec![p.clone()];
        while let Some(t) = todo.pop() {
            let t = unfold_process(&t, self)?;
            if seen.insert(t.clone()) {
                todo.extend(t.children());
            }
        }
        Ok(())
    }

    /// Check that all names reachable from `g` resolve and are guarded.
    pub fn check_global(&self, g: &Global) -> Result<(), KernelError> {
        let mut seen = HashSet::new();
        let mut todo = vec![g.clone()];
        while let Some(t) = todo.pop() {
            let t = unfold_global(&t, self)?;
            if seen.insert(t.clone()) {
                todo.extend(t.edges().into_iter().map(|e| e.1));
            }
        }
        Ok(())
    }

    /// Unfold, assuming the environment has been validated.
    pub fn whnf_p(&self, p: &Process) -> Process {
        unfold_process(p, self).unwrap_or_else(|e| panic!("invalid process environment: {e}"))
    }

    /// Unfold, assuming the environment has been validated.
    pub fn whnf_g(&self, g: &Global) -> Global {
        unfold_global(g, self).unwrap_or_else(|e| panic!("invalid global environment: {e}"))
    }
}

/// Resolve top-level references until the head is a constructor.
pub fn unfold_process(p: &Process, env: &DefEnv) -> Result<Process, KernelError> {
    let mut cur = p.clone();
    let mut steps = 0usize;
    while let ProcessTerm::Ref(n) = &*cur {
        if steps > env.procs.len() {
            return Err(KernelError::Unguarded(n.clone()));
        }
        cur = env.procs.get(n).ok_or_else(|| KernelError::Dangling(n.clone()))?.clone();
        steps += 1;
    }
    Ok(cur)
}

/// Resolve top-level references until the head is a constructor.
pub fn unfold_global(g: &Global, env: &DefEnv) -> Result<Global, KernelError> {
    let mut cur = g.clone();
    let mut steps = 0usize;
    while let GlobalTerm::Ref(n) = &*cur {
        if steps > env.globals.len() {
            return Err(KernelError::Unguarded(n.clone()));
        }
        cur = env.globals.get(n).ok_or_else(|| KernelError::Dangling(n.clone()))?.clone();
        steps += 1;
    }
    Ok(cur)
}

/// All unfolded global nodes reachable from `g` (including `g` itself), in
/// breadth-first order.
pub fn reachable_globals(g: &Global, env: &DefEnv) -> Vec<Global> {
    let root = env.whnf_g(g);
    let mut seen: HashSet<Global> = HashSet::new();
    let mut out = Vec::new();
    let mut todo = VecDeque::from([root]);
    while let Some(n) = todo.pop_front() {
        if !seen.insert(n.clone()) {
            continue;
        }
        for (_, c) in n.edges() {
            todo.push_back(env.whnf_g(&c));
        }
        out.push(n);
    }
    out
}

/// All unfolded process nodes reachable from `p` (including `p`).
pub fn reachable_processes(p: &Process, env: &DefEnv) -> Vec<Process> {
    let root = env.whnf_p(p);
    let mut seen: HashSet<Process> = HashSet::new();
    let mut out = Vec::new();
    let mut todo = VecDeque::from([root]);
    while let Some(n) = todo.pop_front() {
        if !seen.insert(n.clone()) {
            continue;
        }
        for c in n.children() {
            todo.push_back(env.whnf_p(&c));
        }
        out.push(n);
    }
    out
}

/// Equality of the infinite unfoldings of two processes (bisimulation on
/// the term graphs).
pub fn regular_equal_p(a: &Process, b: &Process, env: &DefEnv) -> bool {
    let mut assumed: HashSet<(Process, Process)> = HashSet::new();
    let mut todo = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = todo.pop() {
        let x = env.whnf_p(&x);
        let y = env.whnf_p(&y);
        if x == y || !assumed.insert((x.clone(), y.clone())) {
            continue;
        }
        match (x.as_choice(), y.as_choice()) {
            (None, None) => {}
            (Some((dx, px, bx)), Some((dy, py, by))) => {
                if dx != dy || px != py || bx.len() != by.len() {
                    return false;
                }
                for ((lx, cx), (ly, cy)) in bx.iter().zip(by) {
                    if lx != ly {
                        return false;
                    }
                    todo.push((cx.clone(), cy.clone()));
                }
            }
            _ => return false,
        }
    }
    true
}

/// Equality of the infinite unfoldings of two global types.
pub fn regular_equal_g(a: &Global, b: &Global, env: &DefEnv) -> bool {
    let mut assumed: HashSet<(Global, Global)> = HashSet::new();
    let mut todo = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = todo.pop() {
        let x = env.whnf_g(&x);
        let y = env.whnf_g(&y);
        if x == y || !assumed.insert((x.clone(), y.clone())) {
            continue;
        }
        let (ex, ey) = (x.edges(), y.edges());
        if ex.len() != ey.len() || (ex.is_empty() && (x.is_end() != y.is_end())) {
            return false;
        }
        for ((cx, gx), (cy, gy)) in ex.into_iter().zip(ey) {
            if cx != cy {
                return false;
            }
            todo.push((gx, gy));
        }
    }
    true
}

/// `play(β)`: the singleton set of the player.
pub fn players_comm(c: &Comm) -> BTreeSet<Participant> {
    BTreeSet::from([c.player().clone()])
}

/// `play(G)`: the least set closed under the defining equations, i.e. the
/// players of all communications reachable in the term graph.
pub fn players_global(g: &Global, env: &DefEnv) -> BTreeSet<Participant> {
    reachable_globals(g, env).iter().filter_map(|n| n.head_player().cloned()).collect()
}

/// Whether the tree of `g` contains itself as a proper subtree.
pub fn is_cyclic(g: &Global, env: &DefEnv) -> bool {
    let root = env.whnf_g(g);
    let mut seen: HashSet<Global> = HashSet::new();
    let mut todo: Vec<Global> = root.edges().into_iter().map(|e| env.whnf_g(&e.1)).collect();
    while let Some(n) = todo.pop() {
        if !seen.insert(n.clone()) {
            continue;
        }
        if n == root || regular_equal_g(&n, &root, env) {
            return true;
        }
        todo.extend(n.edges().into_iter().map(|e| env.whnf_g(&e.1)));
    }
    false
}

/// Self-communications `pp!l` / `pp?l` reachable in `g` (accepted by the
/// syntax but flagged by diagnostics).
pub fn self_communications(g: &Global, env: &DefEnv) -> Vec<Comm> {
    let mut out: Vec<Comm> = reachable_globals(g, env)
        .iter()
        .flat_map(|n| n.edges())
        .map(|e| e.0)
        .filter(|c| c.is_self_comm())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// A network `Π p_i[[P_i]] ∥ M`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Network {
    pub procs: BTreeMap<Participant, Process>,
    pub queue: Queue,
}

impl Network {
    pub fn new(
        procs: impl IntoIterator<Item = (Participant, Process)>,
        queue: Queue,
    ) -> Result<Self, KernelError> {
        let mut map = BTreeMap::new();
        for (p, proc_) in procs {
            if map.insert(p.clone(), proc_).is_some() {
                return Err(KernelError::DuplicateParticipant(p));
            }
        }
        Ok(Network { procs: map, queue })
    }
    /// Participants whose process is not (structurally) `0`.
    pub fn active(&self, env: &DefEnv) -> BTreeSet<Participant> {
        self.procs
            .iter()
            .filter(|(_, p)| !env.whnf_p(p).is_inaction())
            .map(|(p, _)| p.clone())
            .collect()
    }
    /// The process of `p` (inaction if absent).
    pub fn process_of(&self, p: &Participant) -> Process {
        self.procs.get(p).cloned().unwrap_or_else(Process::zero)
    }
    /// Canonical form: inactive entries dropped, queue canonical, processes
    /// unfolded. Two networks with the same canonical form are congruent.
    pub fn canonical(&self, env: &DefEnv) -> Network {
        Network {
            procs: self
                .procs
                .iter()
                .map(|(p, t)| (p.clone(), env.whnf_p(t)))
                .filter(|(_, t)| !t.is_inaction())
                .collect(),
            queue: self.queue.canonical(),
        }
    }
}

/// An asynchronous type `G ∥ M`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct AsyncType {
    pub global: Global,
    pub queue: Queue,
}

impl AsyncType {
    pub fn new(global: Global, queue: Queue) -> Self {
        AsyncType { global, queue }
    }
    /// Unfolded global with canonical queue.
    pub fn canonical(&self, env: &DefEnv) -> AsyncType {
        AsyncType { global: env.whnf_g(&self.global), queue: self.queue.canonical() }
    }
}
