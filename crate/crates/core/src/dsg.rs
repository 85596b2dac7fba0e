//! Dyck state graph synthesis with ε-summary maintenance.
//!
//! Every node keeps the join of the stores its predecessors produced. Collection
//! happens when a node is stepped, against its current possible-stack-frames set;
//! the collected store is never written back, because that set can still grow.
//! With `store=global` all nodes share one store, and growing it requeues every node.

use crate::domain::{
    activation_of, next, next_finite, APtr, AbstractStore, Activation, ControlState, FiniteTables, Frame, Mode, Policy,
    StackAction, Top,
};
use crate::gc::eagc;
use crate::syntax::{Instr, Label, LabeledProgram};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub nodes: usize,
    pub edges: usize,
    pub seconds: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { nodes: 200_000, edges: 2_000_000, seconds: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("{what} budget exhausted after {nodes} nodes and {edges} edges")]
    BudgetExhausted { what: &'static str, nodes: usize, edges: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: ControlState,
    pub action: StackAction,
    pub to: ControlState,
}

/// A throw node whose exception enters `handler`, having left the handler's own
/// activation through `via` (the throw statement itself or a call site).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Catch {
    pub throw: ControlState,
    pub via: Label,
    pub handler: ControlState,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dsg {
    pub policy: Policy,
    pub initial: ControlState,
    pub nodes: BTreeSet<ControlState>,
    /// Transition edges produced by the abstract rules.
    pub edges: BTreeSet<Edge>,
    /// The ε-closure: (s, s') whenever a net-empty-stack path leads from s to s'.
    pub summaries: BTreeSet<(ControlState, ControlState)>,
    /// Per-node store, collected against the final frame summary when gc is on.
    pub stores: BTreeMap<ControlState, AbstractStore>,
    pub top_frames: BTreeMap<ControlState, BTreeSet<Top>>,
    pub stack_frames: BTreeMap<ControlState, BTreeSet<Top>>,
    pub catches: BTreeSet<Catch>,
}

impl Dsg {
    pub fn successors<'a>(&'a self, s: &'a ControlState) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| &e.from == s)
    }

    pub fn summary_targets<'a>(&'a self, s: &'a ControlState) -> impl Iterator<Item = &'a ControlState> + 'a {
        self.summaries.iter().filter(move |(a, _)| a == s).map(|(_, b)| b)
    }

    pub fn store(&self, s: &ControlState) -> Option<&AbstractStore> {
        self.stores.get(s)
    }
}

type NodeId = usize;

/// Successors of `q` with their stores, after collecting against `psf`.
pub fn step(
    lp: &LabeledProgram,
    q: &ControlState,
    top: Option<&Frame>,
    psf: &BTreeSet<Top>,
    store: &AbstractStore,
    policy: &Policy,
) -> Vec<(StackAction, ControlState, AbstractStore)> {
    let collected = eagc(q, store, psf.iter().flatten(), lp, policy);
    next(lp, q, &collected, top, policy).into_iter().map(|s| (s.action, s.state, s.store)).collect()
}

pub fn step_ipds(
    lp: &LabeledProgram,
    q: &ControlState,
    top: Option<&Frame>,
    psf: &BTreeSet<Top>,
    store: &AbstractStore,
    policy: &Policy,
) -> Vec<(StackAction, ControlState)> {
    step(lp, q, top, psf, store, policy).into_iter().map(|(a, s, _)| (a, s)).collect()
}

struct Engine<'a> {
    lp: &'a LabeledProgram,
    policy: &'a Policy,
    budget: &'a Budget,
    started: Instant,

    states: Vec<ControlState>,
    ids: BTreeMap<ControlState, NodeId>,
    raw: Vec<AbstractStore>,
    global: AbstractStore,
    edges: BTreeSet<(NodeId, StackAction, NodeId)>,

    eps_succ: Vec<BTreeSet<NodeId>>,
    eps_pred: Vec<BTreeSet<NodeId>>,
    tf: Vec<BTreeSet<Top>>,
    psf: Vec<BTreeSet<Top>>,
    pfp: Vec<BTreeMap<Frame, BTreeSet<NodeId>>>,
    nep: Vec<BTreeSet<NodeId>>,
    /// p -> nodes whose stack-frame set includes that of p.
    psf_deps: Vec<BTreeSet<NodeId>>,
    pops: Vec<BTreeMap<Frame, BTreeSet<NodeId>>>,
    pending_pairs: VecDeque<(NodeId, NodeId)>,

    worklist: VecDeque<NodeId>,
    queued: Vec<bool>,

    tables: FiniteTables,
    readers: BTreeMap<Activation, BTreeSet<NodeId>>,
    finite_catches: BTreeSet<(NodeId, Label, NodeId)>,
}

impl<'a> Engine<'a> {
    fn new(lp: &'a LabeledProgram, policy: &'a Policy, budget: &'a Budget) -> Self {
        Engine {
            lp,
            policy,
            budget,
            started: Instant::now(),
            states: vec![],
            ids: BTreeMap::new(),
            raw: vec![],
            global: AbstractStore::new(),
            edges: BTreeSet::new(),
            eps_succ: vec![],
            eps_pred: vec![],
            tf: vec![],
            psf: vec![],
            pfp: vec![],
            nep: vec![],
            psf_deps: vec![],
            pops: vec![],
            pending_pairs: VecDeque::new(),
            worklist: VecDeque::new(),
            queued: vec![],
            tables: FiniteTables::default(),
            readers: BTreeMap::new(),
            finite_catches: BTreeSet::new(),
        }
    }

    fn enqueue(&mut self, n: NodeId) {
        if !self.queued[n] {
            self.queued[n] = true;
            self.worklist.push_back(n);
        }
    }

    fn node(&mut self, s: ControlState) -> NodeId {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.states.len();
        self.ids.insert(s.clone(), id);
        self.states.push(s);
        self.raw.push(AbstractStore::new());
        self.eps_succ.push(BTreeSet::new());
        self.eps_pred.push(BTreeSet::new());
        self.tf.push(BTreeSet::new());
        self.psf.push(BTreeSet::new());
        self.pfp.push(BTreeMap::new());
        self.nep.push(BTreeSet::new());
        self.psf_deps.push(BTreeSet::new());
        self.pops.push(BTreeMap::new());
        self.queued.push(false);
        self.enqueue(id);
        id
    }

    fn add_tf(&mut self, n: NodeId, f: Top) {
        let mut work = vec![(n, f)];
        while let Some((n, f)) = work.pop() {
            if self.tf[n].insert(f.clone()) {
                self.enqueue(n);
                self.add_psf(n, f.clone());
                work.extend(self.eps_succ[n].iter().map(|&m| (m, f.clone())));
            }
        }
    }

    fn add_psf(&mut self, n: NodeId, f: Top) {
        let mut work = vec![(n, f)];
        while let Some((n, f)) = work.pop() {
            if self.psf[n].insert(f.clone()) {
                if self.policy.gc {
                    self.enqueue(n);
                }
                work.extend(self.psf_deps[n].iter().map(|&m| (m, f.clone())));
            }
        }
    }

    fn add_psf_dep(&mut self, p: NodeId, n: NodeId) {
        if self.psf_deps[p].insert(n) {
            for f in self.psf[p].clone() {
                self.add_psf(n, f);
            }
        }
    }

    fn add_pfp(&mut self, n: NodeId, f: &Frame, q: NodeId) {
        let mut work = vec![n];
        while let Some(n) = work.pop() {
            if self.pfp[n].entry(f.clone()).or_default().insert(q) {
                for &d in self.pops[n].get(f).into_iter().flatten() {
                    self.pending_pairs.push_back((q, d));
                }
                work.extend(self.eps_succ[n].iter().copied());
            }
        }
    }

    /// Adds every (p, n) with p ∈ G⃖(a) ∪ {a}, n ∈ G⃗(b) ∪ {b}, transferring frame information forward.
    fn drain_pairs(&mut self) {
        while let Some((a, b)) = self.pending_pairs.pop_front() {
            let preds: Vec<NodeId> = self.eps_pred[a].iter().copied().chain([a]).collect();
            let nexts: Vec<NodeId> = self.eps_succ[b].iter().copied().chain([b]).collect();
            for &p in &preds {
                for &n in &nexts {
                    if !self.eps_succ[p].insert(n) {
                        continue;
                    }
                    self.eps_pred[n].insert(p);
                    for f in self.tf[p].clone() {
                        self.add_tf(n, f);
                    }
                    for (f, qs) in self.pfp[p].clone() {
                        for q in qs {
                            self.add_pfp(n, &f, q);
                        }
                    }
                    self.add_psf_dep(p, n);
                }
            }
        }
    }

    fn add_edge(&mut self, s: NodeId, action: StackAction, d: NodeId) {
        if !self.edges.insert((s, action.clone(), d)) {
            return;
        }
        match action {
            StackAction::Epsilon => self.pending_pairs.push_back((s, d)),
            StackAction::Push(g) => {
                let targets: Vec<NodeId> = self.eps_succ[d].iter().copied().chain([d]).collect();
                for t in targets {
                    self.add_tf(t, Some(g.clone()));
                    self.add_pfp(t, &g, s);
                    self.nep[t].insert(s);
                    self.add_psf_dep(s, t);
                }
            }
            StackAction::Pop(g) => {
                self.pops[s].entry(g.clone()).or_default().insert(d);
                for &q in self.pfp[s].get(&g).into_iter().flatten() {
                    self.pending_pairs.push_back((q, d));
                }
            }
        }
        self.drain_pairs();
    }

    fn check_budget(&self) -> Result<(), AnalysisError> {
        let what = if self.states.len() > self.budget.nodes {
            "node"
        } else if self.edges.len() > self.budget.edges {
            "edge"
        } else if self.started.elapsed() > Duration::from_secs_f64(self.budget.seconds) {
            "time"
        } else {
            return Ok(());
        };
        Err(AnalysisError::BudgetExhausted { what, nodes: self.states.len(), edges: self.edges.len() })
    }

    fn frames_for_gc(&mut self, s: NodeId) -> BTreeSet<Frame> {
        match self.policy.mode {
            Mode::Pushdown => self.psf[s].iter().flatten().cloned().collect(),
            Mode::Finite => {
                let act = activation_of(self.lp, &self.states[s]);
                let (frames, visited) = self.tables.caller_closure(self.lp, &act);
                for a in visited {
                    self.readers.entry(a).or_default().insert(s);
                }
                frames
            }
        }
    }

    fn raw_store(&self, s: NodeId) -> &AbstractStore {
        if self.policy.global_store {
            &self.global
        } else {
            &self.raw[s]
        }
    }

    fn collected(&mut self, s: NodeId) -> AbstractStore {
        if !self.policy.gc {
            return self.raw_store(s).clone();
        }
        let frames = self.frames_for_gc(s);
        eagc(&self.states[s], self.raw_store(s), &frames, self.lp, self.policy)
    }

    fn deliver(&mut self, s: NodeId, action: StackAction, state: ControlState, store: &AbstractStore) {
        let d = self.node(state);
        if self.policy.global_store {
            if self.global.join(store) {
                (0..self.states.len()).for_each(|n| self.enqueue(n));
            }
        } else if self.raw[d].join(store) {
            self.enqueue(d);
        }
        self.add_edge(s, action, d);
    }

    fn step_pushdown(&mut self, s: NodeId) {
        let store = self.collected(s);
        let q = self.states[s].clone();
        for top in self.tf[s].clone() {
            for succ in next(self.lp, &q, &store, top.as_ref(), self.policy) {
                self.deliver(s, succ.action, succ.state, &succ.store);
            }
        }
    }

    fn step_finite(&mut self, s: NodeId) {
        let store = self.collected(s);
        let q = self.states[s].clone();
        let res = next_finite(self.lp, &q, &store, &self.tables, self.policy);
        for a in res.reads {
            self.readers.entry(a).or_default().insert(s);
        }
        for (act, f) in res.new_handlers {
            if self.tables.handlers.entry(act.clone()).or_default().insert(f) {
                self.wake(&act);
            }
        }
        for (act, c) in res.new_returns {
            if self.tables.returns.entry(act.clone()).or_default().insert(c) {
                self.wake(&act);
            }
        }
        for succ in res.successors {
            self.deliver(s, succ.action, succ.state, &succ.store);
        }
        for c in res.catches {
            let h = self.node(c.handler_state);
            self.finite_catches.insert((s, c.via, h));
        }
    }

    fn wake(&mut self, act: &Activation) {
        let readers: Vec<NodeId> = self.readers.get(act).into_iter().flatten().copied().collect();
        for r in readers {
            self.enqueue(r);
        }
    }

    fn run(&mut self) -> Result<(), AnalysisError> {
        while let Some(s) = self.worklist.pop_front() {
            self.queued[s] = false;
            match self.policy.mode {
                Mode::Pushdown => self.step_pushdown(s),
                Mode::Finite => self.step_finite(s),
            }
            self.check_budget()?;
        }
        Ok(())
    }

    /// Pop edges that leave a throw or return on the same statement and frame
    /// pointer, indexed by target: the frames passed over in place.
    fn in_place_pops(&self) -> BTreeMap<NodeId, Vec<(NodeId, Frame)>> {
        let mut out: BTreeMap<NodeId, Vec<(NodeId, Frame)>> = BTreeMap::new();
        for (s, action, d) in &self.edges {
            let StackAction::Pop(f) = action else { continue };
            let (a, b) = (&self.states[*s], &self.states[*d]);
            if s != d && a.label == b.label && a.fp == b.fp {
                out.entry(*d).or_default().push((*s, f.clone()));
            }
        }
        out
    }

    /// Statements through which an exception caught by `h` at throw node `t` left
    /// the handler's activation.
    ///
    /// The frame sitting directly above `h` (skipping handlers of the same
    /// activation) decides: a call frame names its call site. That frame is found
    /// either still on the stack at `t` or on an in-place pop edge leading into `t`.
    fn vias(&self, t: NodeId, h: &Frame, in_place: &BTreeMap<NodeId, Vec<(NodeId, Frame)>>) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        let ts = &self.states[t];
        let hfp: &APtr = h.fp();
        let Frame::Handler { handler, .. } = h else { return out };
        let lexically_inside =
            self.lp.stmt(ts.label).enclosing.iter().any(|tr| self.lp.handler_of(*tr) == Some(*handler));
        if &ts.fp == hfp && lexically_inside {
            out.insert(ts.label);
        }
        let mut seen = BTreeSet::new();
        let mut work = vec![(t, h.clone())];
        while let Some((n, below)) = work.pop() {
            if !seen.insert((n, below.clone())) {
                continue;
            }
            let below = Some(below);
            let pushed_on = |m: NodeId, f: &Frame| {
                self.pfp[m].get(f).is_some_and(|qs| qs.iter().any(|&q| self.tf[q].contains(&below)))
            };
            let on_stack = self.pfp[n].keys().map(|f| (n, f));
            let passed = in_place.get(&n).into_iter().flatten().map(|(m, f)| (*m, f));
            for (m, f) in on_stack.chain(passed) {
                if f.fp() != hfp || !pushed_on(m, f) {
                    continue;
                }
                match f {
                    Frame::Call { ret, .. } => out.extend(self.lp.call_site_of(*ret)),
                    Frame::Handler { .. } => work.push((m, f.clone())),
                }
            }
        }
        if out.is_empty() {
            out.insert(ts.label);
        }
        out
    }

    fn finish(self) -> Dsg {
        let st = |id: NodeId| self.states[id].clone();
        let mut catches = BTreeSet::new();
        match self.policy.mode {
            Mode::Pushdown => {
                let in_place = self.in_place_pops();
                for (s, action, d) in &self.edges {
                    let StackAction::Pop(h @ Frame::Handler { handler, .. }) = action else { continue };
                    let is_throw = matches!(self.lp.stmt(self.states[*s].label).instr, Instr::Throw(_));
                    if is_throw && self.states[*d].label == *handler {
                        for via in self.vias(*s, h, &in_place) {
                            catches.insert(Catch { throw: st(*s), via, handler: st(*d) });
                        }
                    }
                }
            }
            Mode::Finite => {
                for (s, via, h) in &self.finite_catches {
                    catches.insert(Catch { throw: st(*s), via: *via, handler: st(*h) });
                }
            }
        }
        let mut stores = BTreeMap::new();
        let mut this = self;
        for id in 0..this.states.len() {
            let store = this.collected(id);
            stores.insert(this.states[id].clone(), store);
        }
        let st = |id: NodeId| this.states[id].clone();
        let per_node = |m: &Vec<BTreeSet<Top>>| -> BTreeMap<ControlState, BTreeSet<Top>> {
            m.iter().enumerate().map(|(i, v)| (st(i), v.clone())).collect()
        };
        Dsg {
            policy: this.policy.clone(),
            initial: st(0),
            nodes: this.states.iter().cloned().collect(),
            edges: this.edges.iter().map(|(s, a, d)| Edge { from: st(*s), action: a.clone(), to: st(*d) }).collect(),
            summaries: this
                .eps_succ
                .iter()
                .enumerate()
                .flat_map(|(p, ns)| ns.iter().map(move |&n| (p, n)))
                .map(|(p, n)| (st(p), st(n)))
                .collect(),
            stores,
            top_frames: per_node(&this.tf),
            stack_frames: per_node(&this.psf),
            catches,
        }
    }
}

pub fn initial_state(lp: &LabeledProgram) -> ControlState {
    ControlState { label: lp.entry_method().entry, fp: APtr::initial(), time: Default::default() }
}

/// Computes the Dyck state graph of `lp` under `policy`.
pub fn analyze(lp: &LabeledProgram, policy: &Policy, budget: &Budget) -> Result<Dsg, AnalysisError> {
    let mut e = Engine::new(lp, policy, budget);
    let q0 = e.node(initial_state(lp));
    e.add_tf(q0, None);
    if policy.mode == Mode::Finite {
        e.tables.returns.insert((lp.entry.clone(), APtr::initial()), BTreeSet::from([None]));
    }
    e.run()?;
    Ok(e.finish())
}
