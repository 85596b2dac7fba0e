//! Abstract pushdown state space and the one-step transition function.

use crate::concrete::{self, KFrame};
use crate::syntax::{method_lookup, subtype, Exp, Instr, Label, LabeledProgram, MethodRef};
use crate::values::{Addr, Value};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pushdown,
    Finite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub k: usize,
    pub obj_sens: bool,
    pub gc: bool,
    pub liveness: bool,
    pub mode: Mode,
    /// One store shared by every node instead of one per node. Collection still
    /// runs per node at step time, but it filters a store that only grows.
    #[serde(default)]
    pub global_store: bool,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { k: 0, obj_sens: false, gc: true, liveness: true, mode: Mode::Pushdown, global_store: false }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let onoff = |b: bool| if b { "on" } else { "off" };
        write!(f, "k={}", self.k)?;
        if self.obj_sens {
            write!(f, ",obj-sens")?;
        }
        let mode = match self.mode {
            Mode::Pushdown => "pushdown",
            Mode::Finite => "finite",
        };
        write!(f, ",gc={},liveness={},mode={mode}", onoff(self.gc), onoff(self.liveness))?;
        if self.global_store {
            write!(f, ",store=global")?;
        }
        Ok(())
    }
}

fn parse_switch(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(format!("`{key}` expects on or off, got `{v}`")),
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pushdown" => Ok(Mode::Pushdown),
            "finite" => Ok(Mode::Finite),
            _ => Err(format!("unknown mode `{s}` (expected pushdown or finite)")),
        }
    }
}

/// Parses `k=1,obj-sens,gc=off,liveness=on,mode=finite,store=global`; omitted keys keep defaults.
impl FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut p = Policy::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, val) = item.split_once('=').unwrap_or((item, ""));
            match key {
                "k" => p.k = val.parse().map_err(|_| format!("bad k `{val}`"))?,
                "obj-sens" => p.obj_sens = val.is_empty() || parse_switch(key, val)?,
                "gc" => p.gc = parse_switch(key, val)?,
                "liveness" => p.liveness = parse_switch(key, val)?,
                "mode" => p.mode = val.parse()?,
                "store" => {
                    p.global_store = match val {
                        "global" => true,
                        "per-node" => false,
                        _ => return Err(format!("unknown store `{val}` (expected per-node or global)")),
                    }
                }
                _ => return Err(format!("unknown policy key `{key}`")),
            }
        }
        Ok(p)
    }
}

/// The most recent labels, newest first, at most k of them.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ATime(pub Vec<Label>);

impl fmt::Display for ATime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Label::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct APtr {
    pub site: Label,
    pub time: ATime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recv: Option<Label>,
}

impl APtr {
    pub fn initial() -> APtr {
        APtr { site: Label(0), time: ATime::default(), recv: None }
    }
}

impl fmt::Display for APtr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.site, self.time)?;
        if let Some(r) = self.recv {
            write!(f, "^{r}")?;
        }
        Ok(())
    }
}

pub type AValue = Value<APtr>;
pub type AAddr = Addr<APtr>;

pub fn tick(l: Label, t: &ATime, policy: &Policy) -> ATime {
    let mut out = Vec::with_capacity(policy.k);
    out.extend(std::iter::once(l).chain(t.0.iter().copied()).take(policy.k));
    ATime(out)
}

/// Allocates a frame or object pointer. `recv` is the receiver allocation site,
/// kept only under object sensitivity.
pub fn alloc(l: Label, t: &ATime, recv: Option<Label>, policy: &Policy) -> APtr {
    APtr { site: l, time: t.clone(), recv: if policy.obj_sens { recv } else { None } }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Frame {
    Call { var: String, ret: Label, fp: APtr },
    Handler { class: String, var: String, handler: Label, fp: APtr },
}

impl Frame {
    pub fn fp(&self) -> &APtr {
        match self {
            Frame::Call { fp, .. } | Frame::Handler { fp, .. } => fp,
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Call { var, ret, fp } => write!(f, "fun({var},{ret},{fp})"),
            Frame::Handler { class, var, handler, fp } => write!(f, "handle({class},{var},{handler},{fp})"),
        }
    }
}

/// A top-of-stack entry; `None` marks the empty stack.
pub type Top = Option<Frame>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "frame", rename_all = "lowercase")]
pub enum StackAction {
    Epsilon,
    Push(Frame),
    Pop(Frame),
}

impl fmt::Display for StackAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackAction::Epsilon => write!(f, "ε"),
            StackAction::Push(g) => write!(f, "{g}+"),
            StackAction::Pop(g) => write!(f, "{g}-"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("stack views differ by more than one frame")]
pub struct ViewMismatch;

/// Classifies a transition by comparing the stack views before and after it.
pub fn decide_stack_action(before: &[Frame], after: &[Frame]) -> Result<StackAction, ViewMismatch> {
    if before == after {
        Ok(StackAction::Epsilon)
    } else if !before.is_empty() && after == &before[1..] {
        Ok(StackAction::Pop(before[0].clone()))
    } else if !after.is_empty() && before == &after[1..] {
        Ok(StackAction::Push(after[0].clone()))
    } else {
        Err(ViewMismatch)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ControlState {
    pub label: Label,
    pub fp: APtr,
    pub time: ATime,
}

impl fmt::Display for ControlState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.label, self.fp, self.time)
    }
}

/// Finite map from addresses to value sets; join is pointwise union.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractStore(im::OrdMap<AAddr, im::OrdSet<AValue>>);

impl AbstractStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: &AAddr) -> Option<&im::OrdSet<AValue>> {
        self.0.get(a)
    }

    pub fn values(&self, a: &AAddr) -> impl Iterator<Item = &AValue> + '_ {
        self.0.get(a).into_iter().flatten()
    }

    pub fn contains(&self, a: &AAddr) -> bool {
        self.0.contains_key(a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AAddr, &im::OrdSet<AValue>)> + '_ {
        self.0.iter()
    }

    pub fn addrs(&self) -> impl Iterator<Item = &AAddr> + '_ {
        self.0.keys()
    }

    /// Weak update: joins `vals` into the binding for `a`. Empty sets add no binding.
    pub fn join_at(&mut self, a: AAddr, vals: impl IntoIterator<Item = AValue>) {
        let mut vals = vals.into_iter().peekable();
        if vals.peek().is_none() {
            return;
        }
        self.0.entry(a).or_default().extend(vals);
    }

    /// Joins `other` into `self`; returns whether `self` grew.
    pub fn join(&mut self, other: &AbstractStore) -> bool {
        if other.leq(self) {
            return false;
        }
        let merged = std::mem::take(&mut self.0).union_with(other.0.clone(), |a, b| a.union(b));
        self.0 = merged;
        true
    }

    pub fn leq(&self, other: &AbstractStore) -> bool {
        self.0.iter().all(|(a, vs)| other.0.get(a).is_some_and(|ws| vs.is_subset(ws)))
    }

    pub fn restrict(&self, keep: &BTreeSet<AAddr>) -> AbstractStore {
        AbstractStore(self.0.iter().filter(|(a, _)| keep.contains(*a)).map(|(a, v)| (a.clone(), v.clone())).collect())
    }
}

impl FromIterator<(AAddr, AValue)> for AbstractStore {
    fn from_iter<I: IntoIterator<Item = (AAddr, AValue)>>(iter: I) -> Self {
        let mut s = AbstractStore::new();
        for (a, v) in iter {
            s.join_at(a, [v]);
        }
        s
    }
}

impl Serialize for AbstractStore {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|(a, vs)| (a, vs.iter().collect::<Vec<_>>())))
    }
}

impl<'de> Deserialize<'de> for AbstractStore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<(AAddr, Vec<AValue>)> = Vec::deserialize(d)?;
        let mut s = AbstractStore::new();
        for (a, vs) in rows {
            s.join_at(a, vs);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Successor {
    pub state: ControlState,
    pub action: StackAction,
    pub store: AbstractStore,
}

/// Collects successors, merging those with equal (state, action) by joining stores.
#[derive(Default)]
struct Out(BTreeMap<(ControlState, StackAction), AbstractStore>);

impl Out {
    fn add(&mut self, state: ControlState, action: StackAction, store: AbstractStore) {
        match self.0.entry((state, action)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(store);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                e.get_mut().join(&store);
            }
        }
    }

    fn finish(self) -> Vec<Successor> {
        self.0.into_iter().map(|((state, action), store)| Successor { state, action, store }).collect()
    }
}

fn var(v: &str, fp: &APtr) -> AAddr {
    Addr::Var(v.to_string(), fp.clone())
}

/// Value sets of the given variables, or `None` if any of them is unbound.
fn read_all(store: &AbstractStore, vars: &[String], fp: &APtr) -> Option<Vec<im::OrdSet<AValue>>> {
    vars.iter().map(|v| store.get(&var(v, fp)).filter(|s| !s.is_empty()).cloned()).collect()
}

/// Stack effect of a rule, relative to the single visible top frame.
enum Effect {
    Same,
    Push(Frame),
    PopTop,
}

/// Rules that do not consult the stack. Returns `None` for return, throw and pophandler.
fn local_rules(
    lp: &LabeledProgram,
    q: &ControlState,
    store: &AbstractStore,
    policy: &Policy,
    emit: &mut dyn FnMut(ControlState, Effect, AbstractStore),
) -> Option<()> {
    let l = q.label;
    let t = tick(l, &q.time, policy);
    let fp = &q.fp;
    let at = |label: Label, fp: &APtr| ControlState { label, fp: fp.clone(), time: t.clone() };
    let next = lp.succ.get(&l).copied();
    match &lp.stmt(l).instr {
        Instr::Assign(v, e) => {
            let Some(next) = next else { return Some(()) };
            match e {
                Exp::Var(x) | Exp::Cast(_, x) => {
                    if let Some(vals) = store.get(&var(x, fp)).filter(|s| !s.is_empty()) {
                        let mut s = store.clone();
                        s.join_at(var(v, fp), vals.clone());
                        emit(at(next, fp), Effect::Same, s);
                    }
                }
                Exp::Field(x, f) => {
                    let vals: im::OrdSet<AValue> = store
                        .values(&var(x, fp))
                        .flat_map(|o| store.values(&Addr::Field(f.clone(), o.ptr.clone())).cloned())
                        .collect();
                    if !vals.is_empty() {
                        let mut s = store.clone();
                        s.join_at(var(v, fp), vals);
                        emit(at(next, fp), Effect::Same, s);
                    }
                }
                Exp::Invoke(r, m, args) => {
                    let Some(argvals) = read_all(store, args, fp) else { return Some(()) };
                    let ret = Frame::Call { var: v.clone(), ret: next, fp: fp.clone() };
                    for d0 in store.values(&var(r, fp)) {
                        let Ok(callee) = method_lookup(lp, &d0.class, m) else { continue };
                        if callee.params.len() != args.len() {
                            continue;
                        }
                        let new_fp = alloc(l, &t, Some(d0.ptr.site), policy);
                        let mut s = store.clone();
                        for (p, vals) in callee.params.iter().zip(&argvals) {
                            s.join_at(var(p, &new_fp), vals.clone());
                        }
                        s.join_at(var("this", &new_fp), [d0.clone()]);
                        emit(at(callee.entry, &new_fp), Effect::Push(ret.clone()), s);
                    }
                }
                Exp::New(c, args) => {
                    let Some(argvals) = read_all(store, args, fp) else { return Some(()) };
                    let Some(info) = lp.classes.get(c) else { return Some(()) };
                    let op = alloc(l, &t, fp.recv, policy);
                    let mut s = store.clone();
                    for (f, i) in &info.ctor_bindings {
                        s.join_at(Addr::Field(f.clone(), op.clone()), argvals[*i].clone());
                    }
                    s.join_at(var(v, fp), [Value { class: c.clone(), ptr: op }]);
                    emit(at(next, fp), Effect::Same, s);
                }
            }
            Some(())
        }
        Instr::Try { class, var: cv, body, handler } => {
            let h = Frame::Handler { class: class.clone(), var: cv.clone(), handler: *handler, fp: fp.clone() };
            emit(at(*body, fp), Effect::Push(h), store.clone());
            Some(())
        }
        _ => None,
    }
}

/// All abstract successors of `q` under store `store` with visible top frame `top`
/// (`None` is the empty-stack marker).
pub fn next(
    lp: &LabeledProgram,
    q: &ControlState,
    store: &AbstractStore,
    top: Option<&Frame>,
    policy: &Policy,
) -> Vec<Successor> {
    let before: Vec<Frame> = top.cloned().into_iter().collect();
    let mut out = Out::default();
    let mut emit = |state: ControlState, eff: Effect, s: AbstractStore| {
        let after: Vec<Frame> = match eff {
            Effect::Same => before.clone(),
            Effect::Push(g) => std::iter::once(g).chain(before.iter().cloned()).collect(),
            Effect::PopTop => vec![],
        };
        let action = decide_stack_action(&before, &after).expect("rules move at most one frame");
        out.add(state, action, s);
    };
    if local_rules(lp, q, store, policy, &mut emit).is_some() {
        return out.finish();
    }
    let l = q.label;
    let t = tick(l, &q.time, policy);
    let fp = &q.fp;
    let at = |label: Label, fp: &APtr| ControlState { label, fp: fp.clone(), time: t.clone() };
    let Some(top) = top else { return out.finish() };
    match &lp.stmt(l).instr {
        Instr::Return(v) => {
            let vals = store.get(&var(v, fp)).filter(|s| !s.is_empty());
            match top {
                Frame::Call { var: rv, ret, fp: cfp } => {
                    if let Some(vals) = vals {
                        let mut s = store.clone();
                        s.join_at(var(rv, cfp), vals.clone());
                        emit(at(*ret, cfp), Effect::PopTop, s);
                    }
                }
                Frame::Handler { .. } => emit(at(l, fp), Effect::PopTop, store.clone()),
            }
        }
        Instr::Throw(v) => {
            let Some(vals) = store.get(&var(v, fp)).filter(|s| !s.is_empty()) else { return out.finish() };
            match top {
                Frame::Call { .. } => emit(at(l, fp), Effect::PopTop, store.clone()),
                Frame::Handler { class, var: hv, handler, fp: hfp } => {
                    let (caught, missed): (Vec<&AValue>, Vec<&AValue>) =
                        vals.iter().partition(|d| subtype(lp, &d.class, class).unwrap_or(false));
                    if !caught.is_empty() {
                        let mut s = store.clone();
                        s.join_at(var(hv, hfp), caught.into_iter().cloned());
                        emit(at(*handler, hfp), Effect::PopTop, s);
                    }
                    if !missed.is_empty() {
                        emit(at(l, fp), Effect::PopTop, store.clone());
                    }
                }
            }
        }
        Instr::PopHandler => {
            if let (Frame::Handler { .. }, Some(n)) = (top, lp.succ.get(&l)) {
                emit(at(*n, fp), Effect::PopTop, store.clone());
            }
        }
        Instr::Assign(..) | Instr::Try { .. } => unreachable!("handled by local_rules"),
    }
    out.finish()
}

/// An activation: a method running under a frame pointer.
pub type Activation = (MethodRef, APtr);

/// Per-activation summaries used by the finite baseline in place of a stack.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteTables {
    /// Handler frames pushed in an activation.
    pub handlers: BTreeMap<Activation, BTreeSet<Frame>>,
    /// Call frames that may receive control from an activation; `None` is halt.
    pub returns: BTreeMap<Activation, BTreeSet<Top>>,
}

impl FiniteTables {
    pub fn handlers_of(&self, a: &Activation) -> impl Iterator<Item = &Frame> + '_ {
        self.handlers.get(a).into_iter().flatten()
    }

    pub fn returns_of(&self, a: &Activation) -> impl Iterator<Item = &Top> + '_ {
        self.returns.get(a).into_iter().flatten()
    }

    /// Call frames transitively below an activation, and every activation visited.
    pub fn caller_closure(&self, lp: &LabeledProgram, a: &Activation) -> (BTreeSet<Frame>, BTreeSet<Activation>) {
        let mut frames = BTreeSet::new();
        let mut seen = BTreeSet::from([a.clone()]);
        let mut stack = vec![a.clone()];
        while let Some(act) = stack.pop() {
            for c in self.returns_of(&act).flatten() {
                if let Frame::Call { ret, fp, .. } = c {
                    frames.insert(c.clone());
                    let up = (lp.stmt(*ret).method.clone(), fp.clone());
                    if seen.insert(up.clone()) {
                        stack.push(up);
                    }
                }
            }
        }
        (frames, seen)
    }
}

pub fn activation_of(lp: &LabeledProgram, q: &ControlState) -> Activation {
    (lp.stmt(q.label).method.clone(), q.fp.clone())
}

/// A handler entered by a throw, with the statement through which the exception
/// left the handler's own activation (the throw itself or a call site).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CatchWitness {
    pub handler_state: ControlState,
    pub via: Label,
}

#[derive(Clone, Debug, Default)]
pub struct FiniteStep {
    pub successors: Vec<Successor>,
    pub catches: Vec<CatchWitness>,
    pub new_handlers: Vec<(Activation, Frame)>,
    pub new_returns: Vec<(Activation, Top)>,
    /// Table entries consulted; the step must be redone when any of them grows.
    pub reads: BTreeSet<Activation>,
}

/// Finite-baseline transition: all edges are ε; returns and throws dispatch through
/// the per-activation tables instead of a stack.
pub fn next_finite(
    lp: &LabeledProgram,
    q: &ControlState,
    store: &AbstractStore,
    tables: &FiniteTables,
    policy: &Policy,
) -> FiniteStep {
    let mut res = FiniteStep::default();
    let mut out = Out::default();
    let me = activation_of(lp, q);
    let handled = local_rules(lp, q, store, policy, &mut |state, eff, s| {
        match eff {
            Effect::Push(f @ Frame::Call { .. }) => {
                let callee = (lp.stmt(state.label).method.clone(), state.fp.clone());
                res.new_returns.push((callee, Some(f)));
            }
            Effect::Push(f @ Frame::Handler { .. }) => res.new_handlers.push((me.clone(), f)),
            Effect::Same | Effect::PopTop => {}
        }
        out.add(state, StackAction::Epsilon, s);
    });
    if handled.is_some() {
        res.successors = out.finish();
        return res;
    }
    let l = q.label;
    let t = tick(l, &q.time, policy);
    let fp = &q.fp;
    let at = |label: Label, fp: &APtr| ControlState { label, fp: fp.clone(), time: t.clone() };
    match &lp.stmt(l).instr {
        Instr::Return(v) => {
            res.reads.insert(me.clone());
            if let Some(vals) = store.get(&var(v, fp)).filter(|s| !s.is_empty()) {
                for c in tables.returns_of(&me).flatten() {
                    if let Frame::Call { var: rv, ret, fp: cfp } = c {
                        let mut s = store.clone();
                        s.join_at(var(rv, cfp), vals.clone());
                        out.add(at(*ret, cfp), StackAction::Epsilon, s);
                    }
                }
            }
        }
        Instr::Throw(v) => {
            if let Some(vals) = store.get(&var(v, fp)).filter(|s| !s.is_empty()) {
                let mut seen = BTreeSet::new();
                let mut work = vec![(me.clone(), l)];
                while let Some((act, via)) = work.pop() {
                    if !seen.insert((act.clone(), via)) {
                        continue;
                    }
                    res.reads.insert(act.clone());
                    for h in tables.handlers_of(&act) {
                        let Frame::Handler { class, var: hv, handler, fp: hfp } = h else { continue };
                        let caught: Vec<AValue> =
                            vals.iter().filter(|d| subtype(lp, &d.class, class).unwrap_or(false)).cloned().collect();
                        if !caught.is_empty() {
                            let mut s = store.clone();
                            s.join_at(var(hv, hfp), caught);
                            let target = at(*handler, hfp);
                            res.catches.push(CatchWitness { handler_state: target.clone(), via });
                            out.add(target, StackAction::Epsilon, s);
                        }
                    }
                    for c in tables.returns_of(&act).flatten() {
                        if let Frame::Call { ret, fp: cfp, .. } = c {
                            if let Some(site) = lp.call_site_of(*ret) {
                                work.push(((lp.stmt(*ret).method.clone(), cfp.clone()), site));
                            }
                        }
                    }
                }
            }
        }
        Instr::PopHandler => {
            if let Some(n) = lp.succ.get(&l) {
                out.add(at(*n, fp), StackAction::Epsilon, store.clone());
            }
        }
        Instr::Assign(..) | Instr::Try { .. } => unreachable!("handled by local_rules"),
    }
    res.successors = out.finish();
    res
}

/// Abstraction of concrete pointers, frames and control states under a policy.
pub fn alpha_time(t: &concrete::Time, policy: &Policy) -> ATime {
    ATime(t.labels().take(policy.k).collect())
}

pub fn alpha_ptr(p: &concrete::Ptr, policy: &Policy) -> APtr {
    APtr { site: p.site, time: alpha_time(&p.time, policy), recv: if policy.obj_sens { p.recv } else { None } }
}

pub fn alpha_value(v: &concrete::CValue, policy: &Policy) -> AValue {
    Value { class: v.class.clone(), ptr: alpha_ptr(&v.ptr, policy) }
}

pub fn alpha_addr(a: &concrete::CAddr, policy: &Policy) -> AAddr {
    match a {
        Addr::Var(v, p) => Addr::Var(v.clone(), alpha_ptr(p, policy)),
        Addr::Field(f, p) => Addr::Field(f.clone(), alpha_ptr(p, policy)),
    }
}

pub fn alpha_frame(f: &KFrame, policy: &Policy) -> Frame {
    match f {
        KFrame::Fun { var, ret, fp } => Frame::Call { var: var.clone(), ret: *ret, fp: alpha_ptr(fp, policy) },
        KFrame::Handle { class, var, handler, fp } => {
            Frame::Handler { class: class.clone(), var: var.clone(), handler: *handler, fp: alpha_ptr(fp, policy) }
        }
    }
}

pub fn alpha_state(s: &concrete::ConcreteState, policy: &Policy) -> ControlState {
    ControlState { label: s.label, fp: alpha_ptr(&s.fp, policy), time: alpha_time(&s.time, policy) }
}

pub fn alpha_store(s: &concrete::Store, policy: &Policy) -> AbstractStore {
    s.iter().map(|(a, v)| (alpha_addr(a, policy), alpha_value(v, policy))).collect()
}
