//! Reference CESK interpreter. Deterministic, strong updates, one kont frame moved per step.

use crate::syntax::{method_lookup, subtype, Exp, Instr, Label, LabeledProgram};
use crate::values::{Addr, Value};
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;
use std::rc::Rc;

#[derive(Debug)]
struct TimeCell {
    label: Label,
    prev: Option<Rc<TimeCell>>,
}

/// Full label history, most recent first. `len` strictly increases along a run,
/// which is what makes allocated pointers fresh.
#[derive(Clone, Debug, Default)]
pub struct Time {
    len: usize,
    head: Option<Rc<TimeCell>>,
}

impl Time {
    pub fn tick(&self, l: Label) -> Time {
        Time { len: self.len + 1, head: Some(Rc::new(TimeCell { label: l, prev: self.head.clone() })) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Labels from most recent to oldest.
    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        let mut cur = self.head.as_deref();
        std::iter::from_fn(move || {
            let c = cur?;
            cur = c.prev.as_deref();
            Some(c.label)
        })
    }
}

impl PartialEq for Time {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            let same = match (&self.head, &other.head) {
                (Some(a), Some(b)) => Rc::ptr_eq(a, b),
                (None, None) => true,
                _ => false,
            };
            if same {
                Ordering::Equal
            } else {
                self.labels().cmp(other.labels())
            }
        })
    }
}

/// Frame or object pointer: allocation site, time of allocation, and the allocation
/// site of the receiver object in whose context it was created.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ptr {
    pub site: Label,
    pub time: Time,
    pub recv: Option<Label>,
}

impl Ptr {
    pub fn initial() -> Ptr {
        Ptr { site: Label(0), time: Time::default(), recv: None }
    }
}

impl fmt::Display for Ptr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.site, self.time.len())
    }
}

impl Serialize for Ptr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub type CValue = Value<Ptr>;
pub type CAddr = Addr<Ptr>;
pub type Store = im::OrdMap<CAddr, CValue>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KFrame {
    Fun { var: String, ret: Label, fp: Ptr },
    Handle { class: String, var: String, handler: Label, fp: Ptr },
}

#[derive(Debug)]
struct KontCell {
    frame: KFrame,
    next: Kont,
}

/// Continuation as a shared linked list of frames ending in halt (`None`).
#[derive(Clone, Debug, Default)]
pub struct Kont {
    depth: usize,
    head: Option<Rc<KontCell>>,
}

impl Kont {
    pub fn halt() -> Kont {
        Kont::default()
    }

    pub fn push(&self, frame: KFrame) -> Kont {
        Kont { depth: self.depth + 1, head: Some(Rc::new(KontCell { frame, next: self.clone() })) }
    }

    pub fn top(&self) -> Option<&KFrame> {
        self.head.as_deref().map(|c| &c.frame)
    }

    pub fn pop(&self) -> Kont {
        self.head.as_ref().map(|c| c.next.clone()).unwrap_or_default()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Frames from top to bottom.
    pub fn frames(&self) -> impl Iterator<Item = &KFrame> + '_ {
        let mut cur = self.head.as_deref();
        std::iter::from_fn(move || {
            let c = cur?;
            cur = c.next.head.as_deref();
            Some(&c.frame)
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConcreteState {
    pub label: Label,
    pub fp: Ptr,
    pub store: Store,
    pub kont: Kont,
    pub time: Time,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Halted(CValue),
    Uncaught(CValue),
    Stuck(ConcreteState, String),
    FuelExhausted(ConcreteState),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Halted(v) => write!(f, "halted with {v}"),
            Outcome::Uncaught(v) => write!(f, "uncaught exception {v}"),
            Outcome::Stuck(s, why) => write!(f, "stuck at {}: {why}", s.label),
            Outcome::FuelExhausted(s) => write!(f, "fuel exhausted at {}", s.label),
        }
    }
}

/// Result of a single step.
#[derive(Clone, Debug)]
pub enum Step {
    Next(ConcreteState),
    Halted(CValue),
    Uncaught(CValue),
    Stuck(String),
}

pub fn inject(lp: &LabeledProgram) -> ConcreteState {
    ConcreteState {
        label: lp.entry_method().entry,
        fp: Ptr::initial(),
        store: Store::new(),
        kont: Kont::halt(),
        time: Time::default(),
    }
}

/// Store delta binding the new object's fields, and the object pointer itself.
pub fn apply_constructor(
    lp: &LabeledProgram,
    class: &str,
    op: Ptr,
    args: &[CValue],
) -> Result<(Vec<(CAddr, CValue)>, Ptr), String> {
    let info = lp.classes.get(class).ok_or_else(|| format!("unknown class `{class}`"))?;
    if args.len() != info.ctor_arity {
        return Err(format!("`{class}` constructor takes {} arguments, got {}", info.ctor_arity, args.len()));
    }
    let delta =
        info.ctor_bindings.iter().map(|(f, i)| (Addr::Field(f.clone(), op.clone()), args[*i].clone())).collect();
    Ok((delta, op))
}

fn read(store: &Store, v: &str, fp: &Ptr) -> Result<CValue, String> {
    store.get(&Addr::Var(v.to_string(), fp.clone())).cloned().ok_or_else(|| format!("unbound variable `{v}`"))
}

pub fn step(lp: &LabeledProgram, st: &ConcreteState) -> Step {
    match step_inner(lp, st) {
        Ok(s) => s,
        Err(why) => Step::Stuck(why),
    }
}

fn step_inner(lp: &LabeledProgram, st: &ConcreteState) -> Result<Step, String> {
    let l = st.label;
    let info = lp.stmts.get(&l).ok_or_else(|| format!("unknown label {l}"))?;
    let t = st.time.tick(l);
    let fp = &st.fp;
    let next_label = || lp.succ.get(&l).copied().ok_or_else(|| format!("no successor after {l}"));
    let goto = |label: Label, fp: Ptr, store: Store, kont: Kont| {
        Step::Next(ConcreteState { label, fp, store, kont, time: t.clone() })
    };
    let var = |v: &str| Addr::Var(v.to_string(), fp.clone());
    Ok(match &info.instr {
        Instr::Assign(v, e) => match e {
            Exp::Var(x) | Exp::Cast(_, x) => {
                let d = read(&st.store, x, fp)?;
                goto(next_label()?, fp.clone(), st.store.update(var(v), d), st.kont.clone())
            }
            Exp::Field(x, f) => {
                let obj = read(&st.store, x, fp)?;
                let d = st
                    .store
                    .get(&Addr::Field(f.clone(), obj.ptr.clone()))
                    .cloned()
                    .ok_or_else(|| format!("object {obj} has no field `{f}`"))?;
                goto(next_label()?, fp.clone(), st.store.update(var(v), d), st.kont.clone())
            }
            Exp::Invoke(r, m, args) => {
                let d0 = read(&st.store, r, fp)?;
                let callee = method_lookup(lp, &d0.class, m).map_err(|e| e.to_string())?;
                if callee.params.len() != args.len() {
                    return Err(format!("{} expects {} arguments", callee.id, callee.params.len()));
                }
                let new_fp = Ptr { site: l, time: t.clone(), recv: Some(d0.ptr.site) };
                let mut store = st.store.clone();
                for (p, a) in callee.params.iter().zip(args) {
                    store.insert(Addr::Var(p.clone(), new_fp.clone()), read(&st.store, a, fp)?);
                }
                store.insert(Addr::Var("this".into(), new_fp.clone()), d0);
                let kont = st.kont.push(KFrame::Fun { var: v.clone(), ret: next_label()?, fp: fp.clone() });
                goto(callee.entry, new_fp, store, kont)
            }
            Exp::New(c, args) => {
                let vals = args.iter().map(|a| read(&st.store, a, fp)).collect::<Result<Vec<_>, _>>()?;
                let op = Ptr { site: l, time: t.clone(), recv: fp.recv };
                let (delta, op) = apply_constructor(lp, c, op, &vals)?;
                let mut store = st.store.clone();
                store.extend(delta);
                store.insert(var(v), Value { class: c.clone(), ptr: op });
                goto(next_label()?, fp.clone(), store, st.kont.clone())
            }
        },
        Instr::Try { class, var: cv, handler, body } => {
            let kont = st.kont.push(KFrame::Handle {
                class: class.clone(),
                var: cv.clone(),
                handler: *handler,
                fp: fp.clone(),
            });
            goto(*body, fp.clone(), st.store.clone(), kont)
        }
        Instr::PopHandler => match st.kont.top() {
            Some(KFrame::Handle { .. }) => goto(next_label()?, fp.clone(), st.store.clone(), st.kont.pop()),
            _ => return Err("pophandler without a handler frame on top".into()),
        },
        Instr::Return(v) => {
            let d = read(&st.store, v, fp)?;
            match st.kont.top() {
                None => Step::Halted(d),
                Some(KFrame::Fun { var, ret, fp: caller }) => {
                    let store = st.store.update(Addr::Var(var.clone(), caller.clone()), d);
                    goto(*ret, caller.clone(), store, st.kont.pop())
                }
                Some(KFrame::Handle { .. }) => goto(l, fp.clone(), st.store.clone(), st.kont.pop()),
            }
        }
        Instr::Throw(v) => {
            let d = read(&st.store, v, fp)?;
            match st.kont.top() {
                None => Step::Uncaught(d),
                Some(KFrame::Handle { class, var, handler, fp: hfp })
                    if subtype(lp, &d.class, class).map_err(|e| e.to_string())? =>
                {
                    let store = st.store.update(Addr::Var(var.clone(), hfp.clone()), d);
                    goto(*handler, hfp.clone(), store, st.kont.pop())
                }
                Some(_) => goto(l, fp.clone(), st.store.clone(), st.kont.pop()),
            }
        }
    })
}

pub const DEFAULT_FUEL: usize = 100_000;

/// Runs until a terminal configuration or until the trace holds `fuel` states
/// (the initial state included).
pub fn run(lp: &LabeledProgram, s0: ConcreteState, fuel: usize) -> (Outcome, Vec<ConcreteState>) {
    let mut trace = vec![s0];
    loop {
        let cur = trace.last().expect("trace is never empty");
        if trace.len() >= fuel.max(1) {
            return (Outcome::FuelExhausted(cur.clone()), trace);
        }
        match step(lp, cur) {
            Step::Next(s) => trace.push(s),
            Step::Halted(v) => return (Outcome::Halted(v), trace),
            Step::Uncaught(v) => return (Outcome::Uncaught(v), trace),
            Step::Stuck(why) => return (Outcome::Stuck(cur.clone(), why), trace),
        }
    }
}

/// Addresses the next step of `st` reads, in the order the rule reads them.
pub fn reads(lp: &LabeledProgram, st: &ConcreteState) -> Vec<CAddr> {
    let var = |v: &str| Addr::Var(v.to_string(), st.fp.clone());
    let Some(info) = lp.stmts.get(&st.label) else { return vec![] };
    match &info.instr {
        Instr::Assign(_, e) => {
            let mut out: Vec<CAddr> = e.uses().into_iter().map(var).collect();
            if let Exp::Field(x, f) = e {
                if let Some(obj) = st.store.get(&var(x)) {
                    out.push(Addr::Field(f.clone(), obj.ptr.clone()));
                }
            }
            out
        }
        Instr::Return(v) | Instr::Throw(v) => vec![var(v)],
        Instr::Try { .. } | Instr::PopHandler => vec![],
    }
}
