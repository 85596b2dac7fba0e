//! Backward live-variable analysis over a method body.

use super::ast::{Exp, Label};
use super::elaborate::{Instr, MethodInfo, StmtInfo};
use std::collections::{BTreeMap, BTreeSet};

/// A control-flow edge inside one method. Exceptional edges run from a statement
/// inside a try body to that try's handler head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlowEdge {
    pub from: Label,
    pub to: Label,
    pub exceptional: bool,
}

pub fn uses(instr: &Instr) -> BTreeSet<String> {
    match instr {
        Instr::Assign(_, e) => e.uses().into_iter().map(str::to_string).collect(),
        Instr::Return(v) | Instr::Throw(v) => BTreeSet::from([v.clone()]),
        Instr::Try { .. } | Instr::PopHandler => BTreeSet::new(),
    }
}

pub fn defs(instr: &Instr) -> Option<&str> {
    match instr {
        Instr::Assign(v, _) => Some(v),
        _ => None,
    }
}

/// Whether the statement can raise an exception before its definition takes effect.
pub fn may_throw(instr: &Instr) -> bool {
    matches!(instr, Instr::Throw(_) | Instr::Assign(_, Exp::Invoke(..)))
}

pub fn flow_edges(m: &MethodInfo, stmts: &BTreeMap<Label, StmtInfo>, succ: &BTreeMap<Label, Label>) -> Vec<FlowEdge> {
    let mut out = vec![];
    for l in &m.labels {
        if let Some(n) = succ.get(l) {
            out.push(FlowEdge { from: *l, to: *n, exceptional: false });
        }
        for t in &stmts[l].enclosing {
            if let Instr::Try { handler, .. } = &stmts[t].instr {
                out.push(FlowEdge { from: *l, to: *handler, exceptional: true });
            }
        }
    }
    out
}

/// live(l) = use(l) ∪ (live(succ l) \ def(l)) ∪ live(handler heads of enclosing trys).
///
/// Values flowing along an exceptional edge are not killed by the statement's
/// definition: a call that throws never completes its assignment.
pub fn compute_liveness(
    m: &MethodInfo,
    stmts: &BTreeMap<Label, StmtInfo>,
    succ: &BTreeMap<Label, Label>,
) -> BTreeMap<Label, BTreeSet<String>> {
    let edges = flow_edges(m, stmts, succ);
    let mut out: BTreeMap<Label, Vec<FlowEdge>> = BTreeMap::new();
    for e in edges {
        out.entry(e.from).or_default().push(e);
    }
    let mut live: BTreeMap<Label, BTreeSet<String>> = m.labels.iter().map(|l| (*l, BTreeSet::new())).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for l in m.labels.iter().rev() {
            let instr = &stmts[l].instr;
            let mut set = uses(instr);
            let def = defs(instr);
            for e in out.get(l).into_iter().flatten() {
                for v in &live[&e.to] {
                    if e.exceptional || Some(v.as_str()) != def {
                        set.insert(v.clone());
                    }
                }
            }
            if set != live[l] {
                live.insert(*l, set);
                changed = true;
            }
        }
    }
    live
}
