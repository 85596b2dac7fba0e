//! Independent checkers: concrete trace replay, a bounded-stack explorer over the
//! graph's transition edges, and a naive reachability closure.

use anfj_core::concrete::{inject, reads, run, ConcreteState};
use anfj_core::domain::{
    alpha_addr, alpha_frame, alpha_state, alpha_value, AAddr, AbstractStore, ControlState, Frame, Mode, Policy,
    StackAction, Top,
};
use anfj_core::dsg::{Dsg, Edge};
use anfj_core::syntax::LabeledProgram;
use anfj_core::values::Addr;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

fn concrete_action(a: &ConcreteState, b: &ConcreteState, policy: &Policy) -> StackAction {
    match b.kont.depth() as isize - a.kont.depth() as isize {
        0 => StackAction::Epsilon,
        1 => StackAction::Push(alpha_frame(b.kont.top().unwrap(), policy)),
        -1 => StackAction::Pop(alpha_frame(a.kont.top().unwrap(), policy)),
        d => panic!("kont depth changed by {d} in one step"),
    }
}

/// Replays the concrete run of `lp` against `dsg`; returns every violation found.
///
/// Checks that each abstracted state is a node, each concrete kont change is matched
/// by an edge, and each value read at step m is retained, with that value, at every
/// abstracted state since the binding was last written.
pub fn replay(lp: &LabeledProgram, policy: &Policy, dsg: &Dsg, fuel: usize) -> Vec<String> {
    let (_, trace) = run(lp, inject(lp), fuel);
    // Finite mode has no intermediate states for frames passed over in place, so
    // those concrete steps are folded into the step that leaves the statement.
    let kept: Vec<usize> = (0..trace.len())
        .filter(|&i| {
            policy.mode == Mode::Pushdown
                || i == 0
                || !(trace[i].label == trace[i - 1].label
                    && trace[i].fp == trace[i - 1].fp
                    && trace[i].kont.depth() < trace[i - 1].kont.depth())
        })
        .collect();
    let states: Vec<ControlState> = kept.iter().map(|&i| alpha_state(&trace[i], policy)).collect();
    let mut bad = vec![];
    for (j, q) in states.iter().enumerate() {
        let i = kept[j];
        if !dsg.nodes.contains(q) {
            bad.push(format!("step {i}: state {q} is not a node"));
            continue;
        }
        if let Some(&ni) = kept.get(j + 1) {
            let action = match policy.mode {
                Mode::Pushdown => concrete_action(&trace[i], &trace[ni], policy),
                Mode::Finite => StackAction::Epsilon,
            };
            let e = Edge { from: q.clone(), action, to: states[j + 1].clone() };
            if !dsg.edges.contains(&e) {
                bad.push(format!("step {i}: no edge {} --{}--> {}", e.from, e.action, e.to));
            }
        }
        for a in reads(lp, &trace[i]) {
            let Some(v) = trace[i].store.get(&a) else { continue };
            let (aa, av) = (alpha_addr(&a, policy), alpha_value(v, policy));
            let mut m = j;
            loop {
                let held = dsg.stores.get(&states[m]).is_some_and(|s| s.values(&aa).any(|w| *w == av));
                if !held {
                    bad.push(format!("step {}: {aa} lost {av}, read at step {i}", kept[m]));
                    break;
                }
                if m == 0 || trace[kept[m - 1]].store.get(&a) != Some(v) {
                    break;
                }
                m -= 1;
            }
        }
    }
    bad
}

fn by_source(dsg: &Dsg) -> BTreeMap<&ControlState, Vec<&Edge>> {
    let mut m: BTreeMap<&ControlState, Vec<&Edge>> = BTreeMap::new();
    for e in &dsg.edges {
        m.entry(&e.from).or_default().push(e);
    }
    m
}

type Config = (ControlState, Vec<Frame>);

fn successors(out: &BTreeMap<&ControlState, Vec<&Edge>>, c: &Config, depth: usize) -> Vec<Config> {
    let mut res = vec![];
    for e in out.get(&c.0).into_iter().flatten() {
        let mut stack = c.1.clone();
        match &e.action {
            StackAction::Epsilon => {}
            StackAction::Push(g) => {
                if stack.len() >= depth {
                    continue;
                }
                stack.push(g.clone());
            }
            StackAction::Pop(g) => {
                if stack.last() != Some(g) {
                    continue;
                }
                stack.pop();
            }
        }
        res.push((e.to.clone(), stack));
    }
    res
}

/// Pairs (s, s') joined by a non-empty path whose stack effect is net empty and never
/// dips below its starting height. `None` if more than `limit` configurations are needed.
pub fn net_empty(dsg: &Dsg, depth: usize, limit: usize) -> Option<BTreeSet<(ControlState, ControlState)>> {
    let out = by_source(dsg);
    let mut rel = BTreeSet::new();
    let mut total = 0;
    for s in &dsg.nodes {
        let start: Config = (s.clone(), vec![]);
        let mut seen = BTreeSet::from([start.clone()]);
        let mut work = VecDeque::from([start]);
        while let Some(c) = work.pop_front() {
            for n in successors(&out, &c, depth) {
                if n.1.is_empty() {
                    rel.insert((s.clone(), n.0.clone()));
                }
                if seen.insert(n.clone()) {
                    work.push_back(n);
                }
            }
        }
        total += seen.len();
        if total > limit {
            return None;
        }
    }
    Some(rel)
}

pub struct Absolute {
    pub configs: usize,
    pub top_frames: BTreeMap<ControlState, BTreeSet<Top>>,
    pub stack_frames: BTreeMap<ControlState, BTreeSet<Top>>,
}

/// Every configuration reachable from the initial node with an empty stack.
pub fn absolute(dsg: &Dsg, depth: usize, limit: usize) -> Option<Absolute> {
    let out = by_source(dsg);
    let start: Config = (dsg.initial.clone(), vec![]);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut work = VecDeque::from([start]);
    while let Some(c) = work.pop_front() {
        for n in successors(&out, &c, depth) {
            if seen.insert(n.clone()) {
                if seen.len() > limit {
                    return None;
                }
                work.push_back(n);
            }
        }
    }
    let mut top_frames: BTreeMap<ControlState, BTreeSet<Top>> = BTreeMap::new();
    let mut stack_frames: BTreeMap<ControlState, BTreeSet<Top>> = BTreeMap::new();
    for (q, stack) in &seen {
        top_frames.entry(q.clone()).or_default().insert(stack.last().cloned());
        let psf = stack_frames.entry(q.clone()).or_default();
        psf.insert(None);
        psf.extend(stack.iter().cloned().map(Some));
    }
    Some(Absolute { configs: seen.len(), top_frames, stack_frames })
}

/// Naive closure: repeat until stable, scanning the whole store each round.
pub fn brute_reachable(roots: &BTreeSet<AAddr>, store: &AbstractStore) -> BTreeSet<AAddr> {
    let mut r = roots.clone();
    loop {
        let mut grew = false;
        let current: Vec<AAddr> = r.iter().cloned().collect();
        for a in current {
            for v in store.values(&a) {
                for b in store.addrs() {
                    if let Addr::Field(_, p) = b {
                        if *p == v.ptr && r.insert(b.clone()) {
                            grew = true;
                        }
                    }
                }
            }
        }
        if !grew {
            return r;
        }
    }
}
