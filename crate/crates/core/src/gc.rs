//! Abstract garbage collection with liveness-pruned roots.

use crate::domain::{AAddr, APtr, AbstractStore, ControlState, Frame, Policy};
use crate::syntax::LabeledProgram;
use crate::values::Addr;
use std::collections::{BTreeMap, BTreeSet};

/// Variable addresses a frame on the stack may still read once control returns to it.
///
/// Call frames keep every variable of their frame pointer. Handler frames keep the
/// variables live at the handler entry, or all of them with liveness off: a throw can
/// pop the call frame of the try's own activation (at k > 0 into a distinct node)
/// before the handler runs.
pub fn stack_root<'a>(
    frames: impl IntoIterator<Item = &'a Frame>,
    store: &AbstractStore,
    lp: &LabeledProgram,
    policy: &Policy,
) -> BTreeSet<AAddr> {
    let mut whole: BTreeSet<&APtr> = BTreeSet::new();
    let mut out = BTreeSet::new();
    for f in frames {
        match f {
            Frame::Call { fp, .. } => {
                whole.insert(fp);
            }
            Frame::Handler { handler, fp, .. } if policy.liveness => {
                for v in lp.lives_at(*handler) {
                    let a = Addr::Var(v.clone(), fp.clone());
                    if store.contains(&a) {
                        out.insert(a);
                    }
                }
            }
            Frame::Handler { fp, .. } => {
                whole.insert(fp);
            }
        }
    }
    out.extend(store.addrs().filter(|a| a.is_var() && whole.contains(a.ptr())).cloned());
    out
}

pub fn root<'a>(
    q: &ControlState,
    store: &AbstractStore,
    frames: impl IntoIterator<Item = &'a Frame>,
    lp: &LabeledProgram,
    policy: &Policy,
) -> BTreeSet<AAddr> {
    let mut out = stack_root(frames, store, lp, policy);
    if policy.liveness {
        for v in lp.lives_at(q.label) {
            let a = Addr::Var(v.clone(), q.fp.clone());
            if store.contains(&a) {
                out.insert(a);
            }
        }
    } else {
        out.extend(store.addrs().filter(|a| a.is_var() && *a.ptr() == q.fp).cloned());
    }
    out
}

/// Least set containing `roots` and closed under a ⇝ (f, op) for (C, op) ∈ σ(a).
pub fn reachable(roots: &BTreeSet<AAddr>, store: &AbstractStore) -> BTreeSet<AAddr> {
    let mut fields_of: BTreeMap<&APtr, Vec<&AAddr>> = BTreeMap::new();
    for a in store.addrs().filter(|a| !a.is_var()) {
        fields_of.entry(a.ptr()).or_default().push(a);
    }
    let mut seen = roots.clone();
    let mut stack: Vec<&AAddr> = roots.iter().collect();
    let mut visited_ops = BTreeSet::new();
    while let Some(a) = stack.pop() {
        for v in store.values(a) {
            if !visited_ops.insert(&v.ptr) {
                continue;
            }
            for f in fields_of.get(&v.ptr).into_iter().flatten().copied() {
                if seen.insert(f.clone()) {
                    stack.push(f);
                }
            }
        }
    }
    seen
}

/// The store restricted to what is reachable from the roots; the identity when gc is off.
pub fn eagc<'a>(
    q: &ControlState,
    store: &AbstractStore,
    frames: impl IntoIterator<Item = &'a Frame>,
    lp: &LabeledProgram,
    policy: &Policy,
) -> AbstractStore {
    if !policy.gc {
        return store.clone();
    }
    let roots = root(q, store, frames, lp, policy);
    store.restrict(&reachable(&roots, store))
}
