use anfj_core::domain::{
    alloc, decide_stack_action, next, tick, AAddr, APtr, ATime, AValue, AbstractStore, ControlState, Frame, Mode,
    Policy, StackAction, ViewMismatch,
};
use anfj_core::dsg::initial_state;
use anfj_core::syntax::{load, Label, LabeledProgram};
use anfj_core::values::{Addr, Value};
use proptest::prelude::*;

const TRY_PROGRAM: &str = "
class E extends Object { }
class F extends Object { }
class Main extends Object {
  Object main() {
    E e; E x;
    try { e = new E(); throw e; } catch (E x) { e = x; }
    return e;
  }
}";

fn l(n: u32) -> Label {
    Label(n)
}

fn state(label: u32) -> ControlState {
    ControlState { label: l(label), fp: APtr::initial(), time: ATime::default() }
}

fn var(name: &str) -> AAddr {
    Addr::Var(name.into(), APtr::initial())
}

fn obj(class: &str, site: u32) -> AValue {
    Value { class: class.into(), ptr: APtr { site: l(site), time: ATime::default(), recv: None } }
}

fn handler(class: &str) -> Frame {
    Frame::Handler { class: class.into(), var: "x".into(), handler: l(5), fp: APtr::initial() }
}

fn program() -> LabeledProgram {
    load(TRY_PROGRAM).unwrap()
}

#[test]
fn tick_keeps_the_k_newest_labels() {
    let t = ATime(vec![l(3), l(2)]);
    let pol = |k| Policy { k, ..Policy::default() };
    assert_eq!(tick(l(9), &t, &pol(0)), ATime(vec![]));
    assert_eq!(tick(l(9), &t, &pol(1)), ATime(vec![l(9)]));
    assert_eq!(tick(l(9), &t, &pol(2)), ATime(vec![l(9), l(3)]));
    assert_eq!(tick(l(9), &t, &pol(5)), ATime(vec![l(9), l(3), l(2)]));
}

#[test]
fn alloc_keeps_receiver_only_under_object_sensitivity() {
    let t = ATime(vec![l(4)]);
    let plain = alloc(l(7), &t, Some(l(2)), &Policy::default());
    assert_eq!(plain, APtr { site: l(7), time: t.clone(), recv: None });
    let sens = alloc(l(7), &t, Some(l(2)), &Policy { obj_sens: true, ..Policy::default() });
    assert_eq!(sens.recv, Some(l(2)));
}

#[test]
fn stack_action_from_views() {
    let (g, h) = (handler("E"), handler("F"));
    assert_eq!(decide_stack_action(std::slice::from_ref(&g), std::slice::from_ref(&g)), Ok(StackAction::Epsilon));
    assert_eq!(decide_stack_action(&[g.clone(), h.clone()], std::slice::from_ref(&h)), Ok(StackAction::Pop(g.clone())));
    assert_eq!(
        decide_stack_action(std::slice::from_ref(&h), &[g.clone(), h.clone()]),
        Ok(StackAction::Push(g.clone()))
    );
    assert_eq!(decide_stack_action(std::slice::from_ref(&g), std::slice::from_ref(&h)), Err(ViewMismatch));
    assert_eq!(decide_stack_action(&[], &[g.clone(), h]), Err(ViewMismatch));
}

#[test]
fn try_pushes_its_handler() {
    let lp = program();
    let q0 = initial_state(&lp);
    assert_eq!(q0, state(1));
    let succs = next(&lp, &q0, &AbstractStore::new(), None, &Policy::default());
    assert_eq!(succs.len(), 1);
    assert_eq!(succs[0].state.label, l(2));
    assert!(
        matches!(&succs[0].action, StackAction::Push(Frame::Handler { class, handler: Label(5), .. }) if class == "E")
    );
}

#[test]
fn throw_to_matching_handler_binds_the_catch_variable() {
    let lp = program();
    let store: AbstractStore = [(var("e"), obj("E", 2))].into_iter().collect();
    let succs = next(&lp, &state(3), &store, Some(&handler("E")), &Policy::default());
    assert_eq!(succs.len(), 1);
    assert_eq!(succs[0].action, StackAction::Pop(handler("E")));
    assert_eq!(succs[0].state.label, l(5));
    assert!(succs[0].store.values(&var("x")).eq([obj("E", 2)].iter()));
}

#[test]
fn throw_skips_non_matching_handler_in_place() {
    let lp = program();
    let store: AbstractStore = [(var("e"), obj("E", 2))].into_iter().collect();
    let succs = next(&lp, &state(3), &store, Some(&handler("F")), &Policy::default());
    assert_eq!(succs.len(), 1);
    assert_eq!(succs[0].action, StackAction::Pop(handler("F")));
    assert_eq!(succs[0].state.label, l(3));
}

#[test]
fn throw_past_a_call_frame_stays_on_the_throw() {
    let lp = program();
    let store: AbstractStore = [(var("e"), obj("E", 2))].into_iter().collect();
    let call = Frame::Call { var: "r".into(), ret: l(6), fp: APtr::initial() };
    let succs = next(&lp, &state(3), &store, Some(&call), &Policy::default());
    assert_eq!(succs.len(), 1);
    assert_eq!(succs[0].action, StackAction::Pop(call));
    assert_eq!(succs[0].state.label, l(3));
}

#[test]
fn empty_stack_and_unbound_reads_have_no_successors() {
    let lp = program();
    let store: AbstractStore = [(var("e"), obj("E", 2))].into_iter().collect();
    assert!(next(&lp, &state(3), &store, None, &Policy::default()).is_empty());
    assert!(next(&lp, &state(3), &AbstractStore::new(), Some(&handler("E")), &Policy::default()).is_empty());
}

#[test]
fn return_over_handler_pops_it_in_place() {
    let lp = program();
    let store: AbstractStore = [(var("e"), obj("E", 2))].into_iter().collect();
    let succs = next(&lp, &state(6), &store, Some(&handler("E")), &Policy::default());
    assert_eq!(succs.len(), 1);
    assert_eq!(succs[0].action, StackAction::Pop(handler("E")));
    assert_eq!(succs[0].state.label, l(6));
}

#[test]
fn policy_display_and_parse() {
    let p: Policy = "k=2,obj-sens,gc=off,liveness=on,mode=finite,store=global".parse().unwrap();
    assert_eq!(p, Policy { k: 2, obj_sens: true, gc: false, liveness: true, mode: Mode::Finite, global_store: true });
    assert_eq!(Policy::default().to_string(), "k=0,gc=on,liveness=on,mode=pushdown");
    assert!("k=two".parse::<Policy>().is_err());
    assert!("colour=blue".parse::<Policy>().is_err());
    assert!("store=shared".parse::<Policy>().is_err());
}

fn arb_store() -> impl Strategy<Value = AbstractStore> {
    let addr = (0u32..4, prop::bool::ANY, 0u32..3).prop_map(|(p, is_var, n)| {
        let ptr = APtr { site: Label(p), time: ATime::default(), recv: None };
        let name = ["a", "b", "c"][n as usize].to_string();
        if is_var {
            Addr::Var(name, ptr)
        } else {
            Addr::Field(name, ptr)
        }
    });
    let vals = prop::collection::vec((0u32..4, 0usize..2), 0..3)
        .prop_map(|vs| vs.into_iter().map(|(s, c)| obj(["A", "B"][c], s)).collect::<Vec<_>>());
    prop::collection::vec((addr, vals), 0..8).prop_map(|entries| {
        let mut s = AbstractStore::new();
        for (a, vs) in entries {
            s.join_at(a, vs);
        }
        s
    })
}

proptest! {
    #[test]
    fn policy_round_trips(k in 0usize..4, obj_sens: bool, gc: bool, liveness: bool, finite: bool, global_store: bool) {
        let mode = if finite { Mode::Finite } else { Mode::Pushdown };
        let p = Policy { k, obj_sens, gc, liveness, mode, global_store };
        prop_assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
    }

    #[test]
    fn store_join_is_a_least_upper_bound(a in arb_store(), b in arb_store(), c in arb_store()) {
        let mut ab = a.clone();
        ab.join(&b);
        let mut ba = b.clone();
        ba.join(&a);
        prop_assert_eq!(&ab, &ba);
        prop_assert!(a.leq(&ab) && b.leq(&ab));
        let mut again = ab.clone();
        prop_assert!(!again.join(&a));
        // Least: every binding of the join comes from one of its operands.
        for (addr, vs) in ab.iter() {
            for v in vs.iter() {
                prop_assert!(a.values(addr).any(|w| w == v) || b.values(addr).any(|w| w == v));
            }
        }
        if a.leq(&c) && b.leq(&c) {
            prop_assert!(ab.leq(&c));
        }
        prop_assert!(a.leq(&a));
    }

    #[test]
    fn join_reports_growth(a in arb_store(), b in arb_store()) {
        let mut ab = a.clone();
        let grew = ab.join(&b);
        prop_assert_eq!(grew, !b.leq(&a));
    }
}
