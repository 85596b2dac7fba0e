mod common;

use anfj_core::domain::{AAddr, APtr, ATime, AValue, AbstractStore, ControlState, Frame, Policy};
use anfj_core::gc::{eagc, reachable, root, stack_root};
use anfj_core::syntax::{load, Label};
use anfj_core::values::{Addr, Value};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn ptr(site: u32) -> APtr {
    APtr { site: Label(site), time: ATime::default(), recv: None }
}

fn obj(site: u32) -> AValue {
    Value { class: "C".into(), ptr: ptr(site) }
}

fn field(name: &str, site: u32) -> AAddr {
    Addr::Field(name.into(), ptr(site))
}

fn var(name: &str, site: u32) -> AAddr {
    Addr::Var(name.into(), ptr(site))
}

#[test]
fn cyclic_objects_reach_each_other() {
    let store: AbstractStore =
        [(var("x", 0), obj(1)), (field("f", 1), obj(2)), (field("f", 2), obj(1))].into_iter().collect();
    let got = reachable(&BTreeSet::from([var("x", 0)]), &store);
    assert_eq!(got, BTreeSet::from([var("x", 0), field("f", 1), field("f", 2)]));
}

#[test]
fn unreferenced_objects_are_collected() {
    let store: AbstractStore =
        [(var("x", 0), obj(1)), (field("f", 1), obj(2)), (field("f", 3), obj(2))].into_iter().collect();
    let got = reachable(&BTreeSet::from([var("x", 0)]), &store);
    assert!(!got.contains(&field("f", 3)));
    assert!(reachable(&BTreeSet::new(), &store).is_empty());
}

#[test]
fn roots_follow_liveness_and_the_stack() {
    let lp = load(
        "class Main extends Object {
           Object main() { Object a; Object b; a = new Object(); b = new Object(); return a; }
         }",
    )
    .unwrap();
    // At `return a`, only `a` is live in main's frame.
    let q = ControlState { label: Label(3), fp: APtr::initial(), time: ATime::default() };
    let store: AbstractStore = [
        (Addr::Var("a".into(), APtr::initial()), obj(1)),
        (Addr::Var("b".into(), APtr::initial()), obj(2)),
        (var("z", 9), obj(3)),
    ]
    .into_iter()
    .collect();
    let no_frames: [Frame; 0] = [];
    let live = root(&q, &store, &no_frames, &lp, &Policy::default());
    assert_eq!(live, BTreeSet::from([Addr::Var("a".into(), APtr::initial())]));
    let all = root(&q, &store, &no_frames, &lp, &Policy { liveness: false, ..Policy::default() });
    assert_eq!(all.len(), 2);

    let caller = [Frame::Call { var: "r".into(), ret: Label(3), fp: ptr(9) }];
    assert_eq!(stack_root(&caller, &store, &lp, &Policy::default()), BTreeSet::from([var("z", 9)]));
    assert!(root(&q, &store, &caller, &lp, &Policy::default()).contains(&var("z", 9)));
}

#[test]
fn gc_off_is_the_identity() {
    let lp = common::case("gc_id").lp;
    let store: AbstractStore = [(var("junk", 7), obj(1))].into_iter().collect();
    let q = ControlState { label: lp.entry_method().entry, fp: APtr::initial(), time: ATime::default() };
    let no_frames: [Frame; 0] = [];
    let off = Policy { gc: false, ..Policy::default() };
    assert_eq!(eagc(&q, &store, &no_frames, &lp, &off), store);
    assert!(eagc(&q, &store, &no_frames, &lp, &Policy::default()).is_empty());
}

fn arb_store() -> impl Strategy<Value = (AbstractStore, BTreeSet<AAddr>, BTreeSet<AAddr>)> {
    let addr = (0u32..6, prop::bool::ANY, 0usize..2).prop_map(|(site, is_var, n)| {
        let name = ["f", "g"][n];
        if is_var {
            var(name, site)
        } else {
            field(name, site)
        }
    });
    let entries = prop::collection::vec((addr.clone(), prop::collection::vec(0u32..6, 0..3)), 0..20);
    (entries, prop::collection::vec(addr.clone(), 0..4), prop::collection::vec(addr, 0..4)).prop_map(
        |(entries, r1, r2)| {
            let mut s = AbstractStore::new();
            for (a, vs) in entries {
                s.join_at(a, vs.into_iter().map(obj));
            }
            let small: BTreeSet<AAddr> = r1.into_iter().collect();
            let mut big = small.clone();
            big.extend(r2);
            (s, small, big)
        },
    )
}

proptest! {
    #[test]
    fn reachable_matches_naive_closure((store, roots, _) in arb_store()) {
        prop_assert_eq!(reachable(&roots, &store), common::oracle::brute_reachable(&roots, &store));
    }

    #[test]
    fn reachable_is_monotone_in_roots((store, small, big) in arb_store()) {
        prop_assert!(reachable(&small, &store).is_subset(&reachable(&big, &store)));
    }

    #[test]
    fn collection_is_idempotent((store, roots, _) in arb_store()) {
        let keep = reachable(&roots, &store);
        let once = store.restrict(&keep);
        let kept_roots: BTreeSet<AAddr> = roots.iter().filter(|a| once.contains(a)).cloned().collect();
        let twice = once.restrict(&reachable(&kept_roots, &once));
        prop_assert!(once.leq(&store));
        prop_assert_eq!(twice, once);
    }
}

#[test]
fn eagc_is_idempotent_on_corpus_stores() {
    for c in common::corpus() {
        let p = Policy { gc: false, ..Policy::default() };
        let d = anfj_core::dsg::analyze(&c.lp, &p, &Default::default()).unwrap();
        for (q, store) in &d.stores {
            let frames: Vec<Frame> = d.stack_frames[q].iter().flatten().cloned().collect();
            let on = Policy::default();
            let once = eagc(q, store, &frames, &c.lp, &on);
            assert_eq!(eagc(q, &once, &frames, &c.lp, &on), once, "{} at {q}", c.name);
            assert!(once.leq(store));
        }
    }
}
