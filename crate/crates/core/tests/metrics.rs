mod common;

use anfj_core::dsg::{analyze, Budget, Dsg};
use anfj_core::metrics::{compare, ec_links, report, throws, var_points_to, Average};
use anfj_core::syntax::LabeledProgram;
use num_rational::Ratio;

fn build(lp: &LabeledProgram, policy: &str) -> Dsg {
    analyze(lp, &policy.parse().unwrap(), &Budget::default()).unwrap()
}

#[test]
fn average_is_the_arithmetic_mean() {
    assert_eq!(Average::of([1, 3]), Average(Some(Ratio::from_integer(2))));
    assert_eq!(Average::of([1, 2]).to_string(), "1.500");
    assert_eq!(Average::of([]).to_string(), "n/a");
    assert_eq!(serde_json::to_string(&Average::of([])).unwrap(), "null");
}

#[test]
fn programs_without_throws_report_na() {
    let lp = common::case("assign_var").lp;
    let d = build(&lp, "k=0");
    assert_eq!(throws(&d, &lp), Average(None));
    assert_eq!(ec_links(&d).average, Average(None));
}

#[test]
fn single_throw_single_class_is_one() {
    let lp = common::case("throw_caught").lp;
    assert_eq!(throws(&build(&lp, "k=0"), &lp).as_f64(), Some(1.0));
}

#[test]
fn shared_variable_joins_two_exception_classes_without_gc() {
    let lp = common::case("two_exception_classes").lp;
    assert_eq!(throws(&build(&lp, "k=0,gc=off"), &lp).as_f64(), Some(2.0));
    assert_eq!(throws(&build(&lp, "k=0"), &lp).as_f64(), Some(1.0));
}

#[test]
fn pushdown_links_stay_exact_with_more_context() {
    for (name, k) in [("motivating_throw", 0), ("motivating_throw", 1), ("wrapped_throw", 0), ("wrapped_throw", 1)] {
        let lp = common::case(name).lp;
        let links = ec_links(&build(&lp, &format!("k={k}")));
        assert_eq!(links.links.len(), 1, "{name} k={k}");
        assert_eq!(links.average.as_f64(), Some(1.0));
    }
}

#[test]
fn finite_baseline_credits_the_second_call() {
    let lp = common::case("motivating_throw").lp;
    let links = ec_links(&build(&lp, "k=0,mode=finite")).links;
    let vias: Vec<_> = links.iter().map(|l| l.via).collect();
    assert_eq!(links.len(), 2);
    assert_ne!(vias[0], vias[1]);
    assert!(links.iter().all(|l| l.handler == links.first().unwrap().handler));
}

#[test]
fn identical_policies_compare_to_one() {
    for c in common::corpus() {
        let p = "k=1".parse().unwrap();
        let cmp = compare(&c.lp, &p, &p, &Budget::default()).unwrap();
        for (k, v) in &cmp.ratios {
            assert!(v.0.is_none() || v.as_f64() == Some(1.0), "{} {k}: {v}", c.name);
        }
    }
}

#[test]
fn gc_improves_points_to_on_rebinding_program() {
    let lp = common::case("gc_id").lp;
    let cmp = compare(&lp, &"k=0".parse().unwrap(), &"k=0,gc=off".parse().unwrap(), &Budget::default()).unwrap();
    assert!(cmp.ratios["var_points_to"].as_f64().unwrap() > 1.0);
    assert!(var_points_to(&build(&lp, "k=0"), &lp).0 < var_points_to(&build(&lp, "k=0,gc=off"), &lp).0);
}

#[test]
fn pushdown_against_finite_counts_links() {
    let lp = common::case("motivating_throw").lp;
    let cmp = compare(&lp, &"k=0".parse().unwrap(), &"k=0,mode=finite".parse().unwrap(), &Budget::default()).unwrap();
    assert_eq!(cmp.a.ec_links.links.len(), 1);
    assert_eq!(cmp.b.ec_links.links.len(), 2);
    assert_eq!(cmp.ratios["ec_links"].as_f64(), Some(2.0));
}

#[test]
fn reports_are_reproducible() {
    for c in common::corpus() {
        let a = report(&build(&c.lp, "k=1,obj-sens"), &c.lp);
        let b = report(&build(&c.lp, "k=1,obj-sens"), &c.lp);
        assert_eq!(a, b, "{}", c.name);
        assert_eq!(a.to_string(), b.to_string());
    }
}
