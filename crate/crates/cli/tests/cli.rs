use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.anfj"))
}

fn anfj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anfj")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_reports_outcome_and_trace_records() {
    let f = corpus("throw_caught");
    let o = anfj(&["run", f.to_str().unwrap(), "--trace", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let (last, records) = lines.split_last().unwrap();
    assert_eq!(last["outcome"], "halted");
    assert_eq!(last["class"], "E");
    assert_eq!(last["steps"], records.len());
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["step"], i);
        for key in ["label", "fp", "kontDepth"] {
            assert!(r.get(key).is_some(), "record {i} lacks {key}");
        }
    }
    assert_eq!(records[0]["kontDepth"], 0);
}

#[test]
fn fuel_exhaustion_is_a_budget_failure() {
    let f = corpus("infinite_recursion");
    assert_eq!(anfj(&["run", f.to_str().unwrap(), "--fuel", "30"]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.anfj");
    std::fs::write(&bad, "class A extends Object { Object main() { return x; } }").unwrap();
    assert_eq!(anfj(&["analyze", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(anfj(&["run", dir.path().join("missing.anfj").to_str().unwrap()]).status.code(), Some(1));
    let f = corpus("assign_var");
    assert_eq!(anfj(&["analyze", f.to_str().unwrap(), "--mode", "sideways"]).status.code(), Some(1));
    assert_eq!(anfj(&["compare", f.to_str().unwrap(), "--a", "k=x", "--b", "k=0"]).status.code(), Some(1));
}

#[test]
fn exhausted_analysis_budget_exits_with_two() {
    let f = corpus("recursion");
    let o = anfj(&["analyze", f.to_str().unwrap(), "--budget-nodes", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn analyze_writes_graph_exports() {
    let dir = tempfile::tempdir().unwrap();
    let (dot, json) = (dir.path().join("g.dot"), dir.path().join("g.json"));
    let f = corpus("shape_handler_push_pop");
    let o = anfj(&[
        "analyze",
        f.to_str().unwrap(),
        "--k",
        "1",
        "--gc",
        "off",
        "--dot",
        dot.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph dsg {"));
    assert!(dot.contains("style=dashed"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(doc["policy"]["k"], 1);
    assert_eq!(doc["policy"]["gc"], false);
    assert!(!doc["nodes"].as_array().unwrap().is_empty());
}

#[test]
fn analyze_json_report_shows_motivating_link() {
    let f = corpus("motivating_throw");
    let o = anfj(&["analyze", f.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["ec_links"]["links"].as_array().unwrap().len(), 1);
    assert_eq!(rep["ec_links"]["average"], 1.0);
}

#[test]
fn text_reports_state_the_averaging_population() {
    let f = corpus("assign_var");
    let o = anfj(&["analyze", f.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().starts_with("# averages:"));
    assert!(text.contains("Throws        n/a"));
}

#[test]
fn compare_pushdown_against_finite_baseline() {
    let f = corpus("motivating_throw");
    let o = anfj(&["compare", f.to_str().unwrap(), "--a", "k=0", "--b", "k=0,mode=finite", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let cmp: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cmp["a"]["ec_links"]["links"].as_array().unwrap().len(), 1);
    assert_eq!(cmp["b"]["ec_links"]["links"].as_array().unwrap().len(), 2);
    assert_eq!(cmp["ratios"]["ec_links"], 2.0);
}

#[test]
fn compare_identical_policies_gives_unit_ratios() {
    let f = corpus("gc_id");
    let o = anfj(&["compare", f.to_str().unwrap(), "--a", "k=1", "--b", "k=1", "--format", "json"]);
    let cmp: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for (k, v) in cmp["ratios"].as_object().unwrap() {
        if !v.is_null() {
            assert_eq!(v.as_f64(), Some(1.0), "{k}");
        }
    }
}

#[test]
fn global_store_flag_reaches_the_policy() {
    let f = corpus("gc_id");
    let o = anfj(&[
        "compare",
        f.to_str().unwrap(),
        "--a",
        "k=0,gc=off",
        "--b",
        "k=0,gc=off,store=global",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let cmp: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(cmp["ratios"]["var_points_to"].as_f64().unwrap() >= 1.0, "{cmp}");

    let o = anfj(&["analyze", f.to_str().unwrap(), "--store", "global", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("store=global"));
}
