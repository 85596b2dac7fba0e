#![allow(dead_code)]

use anfj_core::syntax::{load, LabeledProgram};
use std::path::{Path, PathBuf};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub struct Case {
    pub name: String,
    pub source: String,
    pub lp: LabeledProgram,
    /// Hand-verified outcome from the `// expect:` header, e.g. "halted A".
    pub expect: String,
}

pub fn corpus() -> Vec<Case> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "anfj"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let source = std::fs::read_to_string(&p).unwrap();
            let expect = source
                .lines()
                .find_map(|l| l.strip_prefix("// expect: "))
                .unwrap_or_else(|| panic!("{} lacks an expect header", p.display()))
                .trim()
                .to_string();
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let lp = load(&source).unwrap_or_else(|e| panic!("{name}: {e}"));
            Case { name, source, lp, expect }
        })
        .collect()
}

pub fn case(name: &str) -> Case {
    corpus().into_iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no corpus program {name}"))
}

pub mod oracle;
