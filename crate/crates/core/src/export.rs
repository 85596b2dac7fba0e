//! Deterministic JSON and Graphviz renderings of a graph.
//!
//! Node ids are positions in the (label, frame pointer, time) order, so equal
//! graphs always serialise to identical bytes.

use crate::domain::{AbstractStore, ControlState, Policy, StackAction, Top};
use crate::dsg::{Catch, Dsg, Edge};
use crate::syntax::{Label, LabeledProgram};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            _ => Err(format!("unknown export format `{s}` (expected json or dot)")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    #[serde(flatten)]
    state: ControlState,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    from: usize,
    to: usize,
    action: StackAction,
}

#[derive(Serialize, Deserialize)]
struct CatchDoc {
    throw: usize,
    via: Label,
    handler: usize,
}

#[derive(Serialize, Deserialize)]
struct NodeInfoDoc {
    node: usize,
    top_frames: Vec<Top>,
    stack_frames: Vec<Top>,
    store: AbstractStore,
}

#[derive(Serialize, Deserialize)]
struct DsgDoc {
    policy: Policy,
    initial: usize,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    summaries: Vec<(usize, usize)>,
    catches: Vec<CatchDoc>,
    node_info: Vec<NodeInfoDoc>,
}

fn ids(dsg: &Dsg) -> BTreeMap<&ControlState, usize> {
    dsg.nodes.iter().enumerate().map(|(i, s)| (s, i)).collect()
}

pub fn to_json(dsg: &Dsg) -> String {
    let id = ids(dsg);
    let doc = DsgDoc {
        policy: dsg.policy.clone(),
        initial: id[&dsg.initial],
        nodes: dsg.nodes.iter().map(|s| NodeDoc { id: id[s], state: s.clone() }).collect(),
        edges: dsg
            .edges
            .iter()
            .map(|e| EdgeDoc { from: id[&e.from], to: id[&e.to], action: e.action.clone() })
            .collect(),
        summaries: dsg.summaries.iter().map(|(a, b)| (id[a], id[b])).collect(),
        catches: dsg
            .catches
            .iter()
            .map(|c| CatchDoc { throw: id[&c.throw], via: c.via, handler: id[&c.handler] })
            .collect(),
        node_info: dsg
            .nodes
            .iter()
            .map(|s| NodeInfoDoc {
                node: id[s],
                top_frames: dsg.top_frames.get(s).into_iter().flatten().cloned().collect(),
                stack_frames: dsg.stack_frames.get(s).into_iter().flatten().cloned().collect(),
                store: dsg.stores.get(s).cloned().unwrap_or_default(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("graph documents always serialise")
}

pub fn from_json(text: &str) -> Result<Dsg, String> {
    let doc: DsgDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut by_id = BTreeMap::new();
    for n in &doc.nodes {
        if by_id.insert(n.id, n.state.clone()).is_some() {
            return Err(format!("duplicate node id {}", n.id));
        }
    }
    let get = |i: usize| by_id.get(&i).cloned().ok_or_else(|| format!("unknown node id {i}"));
    let mut dsg = Dsg {
        policy: doc.policy,
        initial: get(doc.initial)?,
        nodes: by_id.values().cloned().collect(),
        edges: Default::default(),
        summaries: Default::default(),
        stores: Default::default(),
        top_frames: Default::default(),
        stack_frames: Default::default(),
        catches: Default::default(),
    };
    for e in doc.edges {
        dsg.edges.insert(Edge { from: get(e.from)?, action: e.action, to: get(e.to)? });
    }
    for (a, b) in doc.summaries {
        dsg.summaries.insert((get(a)?, get(b)?));
    }
    for c in doc.catches {
        dsg.catches.insert(Catch { throw: get(c.throw)?, via: c.via, handler: get(c.handler)? });
    }
    for info in doc.node_info {
        let s = get(info.node)?;
        dsg.top_frames.insert(s.clone(), info.top_frames.into_iter().collect());
        dsg.stack_frames.insert(s.clone(), info.stack_frames.into_iter().collect());
        dsg.stores.insert(s, info.store);
    }
    Ok(dsg)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn node_label(s: &ControlState, lp: Option<&LabeledProgram>) -> String {
    let text = lp.and_then(|lp| lp.stmts.get(&s.label)).map(|st| match &st.instr {
        crate::syntax::Instr::Assign(v, e) => format!("{v} = {e}"),
        crate::syntax::Instr::Return(v) => format!("return {v}"),
        crate::syntax::Instr::Throw(v) => format!("throw {v}"),
        crate::syntax::Instr::Try { class, var, .. } => format!("try / catch ({class} {var})"),
        crate::syntax::Instr::PopHandler => "pophandler".to_string(),
    });
    match text {
        Some(t) => format!("{}: {t}\\nfp {} t {}", s.label, s.fp, s.time),
        None => format!("{}\\nfp {} t {}", s.label, s.fp, s.time),
    }
}

/// ε transitions are dashed; ε-summaries not already realised by a transition are
/// dashed gray and labelled ε*; pushes and pops carry their frame with +/-.
pub fn to_dot(dsg: &Dsg, lp: Option<&LabeledProgram>) -> String {
    let id = ids(dsg);
    let mut out = String::from("digraph dsg {\n  node [shape=box, fontname=\"monospace\"];\n");
    for s in &dsg.nodes {
        let extra = if *s == dsg.initial { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  n{} [label=\"{}\"{extra}];", id[s], escape(&node_label(s, lp)));
    }
    for e in &dsg.edges {
        let (a, b) = (id[&e.from], id[&e.to]);
        let _ = match &e.action {
            StackAction::Epsilon => writeln!(out, "  n{a} -> n{b} [style=dashed, label=\"ε\"];"),
            StackAction::Push(g) => writeln!(out, "  n{a} -> n{b} [label=\"{}+\"];", escape(&g.to_string())),
            StackAction::Pop(g) => writeln!(out, "  n{a} -> n{b} [label=\"{}-\"];", escape(&g.to_string())),
        };
    }
    for (p, n) in &dsg.summaries {
        let direct = dsg.edges.contains(&Edge { from: p.clone(), action: StackAction::Epsilon, to: n.clone() });
        if !direct {
            let _ = writeln!(out, "  n{} -> n{} [style=dashed, color=gray, label=\"ε*\"];", id[p], id[n]);
        }
    }
    out.push_str("}\n");
    out
}

pub fn export_dsg(dsg: &Dsg, format: &str, lp: Option<&LabeledProgram>) -> Result<String, String> {
    Ok(match format.parse::<Format>()? {
        Format::Json => to_json(dsg),
        Format::Dot => to_dot(dsg, lp),
    })
}
