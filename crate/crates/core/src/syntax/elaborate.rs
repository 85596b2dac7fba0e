//! Elaboration: labelling, `pophandler` insertion, successor map, class table, liveness.

use super::ast::*;
use super::liveness::compute_liveness;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("class `{0}` extends itself through a cycle")]
    ExtendsCycle(String),
    #[error("unknown class `{name}` in {context}")]
    UnknownClass { name: String, context: String },
    #[error("unknown field `{field}` in {context}")]
    UnknownField { field: String, context: String },
    #[error("unknown method `{method}` in {context}")]
    UnknownMethod { method: String, context: String },
    #[error("unknown variable `{var}` in {context}")]
    UnknownVariable { var: String, context: String },
    #[error("class `{class}` redeclares inherited field `{field}`")]
    FieldShadowing { class: String, field: String },
    #[error("duplicate {what} `{name}` in {context}")]
    Duplicate { what: &'static str, name: String, context: String },
    #[error("malformed constructor of `{class}`: {reason}")]
    BadConstructor { class: String, reason: String },
    #[error("`new {class}` passes {got} arguments, constructor takes {want}")]
    ConstructorArity { class: String, got: usize, want: usize },
    #[error("control falls off the end of {method} after {label}")]
    MissingReturn { method: String, label: Label },
    #[error("method {0} has an empty body")]
    EmptyBody(String),
    #[error("no entry point: expected exactly one zero-argument method named `main`")]
    NoEntry,
}

/// Flattened statement form; nested bodies are referenced by the label of their head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instr {
    Assign(String, Exp),
    Return(String),
    Try { class: String, var: String, body: Label, handler: Label },
    Throw(String),
    PopHandler,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtInfo {
    pub label: Label,
    pub instr: Instr,
    pub method: MethodRef,
    /// Try statements whose body lexically contains this statement, innermost first.
    /// A try's own `pophandler` is not counted as inside its body.
    pub enclosing: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    pub parent: Option<String>,
    /// Flattened field names, superclass fields first.
    pub fields: Vec<String>,
    pub ctor_arity: usize,
    /// (field, constructor argument index) for the whole constructor chain.
    pub ctor_bindings: Vec<(String, usize)>,
    pub methods: BTreeMap<String, MethodRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub id: MethodRef,
    pub params: Vec<String>,
    pub locals: Vec<String>,
    pub entry: Label,
    /// Every label of the method body in program order.
    pub labels: Vec<Label>,
}

impl MethodInfo {
    pub fn in_scope(&self, v: &str) -> bool {
        v == "this" || self.params.iter().any(|p| p == v) || self.locals.iter().any(|l| l == v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledProgram {
    pub program: Program,
    pub stmts: BTreeMap<Label, StmtInfo>,
    pub succ: BTreeMap<Label, Label>,
    pub classes: BTreeMap<String, ClassInfo>,
    pub methods: BTreeMap<MethodRef, MethodInfo>,
    pub lives: BTreeMap<Label, BTreeSet<String>>,
    pub entry: MethodRef,
    /// succ(l) -> l for every invoke statement l.
    call_sites: BTreeMap<Label, Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("no method `{method}` on `{class}` or its superclasses")]
    NoMethod { class: String, method: String },
    #[error("unknown label {0}")]
    UnknownLabel(Label),
}

impl LabeledProgram {
    pub fn stmt(&self, l: Label) -> &StmtInfo {
        &self.stmts[&l]
    }

    pub fn method_of(&self, l: Label) -> &MethodInfo {
        &self.methods[&self.stmts[&l].method]
    }

    pub fn entry_method(&self) -> &MethodInfo {
        &self.methods[&self.entry]
    }

    /// Invoke statement whose fall-through successor is `ret`.
    pub fn call_site_of(&self, ret: Label) -> Option<Label> {
        self.call_sites.get(&ret).copied()
    }

    pub fn lives_at(&self, l: Label) -> &BTreeSet<String> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        self.lives.get(&l).unwrap_or(&EMPTY)
    }

    /// Handler head of a try statement.
    pub fn handler_of(&self, try_label: Label) -> Option<Label> {
        match &self.stmts.get(&try_label)?.instr {
            Instr::Try { handler, .. } => Some(*handler),
            _ => None,
        }
    }
}

pub fn succ(lp: &LabeledProgram, l: Label) -> Result<Option<Label>, LookupError> {
    if !lp.stmts.contains_key(&l) {
        return Err(LookupError::UnknownLabel(l));
    }
    Ok(lp.succ.get(&l).copied())
}

/// Flattened field names (superclass first) and the constructor description.
pub fn class_lookup<'a>(lp: &'a LabeledProgram, c: &str) -> Result<&'a ClassInfo, LookupError> {
    lp.classes.get(c).ok_or_else(|| LookupError::UnknownClass(c.to_string()))
}

pub fn method_lookup<'a>(lp: &'a LabeledProgram, class: &str, m: &str) -> Result<&'a MethodInfo, LookupError> {
    let mut cur = Some(class.to_string());
    if !lp.classes.contains_key(class) {
        return Err(LookupError::UnknownClass(class.to_string()));
    }
    while let Some(c) = cur {
        let info = &lp.classes[&c];
        if let Some(r) = info.methods.get(m) {
            return Ok(&lp.methods[r]);
        }
        cur = info.parent.clone();
    }
    Err(LookupError::NoMethod { class: class.to_string(), method: m.to_string() })
}

pub fn subtype(lp: &LabeledProgram, c: &str, d: &str) -> Result<bool, LookupError> {
    for x in [c, d] {
        if !lp.classes.contains_key(x) {
            return Err(LookupError::UnknownClass(x.to_string()));
        }
    }
    let mut cur = Some(c.to_string());
    while let Some(x) = cur {
        if x == d {
            return Ok(true);
        }
        cur = lp.classes[&x].parent.clone();
    }
    Ok(false)
}

fn object_info() -> ClassInfo {
    ClassInfo {
        name: OBJECT.into(),
        parent: None,
        fields: vec![],
        ctor_arity: 0,
        ctor_bindings: vec![],
        methods: BTreeMap::new(),
    }
}

fn build_classes(p: &Program) -> Result<BTreeMap<String, ClassInfo>, ElabError> {
    let decls: BTreeMap<&str, &ClassDecl> = p.classes.iter().map(|c| (c.name.as_str(), c)).collect();
    for c in &p.classes {
        if c.parent != OBJECT && !decls.contains_key(c.parent.as_str()) {
            return Err(ElabError::UnknownClass {
                name: c.parent.clone(),
                context: format!("`{}` extends clause", c.name),
            });
        }
        let mut seen = BTreeSet::new();
        let mut cur = c.name.as_str();
        while cur != OBJECT {
            if !seen.insert(cur) {
                return Err(ElabError::ExtendsCycle(c.name.clone()));
            }
            cur = decls[cur].parent.as_str();
        }
    }
    let mut out = BTreeMap::new();
    out.insert(OBJECT.to_string(), object_info());
    // Superclasses first, so parent info is available when a class is processed.
    let mut pending: Vec<&ClassDecl> = p.classes.iter().collect();
    while !pending.is_empty() {
        let (ready, rest): (Vec<&ClassDecl>, Vec<&ClassDecl>) =
            pending.into_iter().partition(|c| out.contains_key(&c.parent));
        for c in ready {
            let info = class_info(c, &out[&c.parent])?;
            out.insert(c.name.clone(), info);
        }
        pending = rest;
    }
    Ok(out)
}

fn class_info(c: &ClassDecl, parent: &ClassInfo) -> Result<ClassInfo, ElabError> {
    let bad = |reason: String| ElabError::BadConstructor { class: c.name.clone(), reason };
    let mut fields = parent.fields.clone();
    for (_, f) in &c.fields {
        if parent.fields.contains(f) {
            return Err(ElabError::FieldShadowing { class: c.name.clone(), field: f.clone() });
        }
        if fields.contains(f) {
            return Err(ElabError::Duplicate {
                what: "field",
                name: f.clone(),
                context: format!("class `{}`", c.name),
            });
        }
        fields.push(f.clone());
    }
    let params: Vec<&str> = c.konst.params.iter().map(|(_, v)| v.as_str()).collect();
    for (i, p) in params.iter().enumerate() {
        if params[..i].contains(p) {
            return Err(bad(format!("parameter `{p}` declared twice")));
        }
    }
    if c.konst.super_args.len() != parent.ctor_arity {
        return Err(bad(format!(
            "super call passes {} arguments, `{}` expects {}",
            c.konst.super_args.len(),
            parent.name,
            parent.ctor_arity
        )));
    }
    for (i, a) in c.konst.super_args.iter().enumerate() {
        if params.get(i) != Some(&a.as_str()) {
            return Err(bad("super arguments must be a prefix of the constructor parameters".into()));
        }
    }
    let mut bindings = parent.ctor_bindings.clone();
    let mut assigned = BTreeSet::new();
    for (f, x) in &c.konst.assigns {
        if !c.fields.iter().any(|(_, g)| g == f) {
            return Err(bad(format!("`this.{f}` is not a field declared by `{}`", c.name)));
        }
        if !assigned.insert(f.as_str()) {
            return Err(bad(format!("field `{f}` assigned twice")));
        }
        let idx =
            params.iter().position(|p| p == x).ok_or_else(|| bad(format!("`{x}` is not a constructor parameter")))?;
        bindings.push((f.clone(), idx));
    }
    for (_, f) in &c.fields {
        if !assigned.contains(f.as_str()) {
            return Err(bad(format!("field `{f}` is never assigned")));
        }
    }
    let mut methods = BTreeMap::new();
    for m in &c.methods {
        let r = MethodRef { class: c.name.clone(), method: m.name.clone() };
        if methods.insert(m.name.clone(), r).is_some() {
            return Err(ElabError::Duplicate {
                what: "method",
                name: m.name.clone(),
                context: format!("class `{}`", c.name),
            });
        }
    }
    Ok(ClassInfo {
        name: c.name.clone(),
        parent: Some(c.parent.clone()),
        fields,
        ctor_arity: params.len(),
        ctor_bindings: bindings,
        methods,
    })
}

struct Labeler {
    next: u32,
}

impl Labeler {
    /// Relabels in program order and appends `pophandler` to try bodies lacking one.
    fn relabel(&mut self, body: &mut [Stmt]) {
        for s in body.iter_mut() {
            self.next += 1;
            s.label = Label(self.next);
            if let StmtKind::Try { body, handler, .. } = &mut s.kind {
                if !matches!(body.last(), Some(Stmt { kind: StmtKind::PopHandler, .. })) {
                    body.push(Stmt { label: Label(0), kind: StmtKind::PopHandler });
                }
                self.relabel(body);
                self.relabel(handler);
            }
        }
    }
}

struct Flattener<'a> {
    method: &'a MethodRef,
    stmts: BTreeMap<Label, StmtInfo>,
    succ: BTreeMap<Label, Label>,
    labels: Vec<Label>,
}

impl Flattener<'_> {
    fn walk(&mut self, seq: &[Stmt], next: Option<Label>, enclosing: &[Label]) {
        for (i, s) in seq.iter().enumerate() {
            let after = seq.get(i + 1).map(|n| n.label).or(next);
            self.labels.push(s.label);
            let instr = match &s.kind {
                StmtKind::Assign(v, e) => Instr::Assign(v.clone(), e.clone()),
                StmtKind::Return(v) => Instr::Return(v.clone()),
                StmtKind::Throw(v) => Instr::Throw(v.clone()),
                StmtKind::PopHandler => Instr::PopHandler,
                StmtKind::Try { body, catch_class, catch_var, handler } => Instr::Try {
                    class: catch_class.clone(),
                    var: catch_var.clone(),
                    body: body[0].label,
                    handler: handler[0].label,
                },
            };
            let falls_through = !matches!(instr, Instr::Return(_) | Instr::Throw(_));
            let own_succ = match &s.kind {
                StmtKind::Try { body, .. } => Some(body[0].label),
                _ => after,
            };
            if falls_through {
                if let Some(n) = own_succ {
                    self.succ.insert(s.label, n);
                }
            }
            let inside = match (&s.kind, enclosing.first()) {
                // A try's own pophandler sits at the boundary of its body.
                (StmtKind::PopHandler, Some(_)) if i + 1 == seq.len() => enclosing[1..].to_vec(),
                _ => enclosing.to_vec(),
            };
            self.stmts
                .insert(s.label, StmtInfo { label: s.label, instr, method: self.method.clone(), enclosing: inside });
            if let StmtKind::Try { body, handler, .. } = &s.kind {
                let mut inner = vec![s.label];
                inner.extend_from_slice(enclosing);
                self.walk(body, after, &inner);
                self.walk(handler, after, enclosing);
            }
        }
    }
}

struct Checker<'a> {
    classes: &'a BTreeMap<String, ClassInfo>,
    all_fields: BTreeSet<&'a str>,
    all_methods: BTreeSet<&'a str>,
}

impl Checker<'_> {
    fn class(&self, c: &str, context: &str) -> Result<(), ElabError> {
        if self.classes.contains_key(c) {
            Ok(())
        } else {
            Err(ElabError::UnknownClass { name: c.to_string(), context: context.to_string() })
        }
    }

    fn var(&self, m: &MethodInfo, v: &str) -> Result<(), ElabError> {
        if m.in_scope(v) {
            Ok(())
        } else {
            Err(ElabError::UnknownVariable { var: v.to_string(), context: m.id.to_string() })
        }
    }

    fn stmt(&self, m: &MethodInfo, s: &StmtInfo) -> Result<(), ElabError> {
        let ctx = m.id.to_string();
        match &s.instr {
            Instr::Assign(v, e) => {
                self.var(m, v)?;
                for u in e.uses() {
                    self.var(m, u)?;
                }
                match e {
                    Exp::Field(_, f) if !self.all_fields.contains(f.as_str()) => {
                        return Err(ElabError::UnknownField { field: f.clone(), context: ctx });
                    }
                    Exp::Invoke(_, name, _) if !self.all_methods.contains(name.as_str()) => {
                        return Err(ElabError::UnknownMethod { method: name.clone(), context: ctx });
                    }
                    Exp::New(c, args) => {
                        self.class(c, &ctx)?;
                        let want = self.classes[c].ctor_arity;
                        if args.len() != want {
                            return Err(ElabError::ConstructorArity { class: c.clone(), got: args.len(), want });
                        }
                    }
                    Exp::Cast(c, _) => self.class(c, &ctx)?,
                    _ => {}
                }
            }
            Instr::Return(v) | Instr::Throw(v) => self.var(m, v)?,
            Instr::Try { class, var, .. } => {
                self.class(class, &ctx)?;
                self.var(m, var)?;
            }
            Instr::PopHandler => {}
        }
        Ok(())
    }
}

/// Labels, links and checks a parsed program.
pub fn elaborate(p: &Program) -> Result<LabeledProgram, ElabError> {
    let classes = build_classes(p)?;
    let entry = p.entry.clone().ok_or(ElabError::NoEntry)?;

    let mut program = p.clone();
    let mut labeler = Labeler { next: 0 };
    for c in &mut program.classes {
        for m in &mut c.methods {
            labeler.relabel(&mut m.body);
        }
    }

    let checker = Checker {
        classes: &classes,
        all_fields: classes.values().flat_map(|c| c.fields.iter().map(String::as_str)).collect(),
        all_methods: classes.values().flat_map(|c| c.methods.keys().map(String::as_str)).collect(),
    };

    let mut stmts = BTreeMap::new();
    let mut succ_map = BTreeMap::new();
    let mut methods = BTreeMap::new();
    for c in &program.classes {
        for (ty, f) in &c.fields {
            checker.class(ty, &format!("type of field `{}.{f}`", c.name))?;
        }
        for (ty, _) in &c.konst.params {
            checker.class(ty, &format!("constructor of `{}`", c.name))?;
        }
        for m in &c.methods {
            let id = MethodRef { class: c.name.clone(), method: m.name.clone() };
            let ctx = id.to_string();
            checker.class(&m.return_class, &ctx)?;
            let mut names = BTreeSet::new();
            for (ty, v) in m.params.iter().chain(&m.locals) {
                checker.class(ty, &ctx)?;
                if v == "this" || !names.insert(v.as_str()) {
                    return Err(ElabError::Duplicate { what: "variable", name: v.clone(), context: ctx });
                }
            }
            if m.body.is_empty() {
                return Err(ElabError::EmptyBody(ctx));
            }
            let mut fl = Flattener { method: &id, stmts: BTreeMap::new(), succ: BTreeMap::new(), labels: vec![] };
            fl.walk(&m.body, None, &[]);
            let info = MethodInfo {
                id: id.clone(),
                params: m.params.iter().map(|(_, v)| v.clone()).collect(),
                locals: m.locals.iter().map(|(_, v)| v.clone()).collect(),
                entry: m.body[0].label,
                labels: fl.labels,
            };
            for s in fl.stmts.values() {
                checker.stmt(&info, s)?;
            }
            check_termination(&info, &fl.stmts, &fl.succ)?;
            stmts.extend(fl.stmts);
            succ_map.extend(fl.succ);
            methods.insert(id, info);
        }
    }

    let mut lives = BTreeMap::new();
    for m in methods.values() {
        lives.extend(compute_liveness(m, &stmts, &succ_map));
    }
    let call_sites = stmts
        .values()
        .filter(|s| matches!(s.instr, Instr::Assign(_, Exp::Invoke(..))))
        .filter_map(|s| succ_map.get(&s.label).map(|n| (*n, s.label)))
        .collect();

    Ok(LabeledProgram { program, stmts, succ: succ_map, classes, methods, lives, entry, call_sites })
}

/// Every reachable statement without a successor must be a return or a throw.
fn check_termination(
    m: &MethodInfo,
    stmts: &BTreeMap<Label, StmtInfo>,
    succ: &BTreeMap<Label, Label>,
) -> Result<(), ElabError> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![m.entry];
    while let Some(l) = stack.pop() {
        if !seen.insert(l) {
            continue;
        }
        let s = &stmts[&l];
        stack.extend(s.enclosing.iter().filter_map(|t| match &stmts[t].instr {
            Instr::Try { handler, .. } => Some(*handler),
            _ => None,
        }));
        match succ.get(&l) {
            Some(n) => stack.push(*n),
            None if matches!(s.instr, Instr::Return(_) | Instr::Throw(_)) => {}
            None => return Err(ElabError::MissingReturn { method: m.id.to_string(), label: l }),
        }
    }
    Ok(())
}
