//! Surface AST for ANFJ programs.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Statement label. Label 0 is reserved for the entry frame pointer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

pub const OBJECT: &str = "Object";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
    /// Unique zero-argument method named `main`, if any.
    pub entry: Option<MethodRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodRef {
    pub class: String,
    pub method: String,
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.method)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: String,
    pub parent: String,
    /// (declared class, field name)
    pub fields: Vec<(String, String)>,
    pub konst: ConstructorDecl,
    pub methods: Vec<MethodDecl>,
}

/// `C(params) { super(super_args); this.f = x; ... }`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructorDecl {
    pub params: Vec<(String, String)>,
    pub super_args: Vec<String>,
    /// (field, parameter)
    pub assigns: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDecl {
    pub return_class: String,
    pub name: String,
    pub params: Vec<(String, String)>,
    pub locals: Vec<(String, String)>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub label: Label,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Assign(String, Exp),
    Return(String),
    Try {
        body: Vec<Stmt>,
        catch_class: String,
        catch_var: String,
        handler: Vec<Stmt>,
    },
    Throw(String),
    /// Inserted by elaboration at the end of every try body.
    PopHandler,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Exp {
    Var(String),
    Field(String, String),
    Invoke(String, String, Vec<String>),
    New(String, Vec<String>),
    Cast(String, String),
}

impl Exp {
    /// Variables read by evaluating the expression.
    pub fn uses(&self) -> Vec<&str> {
        match self {
            Exp::Var(v) | Exp::Field(v, _) | Exp::Cast(_, v) => vec![v.as_str()],
            Exp::Invoke(r, _, args) => std::iter::once(r.as_str()).chain(args.iter().map(String::as_str)).collect(),
            Exp::New(_, args) => args.iter().map(String::as_str).collect(),
        }
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exp::Var(v) => write!(f, "{v}"),
            Exp::Field(v, fl) => write!(f, "{v}.{fl}"),
            Exp::Invoke(r, m, args) => write!(f, "{r}.{m}({})", args.join(", ")),
            Exp::New(c, args) => write!(f, "new {c}({})", args.join(", ")),
            Exp::Cast(c, v) => write!(f, "({c}) {v}"),
        }
    }
}
