//! Values and addresses, generic over the pointer representation so the concrete
//! machine and the abstract domain share one shape.

use serde::{Deserialize, Serialize};
use std::fmt;

/// An object: its class and the pointer that addresses its fields.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Value<P> {
    pub class: String,
    pub ptr: P,
}

/// Variables pair with frame pointers, fields with object pointers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Addr<P> {
    Var(String, P),
    Field(String, P),
}

impl<P> Addr<P> {
    pub fn ptr(&self) -> &P {
        match self {
            Addr::Var(_, p) | Addr::Field(_, p) => p,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Addr::Var(n, _) | Addr::Field(n, _) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Addr::Var(..))
    }
}

impl<P: fmt::Display> fmt::Display for Value<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.class, self.ptr)
    }
}

impl<P: fmt::Display> fmt::Display for Addr<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Addr::Var(v, p) => write!(f, "({v}, {p})"),
            Addr::Field(x, p) => write!(f, "(.{x}, {p})"),
        }
    }
}
