//! ANFJ front end: parser, elaboration and liveness.

pub mod ast;
pub mod elaborate;
pub mod liveness;
pub mod parser;

pub use ast::*;
pub use elaborate::{
    class_lookup, elaborate, method_lookup, subtype, succ, ClassInfo, ElabError, Instr, LabeledProgram, LookupError,
    MethodInfo, StmtInfo,
};
pub use parser::{parse_program, ParseError, ParseErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Elab(#[from] ElabError),
}

/// Parses and elaborates in one step.
pub fn load(source: &str) -> Result<LabeledProgram, LoadError> {
    Ok(elaborate(&parse_program(source)?)?)
}
