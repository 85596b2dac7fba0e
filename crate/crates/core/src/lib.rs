//! Abstract interpretation of ANFJ with exact exceptional control flow.

pub mod concrete;
pub mod domain;
pub mod dsg;
pub mod export;
pub mod gc;
pub mod metrics;
pub mod syntax;
pub mod values;
