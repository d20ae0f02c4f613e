//! The query language: a Datalog-like surface syntax shared by both engines.

mod ast;
mod parser;
mod validate;

pub use ast::{positive_vars, Call, Clause, Goal, Program, Query, Rule, Term};
pub use parser::{parse, ParseError};
pub use validate::{builtin_paradigm, expand_rules, validate, CheckedQuery, Paradigm, ValidationError};
pub(crate) use validate::entity_term;
