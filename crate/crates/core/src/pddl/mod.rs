//! Typed-STRIPS subset of PDDL: reading, canonical printing and grounding.
//!
//! Supported: `:strips`, `:typing`, `:negative-preconditions`,
//! `:universal-preconditions` (only `forall` over negative literals) and
//! `:equality` (`=` / `(not (= ..))` between terms). Anything else is rejected
//! with an error rather than silently ignored.

mod ground;
mod model;
mod parse;
mod print;
pub mod sexpr;

pub use ground::{ground, GroundAction, GroundedTask, WorldState};
pub use model::*;
pub use parse::{parse_domain, parse_problem};
pub use print::{print_domain, print_problem};

use sexpr::Pos;

pub const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":universal-preconditions",
    ":equality",
];

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PddlError {
    #[error("lex error at {pos}: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unsupported requirement {requirement} at {pos}")]
    UnsupportedRequirement { pos: Pos, requirement: String },
    #[error("unsupported construct `{construct}` at {pos}")]
    Unsupported { pos: Pos, construct: String },
    #[error("undeclared type `{name}` at {pos}")]
    UndeclaredType { pos: Pos, name: String },
    #[error("unknown predicate `{name}` at {pos}")]
    UnknownPredicate { pos: Pos, name: String },
    #[error("predicate `{predicate}` expects {expected} arguments, got {got} (at {pos})")]
    ArityMismatch {
        pos: Pos,
        predicate: String,
        expected: usize,
        got: usize,
    },
    #[error("action `{action}`: parameter ?{param} has no type")]
    MissingParameterType { action: String, param: String },
    #[error("action `{action}`: unbound variable ?{var}")]
    UnboundVariable { action: String, var: String },
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("duplicate predicate `{0}`")]
    DuplicatePredicate(String),
    #[error("`{context}`: argument {arg} of type {arg_type} does not fit parameter type {param_type}")]
    TypeMismatch {
        context: String,
        arg: String,
        arg_type: String,
        param_type: String,
    },
    #[error("unknown object or constant `{name}` at {pos}")]
    UnknownObject { pos: Pos, name: String },
    #[error("object `{name}` declared with conflicting types {first} and {second}")]
    ConflictingObject {
        name: String,
        first: String,
        second: String,
    },
    #[error("problem is for domain `{got}`, expected `{expected}`")]
    DomainMismatch { expected: String, got: String },
}
