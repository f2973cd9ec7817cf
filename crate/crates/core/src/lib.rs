//! Operational semantics for a small imperative While language: small-step,
//! inductive big-step, pretty-big-step and flag-based big-step evaluators,
//! finite divergence certificates, a rule-description language, and a
//! differential testing harness.

pub mod big_step;
pub mod coinduction;
pub mod derivation;
pub mod flag_based;
pub mod harness;
pub mod parser;
pub mod pretty_big;
pub mod rule_dsl;
pub mod small_step;
pub mod syntax;

pub use syntax::{BinOp, Cmd, Expr, Ident, InputStream, Outcome, SemCmd, Status, Store, Val, Verdict};
