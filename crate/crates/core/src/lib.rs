//! Core building blocks for constructing and scoring function-calling datasets:
//! a grammar for bracketed keyword-argument call expressions, structural call
//! equivalence with schema-aware optional-argument handling, verbatim reasoning
//! templates with staged prompt builders, tool-schema loading and validation,
//! judge-label parsing, and benchmark suite aggregation.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature only
//! widens error-trait integration for downstream std users.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod equivalence;
#[doc(hidden)]
pub mod gen;
pub mod grammar;
pub mod judge;
pub mod prompts;
pub mod sample;
pub mod scorer;
pub mod templates;
pub mod tools;

pub use equivalence::{ast_equivalent, exact_match, value_equal, MatchOutcome, MatchPolicy, MatchVerdict};
pub use grammar::{extract_tagged, parse_call_list, render_call_list, CallList, FunctionCall, Number, SyntaxError, Value};
pub use judge::{parse_judge_label, JudgeLabel, JudgeVerdict};
pub use sample::{ReasoningChain, Sample};
pub use templates::{Message, Role, Template, TemplateRegistry};
pub use tools::{load_tools, validate_call, ParamSpec, ToolSet, ToolSpec, TypeTag};
