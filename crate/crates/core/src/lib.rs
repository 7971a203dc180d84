//! Parsing unification grammars three ways: a bottom-up left-corner chart
//! parser working on the grammar directly, a generalized LR parser and a
//! compiled-Earley parser, both driven by tables built from the grammar's
//! context-free backbone. All three perform rule unifications on-line and
//! build the same kind of shared packed forest, so their results can be
//! compared tree for tree.

pub mod backbone;
pub mod bulc;
pub mod ce;
pub mod engine;
pub mod forest;
pub mod glr;
pub mod grammar;
pub mod harness;
pub(crate) mod instance;
pub mod stats;
pub(crate) mod tabular;
pub mod term;

pub use backbone::{
    build_ce_table, build_lalr1, extract_backbone, BackboneGrammar, BackboneSpec, ParseTable,
};
pub use bulc::{BulcOptions, BulcParser};
pub use ce::{CeOptions, CeParser};
pub use engine::{tokenize, EngineConfig, EngineKind, ParseError, ParseOutcome, Parser};
pub use forest::{PackedForest, ParseTree};
pub use glr::{GlrOptions, GlrParser};
pub use grammar::{expand_kleene, grammar_stats, Grammar, GrammarError, Rule};
pub use stats::ParseStats;
pub use term::{subsumes, unify, Category, Signature, Term, Unifier};
