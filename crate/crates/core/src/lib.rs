//! Policy analysis for an abstract attribute-based access-control language:
//! a reference evaluator, a compiler from policy stores to logic programs, a
//! small answer-set engine, and gap, conflict and reachability analyses
//! built on top of them.

pub mod analyzer;
pub mod emit;
pub mod engine;
pub mod eval;
pub mod ids;
pub mod lp;
pub mod model;
pub mod parser;
pub mod testgen;

pub use analyzer::{
    check_completeness, check_conflicts, check_reachability, differential_check, AnalysisReport,
    Engine, Witness,
};
pub use emit::{emit_analysis, transform_combining, transform_store, AnalysisTask};
pub use engine::{check_acyclic, enumerate_models, ground, solve_unique, AnswerSet};
pub use eval::{evaluate, evaluate_component, evaluate_trace};
pub use model::{
    build_store, AttrCategory, AttributeDomains, CombiningAlgorithm, Component, Decision, Effect,
    PolicyStore, Request,
};
pub use parser::{
    parse_domains, parse_policy_file, parse_request, serialize_domains, serialize_request,
    serialize_store,
};
