//! Policy-gated recommendation engine with structured abstention.
//!
//! A [`Policy`] written in a small declarative language drives a fixed
//! five-stage pipeline: input assessment, exclusions, clinical rules,
//! stewardship, output. Every case yields either a recommended class or a
//! categorized abstention, plus an [`AuditTrace`]. Suites of synthetic
//! cases are scored by [`eval::run_suite`].

pub mod canonical;
pub mod decimal;
pub mod diag;
pub mod engine;
pub mod eval;
pub mod model;
pub mod policy;
pub mod reference;
pub mod suite;

pub use decimal::Decimal;
pub use diag::{Diagnostic, Level, Pos};
pub use engine::{decide, decide_fields};
pub use eval::{run_suite, EvalError, EvaluationReport};
pub use model::{
    AbstentionCategory, AbstentionReason, AuditTrace, CaseInput, ExpectedBehavior, FieldMap,
    FieldValue, MatchLevel, Stage, StageRecord, SystemOutput, Verdict,
};
pub use policy::{parse_policy, policy_hash, validate_policy, Policy};
pub use suite::{bind_suite, parse_suite, suite_hash, Suite};
