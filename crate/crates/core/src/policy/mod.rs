//! The governed policy: input schema, classes, clinical candidate rules, and
//! the governance rules (consistency, exclusions, stewardship) that decide
//! whether a candidate may be issued.
//!
//! Policies are written in a small line-oriented language (see
//! [`parse_policy`]) and are immutable once parsed.

mod canonical;
mod condition;
mod lexer;
mod parser;
mod print;
mod validate;

use std::collections::BTreeSet;

pub use canonical::{policy_canonical_bytes, policy_hash};
pub use condition::{CmpOp, Condition, Literal, Truth};
pub use parser::parse_policy;
pub use print::print_policy;
pub use validate::validate_policy;

use crate::diag::Pos;

/// Rule id under which the escalation justification condition appears in
/// audit traces. Reserved: no declared rule may use it.
pub const ESCALATION_JUSTIFICATION_ID: &str = "escalation_justification";

/// Evaluate a condition against a case's fields.
pub fn evaluate_condition(condition: &Condition, fields: &crate::model::FieldMap) -> Truth {
    condition.evaluate(fields)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldType {
    Bool,
    Int,
    Decimal,
    Token(Vec<String>),
    TokenSet(Vec<String>),
    /// Token set drawn from the policy's `known_risks` vocabulary. Tokens
    /// outside that vocabulary are accepted on input and surface as unknown
    /// risk at decision time.
    RiskSet,
}

impl FieldType {
    pub fn keyword(&self) -> &'static str {
        match self {
            FieldType::Bool => "bool",
            FieldType::Int => "int",
            FieldType::Decimal => "decimal",
            FieldType::Token(_) => "token",
            FieldType::TokenSet(_) => "tokenset",
            FieldType::RiskSet => "riskset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ftype: FieldType,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub class_id: String,
    /// 1 is the narrowest spectrum.
    pub spectrum_rank: u32,
    /// Issuing this class is an escalation and needs justification.
    pub escalation_tier: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyConstraint {
    pub rule_id: String,
    /// True when the inputs contradict each other.
    pub forbid: Condition,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionRule {
    pub rule_id: String,
    pub label: String,
    pub when: Condition,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClinicalRule {
    pub rule_id: String,
    pub requires: Vec<String>,
    pub when: Condition,
    pub candidate: String,
    pub incompatible_with: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassVeto {
    pub rule_id: String,
    pub class_id: String,
    pub when: Condition,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StewardshipSpec {
    /// When true, escalation-tier classes may be issued.
    pub escalation_justification: Condition,
    pub class_vetoes: Vec<ClassVeto>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub policy_id: String,
    pub version: String,
    pub schema: Vec<FieldDecl>,
    pub classes: Vec<ClassDecl>,
    pub required: Vec<String>,
    pub known_risks: BTreeSet<String>,
    pub consistency: Vec<ConsistencyConstraint>,
    pub exclusions: Vec<ExclusionRule>,
    pub clinical_rules: Vec<ClinicalRule>,
    pub stewardship: StewardshipSpec,
}

impl Policy {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.schema.iter().find(|f| f.name == name)
    }

    pub fn class(&self, class_id: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn clinical_rule(&self, rule_id: &str) -> Option<&ClinicalRule> {
        self.clinical_rules.iter().find(|r| r.rule_id == rule_id)
    }

    /// Every rule id the policy defines, including the reserved
    /// escalation-justification id.
    pub fn rule_ids(&self) -> BTreeSet<&str> {
        let mut ids: BTreeSet<&str> = BTreeSet::from([ESCALATION_JUSTIFICATION_ID]);
        ids.extend(self.consistency.iter().map(|r| r.rule_id.as_str()));
        ids.extend(self.exclusions.iter().map(|r| r.rule_id.as_str()));
        ids.extend(self.clinical_rules.iter().map(|r| r.rule_id.as_str()));
        ids.extend(
            self.stewardship
                .class_vetoes
                .iter()
                .map(|r| r.rule_id.as_str()),
        );
        ids
    }

    /// Fields typed as risk sets.
    pub fn risk_fields(&self) -> impl Iterator<Item = &FieldDecl> {
        self.schema.iter().filter(|f| f.ftype == FieldType::RiskSet)
    }
}
