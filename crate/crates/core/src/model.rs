//! Shared vocabulary: case inputs, expected behaviors, system outputs, and
//! audit traces. Nothing in here makes a decision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::decimal::Decimal;

/// Identifier reserved as the wildcard in expected behaviors.
pub const WILDCARD: &str = "any";

/// Token syntax: `[a-z][a-z0-9_]*`.
pub fn is_token(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b'a'..=b'z'))
        && bytes.all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_'))
}

/// Identifier syntax for rule ids, class ids, labels and case ids:
/// `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_ident(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// A typed value for one case field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldValue {
    Bool(bool),
    Int(i64),
    Decimal(Decimal),
    Token(String),
    /// Unordered, duplicate-free; `BTreeSet` keeps the canonical order.
    TokenSet(BTreeSet<String>),
}

impl FieldValue {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldValue::Bool(_) => "bool",
            FieldValue::Int(_) => "int",
            FieldValue::Decimal(_) => "decimal",
            FieldValue::Token(_) => "token",
            FieldValue::TokenSet(_) => "tokenset",
        }
    }
}

impl Serialize for FieldValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            FieldValue::Bool(b) => serializer.serialize_bool(*b),
            FieldValue::Int(i) => serializer.serialize_i64(*i),
            FieldValue::Decimal(d) => d.serialize(serializer),
            FieldValue::Token(t) => serializer.serialize_str(t),
            FieldValue::TokenSet(set) => {
                let mut seq = serializer.serialize_seq(Some(set.len()))?;
                for token in set {
                    seq.serialize_element(token)?;
                }
                seq.end()
            }
        }
    }
}

pub type FieldMap = BTreeMap<String, FieldValue>;

/// One synthetic case: the inputs plus the behavior it is expected to produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseInput {
    #[serde(rename = "id")]
    pub case_id: String,
    pub description: String,
    pub mechanism: String,
    pub fields: FieldMap,
    #[serde(rename = "expect")]
    pub expected: ExpectedBehavior,
}

/// The five abstention categories. Exactly one applies to any abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AbstentionCategory {
    MissingInputs,
    UnknownRisk,
    ConflictingSignals,
    ExplicitExclusion,
    ConservativeAmbiguity,
}

impl AbstentionCategory {
    pub const ALL: [AbstentionCategory; 5] = [
        AbstentionCategory::MissingInputs,
        AbstentionCategory::UnknownRisk,
        AbstentionCategory::ConflictingSignals,
        AbstentionCategory::ExplicitExclusion,
        AbstentionCategory::ConservativeAmbiguity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AbstentionCategory::MissingInputs => "missing_inputs",
            AbstentionCategory::UnknownRisk => "unknown_risk",
            AbstentionCategory::ConflictingSignals => "conflicting_signals",
            AbstentionCategory::ExplicitExclusion => "explicit_exclusion",
            AbstentionCategory::ConservativeAmbiguity => "conservative_ambiguity",
        }
    }
}

impl fmt::Display for AbstentionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AbstentionCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AbstentionCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown abstention category {s:?}"))
    }
}

/// Why the engine abstained: one category plus the labels that triggered it.
///
/// Labels are kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AbstentionReason {
    category: AbstentionCategory,
    labels: Vec<String>,
}

impl AbstentionReason {
    pub fn new<I, S>(category: AbstentionCategory, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        debug_assert!(
            category != AbstentionCategory::ExplicitExclusion || !labels.is_empty(),
            "explicit exclusion without a label"
        );
        AbstentionReason {
            category,
            labels: labels.into_iter().collect(),
        }
    }

    pub fn category(&self) -> AbstentionCategory {
        self.category
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// The only two things the engine can say.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemOutput {
    Recommend(String),
    Abstain(AbstentionReason),
}

impl SystemOutput {
    pub fn abstain<I, S>(category: AbstentionCategory, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SystemOutput::Abstain(AbstentionReason::new(category, labels))
    }

    pub fn is_recommend(&self) -> bool {
        matches!(self, SystemOutput::Recommend(_))
    }

    pub fn recommended_class(&self) -> Option<&str> {
        match self {
            SystemOutput::Recommend(class) => Some(class),
            SystemOutput::Abstain(_) => None,
        }
    }

    pub fn abstention(&self) -> Option<&AbstentionReason> {
        match self {
            SystemOutput::Recommend(_) => None,
            SystemOutput::Abstain(reason) => Some(reason),
        }
    }
}

/// One-line text form, e.g. `recommend class_a` or
/// `abstain explicit_exclusion [EX_PREGNANCY]`.
impl fmt::Display for SystemOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemOutput::Recommend(class) => write!(f, "recommend {class}"),
            SystemOutput::Abstain(reason) => {
                write!(
                    f,
                    "abstain {} [{}]",
                    reason.category,
                    reason.labels.join(",")
                )
            }
        }
    }
}

/// What a case expects. `None` is the wildcard: any output of that action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExpectedBehavior {
    Recommend(Option<String>),
    Abstain(Option<AbstentionCategory>),
}

impl Serialize for ExpectedBehavior {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(1))?;
        match self {
            ExpectedBehavior::Recommend(class) => {
                map.serialize_entry("recommend", class.as_deref().unwrap_or(WILDCARD))?
            }
            ExpectedBehavior::Abstain(category) => map.serialize_entry(
                "abstain",
                category.map(AbstentionCategory::as_str).unwrap_or(WILDCARD),
            )?,
        }
        map.end()
    }
}

impl fmt::Display for ExpectedBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectedBehavior::Recommend(class) => {
                write!(f, "recommend {}", class.as_deref().unwrap_or(WILDCARD))
            }
            ExpectedBehavior::Abstain(category) => write!(
                f,
                "abstain {}",
                category.map(AbstentionCategory::as_str).unwrap_or(WILDCARD)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLevel {
    FullMatch,
    ActionMatch,
    Mismatch,
}

/// Grade an actual output against its expectation at action and detail level.
pub fn compare_outputs(actual: &SystemOutput, expected: &ExpectedBehavior) -> MatchLevel {
    match (actual, expected) {
        (SystemOutput::Recommend(_), ExpectedBehavior::Recommend(None))
        | (SystemOutput::Abstain(_), ExpectedBehavior::Abstain(None)) => MatchLevel::FullMatch,
        (SystemOutput::Recommend(got), ExpectedBehavior::Recommend(Some(want))) => {
            if got == want {
                MatchLevel::FullMatch
            } else {
                MatchLevel::ActionMatch
            }
        }
        (SystemOutput::Abstain(got), ExpectedBehavior::Abstain(Some(want))) => {
            if got.category == *want {
                MatchLevel::FullMatch
            } else {
                MatchLevel::ActionMatch
            }
        }
        _ => MatchLevel::Mismatch,
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    InputAssessment,
    Exclusions,
    ClinicalRules,
    Stewardship,
    Output,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [
        Stage::InputAssessment,
        Stage::Exclusions,
        Stage::ClinicalRules,
        Stage::Stewardship,
        Stage::Output,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fired,
    NotFired,
    Indeterminate,
    Vetoed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RuleVerdict {
    #[serde(rename = "rule")]
    pub rule_id: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StageRecord {
    pub stage: Stage,
    evaluated: Vec<RuleVerdict>,
    notes: Vec<String>,
}

impl StageRecord {
    /// Builds a record with `evaluated` sorted by rule id and notes sorted.
    pub fn new(
        stage: Stage,
        evaluated: impl IntoIterator<Item = (String, Verdict)>,
        notes: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut evaluated: Vec<RuleVerdict> = evaluated
            .into_iter()
            .map(|(rule_id, verdict)| RuleVerdict { rule_id, verdict })
            .collect();
        evaluated.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));
        let notes: BTreeSet<String> = notes.into_iter().collect();
        StageRecord {
            stage,
            evaluated,
            notes: notes.into_iter().collect(),
        }
    }

    pub fn evaluated(&self) -> &[RuleVerdict] {
        &self.evaluated
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn verdict_of(&self, rule_id: &str) -> Option<Verdict> {
        self.evaluated
            .binary_search_by(|rv| rv.rule_id.as_str().cmp(rule_id))
            .ok()
            .map(|i| self.evaluated[i].verdict)
    }
}

/// Per-stage record of one decision, ending at the stage that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AuditTrace {
    pub stages: Vec<StageRecord>,
    #[serde(rename = "final")]
    pub final_output: SystemOutput,
}

impl AuditTrace {
    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}
