//! The decision pipeline.
//!
//! Stages run in a fixed order and the first one that terminates decides
//! the output:
//!
//! 1. `input_assessment`: missing required fields, then consistency
//!    violations, then unrecognized risk tokens.
//! 2. `exclusions`: any triggered exclusion abstains with its label; an
//!    exclusion that cannot be resolved abstains for missing inputs.
//! 3. `clinical_rules`: unresolved rules abstain for missing inputs, fired
//!    incompatible pairs for conflicting signals, and no fired rule for
//!    conservative ambiguity.
//! 4. `stewardship`: vetoes and the escalation gate remove candidates; the
//!    unique narrowest survivor goes on, anything else abstains.
//! 5. `output`: recommend that survivor.
//!
//! `decide` is a pure function of the policy and the case fields.

use std::collections::BTreeSet;

use crate::model::{
    AbstentionCategory, AuditTrace, CaseInput, FieldMap, FieldValue, Stage, StageRecord,
    SystemOutput, Verdict,
};
use crate::policy::{Policy, Truth, ESCALATION_JUSTIFICATION_ID};

/// Label on a conservative-ambiguity abstention when no clinical rule fired.
pub const NO_CANDIDATE: &str = "no_candidate";
/// Label on a conservative-ambiguity abstention when stewardship removed
/// every candidate.
pub const ALL_CANDIDATES_VETOED: &str = "all_candidates_vetoed";

/// Stage-1 notes naming which input checks failed.
pub const NOTE_MISSING_REQUIRED: &str = "missing_required";
pub const NOTE_CONSISTENCY_VIOLATION: &str = "consistency_violation";
pub const NOTE_UNKNOWN_RISK: &str = "unknown_risk";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompletenessReport {
    pub missing_required: Vec<String>,
    pub unknown_risk_tokens: Vec<String>,
    pub consistency_violations: Vec<String>,
}

impl CompletenessReport {
    pub fn is_clean(&self) -> bool {
        self.missing_required.is_empty()
            && self.unknown_risk_tokens.is_empty()
            && self.consistency_violations.is_empty()
    }
}

pub fn assess_inputs(p: &Policy, case: &CaseInput) -> CompletenessReport {
    assess_fields(p, &case.fields)
}

pub fn assess_fields(p: &Policy, fields: &FieldMap) -> CompletenessReport {
    let missing_required: BTreeSet<String> = p
        .required
        .iter()
        .filter(|f| !fields.contains_key(*f))
        .cloned()
        .collect();
    let mut unknown_risk_tokens = BTreeSet::new();
    for decl in p.risk_fields() {
        if let Some(FieldValue::TokenSet(tokens)) = fields.get(&decl.name) {
            unknown_risk_tokens.extend(
                tokens
                    .iter()
                    .filter(|t| !p.known_risks.contains(*t))
                    .cloned(),
            );
        }
    }
    let consistency_violations: BTreeSet<String> = p
        .consistency
        .iter()
        .filter(|c| c.forbid.evaluate(fields).is_true())
        .map(|c| c.rule_id.clone())
        .collect();
    CompletenessReport {
        missing_required: missing_required.into_iter().collect(),
        unknown_risk_tokens: unknown_risk_tokens.into_iter().collect(),
        consistency_violations: consistency_violations.into_iter().collect(),
    }
}

/// Run the pipeline on one case.
pub fn decide(p: &Policy, case: &CaseInput) -> (SystemOutput, AuditTrace) {
    decide_fields(p, &case.fields)
}

/// Run the pipeline on a bare field map.
pub fn decide_fields(p: &Policy, fields: &FieldMap) -> (SystemOutput, AuditTrace) {
    Pipeline {
        policy: p,
        fields,
        mutation: None,
        stages: Vec::new(),
    }
    .run()
}

/// Deliberately broken stewardship stages, used to show that the
/// stewardship audit catches violations. Not for production use.
#[doc(hidden)]
pub mod mutants {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Stage4Mutation {
        /// Pick the widest-spectrum survivor instead of the narrowest.
        WidestSurvivor,
        /// Let escalation-tier classes through without justification.
        IgnoreEscalationGate,
    }

    pub fn decide_mutant(
        p: &Policy,
        case: &CaseInput,
        mutation: Stage4Mutation,
    ) -> (SystemOutput, AuditTrace) {
        Pipeline {
            policy: p,
            fields: &case.fields,
            mutation: Some(mutation),
            stages: Vec::new(),
        }
        .run()
    }
}

use mutants::Stage4Mutation;

fn verdict(t: Truth) -> Verdict {
    match t {
        Truth::True => Verdict::Fired,
        Truth::False => Verdict::NotFired,
        Truth::Indeterminate => Verdict::Indeterminate,
    }
}

struct Pipeline<'a> {
    policy: &'a Policy,
    fields: &'a FieldMap,
    mutation: Option<Stage4Mutation>,
    stages: Vec<StageRecord>,
}

type StageResult<T> = Result<T, SystemOutput>;

impl<'a> Pipeline<'a> {
    fn run(mut self) -> (SystemOutput, AuditTrace) {
        let output = match self.stages_to_output() {
            Ok(class) => {
                self.record(Stage::Output, Vec::new(), [class.clone()]);
                SystemOutput::Recommend(class)
            }
            Err(abstention) => abstention,
        };
        let trace = AuditTrace {
            stages: self.stages,
            final_output: output.clone(),
        };
        (output, trace)
    }

    fn record(
        &mut self,
        stage: Stage,
        evaluated: Vec<(String, Verdict)>,
        notes: impl IntoIterator<Item = String>,
    ) {
        self.stages.push(StageRecord::new(stage, evaluated, notes));
    }

    fn stages_to_output(&mut self) -> StageResult<String> {
        self.input_assessment()?;
        self.exclusions()?;
        let candidates = self.clinical_rules()?;
        self.stewardship(&candidates)
    }

    fn input_assessment(&mut self) -> StageResult<()> {
        let report = assess_fields(self.policy, self.fields);
        let evaluated = self
            .policy
            .consistency
            .iter()
            .map(|c| (c.rule_id.clone(), verdict(c.forbid.evaluate(self.fields))))
            .collect();
        let notes = [
            (!report.missing_required.is_empty()).then_some(NOTE_MISSING_REQUIRED),
            (!report.consistency_violations.is_empty()).then_some(NOTE_CONSISTENCY_VIOLATION),
            (!report.unknown_risk_tokens.is_empty()).then_some(NOTE_UNKNOWN_RISK),
        ];
        self.record(
            Stage::InputAssessment,
            evaluated,
            notes.into_iter().flatten().map(String::from),
        );
        if !report.missing_required.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::MissingInputs,
                report.missing_required,
            ));
        }
        if !report.consistency_violations.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::ConflictingSignals,
                report.consistency_violations,
            ));
        }
        if !report.unknown_risk_tokens.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::UnknownRisk,
                report.unknown_risk_tokens,
            ));
        }
        Ok(())
    }

    fn exclusions(&mut self) -> StageResult<()> {
        let mut evaluated = Vec::new();
        let mut triggered = BTreeSet::new();
        let mut unresolved = BTreeSet::new();
        for rule in &self.policy.exclusions {
            let truth = rule.when.evaluate(self.fields);
            match truth {
                Truth::True => {
                    triggered.insert(rule.label.clone());
                }
                Truth::Indeterminate => {
                    unresolved.extend(unresolved_or_rule(&rule.when, self.fields, &rule.rule_id));
                }
                Truth::False => {}
            }
            evaluated.push((rule.rule_id.clone(), verdict(truth)));
        }
        self.record(Stage::Exclusions, evaluated, triggered.iter().cloned());
        if !triggered.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::ExplicitExclusion,
                triggered,
            ));
        }
        if !unresolved.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::MissingInputs,
                unresolved,
            ));
        }
        Ok(())
    }

    /// Returns the fired rules as (rule id, candidate class).
    fn clinical_rules(&mut self) -> StageResult<Vec<(String, String)>> {
        let mut evaluated = Vec::new();
        let mut fired: Vec<(String, String)> = Vec::new();
        let mut unresolved = BTreeSet::new();
        for rule in &self.policy.clinical_rules {
            let unmet: Vec<&String> = rule
                .requires
                .iter()
                .filter(|f| !self.fields.contains_key(*f))
                .collect();
            let truth = rule.when.evaluate(self.fields);
            let v = if !unmet.is_empty() || truth == Truth::Indeterminate {
                unresolved.extend(unmet.into_iter().cloned());
                if truth == Truth::Indeterminate {
                    unresolved.extend(unresolved_or_rule(&rule.when, self.fields, &rule.rule_id));
                }
                Verdict::Indeterminate
            } else {
                verdict(truth)
            };
            if v == Verdict::Fired {
                fired.push((rule.rule_id.clone(), rule.candidate.clone()));
            }
            evaluated.push((rule.rule_id.clone(), v));
        }
        let candidate_classes: BTreeSet<String> = fired.iter().map(|(_, c)| c.clone()).collect();
        self.record(Stage::ClinicalRules, evaluated, candidate_classes);

        if !unresolved.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::MissingInputs,
                unresolved,
            ));
        }
        let fired_ids: BTreeSet<&str> = fired.iter().map(|(id, _)| id.as_str()).collect();
        let mut conflicting = BTreeSet::new();
        for rule in &self.policy.clinical_rules {
            if !fired_ids.contains(rule.rule_id.as_str()) {
                continue;
            }
            for other in &rule.incompatible_with {
                if fired_ids.contains(other.as_str()) {
                    conflicting.insert(rule.rule_id.clone());
                    conflicting.insert(other.clone());
                }
            }
        }
        if !conflicting.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::ConflictingSignals,
                conflicting,
            ));
        }
        if fired.is_empty() {
            return Err(SystemOutput::abstain(
                AbstentionCategory::ConservativeAmbiguity,
                [NO_CANDIDATE],
            ));
        }
        Ok(fired)
    }

    fn stewardship(&mut self, fired: &[(String, String)]) -> StageResult<String> {
        let spec = &self.policy.stewardship;
        let justification = spec.escalation_justification.evaluate(self.fields);
        let mut evaluated = vec![(
            ESCALATION_JUSTIFICATION_ID.to_string(),
            verdict(justification),
        )];

        let mut removed: BTreeSet<&str> = BTreeSet::new();
        for veto in &spec.class_vetoes {
            let truth = veto.when.evaluate(self.fields);
            // an unresolvable veto still vetoes
            if truth != Truth::False {
                removed.insert(&veto.class_id);
            }
            evaluated.push((veto.rule_id.clone(), verdict(truth)));
        }
        let gate_escalation = self.mutation != Some(Stage4Mutation::IgnoreEscalationGate);
        if gate_escalation && !justification.is_true() {
            removed.extend(
                self.policy
                    .classes
                    .iter()
                    .filter(|c| c.escalation_tier)
                    .map(|c| c.class_id.as_str()),
            );
        }

        let mut survivors: BTreeSet<&str> = BTreeSet::new();
        for (rule_id, class) in fired {
            if removed.contains(class.as_str()) {
                evaluated.push((rule_id.clone(), Verdict::Vetoed));
            } else {
                survivors.insert(class);
            }
        }
        let ranked: Vec<(u32, &str)> = survivors
            .iter()
            .map(|c| {
                let rank = self
                    .policy
                    .class(c)
                    .map(|decl| decl.spectrum_rank)
                    .expect("candidate classes are declared");
                (rank, *c)
            })
            .collect();
        let survivor_notes: Vec<String> = survivors.iter().map(|c| c.to_string()).collect();
        self.record(Stage::Stewardship, evaluated, survivor_notes);

        let Some(min_rank) = ranked.iter().map(|(r, _)| *r).min() else {
            return Err(SystemOutput::abstain(
                AbstentionCategory::ConservativeAmbiguity,
                [ALL_CANDIDATES_VETOED],
            ));
        };
        if self.mutation == Some(Stage4Mutation::WidestSurvivor) {
            let widest = ranked.iter().max_by_key(|(r, _)| *r).expect("non-empty");
            return Ok(widest.1.to_string());
        }
        let narrowest: Vec<&str> = ranked
            .iter()
            .filter(|(r, _)| *r == min_rank)
            .map(|(_, c)| *c)
            .collect();
        match narrowest.as_slice() {
            [only] => Ok(only.to_string()),
            tied => Err(SystemOutput::abstain(
                AbstentionCategory::ConservativeAmbiguity,
                tied.iter().copied(),
            )),
        }
    }
}

fn unresolved_or_rule(
    condition: &crate::policy::Condition,
    fields: &FieldMap,
    rule_id: &str,
) -> BTreeSet<String> {
    let fields = condition.unresolved_fields(fields);
    if fields.is_empty() {
        // only reachable with unbound, mistyped inputs
        BTreeSet::from([rule_id.to_string()])
    } else {
        fields
    }
}
