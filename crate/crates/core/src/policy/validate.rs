//! Semantic checks that go beyond what the parser enforces.

use std::collections::BTreeSet;

use super::condition::{CmpOp, Condition, Literal};
use super::Policy;
use crate::diag::{codes, Diagnostic};

/// Report semantic problems in a parsed policy. Deterministic: the same
/// policy always yields the same diagnostics in the same order.
///
/// Checks, in order:
/// - incompatibility declared by one rule but not reciprocated (error)
/// - escalation-tier classes when the justification is constant false (error)
/// - risk-set fields with an empty `known_risks` vocabulary (error)
/// - clinical rules that can only fire on inputs a consistency constraint
///   forbids, or whose own boolean tests contradict (warning)
pub fn validate_policy(p: &Policy) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for rule in &p.clinical_rules {
        for other_id in &rule.incompatible_with {
            let reciprocated = p
                .clinical_rule(other_id)
                .is_some_and(|other| other.incompatible_with.contains(&rule.rule_id));
            if !reciprocated {
                diags.push(Diagnostic::error(
                    codes::ASYMMETRIC_INCOMPATIBILITY,
                    rule.pos,
                    format!(
                        "`{}` is incompatible with `{other_id}` but `{other_id}` does not list `{}`",
                        rule.rule_id, rule.rule_id
                    ),
                ));
            }
        }
    }

    if p.stewardship.escalation_justification.constant_value() == Some(false) {
        for class in p.classes.iter().filter(|c| c.escalation_tier) {
            diags.push(Diagnostic::error(
                codes::UNJUSTIFIABLE_ESCALATION_CLASS,
                class.pos,
                format!(
                    "escalation class `{}` can never be issued: the justification condition is always false",
                    class.class_id
                ),
            ));
        }
    }

    if p.known_risks.is_empty() {
        for field in p.risk_fields() {
            diags.push(Diagnostic::error(
                codes::EMPTY_KNOWN_RISKS,
                field.pos,
                format!(
                    "risk field `{}` is declared but `known_risks` is empty; every risk token would abstain",
                    field.name
                ),
            ));
        }
    }

    for rule in &p.clinical_rules {
        let implied = implied_bool_literals(&rule.when);
        let contradictory = implied
            .iter()
            .any(|(field, value)| implied.contains(&(field.clone(), !value)));
        if contradictory {
            diags.push(Diagnostic::warning(
                codes::UNREACHABLE_RULE,
                rule.pos,
                format!(
                    "`{}` requires a boolean field to be both true and false",
                    rule.rule_id
                ),
            ));
            continue;
        }
        for constraint in &p.consistency {
            let Some(forbidden) = pure_bool_conjunction(&constraint.forbid) else {
                continue;
            };
            if !forbidden.is_empty() && forbidden.is_subset(&implied) {
                diags.push(Diagnostic::warning(
                    codes::UNREACHABLE_RULE,
                    rule.pos,
                    format!(
                        "`{}` can only fire on inputs that consistency constraint `{}` rejects",
                        rule.rule_id, constraint.rule_id
                    ),
                ));
            }
        }
    }

    diags
}

fn bool_literal(c: &Condition) -> Option<(String, bool)> {
    match c {
        Condition::Compare {
            field,
            op,
            value: Literal::Bool(b),
        } => match op {
            CmpOp::Eq => Some((field.clone(), *b)),
            CmpOp::Ne => Some((field.clone(), !*b)),
            _ => None,
        },
        _ => None,
    }
}

/// Boolean field tests that must all hold whenever `c` is true: the
/// boolean-literal conjuncts of a top-level conjunction.
fn implied_bool_literals(c: &Condition) -> BTreeSet<(String, bool)> {
    let mut out = BTreeSet::new();
    collect_conjuncts(c, &mut |conjunct| {
        if let Some(lit) = bool_literal(conjunct) {
            out.insert(lit);
        }
    });
    out
}

/// `Some` only when `c` is a conjunction made entirely of boolean literal tests.
fn pure_bool_conjunction(c: &Condition) -> Option<BTreeSet<(String, bool)>> {
    let mut out = BTreeSet::new();
    let mut pure = true;
    collect_conjuncts(c, &mut |conjunct| match bool_literal(conjunct) {
        Some(lit) => {
            out.insert(lit);
        }
        None => pure = false,
    });
    pure.then_some(out)
}

fn collect_conjuncts<'a>(c: &'a Condition, visit: &mut impl FnMut(&'a Condition)) {
    match c {
        Condition::And(a, b) => {
            collect_conjuncts(a, visit);
            collect_conjuncts(b, visit);
        }
        other => visit(other),
    }
}
