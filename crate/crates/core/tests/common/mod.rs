#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use absgate_core::eval::{stewardship_audit, CaseResult, StewardshipFinding};
use absgate_core::model::{compare_outputs, ExpectedBehavior};
use absgate_core::{canonical, AuditTrace, Policy, SystemOutput};

/// Audit one decision as a one-case result set.
pub fn audit_one(p: &Policy, output: &SystemOutput, trace: &AuditTrace) -> Vec<StewardshipFinding> {
    let expected = ExpectedBehavior::Recommend(None);
    let result = CaseResult {
        case_id: "case".into(),
        match_level: compare_outputs(output, &expected),
        actual: output.clone(),
        expected,
        mechanism: "m".into(),
        trace_digest: canonical::digest(trace),
    };
    let traces = BTreeMap::from([("case".to_string(), trace.clone())]);
    stewardship_audit(p, &[result], &traces).expect("trace supplied")
}

/// Checks the serialized form of an output: exactly one of
/// `recommend`/`abstain`, and an abstention names exactly one category.
pub fn exclusive_form(output: &SystemOutput) -> Result<(), String> {
    let value: serde_json::Value =
        serde_json::from_slice(&canonical::to_canonical_bytes(output)).unwrap();
    let obj = value.as_object().ok_or("output is not an object")?;
    if obj.len() != 1 {
        return Err(format!("output has {} top-level keys", obj.len()));
    }
    match (obj.get("recommend"), obj.get("abstain")) {
        (Some(serde_json::Value::String(_)), None) => Ok(()),
        (None, Some(serde_json::Value::Object(a))) => {
            let category = a.get("category").and_then(|c| c.as_str());
            let known = absgate_core::AbstentionCategory::ALL
                .iter()
                .filter(|c| Some(c.as_str()) == category)
                .count();
            if known == 1 {
                Ok(())
            } else {
                Err(format!("abstention category {category:?}"))
            }
        }
        _ => Err(format!("unexpected output form {value}")),
    }
}
