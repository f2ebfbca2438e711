//! Trace-based stewardship checks on issued recommendations.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{CaseResult, EvalError};
use crate::model::{AuditTrace, Stage, Verdict};
use crate::policy::{Policy, ESCALATION_JUSTIFICATION_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StewardshipCheck {
    NarrowPreference,
    NoUnjustifiedEscalation,
    JustifiedEscalationDocumented,
}

impl StewardshipCheck {
    pub fn as_str(self) -> &'static str {
        match self {
            StewardshipCheck::NarrowPreference => "narrow_preference",
            StewardshipCheck::NoUnjustifiedEscalation => "no_unjustified_escalation",
            StewardshipCheck::JustifiedEscalationDocumented => "justified_escalation_documented",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StewardshipFinding {
    pub case_id: String,
    pub check: StewardshipCheck,
    pub pass: bool,
    pub detail: Vec<String>,
}

/// Check every recommendation against its trace.
///
/// - `narrow_preference`: the class was a stewardship survivor and no
///   survivor had a lower spectrum rank. `detail` lists offending classes.
/// - `no_unjustified_escalation`: the class is not escalation-tier, or the
///   justification condition fired.
/// - `justified_escalation_documented`: only for escalation-tier classes;
///   passes when the trace records the justification firing.
///
/// Abstaining cases produce no findings. A recommending case without a
/// trace is an error.
pub fn stewardship_audit(
    p: &Policy,
    results: &[CaseResult],
    traces: &BTreeMap<String, AuditTrace>,
) -> Result<Vec<StewardshipFinding>, EvalError> {
    let mut findings = Vec::new();
    for result in results {
        let Some(class) = result.actual.recommended_class() else {
            continue;
        };
        let trace = traces
            .get(&result.case_id)
            .ok_or_else(|| EvalError::TraceRequired(result.case_id.clone()))?;
        let stage = trace.stage(Stage::Stewardship);
        let survivors: &[String] = stage.map(|s| s.notes()).unwrap_or(&[]);
        let justified = stage
            .and_then(|s| s.verdict_of(ESCALATION_JUSTIFICATION_ID))
            .is_some_and(|v| v == Verdict::Fired);
        let decl = p.class(class);
        let rank = decl.map(|d| d.spectrum_rank);

        let mut offending: Vec<String> = survivors
            .iter()
            .filter(|s| {
                let survivor_rank = p.class(s).map(|d| d.spectrum_rank);
                matches!((survivor_rank, rank), (Some(sr), Some(r)) if sr < r)
            })
            .cloned()
            .collect();
        if rank.is_none() || !survivors.iter().any(|s| s == class) {
            offending.push(class.to_string());
        }
        offending.sort();
        findings.push(StewardshipFinding {
            case_id: result.case_id.clone(),
            check: StewardshipCheck::NarrowPreference,
            pass: offending.is_empty(),
            detail: offending,
        });

        let escalation = decl.is_none_or(|d| d.escalation_tier);
        let mut detail = vec![class.to_string()];
        if escalation {
            detail.push(ESCALATION_JUSTIFICATION_ID.to_string());
        }
        findings.push(StewardshipFinding {
            case_id: result.case_id.clone(),
            check: StewardshipCheck::NoUnjustifiedEscalation,
            pass: !escalation || justified,
            detail,
        });
        if escalation {
            findings.push(StewardshipFinding {
                case_id: result.case_id.clone(),
                check: StewardshipCheck::JustifiedEscalationDocumented,
                pass: justified,
                detail: vec![ESCALATION_JUSTIFICATION_ID.to_string()],
            });
        }
    }
    Ok(findings)
}
