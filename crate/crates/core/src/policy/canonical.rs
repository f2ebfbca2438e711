//! Order-normalized canonical form of a policy, and its digest.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{FieldType, Policy};
use crate::canonical::{sha256_hex, to_canonical_bytes};

#[derive(Serialize)]
struct CanonicalPolicy<'a> {
    policy_id: &'a str,
    version: &'a str,
    fields: BTreeMap<&'a str, String>,
    classes: BTreeMap<&'a str, CanonicalClass>,
    required: BTreeSet<&'a str>,
    known_risks: &'a BTreeSet<String>,
    consistency: BTreeMap<&'a str, String>,
    exclusions: BTreeMap<&'a str, CanonicalExclusion<'a>>,
    clinical_rules: BTreeMap<&'a str, CanonicalRule<'a>>,
    stewardship: CanonicalStewardship<'a>,
}

#[derive(Serialize)]
struct CanonicalClass {
    rank: u32,
    escalation: bool,
}

#[derive(Serialize)]
struct CanonicalExclusion<'a> {
    label: &'a str,
    when: String,
}

#[derive(Serialize)]
struct CanonicalRule<'a> {
    requires: BTreeSet<&'a str>,
    when: String,
    candidate: &'a str,
    incompatible: BTreeSet<&'a str>,
}

#[derive(Serialize)]
struct CanonicalStewardship<'a> {
    escalation_justified_when: String,
    vetoes: BTreeMap<&'a str, CanonicalVeto<'a>>,
}

#[derive(Serialize)]
struct CanonicalVeto<'a> {
    class: &'a str,
    when: String,
}

fn type_repr(ftype: &FieldType) -> String {
    match ftype {
        FieldType::Token(tokens) | FieldType::TokenSet(tokens) => {
            let sorted: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
            format!(
                "{}{{{}}}",
                ftype.keyword(),
                sorted.into_iter().collect::<Vec<_>>().join(",")
            )
        }
        other => other.keyword().to_string(),
    }
}

/// Canonical bytes of a policy. Declaration order, enum order, and source
/// positions do not affect the result.
pub fn policy_canonical_bytes(p: &Policy) -> Vec<u8> {
    let canonical = CanonicalPolicy {
        policy_id: &p.policy_id,
        version: &p.version,
        fields: p
            .schema
            .iter()
            .map(|f| (f.name.as_str(), type_repr(&f.ftype)))
            .collect(),
        classes: p
            .classes
            .iter()
            .map(|c| {
                (
                    c.class_id.as_str(),
                    CanonicalClass {
                        rank: c.spectrum_rank,
                        escalation: c.escalation_tier,
                    },
                )
            })
            .collect(),
        required: p.required.iter().map(String::as_str).collect(),
        known_risks: &p.known_risks,
        consistency: p
            .consistency
            .iter()
            .map(|c| (c.rule_id.as_str(), c.forbid.to_string()))
            .collect(),
        exclusions: p
            .exclusions
            .iter()
            .map(|e| {
                (
                    e.rule_id.as_str(),
                    CanonicalExclusion {
                        label: &e.label,
                        when: e.when.to_string(),
                    },
                )
            })
            .collect(),
        clinical_rules: p
            .clinical_rules
            .iter()
            .map(|r| {
                (
                    r.rule_id.as_str(),
                    CanonicalRule {
                        requires: r.requires.iter().map(String::as_str).collect(),
                        when: r.when.to_string(),
                        candidate: &r.candidate,
                        incompatible: r.incompatible_with.iter().map(String::as_str).collect(),
                    },
                )
            })
            .collect(),
        stewardship: CanonicalStewardship {
            escalation_justified_when: p.stewardship.escalation_justification.to_string(),
            vetoes: p
                .stewardship
                .class_vetoes
                .iter()
                .map(|v| {
                    (
                        v.rule_id.as_str(),
                        CanonicalVeto {
                            class: &v.class_id,
                            when: v.when.to_string(),
                        },
                    )
                })
                .collect(),
        },
    };
    to_canonical_bytes(&canonical)
}

/// SHA-256 of [`policy_canonical_bytes`], lowercase hex.
pub fn policy_hash(p: &Policy) -> String {
    sha256_hex(&policy_canonical_bytes(p))
}
