use std::fmt::Write;

use super::{FieldType, Policy};

/// Render a policy back into the policy language, in declaration order.
/// Parsing the output yields a policy with the same canonical form.
pub fn print_policy(p: &Policy) -> String {
    let mut out = String::new();
    // writes to a String cannot fail
    let _ = write_policy(&mut out, p);
    out
}

fn write_policy(out: &mut String, p: &Policy) -> std::fmt::Result {
    writeln!(out, "policy {} version {}", p.policy_id, p.version)?;
    writeln!(out)?;
    for f in &p.schema {
        match &f.ftype {
            FieldType::Token(tokens) | FieldType::TokenSet(tokens) => writeln!(
                out,
                "field {}: {} {{ {} }}",
                f.name,
                f.ftype.keyword(),
                tokens.join(", ")
            )?,
            other => writeln!(out, "field {}: {}", f.name, other.keyword())?,
        }
    }
    writeln!(out)?;
    for c in &p.classes {
        let escalation = if c.escalation_tier { " escalation" } else { "" };
        writeln!(
            out,
            "class {} rank {}{escalation}",
            c.class_id, c.spectrum_rank
        )?;
    }
    if !p.required.is_empty() {
        writeln!(out, "\nrequire {}", p.required.join(", "))?;
    }
    if !p.known_risks.is_empty() {
        let risks: Vec<&str> = p.known_risks.iter().map(String::as_str).collect();
        writeln!(out, "known_risks {{ {} }}", risks.join(" "))?;
    }
    if !p.consistency.is_empty() {
        writeln!(out)?;
    }
    for c in &p.consistency {
        writeln!(out, "consistency {} forbid {}", c.rule_id, c.forbid)?;
    }
    if !p.exclusions.is_empty() {
        writeln!(out)?;
    }
    for e in &p.exclusions {
        writeln!(
            out,
            "exclude {} label {} when {}",
            e.rule_id, e.label, e.when
        )?;
    }
    if !p.clinical_rules.is_empty() {
        writeln!(out)?;
    }
    for r in &p.clinical_rules {
        write!(out, "rule {}", r.rule_id)?;
        if !r.requires.is_empty() {
            write!(out, " requires {}", r.requires.join(" "))?;
        }
        write!(out, " when {} candidate {}", r.when, r.candidate)?;
        if !r.incompatible_with.is_empty() {
            write!(out, " incompatible {}", r.incompatible_with.join(" "))?;
        }
        writeln!(out)?;
    }
    writeln!(out, "\nstewardship {{")?;
    writeln!(
        out,
        "    escalation_justified_when {}",
        p.stewardship.escalation_justification
    )?;
    for v in &p.stewardship.class_vetoes {
        writeln!(
            out,
            "    veto {} class {} when {}",
            v.rule_id, v.class_id, v.when
        )?;
    }
    writeln!(out, "}}")
}
