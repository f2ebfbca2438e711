use std::fmt::Write;

use super::EvaluationReport;
use crate::model::MatchLevel;

const GREEN: &str = "\x1b[32m";
const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

/// Human-readable summary of a report.
pub fn render_summary(report: &EvaluationReport, color: bool) -> String {
    let paint = |ok: bool, text: &str| -> String {
        match (color, ok) {
            (false, _) => text.to_string(),
            (true, true) => format!("{GREEN}{text}{RESET}"),
            (true, false) => format!("{RED}{text}{RESET}"),
        }
    };
    let n = report.results.len();
    let full = report
        .results
        .iter()
        .filter(|r| r.match_level == MatchLevel::FullMatch)
        .count();
    let action = report
        .results
        .iter()
        .filter(|r| r.match_level != MatchLevel::Mismatch)
        .count();

    let mut out = String::new();
    let _ = writeln!(out, "policy  sha256:{}", report.policy_hash);
    let _ = writeln!(out, "suite   sha256:{}", report.suite_hash);
    let _ = writeln!(out, "cases   {n}");
    let _ = writeln!(
        out,
        "concordance  action {} ({action}/{n})  full {} ({full}/{n})",
        report.concordance_action, report.concordance_full
    );

    let _ = writeln!(out, "coverage by mechanism");
    for (mechanism, ratio) in &report.coverage_by_mechanism {
        let _ = writeln!(out, "  {mechanism:<24} {ratio}");
    }
    let _ = writeln!(out, "abstentions");
    for (category, count) in &report.abstention_distribution {
        let _ = writeln!(out, "  {:<24} {count}", category.as_str());
    }

    let failed: Vec<_> = report
        .stewardship_findings
        .iter()
        .filter(|f| !f.pass)
        .collect();
    let _ = writeln!(
        out,
        "stewardship  {} checks, {} failed",
        report.stewardship_findings.len(),
        failed.len()
    );
    for f in &failed {
        let _ = writeln!(
            out,
            "  {} {} {} [{}]",
            paint(false, "FAIL"),
            f.case_id,
            f.check.as_str(),
            f.detail.join(",")
        );
    }

    for r in report.mismatches() {
        let level = match r.match_level {
            MatchLevel::ActionMatch => "action_match",
            _ => "mismatch",
        };
        let _ = writeln!(
            out,
            "  {} {} {level}: got `{}`, expected `{}`",
            paint(false, "DIFF"),
            r.case_id,
            r.actual,
            r.expected
        );
    }

    if report.run_count == 1 {
        let _ = writeln!(out, "runs=1 (determinism not exercised)");
    } else if report.determinism_ok {
        let _ = writeln!(
            out,
            "runs={} determinism {}",
            report.run_count,
            paint(true, "ok")
        );
    } else {
        let _ = writeln!(
            out,
            "runs={} determinism {}",
            report.run_count,
            paint(false, "FAILED")
        );
    }
    let verdict = if report.strict_ok() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "{}", paint(report.strict_ok(), verdict));
    out
}
