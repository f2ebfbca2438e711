//! Diagnostics shared by the policy parser, validator, and suite loader.

use std::fmt;

/// Diagnostic codes. Stable; tests and tooling match on them.
pub mod codes {
    pub const SYNTAX_ERROR: &str = "syntax_error";
    pub const UNKNOWN_KEYWORD: &str = "unknown_keyword";
    pub const MISSING_HEADER: &str = "missing_header";
    pub const MISSING_STEWARDSHIP: &str = "missing_stewardship";
    pub const DUPLICATE_DECLARATION: &str = "duplicate_declaration";
    pub const DUPLICATE_RULE_ID: &str = "duplicate_rule_id";
    pub const RESERVED_IDENTIFIER: &str = "reserved_identifier";
    pub const INVALID_TOKEN: &str = "invalid_token";
    pub const INVALID_ENUM: &str = "invalid_enum";
    pub const INVALID_RANK: &str = "invalid_rank";
    pub const INVALID_LITERAL: &str = "invalid_literal";
    pub const UNKNOWN_FIELD: &str = "unknown_field";
    pub const UNKNOWN_CLASS: &str = "unknown_class";
    pub const UNKNOWN_RULE: &str = "unknown_rule";
    pub const UNKNOWN_TOKEN: &str = "unknown_token";
    pub const BAD_COMPARISON: &str = "bad_comparison";
    pub const SELF_INCOMPATIBLE: &str = "self_incompatible";

    pub const UNREACHABLE_RULE: &str = "unreachable_rule";
    pub const ASYMMETRIC_INCOMPATIBILITY: &str = "asymmetric_incompatibility";
    pub const UNJUSTIFIABLE_ESCALATION_CLASS: &str = "unjustifiable_escalation_class";
    pub const EMPTY_KNOWN_RISKS: &str = "empty_known_risks";

    pub const MALFORMED_DOCUMENT: &str = "malformed_document";
    pub const UNKNOWN_KEY: &str = "unknown_key";
    pub const EMPTY_SUITE: &str = "empty_suite";
    pub const DUPLICATE_CASE_ID: &str = "duplicate_case_id";
    pub const UNKNOWN_MECHANISM: &str = "unknown_mechanism";
    pub const UNKNOWN_EXPECTATION: &str = "unknown_expectation";
    pub const INVALID_VALUE: &str = "invalid_value";
    pub const TYPE_MISMATCH: &str = "type_mismatch";
    pub const UNKNOWN_EXPECTED_CLASS: &str = "unknown_expected_class";
    pub const POLICY_DRIFT: &str = "policy_drift";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Error,
    Warning,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Error => "error",
            Level::Warning => "warning",
        })
    }
}

/// 1-based source position. `Pos::UNKNOWN` (0:0) marks values with no source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const UNKNOWN: Pos = Pos { line: 0, col: 0 };

    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub level: Level,
    pub code: &'static str,
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Error,
            code,
            pos,
            message: message.into(),
        }
    }

    pub fn warning(code: &'static str, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Warning,
            code,
            pos,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.level == Level::Error
    }
}

/// `LEVEL code line:col message`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.level, self.code, self.pos, self.message
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_format() {
        let d = Diagnostic::error(
            codes::UNKNOWN_FIELD,
            Pos::new(3, 14),
            "field `feverX` is not declared",
        );
        assert_eq!(
            d.to_string(),
            "error unknown_field 3:14 field `feverX` is not declared"
        );
        let w = Diagnostic::warning(codes::POLICY_DRIFT, Pos::UNKNOWN, "pin differs");
        assert_eq!(w.to_string(), "warning policy_drift 0:0 pin differs");
        assert!(has_errors(&[w.clone(), d]));
        assert!(!has_errors(&[w]));
    }
}
