//! Versioned suites of synthetic cases with expected behavior.
//!
//! A suite file is one JSON document:
//!
//! ```json
//! {
//!   "suite_id": "reference",
//!   "version": "v1",
//!   "policy_hash_pin": "sha256:…",
//!   "mechanisms": ["exclusion", "narrow_preference"],
//!   "cases": [
//!     {
//!       "id": "c01",
//!       "description": "…",
//!       "mechanism": "exclusion",
//!       "fields": { "age": 30, "temperature": "38.5", "site": "urinary", "risks": ["copd"] },
//!       "expect": { "abstain": "explicit_exclusion" }
//!     }
//!   ]
//! }
//! ```
//!
//! Decimals travel as strings so they stay exact. `"any"` in `expect` is
//! the wildcard.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::canonical::{digest, to_canonical_string};
use crate::decimal::Decimal;
use crate::diag::{codes, Diagnostic, Pos};
use crate::model::{
    is_ident, is_token, AbstentionCategory, CaseInput, ExpectedBehavior, FieldMap, FieldValue,
    WILDCARD,
};
use crate::policy::{policy_hash, FieldType, Policy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Suite {
    pub suite_id: String,
    pub version: String,
    /// Policy digest (bare lowercase hex) the expectations were written against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_hash_pin: Option<String>,
    pub mechanisms: BTreeSet<String>,
    /// Sorted by case id.
    pub cases: Vec<CaseInput>,
}

impl Suite {
    pub fn case(&self, case_id: &str) -> Option<&CaseInput> {
        self.cases
            .binary_search_by(|c| c.case_id.as_str().cmp(case_id))
            .ok()
            .map(|i| &self.cases[i])
    }
}

/// Parse a suite document. Field names and types are not checked here;
/// that happens in [`bind_suite`] once the policy is known.
pub fn parse_suite(text: &str) -> Result<Suite, Vec<Diagnostic>> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        vec![Diagnostic::error(
            codes::MALFORMED_DOCUMENT,
            Pos::new(e.line() as u32, e.column() as u32),
            e.to_string(),
        )]
    })?;
    let mut diags = Vec::new();
    let suite = SuiteReader { diags: &mut diags }.read(&root);
    match suite {
        Some(s) if diags.is_empty() => Ok(s),
        _ => Err(diags),
    }
}

struct SuiteReader<'d> {
    diags: &'d mut Vec<Diagnostic>,
}

impl SuiteReader<'_> {
    fn error(&mut self, code: &'static str, message: impl Into<String>) {
        self.diags
            .push(Diagnostic::error(code, Pos::UNKNOWN, message));
    }

    fn object<'v>(&mut self, v: &'v Value, what: &str) -> Option<&'v Map<String, Value>> {
        let obj = v.as_object();
        if obj.is_none() {
            self.error(
                codes::MALFORMED_DOCUMENT,
                format!("{what} must be an object"),
            );
        }
        obj
    }

    fn check_keys(&mut self, obj: &Map<String, Value>, allowed: &[&str], what: &str) {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.error(codes::UNKNOWN_KEY, format!("unknown key `{key}` in {what}"));
            }
        }
    }

    fn string<'v>(
        &mut self,
        obj: &'v Map<String, Value>,
        key: &str,
        what: &str,
        valid: fn(&str) -> bool,
    ) -> Option<&'v str> {
        match obj.get(key) {
            Some(Value::String(s)) if valid(s) => Some(s),
            Some(Value::String(s)) => {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    format!("{what} `{key}` has invalid value {s:?}"),
                );
                None
            }
            Some(_) => {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    format!("{what} `{key}` must be a string"),
                );
                None
            }
            None => {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    format!("{what} is missing `{key}`"),
                );
                None
            }
        }
    }

    fn read(mut self, root: &Value) -> Option<Suite> {
        let obj = self.object(root, "suite")?;
        self.check_keys(
            obj,
            &[
                "suite_id",
                "version",
                "policy_hash_pin",
                "mechanisms",
                "cases",
            ],
            "suite header",
        );
        let suite_id = self.string(obj, "suite_id", "suite header", is_ident);
        let version = self.string(obj, "version", "suite header", is_token);
        let policy_hash_pin = match obj.get("policy_hash_pin") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => {
                let hex = s.strip_prefix("sha256:").unwrap_or(s);
                if hex.len() == 64 && hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                    Some(hex.to_ascii_lowercase())
                } else {
                    self.error(
                        codes::MALFORMED_DOCUMENT,
                        format!("policy_hash_pin {s:?} is not a sha256 digest"),
                    );
                    None
                }
            }
            Some(_) => {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    "policy_hash_pin must be a string",
                );
                None
            }
        };

        let mut mechanisms = BTreeSet::new();
        match obj.get("mechanisms") {
            Some(Value::Array(items)) if !items.is_empty() => {
                for item in items {
                    match item.as_str() {
                        Some(m) if is_token(m) => {
                            mechanisms.insert(m.to_string());
                        }
                        _ => self.error(
                            codes::MALFORMED_DOCUMENT,
                            format!("mechanism {item} is not a token"),
                        ),
                    }
                }
            }
            _ => self.error(
                codes::MALFORMED_DOCUMENT,
                "`mechanisms` must be a non-empty array of tokens",
            ),
        }

        let mut cases: BTreeMap<String, CaseInput> = BTreeMap::new();
        match obj.get("cases") {
            Some(Value::Array(items)) if items.is_empty() => {
                self.error(codes::EMPTY_SUITE, "a suite needs at least one case")
            }
            Some(Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    let Some(case) = self.case(item, i, &mechanisms) else {
                        continue;
                    };
                    if cases.contains_key(&case.case_id) {
                        self.error(
                            codes::DUPLICATE_CASE_ID,
                            format!("case id `{}` appears more than once", case.case_id),
                        );
                    } else {
                        cases.insert(case.case_id.clone(), case);
                    }
                }
            }
            _ => self.error(codes::MALFORMED_DOCUMENT, "`cases` must be an array"),
        }

        Some(Suite {
            suite_id: suite_id?.to_string(),
            version: version?.to_string(),
            policy_hash_pin,
            mechanisms,
            cases: cases.into_values().collect(),
        })
    }

    fn case(
        &mut self,
        v: &Value,
        index: usize,
        mechanisms: &BTreeSet<String>,
    ) -> Option<CaseInput> {
        let what = format!("case #{}", index + 1);
        let obj = self.object(v, &what)?;
        self.check_keys(
            obj,
            &["id", "description", "mechanism", "fields", "expect"],
            &what,
        );
        let case_id = self.string(obj, "id", &what, is_ident);
        let what = match case_id {
            Some(id) => format!("case `{id}`"),
            None => what,
        };
        let description = match obj.get("description") {
            None => Some(""),
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    format!("{what} description must be a string"),
                );
                None
            }
        };
        let mechanism = self.string(obj, "mechanism", &what, is_token);
        if let Some(m) = mechanism {
            if !mechanisms.contains(m) {
                self.error(
                    codes::UNKNOWN_MECHANISM,
                    format!("{what} uses mechanism `{m}`, which the suite header does not declare"),
                );
            }
        }
        let fields = match obj.get("fields") {
            Some(Value::Object(map)) => self.fields(map, &what),
            _ => {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    format!("{what} needs a `fields` object"),
                );
                None
            }
        };
        let expected = self.expectation(obj.get("expect"), &what);
        Some(CaseInput {
            case_id: case_id?.to_string(),
            description: description?.to_string(),
            mechanism: mechanism?.to_string(),
            fields: fields?,
            expected: expected?,
        })
    }

    fn fields(&mut self, map: &Map<String, Value>, what: &str) -> Option<FieldMap> {
        let mut out = FieldMap::new();
        let mut ok = true;
        for (name, raw) in map {
            if !is_ident(name) {
                self.error(
                    codes::MALFORMED_DOCUMENT,
                    format!("{what}: `{name}` is not a field name"),
                );
                ok = false;
                continue;
            }
            match field_value(raw) {
                Ok(value) => {
                    out.insert(name.clone(), value);
                }
                Err(msg) => {
                    self.error(
                        codes::INVALID_VALUE,
                        format!("{what}: field `{name}`: {msg}"),
                    );
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn expectation(&mut self, v: Option<&Value>, what: &str) -> Option<ExpectedBehavior> {
        let parsed = match v.and_then(Value::as_object) {
            Some(obj) if obj.len() == 1 => match obj.iter().next() {
                Some((k, Value::String(s))) if k == "recommend" => {
                    if s == WILDCARD {
                        Some(ExpectedBehavior::Recommend(None))
                    } else if is_ident(s) {
                        Some(ExpectedBehavior::Recommend(Some(s.clone())))
                    } else {
                        None
                    }
                }
                Some((k, Value::String(s))) if k == "abstain" => {
                    if s == WILDCARD {
                        Some(ExpectedBehavior::Abstain(None))
                    } else {
                        s.parse::<AbstentionCategory>()
                            .ok()
                            .map(|c| ExpectedBehavior::Abstain(Some(c)))
                    }
                }
                _ => None,
            },
            _ => None,
        };
        if parsed.is_none() {
            let shown = v.map(Value::to_string).unwrap_or_else(|| "nothing".into());
            self.error(
                codes::UNKNOWN_EXPECTATION,
                format!(
                    "{what}: expected {{\"recommend\": <class>|\"any\"}} or {{\"abstain\": <category>|\"any\"}}, found {shown}"
                ),
            );
        }
        parsed
    }
}

fn field_value(raw: &Value) -> Result<FieldValue, String> {
    match raw {
        Value::Bool(b) => Ok(FieldValue::Bool(*b)),
        Value::Number(n) => n
            .as_i64()
            .map(FieldValue::Int)
            .ok_or_else(|| format!("{n} is not a 64-bit integer; write decimals as strings")),
        Value::String(s) if is_token(s) => Ok(FieldValue::Token(s.clone())),
        Value::String(s) => s
            .parse::<Decimal>()
            .map(FieldValue::Decimal)
            .map_err(|_| format!("{s:?} is neither a token nor a decimal")),
        Value::Array(items) => {
            let mut set = BTreeSet::new();
            for item in items {
                match item.as_str() {
                    Some(t) if is_token(t) => {
                        if !set.insert(t.to_string()) {
                            return Err(format!("token `{t}` repeated"));
                        }
                    }
                    _ => return Err(format!("set element {item} is not a token")),
                }
            }
            Ok(FieldValue::TokenSet(set))
        }
        Value::Null => Err("null is not a value; omit absent fields".into()),
        Value::Object(_) => Err("objects are not field values".into()),
    }
}

/// Check a suite against the policy it will be evaluated with.
///
/// Errors: fields missing from the schema, values of the wrong type, tokens
/// outside a field's enumeration, and expected classes the policy does not
/// declare. A pin that differs from the policy's hash is only a warning.
pub fn bind_suite(s: &Suite, p: &Policy) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut error =
        |code, message: String| diags.push(Diagnostic::error(code, Pos::UNKNOWN, message));
    for case in &s.cases {
        let id = &case.case_id;
        for (name, value) in &case.fields {
            let Some(decl) = p.field(name) else {
                error(
                    codes::UNKNOWN_FIELD,
                    format!("case `{id}`: field `{name}` is not in the policy schema"),
                );
                continue;
            };
            match (&decl.ftype, value) {
                (FieldType::Bool, FieldValue::Bool(_))
                | (FieldType::Int, FieldValue::Int(_))
                | (FieldType::Decimal, FieldValue::Decimal(_))
                | (FieldType::RiskSet, FieldValue::TokenSet(_)) => {}
                (FieldType::Token(allowed), FieldValue::Token(t)) => {
                    if !allowed.contains(t) {
                        error(
                            codes::UNKNOWN_TOKEN,
                            format!("case `{id}`: `{t}` is not a value of `{name}`"),
                        );
                    }
                }
                (FieldType::TokenSet(allowed), FieldValue::TokenSet(ts)) => {
                    for t in ts.iter().filter(|t| !allowed.contains(*t)) {
                        error(
                            codes::UNKNOWN_TOKEN,
                            format!("case `{id}`: `{t}` is not a value of `{name}`"),
                        );
                    }
                }
                (ftype, value) => error(
                    codes::TYPE_MISMATCH,
                    format!(
                        "case `{id}`: field `{name}` is {} but the case gives a {}",
                        ftype.keyword(),
                        value.kind()
                    ),
                ),
            }
        }
        if let ExpectedBehavior::Recommend(Some(class)) = &case.expected {
            if p.class(class).is_none() {
                error(
                    codes::UNKNOWN_EXPECTED_CLASS,
                    format!(
                        "case `{id}` expects class `{class}`, which the policy does not declare"
                    ),
                );
            }
        }
    }
    if let Some(pin) = &s.policy_hash_pin {
        let actual = policy_hash(p);
        if *pin != actual {
            diags.push(Diagnostic::warning(
                codes::POLICY_DRIFT,
                Pos::UNKNOWN,
                format!("suite pinned policy sha256:{pin} but the policy is sha256:{actual}"),
            ));
        }
    }
    diags
}

/// SHA-256 of the suite's canonical form. Case order in the source file
/// does not matter.
pub fn suite_hash(s: &Suite) -> String {
    digest(s)
}

/// Render a suite as pretty-printed JSON with sorted keys and cases.
pub fn print_suite(s: &Suite) -> String {
    let tree: Value = serde_json::from_str(&to_canonical_string(s)).expect("canonical JSON parses");
    let mut out = serde_json::to_string_pretty(&tree).expect("JSON value always encodes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::parse_policy;

    fn doc(cases: &str) -> String {
        format!(
            r#"{{"suite_id": "s", "version": "v1", "mechanisms": ["gate", "permit"], "cases": [{cases}]}}"#
        )
    }

    const C1: &str = r#"{"id": "c1", "mechanism": "gate", "fields": {"age": 30}, "expect": {"abstain": "missing_inputs"}}"#;
    const C2: &str = r#"{"id": "c2", "mechanism": "permit", "fields": {"temp": "38.5", "site": "lung", "r": ["copd"]}, "expect": {"recommend": "any"}}"#;

    fn codes_of(text: &str) -> Vec<&'static str> {
        parse_suite(text)
            .unwrap_err()
            .iter()
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn two_cases_sorted() {
        let s = parse_suite(&doc(&format!("{C2}, {C1}"))).unwrap();
        assert_eq!(s.cases.len(), 2);
        assert_eq!(s.cases[0].case_id, "c1");
        assert_eq!(s.cases[1].expected, ExpectedBehavior::Recommend(None));
        let f = &s.cases[1].fields;
        assert_eq!(f["temp"], FieldValue::Decimal("38.5".parse().unwrap()));
        assert_eq!(f["site"], FieldValue::Token("lung".into()));
        assert_eq!(f["r"], FieldValue::TokenSet(["copd".to_string()].into()));
        assert!(s.case("c2").is_some());
        assert!(s.case("c3").is_none());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            codes_of(&doc(&format!("{C1}, {C1}"))),
            vec![codes::DUPLICATE_CASE_ID]
        );
        assert_eq!(codes_of(&doc("")), vec![codes::EMPTY_SUITE]);
        assert_eq!(codes_of("{"), vec![codes::MALFORMED_DOCUMENT]);
        assert_eq!(
            codes_of(&doc(&C1.replace("missing_inputs", "missing"))),
            vec![codes::UNKNOWN_EXPECTATION]
        );
        assert_eq!(
            codes_of(&doc(&C1.replace("\"abstain\"", "\"maybe\""))),
            vec![codes::UNKNOWN_EXPECTATION]
        );
        assert_eq!(
            codes_of(&doc(&C1.replace("gate", "other"))),
            vec![codes::UNKNOWN_MECHANISM]
        );
        assert_eq!(
            codes_of(&doc(&C1.replace("30", "30.5"))),
            vec![codes::INVALID_VALUE]
        );
        assert_eq!(
            codes_of(&doc(&C1.replace("30", "null"))),
            vec![codes::INVALID_VALUE]
        );
        assert_eq!(
            codes_of(&doc(&C2.replace(r#"["copd"]"#, r#"["copd", "copd"]"#))),
            vec![codes::INVALID_VALUE]
        );
        assert_eq!(
            codes_of(&doc(&C1.replace("\"fields\"", "\"extra\": 1, \"fields\""))),
            vec![codes::UNKNOWN_KEY]
        );
    }

    #[test]
    fn wildcard_forms() {
        let s = parse_suite(&doc(&C1.replace("missing_inputs", "any"))).unwrap();
        assert_eq!(s.cases[0].expected, ExpectedBehavior::Abstain(None));
    }

    const POLICY: &str = "
policy p version v1
field age: int
field temp: decimal
field site: token { lung, skin }
field r: riskset
known_risks { copd }
class class_a rank 1
rule r1 when age > 1 candidate class_a
stewardship { escalation_justified_when false }
";

    #[test]
    fn bind_checks() {
        let p = parse_policy(POLICY).unwrap();
        let s = parse_suite(&doc(&format!("{C1}, {C2}"))).unwrap();
        assert!(bind_suite(&s, &p).is_empty());

        let bad = doc(&C1.replace("30", "\"young\""));
        let s = parse_suite(&bad).unwrap();
        assert_eq!(bind_suite(&s, &p)[0].code, codes::TYPE_MISMATCH);

        let bad = doc(&C1.replace(
            r#"{"abstain": "missing_inputs"}"#,
            r#"{"recommend": "class_z"}"#,
        ));
        let s = parse_suite(&bad).unwrap();
        assert_eq!(bind_suite(&s, &p)[0].code, codes::UNKNOWN_EXPECTED_CLASS);

        let s = parse_suite(&doc(&C2.replace("lung", "bone"))).unwrap();
        assert_eq!(bind_suite(&s, &p)[0].code, codes::UNKNOWN_TOKEN);

        let s = parse_suite(&doc(&C1.replace("age", "weight"))).unwrap();
        assert_eq!(bind_suite(&s, &p)[0].code, codes::UNKNOWN_FIELD);
    }

    #[test]
    fn pin_mismatch_is_a_warning() {
        let p = parse_policy(POLICY).unwrap();
        let pinned = doc(C1).replacen(
            "\"version\"",
            &format!(
                "\"policy_hash_pin\": \"sha256:{}\", \"version\"",
                "0".repeat(64)
            ),
            1,
        );
        let s = parse_suite(&pinned).unwrap();
        let diags = bind_suite(&s, &p);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::POLICY_DRIFT);
        assert!(!diags[0].is_error());

        let good = doc(C1).replacen(
            "\"version\"",
            &format!("\"policy_hash_pin\": \"{}\", \"version\"", policy_hash(&p)),
            1,
        );
        assert!(bind_suite(&parse_suite(&good).unwrap(), &p).is_empty());
    }

    #[test]
    fn hash_ignores_case_order_but_not_content() {
        let a = parse_suite(&doc(&format!("{C1}, {C2}"))).unwrap();
        let b = parse_suite(&doc(&format!("{C2}, {C1}"))).unwrap();
        assert_eq!(suite_hash(&a), suite_hash(&b));
        let flipped = parse_suite(&doc(&format!(
            "{}, {C2}",
            C1.replace("missing_inputs", "unknown_risk")
        )))
        .unwrap();
        assert_ne!(suite_hash(&a), suite_hash(&flipped));
    }

    #[test]
    fn print_round_trip() {
        let s = parse_suite(&doc(&format!("{C2}, {C1}"))).unwrap();
        let printed = print_suite(&s);
        let back = parse_suite(&printed).unwrap();
        assert_eq!(back, s);
        assert_eq!(suite_hash(&back), suite_hash(&s));
        assert!(printed.contains("\"38.5000\""));
    }
}
