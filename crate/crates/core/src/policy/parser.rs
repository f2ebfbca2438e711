//! Policy language parser.
//!
//! ```text
//! policy      := header decl*
//! header      := "policy" IDENT "version" TOKEN
//! decl        := field | class | require | risks | consistency | exclusion | rule | stewardship
//! field       := "field" IDENT ":" ftype
//! ftype       := "bool" | "int" | "decimal" | "riskset"
//!              | "token" "{" TOKEN ("," TOKEN)* "}" | "tokenset" "{" TOKEN ("," TOKEN)* "}"
//! class       := "class" IDENT "rank" INT ["escalation"]
//! require     := "require" IDENT ("," IDENT)*
//! risks       := "known_risks" "{" TOKEN* "}"
//! consistency := "consistency" IDENT "forbid" expr
//! exclusion   := "exclude" IDENT "label" IDENT "when" expr
//! rule        := "rule" IDENT ["requires" IDENT+] "when" expr "candidate" IDENT ["incompatible" IDENT+]
//! stewardship := "stewardship" "{" "escalation_justified_when" expr ("veto" IDENT "class" IDENT "when" expr)* "}"
//! expr        := and ("or" and)*
//! and         := unary ("and" unary)*
//! unary       := "not" unary | atom
//! atom        := "(" expr ")" | "true" | "false" | "present" "(" IDENT ")" | "absent" "(" IDENT ")"
//!              | IDENT CMP literal | IDENT "has" TOKEN | IDENT
//! ```
//!
//! A bare `IDENT` atom is shorthand for `IDENT == true` on a boolean field.
//! Declarations after the header may appear in any order. Parsing runs in
//! two passes: syntax, then name resolution and type checking against the
//! declared schema. Both passes keep going after an error so one run
//! reports as much as it can.

use std::collections::{BTreeMap, BTreeSet};

use super::condition::{CmpOp, Condition, Literal};
use super::lexer::{tokenize, Spanned, Tok};
use super::{
    ClassDecl, ClassVeto, ClinicalRule, ConsistencyConstraint, ExclusionRule, FieldDecl, FieldType,
    Policy, StewardshipSpec, ESCALATION_JUSTIFICATION_ID,
};
use crate::decimal::{Decimal, DecimalError};
use crate::diag::{codes, Diagnostic, Pos};
use crate::model::{is_ident, is_token, WILDCARD};

const DECL_KEYWORDS: &[&str] = &[
    "policy",
    "field",
    "class",
    "require",
    "known_risks",
    "consistency",
    "exclude",
    "rule",
    "stewardship",
];

const OTHER_KEYWORDS: &[&str] = &[
    "version",
    "rank",
    "escalation",
    "forbid",
    "label",
    "when",
    "requires",
    "candidate",
    "incompatible",
    "escalation_justified_when",
    "veto",
    "and",
    "or",
    "not",
    "true",
    "false",
    "present",
    "absent",
    "has",
    "bool",
    "int",
    "decimal",
    "token",
    "tokenset",
    "riskset",
];

fn is_keyword(word: &str) -> bool {
    DECL_KEYWORDS.contains(&word) || OTHER_KEYWORDS.contains(&word)
}

/// Parse and type-check a policy document.
///
/// On failure every diagnostic found is returned, in source order.
pub fn parse_policy(text: &str) -> Result<Policy, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize(text);
    let mut parser = Parser {
        tokens,
        idx: 0,
        diags: Vec::new(),
    };
    let doc = parser.document();
    diags.append(&mut parser.diags);
    let resolved = Resolver::default().resolve(doc, &mut diags);
    diags.sort_by_key(|d| (d.pos == Pos::UNKNOWN, d.pos));
    match resolved {
        Some(policy) if diags.is_empty() => Ok(policy),
        _ => Err(diags),
    }
}

// ---------------------------------------------------------------------------
// Syntax
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Name {
    text: String,
    pos: Pos,
}

#[derive(Debug, Clone)]
enum RawLit {
    Bool(bool),
    Number(String),
    Word(String),
}

#[derive(Debug, Clone)]
enum RawExpr {
    Const(bool),
    Present(Name),
    Absent(Name),
    Bare(Name),
    Compare {
        field: Name,
        op: CmpOp,
        value: RawLit,
        value_pos: Pos,
    },
    Has {
        field: Name,
        token: Name,
    },
    Not(Box<RawExpr>),
    And(Box<RawExpr>, Box<RawExpr>),
    Or(Box<RawExpr>, Box<RawExpr>),
}

#[derive(Debug)]
enum RawType {
    Bool,
    Int,
    Decimal,
    RiskSet,
    Token(Vec<Name>),
    TokenSet(Vec<Name>),
}

#[derive(Debug)]
enum Decl {
    Field {
        name: Name,
        ftype: RawType,
    },
    Class {
        id: Name,
        rank: (String, Pos),
        escalation: bool,
    },
    Require(Vec<Name>),
    KnownRisks(Vec<Name>),
    Consistency {
        id: Name,
        forbid: RawExpr,
    },
    Exclude {
        id: Name,
        label: Name,
        when: RawExpr,
    },
    Rule {
        id: Name,
        requires: Vec<Name>,
        when: RawExpr,
        candidate: Name,
        incompatible: Vec<Name>,
    },
    Stewardship {
        pos: Pos,
        justification: RawExpr,
        vetoes: Vec<(Name, Name, RawExpr)>,
    },
}

#[derive(Debug, Default)]
struct Document {
    header: Option<(Name, Name)>,
    decls: Vec<Decl>,
}

struct Parser {
    tokens: Vec<Spanned>,
    idx: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.idx).map(|s| &s.tok)
    }

    fn peek_word(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn pos(&self) -> Pos {
        self.tokens
            .get(self.idx)
            .or_else(|| self.tokens.last())
            .map(|s| s.pos)
            .unwrap_or(Pos::new(1, 1))
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn fail<T>(&mut self, expected: &str) -> PResult<T> {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        };
        let pos = self.pos();
        self.diags.push(Diagnostic::error(
            codes::SYNTAX_ERROR,
            pos,
            format!("expected {expected}, found {found}"),
        ));
        Err(())
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.peek_word() == Some(word) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat_word(word) {
            Ok(pos)
        } else {
            self.fail(&format!("`{word}`"))
        }
    }

    fn expect_tok(&mut self, tok: Tok) -> PResult<()> {
        if self.peek() == Some(&tok) {
            self.idx += 1;
            Ok(())
        } else {
            self.fail(&tok.describe())
        }
    }

    fn at_name(&self) -> bool {
        matches!(self.peek_word(), Some(w) if !is_keyword(w))
    }

    fn expect_name(&mut self, what: &str) -> PResult<Name> {
        if self.at_name() {
            let t = self.bump().expect("peeked");
            let Tok::Word(text) = t.tok else {
                unreachable!()
            };
            Ok(Name { text, pos: t.pos })
        } else {
            self.fail(what)
        }
    }

    /// One or more names, optionally comma-separated.
    fn name_list(&mut self, what: &str) -> PResult<Vec<Name>> {
        let mut names = vec![self.expect_name(what)?];
        loop {
            if self.peek() == Some(&Tok::Comma) {
                self.idx += 1;
                names.push(self.expect_name(what)?);
            } else if self.at_name() {
                names.push(self.expect_name(what)?);
            } else {
                return Ok(names);
            }
        }
    }

    fn braced_names(&mut self, what: &str, allow_empty: bool) -> PResult<Vec<Name>> {
        self.expect_tok(Tok::LBrace)?;
        if self.peek() == Some(&Tok::RBrace) && allow_empty {
            self.idx += 1;
            return Ok(Vec::new());
        }
        let names = if self.peek() == Some(&Tok::RBrace) {
            Vec::new()
        } else {
            self.name_list(what)?
        };
        self.expect_tok(Tok::RBrace)?;
        Ok(names)
    }

    fn sync(&mut self) {
        while let Some(tok) = self.peek() {
            if matches!(tok, Tok::Word(w) if DECL_KEYWORDS.contains(&w.as_str())) {
                return;
            }
            self.idx += 1;
        }
    }

    fn document(&mut self) -> Document {
        let mut doc = Document::default();
        if self.peek_word() == Some("policy") {
            if let Ok(h) = self.header() {
                doc.header = Some(h);
            } else {
                self.sync();
            }
        } else {
            let pos = self.pos();
            self.diags.push(Diagnostic::error(
                codes::MISSING_HEADER,
                pos,
                "document must start with `policy <id> version <token>`",
            ));
        }
        while let Some(tok) = self.peek().cloned() {
            let pos = self.pos();
            match tok {
                Tok::Word(w) if w == "policy" => {
                    self.diags.push(Diagnostic::error(
                        codes::DUPLICATE_DECLARATION,
                        pos,
                        "second `policy` header",
                    ));
                    self.idx += 1;
                    self.sync();
                }
                Tok::Word(w) if DECL_KEYWORDS.contains(&w.as_str()) => match self.decl(&w) {
                    Ok(d) => doc.decls.push(d),
                    Err(()) => self.sync(),
                },
                Tok::Word(w) if !is_keyword(&w) => {
                    self.diags.push(Diagnostic::error(
                        codes::UNKNOWN_KEYWORD,
                        pos,
                        format!("unknown declaration keyword `{w}`"),
                    ));
                    self.idx += 1;
                    self.sync();
                }
                other => {
                    self.diags.push(Diagnostic::error(
                        codes::SYNTAX_ERROR,
                        pos,
                        format!("expected a declaration, found {}", other.describe()),
                    ));
                    self.idx += 1;
                    self.sync();
                }
            }
        }
        doc
    }

    fn header(&mut self) -> PResult<(Name, Name)> {
        self.expect_word("policy")?;
        let id = self.expect_name("policy id")?;
        self.expect_word("version")?;
        let pos = self.pos();
        let version = match self.bump() {
            Some(Spanned {
                tok: Tok::Word(w), ..
            }) => Name { text: w, pos },
            _ => {
                self.idx = self.idx.saturating_sub(1);
                return self.fail("version token");
            }
        };
        Ok((id, version))
    }

    fn decl(&mut self, keyword: &str) -> PResult<Decl> {
        let pos = self.pos();
        self.idx += 1;
        match keyword {
            "field" => {
                let name = self.expect_name("field name")?;
                self.expect_tok(Tok::Colon)?;
                let ftype = self.field_type()?;
                Ok(Decl::Field { name, ftype })
            }
            "class" => {
                let id = self.expect_name("class id")?;
                self.expect_word("rank")?;
                let rank_pos = self.pos();
                let rank = match self.peek() {
                    Some(Tok::Number(n)) => n.clone(),
                    _ => return self.fail("rank integer"),
                };
                self.idx += 1;
                let escalation = self.eat_word("escalation");
                Ok(Decl::Class {
                    id,
                    rank: (rank, rank_pos),
                    escalation,
                })
            }
            "require" => Ok(Decl::Require(self.name_list("field name")?)),
            "known_risks" => Ok(Decl::KnownRisks(self.braced_names("risk token", true)?)),
            "consistency" => {
                let id = self.expect_name("rule id")?;
                self.expect_word("forbid")?;
                let forbid = self.expr()?;
                Ok(Decl::Consistency { id, forbid })
            }
            "exclude" => {
                let id = self.expect_name("rule id")?;
                self.expect_word("label")?;
                let label = self.expect_name("exclusion label")?;
                self.expect_word("when")?;
                let when = self.expr()?;
                Ok(Decl::Exclude { id, label, when })
            }
            "rule" => {
                let id = self.expect_name("rule id")?;
                let requires = if self.eat_word("requires") {
                    self.name_list("field name")?
                } else {
                    Vec::new()
                };
                self.expect_word("when")?;
                let when = self.expr()?;
                self.expect_word("candidate")?;
                let candidate = self.expect_name("class id")?;
                let incompatible = if self.eat_word("incompatible") {
                    self.name_list("rule id")?
                } else {
                    Vec::new()
                };
                Ok(Decl::Rule {
                    id,
                    requires,
                    when,
                    candidate,
                    incompatible,
                })
            }
            "stewardship" => {
                self.expect_tok(Tok::LBrace)?;
                self.expect_word("escalation_justified_when")?;
                let justification = self.expr()?;
                let mut vetoes = Vec::new();
                while self.eat_word("veto") {
                    let id = self.expect_name("rule id")?;
                    self.expect_word("class")?;
                    let class = self.expect_name("class id")?;
                    self.expect_word("when")?;
                    let when = self.expr()?;
                    vetoes.push((id, class, when));
                }
                self.expect_tok(Tok::RBrace)?;
                Ok(Decl::Stewardship {
                    pos,
                    justification,
                    vetoes,
                })
            }
            _ => unreachable!("not a declaration keyword: {keyword}"),
        }
    }

    fn field_type(&mut self) -> PResult<RawType> {
        let ty = match self.peek_word() {
            Some("bool") => RawType::Bool,
            Some("int") => RawType::Int,
            Some("decimal") => RawType::Decimal,
            Some("riskset") => RawType::RiskSet,
            Some("token") => {
                self.idx += 1;
                return Ok(RawType::Token(self.braced_names("enum token", false)?));
            }
            Some("tokenset") => {
                self.idx += 1;
                return Ok(RawType::TokenSet(self.braced_names("enum token", false)?));
            }
            _ => return self.fail("field type"),
        };
        self.idx += 1;
        Ok(ty)
    }

    fn expr(&mut self) -> PResult<RawExpr> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("or") {
            let rhs = self.and_expr()?;
            lhs = RawExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<RawExpr> {
        let mut lhs = self.unary()?;
        while self.eat_word("and") {
            let rhs = self.unary()?;
            lhs = RawExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<RawExpr> {
        if self.eat_word("not") {
            return Ok(RawExpr::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<RawExpr> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect_tok(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                let b = w == "true";
                self.idx += 1;
                Ok(RawExpr::Const(b))
            }
            Some(Tok::Word(w)) if w == "present" || w == "absent" => {
                let present = w == "present";
                self.idx += 1;
                self.expect_tok(Tok::LParen)?;
                let name = self.expect_name("field name")?;
                self.expect_tok(Tok::RParen)?;
                Ok(if present {
                    RawExpr::Present(name)
                } else {
                    RawExpr::Absent(name)
                })
            }
            _ if self.at_name() => {
                let field = self.expect_name("field name")?;
                if self.eat_word("has") {
                    let token = self.expect_name("token")?;
                    return Ok(RawExpr::Has { field, token });
                }
                let op = match self.peek() {
                    Some(Tok::Cmp(sym)) => match *sym {
                        "==" => CmpOp::Eq,
                        "!=" => CmpOp::Ne,
                        "<" => CmpOp::Lt,
                        "<=" => CmpOp::Le,
                        ">" => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    },
                    _ => return Ok(RawExpr::Bare(field)),
                };
                self.idx += 1;
                let value_pos = self.pos();
                let value = match self.peek() {
                    Some(Tok::Number(n)) => RawLit::Number(n.clone()),
                    Some(Tok::Word(w)) if w == "true" || w == "false" => RawLit::Bool(w == "true"),
                    Some(Tok::Word(w)) if !is_keyword(w) => RawLit::Word(w.clone()),
                    _ => return self.fail("literal"),
                };
                self.idx += 1;
                Ok(RawExpr::Compare {
                    field,
                    op,
                    value,
                    value_pos,
                })
            }
            _ => self.fail("condition"),
        }
    }
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

#[derive(Default)]
struct Resolver {
    fields: BTreeMap<String, FieldType>,
    known_risks: BTreeSet<String>,
}

impl Resolver {
    fn resolve(mut self, doc: Document, diags: &mut Vec<Diagnostic>) -> Option<Policy> {
        let start = diags.len();
        let (policy_id, version) = match doc.header {
            Some((id, version)) => {
                check_ident(&id, diags);
                if !is_token(&version.text) {
                    diags.push(Diagnostic::error(
                        codes::INVALID_TOKEN,
                        version.pos,
                        format!("version `{}` must match [a-z][a-z0-9_]*", version.text),
                    ));
                }
                (id.text, version.text)
            }
            None => (String::new(), String::new()),
        };

        // Schema, classes and vocabulary first: conditions resolve against them.
        let mut schema = Vec::new();
        let mut classes: Vec<ClassDecl> = Vec::new();
        for decl in &doc.decls {
            match decl {
                Decl::Field { name, ftype } => {
                    check_ident(name, diags);
                    let ftype = resolve_type(ftype, diags);
                    if self.fields.contains_key(&name.text) {
                        diags.push(Diagnostic::error(
                            codes::DUPLICATE_DECLARATION,
                            name.pos,
                            format!("field `{}` declared twice", name.text),
                        ));
                        continue;
                    }
                    self.fields.insert(name.text.clone(), ftype.clone());
                    schema.push(FieldDecl {
                        name: name.text.clone(),
                        ftype,
                        pos: name.pos,
                    });
                }
                Decl::Class {
                    id,
                    rank,
                    escalation,
                } => {
                    check_ident(id, diags);
                    if id.text == WILDCARD {
                        diags.push(Diagnostic::error(
                            codes::RESERVED_IDENTIFIER,
                            id.pos,
                            format!("`{WILDCARD}` is reserved and cannot name a class"),
                        ));
                    }
                    let spectrum_rank = match rank.0.parse::<u32>() {
                        Ok(r) if r >= 1 => r,
                        _ => {
                            diags.push(Diagnostic::error(
                                codes::INVALID_RANK,
                                rank.1,
                                format!("rank `{}` must be a positive integer", rank.0),
                            ));
                            1
                        }
                    };
                    if classes.iter().any(|c| c.class_id == id.text) {
                        diags.push(Diagnostic::error(
                            codes::DUPLICATE_DECLARATION,
                            id.pos,
                            format!("class `{}` declared twice", id.text),
                        ));
                        continue;
                    }
                    classes.push(ClassDecl {
                        class_id: id.text.clone(),
                        spectrum_rank,
                        escalation_tier: *escalation,
                        pos: id.pos,
                    });
                }
                Decl::KnownRisks(tokens) => {
                    for t in tokens {
                        check_token(t, diags);
                        if !self.known_risks.insert(t.text.clone()) {
                            diags.push(Diagnostic::error(
                                codes::DUPLICATE_DECLARATION,
                                t.pos,
                                format!("risk token `{}` listed twice", t.text),
                            ));
                        }
                    }
                }
                _ => {}
            }
        }

        let class_ids: BTreeSet<&str> = classes.iter().map(|c| c.class_id.as_str()).collect();
        let clinical_ids: BTreeSet<&str> = doc
            .decls
            .iter()
            .filter_map(|d| match d {
                Decl::Rule { id, .. } => Some(id.text.as_str()),
                _ => None,
            })
            .collect();

        let mut rule_ids: BTreeSet<String> = BTreeSet::new();
        let mut claim_rule_id = |id: &Name, diags: &mut Vec<Diagnostic>| {
            check_ident(id, diags);
            if id.text == ESCALATION_JUSTIFICATION_ID || !rule_ids.insert(id.text.clone()) {
                diags.push(Diagnostic::error(
                    codes::DUPLICATE_RULE_ID,
                    id.pos,
                    format!("rule id `{}` is already in use", id.text),
                ));
            }
        };
        let check_class = |name: &Name, diags: &mut Vec<Diagnostic>| {
            if !class_ids.contains(name.text.as_str()) {
                diags.push(Diagnostic::error(
                    codes::UNKNOWN_CLASS,
                    name.pos,
                    format!("class `{}` is not declared", name.text),
                ));
            }
        };

        let mut required: Vec<String> = Vec::new();
        let mut consistency = Vec::new();
        let mut exclusions = Vec::new();
        let mut clinical_rules = Vec::new();
        let mut stewardship: Option<StewardshipSpec> = None;

        for decl in &doc.decls {
            match decl {
                Decl::Require(names) => {
                    for n in names {
                        if self.check_field(n, diags) {
                            if required.contains(&n.text) {
                                diags.push(Diagnostic::error(
                                    codes::DUPLICATE_DECLARATION,
                                    n.pos,
                                    format!("field `{}` required twice", n.text),
                                ));
                            } else {
                                required.push(n.text.clone());
                            }
                        }
                    }
                }
                Decl::Consistency { id, forbid } => {
                    claim_rule_id(id, diags);
                    if let Some(forbid) = self.condition(forbid, diags) {
                        consistency.push(ConsistencyConstraint {
                            rule_id: id.text.clone(),
                            forbid,
                            pos: id.pos,
                        });
                    }
                }
                Decl::Exclude { id, label, when } => {
                    claim_rule_id(id, diags);
                    check_ident(label, diags);
                    if let Some(when) = self.condition(when, diags) {
                        exclusions.push(ExclusionRule {
                            rule_id: id.text.clone(),
                            label: label.text.clone(),
                            when,
                            pos: id.pos,
                        });
                    }
                }
                Decl::Rule {
                    id,
                    requires,
                    when,
                    candidate,
                    incompatible,
                } => {
                    claim_rule_id(id, diags);
                    let mut req = Vec::new();
                    for n in requires {
                        if self.check_field(n, diags) && !req.contains(&n.text) {
                            req.push(n.text.clone());
                        }
                    }
                    check_class(candidate, diags);
                    let mut incompatible_with = Vec::new();
                    for other in incompatible {
                        if other.text == id.text {
                            diags.push(Diagnostic::error(
                                codes::SELF_INCOMPATIBLE,
                                other.pos,
                                format!("rule `{}` lists itself as incompatible", id.text),
                            ));
                        } else if !clinical_ids.contains(other.text.as_str()) {
                            diags.push(Diagnostic::error(
                                codes::UNKNOWN_RULE,
                                other.pos,
                                format!("`{}` is not a clinical rule", other.text),
                            ));
                        } else if !incompatible_with.contains(&other.text) {
                            incompatible_with.push(other.text.clone());
                        }
                    }
                    if let Some(when) = self.condition(when, diags) {
                        clinical_rules.push(ClinicalRule {
                            rule_id: id.text.clone(),
                            requires: req,
                            when,
                            candidate: candidate.text.clone(),
                            incompatible_with,
                            pos: id.pos,
                        });
                    }
                }
                Decl::Stewardship {
                    pos,
                    justification,
                    vetoes,
                } => {
                    if stewardship.is_some() {
                        diags.push(Diagnostic::error(
                            codes::DUPLICATE_DECLARATION,
                            *pos,
                            "second `stewardship` block",
                        ));
                    }
                    let justification = self.condition(justification, diags);
                    let mut class_vetoes = Vec::new();
                    for (id, class, when) in vetoes {
                        claim_rule_id(id, diags);
                        check_class(class, diags);
                        if let Some(when) = self.condition(when, diags) {
                            class_vetoes.push(ClassVeto {
                                rule_id: id.text.clone(),
                                class_id: class.text.clone(),
                                when,
                                pos: id.pos,
                            });
                        }
                    }
                    if stewardship.is_none() {
                        stewardship =
                            justification.map(|escalation_justification| StewardshipSpec {
                                escalation_justification,
                                class_vetoes,
                                pos: *pos,
                            });
                    }
                }
                Decl::Field { .. } | Decl::Class { .. } | Decl::KnownRisks(_) => {}
            }
        }

        let has_stewardship_decl = doc
            .decls
            .iter()
            .any(|d| matches!(d, Decl::Stewardship { .. }));
        if !has_stewardship_decl {
            diags.push(Diagnostic::error(
                codes::MISSING_STEWARDSHIP,
                Pos::UNKNOWN,
                "policy has no `stewardship` block",
            ));
        }

        if diags.len() > start {
            return None;
        }
        Some(Policy {
            policy_id,
            version,
            schema,
            classes,
            required,
            known_risks: self.known_risks,
            consistency,
            exclusions,
            clinical_rules,
            stewardship: stewardship?,
        })
    }

    fn check_field(&self, name: &Name, diags: &mut Vec<Diagnostic>) -> bool {
        if self.fields.contains_key(&name.text) {
            true
        } else {
            diags.push(Diagnostic::error(
                codes::UNKNOWN_FIELD,
                name.pos,
                format!("field `{}` is not declared", name.text),
            ));
            false
        }
    }

    fn condition(&self, expr: &RawExpr, diags: &mut Vec<Diagnostic>) -> Option<Condition> {
        match expr {
            RawExpr::Const(b) => Some(Condition::Const(*b)),
            RawExpr::Present(n) => self
                .check_field(n, diags)
                .then(|| Condition::Present(n.text.clone())),
            RawExpr::Absent(n) => self
                .check_field(n, diags)
                .then(|| Condition::Absent(n.text.clone())),
            RawExpr::Not(inner) => self.condition(inner, diags).map(Condition::negate),
            RawExpr::And(a, b) => {
                let (a, b) = (self.condition(a, diags), self.condition(b, diags));
                Some(a?.and(b?))
            }
            RawExpr::Or(a, b) => {
                let (a, b) = (self.condition(a, diags), self.condition(b, diags));
                Some(a?.or(b?))
            }
            RawExpr::Bare(n) => {
                let ftype = self.field_type(n, diags)?;
                if *ftype != FieldType::Bool {
                    diags.push(bad_comparison(
                        n.pos,
                        format!(
                            "`{}` is {}; only boolean fields may stand alone",
                            n.text,
                            ftype.keyword()
                        ),
                    ));
                    return None;
                }
                Some(Condition::compare(
                    n.text.clone(),
                    CmpOp::Eq,
                    Literal::Bool(true),
                ))
            }
            RawExpr::Has { field, token } => {
                let ftype = self.field_type(field, diags)?;
                let vocabulary = match ftype {
                    FieldType::TokenSet(enum_tokens) => enum_tokens.contains(&token.text),
                    FieldType::RiskSet => self.known_risks.contains(&token.text),
                    other => {
                        diags.push(bad_comparison(
                            field.pos,
                            format!(
                                "`has` needs a set field; `{}` is {}",
                                field.text,
                                other.keyword()
                            ),
                        ));
                        return None;
                    }
                };
                if !vocabulary {
                    diags.push(Diagnostic::error(
                        codes::UNKNOWN_TOKEN,
                        token.pos,
                        format!(
                            "`{}` is not in the vocabulary of `{}`",
                            token.text, field.text
                        ),
                    ));
                    return None;
                }
                Some(Condition::Has {
                    field: field.text.clone(),
                    token: token.text.clone(),
                })
            }
            RawExpr::Compare {
                field,
                op,
                value,
                value_pos,
            } => {
                let ftype = self.field_type(field, diags)?;
                let lit = self.coerce(field, ftype, *op, value, *value_pos, diags)?;
                Some(Condition::compare(field.text.clone(), *op, lit))
            }
        }
    }

    fn field_type(&self, name: &Name, diags: &mut Vec<Diagnostic>) -> Option<&FieldType> {
        if self.check_field(name, diags) {
            self.fields.get(&name.text)
        } else {
            None
        }
    }

    fn coerce(
        &self,
        field: &Name,
        ftype: &FieldType,
        op: CmpOp,
        value: &RawLit,
        value_pos: Pos,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<Literal> {
        let mismatch = |diags: &mut Vec<Diagnostic>| {
            diags.push(bad_comparison(
                field.pos,
                format!(
                    "cannot apply `{}` between {} field `{}` and {}",
                    op.symbol(),
                    ftype.keyword(),
                    field.text,
                    describe_lit(value)
                ),
            ));
            None
        };
        match (ftype, value) {
            (FieldType::Bool, RawLit::Bool(b)) if !op.is_ordering() => Some(Literal::Bool(*b)),
            (FieldType::Int, RawLit::Number(n)) if !n.contains('.') => match n.parse::<i64>() {
                Ok(i) => Some(Literal::Int(i)),
                Err(_) => {
                    diags.push(Diagnostic::error(
                        codes::INVALID_LITERAL,
                        value_pos,
                        format!("integer `{n}` out of range"),
                    ));
                    None
                }
            },
            (FieldType::Decimal, RawLit::Number(n)) => match n.parse::<Decimal>() {
                Ok(d) => Some(Literal::Decimal(d)),
                Err(e) => {
                    let msg = match e {
                        DecimalError::TooPrecise(_) => {
                            format!("`{n}` has more than 4 fractional digits")
                        }
                        other => other.to_string(),
                    };
                    diags.push(Diagnostic::error(codes::INVALID_LITERAL, value_pos, msg));
                    None
                }
            },
            (FieldType::Token(enum_tokens), RawLit::Word(w)) if !op.is_ordering() => {
                if enum_tokens.contains(w) {
                    Some(Literal::Token(w.clone()))
                } else {
                    diags.push(Diagnostic::error(
                        codes::UNKNOWN_TOKEN,
                        value_pos,
                        format!("`{w}` is not a value of `{}`", field.text),
                    ));
                    None
                }
            }
            _ => mismatch(diags),
        }
    }
}

fn describe_lit(lit: &RawLit) -> String {
    match lit {
        RawLit::Bool(b) => format!("boolean `{b}`"),
        RawLit::Number(n) => format!("number `{n}`"),
        RawLit::Word(w) => format!("token `{w}`"),
    }
}

fn bad_comparison(pos: Pos, message: String) -> Diagnostic {
    Diagnostic::error(codes::BAD_COMPARISON, pos, message)
}

fn check_ident(name: &Name, diags: &mut Vec<Diagnostic>) {
    if !is_ident(&name.text) {
        diags.push(Diagnostic::error(
            codes::SYNTAX_ERROR,
            name.pos,
            format!("`{}` is not a valid identifier", name.text),
        ));
    }
}

fn check_token(name: &Name, diags: &mut Vec<Diagnostic>) {
    if !is_token(&name.text) {
        diags.push(Diagnostic::error(
            codes::INVALID_TOKEN,
            name.pos,
            format!("`{}` must match [a-z][a-z0-9_]*", name.text),
        ));
    }
}

fn resolve_type(raw: &RawType, diags: &mut Vec<Diagnostic>) -> FieldType {
    let enum_list = |names: &[Name], diags: &mut Vec<Diagnostic>| {
        let mut tokens: Vec<String> = Vec::new();
        if names.is_empty() {
            diags.push(Diagnostic::error(
                codes::INVALID_ENUM,
                Pos::UNKNOWN,
                "enumeration must list at least one token",
            ));
        }
        for n in names {
            check_token(n, diags);
            if tokens.contains(&n.text) {
                diags.push(Diagnostic::error(
                    codes::INVALID_ENUM,
                    n.pos,
                    format!("enum token `{}` listed twice", n.text),
                ));
            } else {
                tokens.push(n.text.clone());
            }
        }
        tokens
    };
    match raw {
        RawType::Bool => FieldType::Bool,
        RawType::Int => FieldType::Int,
        RawType::Decimal => FieldType::Decimal,
        RawType::RiskSet => FieldType::RiskSet,
        RawType::Token(names) => FieldType::Token(enum_list(names, diags)),
        RawType::TokenSet(names) => FieldType::TokenSet(enum_list(names, diags)),
    }
}
