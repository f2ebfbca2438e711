//! Boolean conditions over case fields, evaluated in Kleene three-valued logic.

use std::collections::BTreeSet;
use std::fmt;

use crate::decimal::Decimal;
use crate::model::{FieldMap, FieldValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    True,
    False,
    Indeterminate,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Indeterminate,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Indeterminate,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Indeterminate => Truth::Indeterminate,
        }
    }

    pub fn is_true(self) -> bool {
        self == Truth::True
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    fn apply<T: Ord>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

/// Right-hand side of a comparison, already coerced to the field's type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Decimal(Decimal),
    Token(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Decimal(d) => write!(f, "{d}"),
            Literal::Token(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Condition {
    Const(bool),
    Present(String),
    Absent(String),
    Compare {
        field: String,
        op: CmpOp,
        value: Literal,
    },
    Has {
        field: String,
        token: String,
    },
    Not(Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    pub fn compare(field: impl Into<String>, op: CmpOp, value: Literal) -> Self {
        Condition::Compare {
            field: field.into(),
            op,
            value,
        }
    }

    pub fn and(self, other: Condition) -> Self {
        Condition::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Condition) -> Self {
        Condition::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Self {
        Condition::Not(Box::new(self))
    }

    /// Evaluate against a field map. A comparison or membership test on an
    /// absent field is indeterminate; `present`/`absent` never are.
    pub fn evaluate(&self, fields: &FieldMap) -> Truth {
        match self {
            Condition::Const(b) => Truth::from(*b),
            Condition::Present(f) => Truth::from(fields.contains_key(f)),
            Condition::Absent(f) => Truth::from(!fields.contains_key(f)),
            Condition::Compare { field, op, value } => match fields.get(field) {
                None => Truth::Indeterminate,
                Some(actual) => compare_value(actual, *op, value),
            },
            Condition::Has { field, token } => match fields.get(field) {
                Some(FieldValue::TokenSet(set)) => Truth::from(set.contains(token)),
                // type errors are rejected at bind time
                _ => Truth::Indeterminate,
            },
            Condition::Not(inner) => inner.evaluate(fields).not(),
            Condition::And(a, b) => match a.evaluate(fields) {
                Truth::False => Truth::False,
                left => left.and(b.evaluate(fields)),
            },
            Condition::Or(a, b) => match a.evaluate(fields) {
                Truth::True => Truth::True,
                left => left.or(b.evaluate(fields)),
            },
        }
    }

    /// Every field name the condition mentions, guards included.
    pub fn referenced_fields(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit_fields(&mut |f, _| {
            out.insert(f);
        });
        out
    }

    /// Fields read by value (comparison or membership) that are absent from
    /// `fields`. These are the inputs that leave the condition unresolved.
    pub fn unresolved_fields(&self, fields: &FieldMap) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_fields(&mut |f, by_value| {
            if by_value && !fields.contains_key(f) {
                out.insert(f.to_string());
            }
        });
        out
    }

    fn visit_fields<'a>(&'a self, visit: &mut impl FnMut(&'a str, bool)) {
        match self {
            Condition::Const(_) => {}
            Condition::Present(f) | Condition::Absent(f) => visit(f, false),
            Condition::Compare { field, .. } | Condition::Has { field, .. } => visit(field, true),
            Condition::Not(inner) => inner.visit_fields(visit),
            Condition::And(a, b) | Condition::Or(a, b) => {
                a.visit_fields(visit);
                b.visit_fields(visit);
            }
        }
    }

    /// Constant value when the condition is built from literals only.
    pub fn constant_value(&self) -> Option<bool> {
        match self {
            Condition::Const(b) => Some(*b),
            Condition::Not(inner) => inner.constant_value().map(|b| !b),
            Condition::And(a, b) => match (a.constant_value(), b.constant_value()) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Condition::Or(a, b) => match (a.constant_value(), b.constant_value()) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Condition::Or(..) => 1,
            Condition::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_child(&self, child: &Condition, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if child.precedence() < min {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

fn compare_value(actual: &FieldValue, op: CmpOp, expected: &Literal) -> Truth {
    match (actual, expected) {
        (FieldValue::Bool(a), Literal::Bool(b)) if !op.is_ordering() => Truth::from(op.apply(a, b)),
        (FieldValue::Int(a), Literal::Int(b)) => Truth::from(op.apply(a, b)),
        (FieldValue::Decimal(a), Literal::Decimal(b)) => Truth::from(op.apply(a, b)),
        (FieldValue::Token(a), Literal::Token(b)) if !op.is_ordering() => {
            Truth::from(op.apply(a, b))
        }
        // type errors are rejected at bind time
        _ => Truth::Indeterminate,
    }
}

/// Prints in the policy language with the fewest parentheses that preserve
/// the tree; `and`/`or` associate to the left.
impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Const(b) => write!(f, "{b}"),
            Condition::Present(field) => write!(f, "present({field})"),
            Condition::Absent(field) => write!(f, "absent({field})"),
            Condition::Compare { field, op, value } => {
                write!(f, "{field} {} {value}", op.symbol())
            }
            Condition::Has { field, token } => write!(f, "{field} has {token}"),
            Condition::Not(inner) => {
                f.write_str("not ")?;
                self.fmt_child(inner, 3, f)
            }
            Condition::And(a, b) => {
                self.fmt_child(a, 2, f)?;
                f.write_str(" and ")?;
                self.fmt_child(b, 3, f)
            }
            Condition::Or(a, b) => {
                self.fmt_child(a, 1, f)?;
                f.write_str(" or ")?;
                self.fmt_child(b, 2, f)
            }
        }
    }
}
