//! Brute-force reference evaluator for small all-boolean policies.
//!
//! Written against the stage rules directly, with its own policy and
//! expression types. It shares nothing with the engine except the policy
//! text it renders.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

#[derive(Debug, Clone)]
pub enum Expr {
    Lit(bool),
    /// `field == value`, optionally written as the bare field name when
    /// `value` is true.
    Eq(usize, bool, bool),
    Ne(usize, bool),
    Present(usize),
    Absent(usize),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

/// A field assignment: `None` is an absent field.
pub type Assignment = Vec<Option<bool>>;

impl Expr {
    /// Three-valued evaluation; `None` is unknown.
    pub fn eval(&self, a: &Assignment) -> Option<bool> {
        match self {
            Expr::Lit(b) => Some(*b),
            Expr::Eq(f, v, _) => a[*f].map(|x| x == *v),
            Expr::Ne(f, v) => a[*f].map(|x| x != *v),
            Expr::Present(f) => Some(a[*f].is_some()),
            Expr::Absent(f) => Some(a[*f].is_none()),
            Expr::Not(e) => e.eval(a).map(|b| !b),
            Expr::And(l, r) => match (l.eval(a), r.eval(a)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Expr::Or(l, r) => match (l.eval(a), r.eval(a)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
        }
    }

    /// Fields compared by value that are absent.
    fn absent_value_fields(&self, a: &Assignment, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Lit(_) | Expr::Present(_) | Expr::Absent(_) => {}
            Expr::Eq(f, _, _) | Expr::Ne(f, _) => {
                if a[*f].is_none() {
                    out.insert(*f);
                }
            }
            Expr::Not(e) => e.absent_value_fields(a, out),
            Expr::And(l, r) | Expr::Or(l, r) => {
                l.absent_value_fields(a, out);
                r.absent_value_fields(a, out);
            }
        }
    }

    fn render(&self) -> String {
        match self {
            Expr::Lit(b) => b.to_string(),
            Expr::Eq(f, true, true) => field_name(*f),
            Expr::Eq(f, v, _) => format!("{} == {v}", field_name(*f)),
            Expr::Ne(f, v) => format!("{} != {v}", field_name(*f)),
            Expr::Present(f) => format!("present({})", field_name(*f)),
            Expr::Absent(f) => format!("absent({})", field_name(*f)),
            Expr::Not(e) => format!("not ({})", e.render()),
            Expr::And(l, r) => format!("({} and {})", l.render(), r.render()),
            Expr::Or(l, r) => format!("({} or {})", l.render(), r.render()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MiniClass {
    pub rank: u32,
    pub escalation: bool,
}

#[derive(Debug, Clone)]
pub struct MiniRule {
    pub requires: Vec<usize>,
    pub when: Expr,
    pub candidate: usize,
    pub incompatible: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MiniPolicy {
    pub n_fields: usize,
    pub classes: Vec<MiniClass>,
    pub required: Vec<usize>,
    pub consistency: Vec<Expr>,
    pub exclusions: Vec<Expr>,
    pub rules: Vec<MiniRule>,
    pub justification: Expr,
    pub vetoes: Vec<(usize, Expr)>,
}

/// The oracle's view of an outcome: either a class id, or a category name
/// with sorted labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Recommend(String),
    Abstain(&'static str, Vec<String>),
}

pub fn field_name(i: usize) -> String {
    format!("f{i}")
}

pub fn class_name(i: usize) -> String {
    format!("class_{i}")
}

pub fn rule_name(i: usize) -> String {
    format!("r{i}")
}

fn sorted<I: IntoIterator<Item = String>>(items: I) -> Vec<String> {
    items
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl MiniPolicy {
    pub fn random(rng: &mut impl Rng) -> Self {
        let n_fields = rng.random_range(1..=3);
        let n_classes = rng.random_range(1..=3);
        let classes = (0..n_classes)
            .map(|_| MiniClass {
                rank: rng.random_range(1..=3),
                escalation: rng.random_bool(0.3),
            })
            .collect();
        let required = (0..n_fields).filter(|_| rng.random_bool(0.25)).collect();
        let consistency = (0..rng.random_range(0..=1))
            .map(|_| random_expr(rng, n_fields, 2))
            .collect();
        let exclusions = (0..rng.random_range(0..=2))
            .map(|_| random_expr(rng, n_fields, 2))
            .collect();
        let n_rules = rng.random_range(1..=4);
        let mut rules: Vec<MiniRule> = (0..n_rules)
            .map(|_| MiniRule {
                requires: (0..n_fields).filter(|_| rng.random_bool(0.15)).collect(),
                when: random_expr(rng, n_fields, 2),
                candidate: rng.random_range(0..n_classes),
                incompatible: Vec::new(),
            })
            .collect();
        for i in 0..n_rules {
            for j in (i + 1)..n_rules {
                if rng.random_bool(0.2) {
                    rules[i].incompatible.push(j);
                    rules[j].incompatible.push(i);
                }
            }
        }
        let justification = random_expr(rng, n_fields, 2);
        let vetoes = (0..rng.random_range(0..=2))
            .map(|_| {
                (
                    rng.random_range(0..n_classes),
                    random_expr(rng, n_fields, 1),
                )
            })
            .collect();
        MiniPolicy {
            n_fields,
            classes,
            required,
            consistency,
            exclusions,
            rules,
            justification,
            vetoes,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("policy mini version v1\n");
        for f in 0..self.n_fields {
            out += &format!("field {}: bool\n", field_name(f));
        }
        for (i, c) in self.classes.iter().enumerate() {
            let esc = if c.escalation { " escalation" } else { "" };
            out += &format!("class {} rank {}{esc}\n", class_name(i), c.rank);
        }
        if !self.required.is_empty() {
            let names: Vec<String> = self.required.iter().map(|f| field_name(*f)).collect();
            out += &format!("require {}\n", names.join(", "));
        }
        for (i, e) in self.consistency.iter().enumerate() {
            out += &format!("consistency cn{i} forbid {}\n", e.render());
        }
        for (i, e) in self.exclusions.iter().enumerate() {
            out += &format!("exclude ex{i} label EX_{i} when {}\n", e.render());
        }
        for (i, r) in self.rules.iter().enumerate() {
            out += &format!("rule {}", rule_name(i));
            if !r.requires.is_empty() {
                let names: Vec<String> = r.requires.iter().map(|f| field_name(*f)).collect();
                out += &format!(" requires {}", names.join(" "));
            }
            out += &format!(
                " when {} candidate {}",
                r.when.render(),
                class_name(r.candidate)
            );
            if !r.incompatible.is_empty() {
                let names: Vec<String> = r.incompatible.iter().map(|j| rule_name(*j)).collect();
                out += &format!(" incompatible {}", names.join(" "));
            }
            out += "\n";
        }
        out += "stewardship {\n";
        out += &format!(
            "  escalation_justified_when {}\n",
            self.justification.render()
        );
        for (i, (class, e)) in self.vetoes.iter().enumerate() {
            out += &format!(
                "  veto v{i} class {} when {}\n",
                class_name(*class),
                e.render()
            );
        }
        out += "}\n";
        out
    }

    /// Every assignment of absent/false/true to each field.
    pub fn assignments(&self) -> Vec<Assignment> {
        let mut all = vec![Vec::new()];
        for _ in 0..self.n_fields {
            all = all
                .into_iter()
                .flat_map(|a: Assignment| {
                    [None, Some(false), Some(true)].into_iter().map(move |v| {
                        let mut next = a.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        all
    }

    pub fn decide(&self, a: &Assignment) -> Outcome {
        // completeness, then consistency
        let missing: Vec<usize> = self
            .required
            .iter()
            .copied()
            .filter(|f| a[*f].is_none())
            .collect();
        if !missing.is_empty() {
            return Outcome::Abstain(
                "missing_inputs",
                sorted(missing.into_iter().map(field_name)),
            );
        }
        let violated: Vec<String> = (0..self.consistency.len())
            .filter(|i| self.consistency[*i].eval(a) == Some(true))
            .map(|i| format!("cn{i}"))
            .collect();
        if !violated.is_empty() {
            return Outcome::Abstain("conflicting_signals", sorted(violated));
        }

        // exclusions
        let mut labels = Vec::new();
        let mut unresolved = BTreeSet::new();
        for (i, e) in self.exclusions.iter().enumerate() {
            match e.eval(a) {
                Some(true) => labels.push(format!("EX_{i}")),
                Some(false) => {}
                None => e.absent_value_fields(a, &mut unresolved),
            }
        }
        if !labels.is_empty() {
            return Outcome::Abstain("explicit_exclusion", sorted(labels));
        }
        if !unresolved.is_empty() {
            return Outcome::Abstain(
                "missing_inputs",
                sorted(unresolved.into_iter().map(field_name)),
            );
        }

        // clinical rules
        let mut fired = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            let unmet: Vec<usize> = r
                .requires
                .iter()
                .copied()
                .filter(|f| a[*f].is_none())
                .collect();
            let value = r.when.eval(a);
            unresolved.extend(unmet.iter().copied());
            match value {
                None => r.when.absent_value_fields(a, &mut unresolved),
                Some(true) if unmet.is_empty() => fired.push(i),
                _ => {}
            }
        }
        if !unresolved.is_empty() {
            return Outcome::Abstain(
                "missing_inputs",
                sorted(unresolved.into_iter().map(field_name)),
            );
        }
        let mut conflicting = Vec::new();
        for &i in &fired {
            for &j in &self.rules[i].incompatible {
                if fired.contains(&j) {
                    conflicting.push(rule_name(i));
                    conflicting.push(rule_name(j));
                }
            }
        }
        if !conflicting.is_empty() {
            return Outcome::Abstain("conflicting_signals", sorted(conflicting));
        }
        if fired.is_empty() {
            return Outcome::Abstain("conservative_ambiguity", vec!["no_candidate".into()]);
        }

        // stewardship
        let justified = self.justification.eval(a) == Some(true);
        let vetoed: BTreeSet<usize> = self
            .vetoes
            .iter()
            .filter(|(_, e)| e.eval(a) != Some(false))
            .map(|(c, _)| *c)
            .collect();
        let survivors: BTreeSet<usize> = fired
            .iter()
            .map(|i| self.rules[*i].candidate)
            .filter(|c| !vetoed.contains(c))
            .filter(|c| justified || !self.classes[*c].escalation)
            .collect();
        let Some(best) = survivors.iter().map(|c| self.classes[*c].rank).min() else {
            return Outcome::Abstain(
                "conservative_ambiguity",
                vec!["all_candidates_vetoed".into()],
            );
        };
        let narrowest: Vec<usize> = survivors
            .into_iter()
            .filter(|c| self.classes[*c].rank == best)
            .collect();
        if narrowest.len() == 1 {
            Outcome::Recommend(class_name(narrowest[0]))
        } else {
            Outcome::Abstain(
                "conservative_ambiguity",
                sorted(narrowest.into_iter().map(class_name)),
            )
        }
    }
}

fn random_expr(rng: &mut impl Rng, n_fields: usize, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.4);
    if leaf {
        let f = rng.random_range(0..n_fields);
        return match rng.random_range(0..10) {
            0 => Expr::Lit(rng.random_bool(0.5)),
            1 => Expr::Present(f),
            2 => Expr::Absent(f),
            3 | 4 => Expr::Ne(f, rng.random_bool(0.5)),
            _ => Expr::Eq(f, rng.random_bool(0.5), rng.random_bool(0.5)),
        };
    }
    match rng.random_range(0..5) {
        0 => Expr::Not(Box::new(random_expr(rng, n_fields, depth - 1))),
        1 | 2 => Expr::And(
            Box::new(random_expr(rng, n_fields, depth - 1)),
            Box::new(random_expr(rng, n_fields, depth - 1)),
        ),
        _ => Expr::Or(
            Box::new(random_expr(rng, n_fields, depth - 1)),
            Box::new(random_expr(rng, n_fields, depth - 1)),
        ),
    }
}

/// Field map for an assignment, in the engine's types.
pub fn to_field_map(a: &Assignment) -> absgate_core::FieldMap {
    let mut map = BTreeMap::new();
    for (i, v) in a.iter().enumerate() {
        if let Some(b) = v {
            map.insert(field_name(i), absgate_core::FieldValue::Bool(*b));
        }
    }
    map
}

/// The engine's output in the oracle's terms.
pub fn outcome_of(output: &absgate_core::SystemOutput) -> Outcome {
    match output {
        absgate_core::SystemOutput::Recommend(c) => Outcome::Recommend(c.clone()),
        absgate_core::SystemOutput::Abstain(reason) => {
            Outcome::Abstain(reason.category().as_str(), reason.labels().to_vec())
        }
    }
}
