//! Descriptive metrics over case results. All arithmetic is exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::{CaseResult, EvalError};
use crate::model::{AbstentionCategory, MatchLevel};

/// Exact ratio in [0, 1], rendered with four decimal places (half up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(num_rational::Ratio<u64>);

impl Ratio {
    /// Panics if `denom` is zero.
    pub fn new(numer: u64, denom: u64) -> Self {
        Ratio(num_rational::Ratio::new(numer, denom))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_fixed4(&self) -> String {
        let (n, d) = (self.numer() as u128, self.denom() as u128);
        let scaled = (n * 20_000 + d) / (2 * d);
        format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fixed4())
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_fixed4())
    }
}

/// `(action, full)`: the share of cases matching at action level (full or
/// action match) and at detail level (full match only).
pub fn concordance(results: &[CaseResult]) -> Result<(Ratio, Ratio), EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptySuite);
    }
    let n = results.len() as u64;
    let full = results
        .iter()
        .filter(|r| r.match_level == MatchLevel::FullMatch)
        .count() as u64;
    let action = results
        .iter()
        .filter(|r| r.match_level != MatchLevel::Mismatch)
        .count() as u64;
    Ok((Ratio::new(action, n), Ratio::new(full, n)))
}

/// Share of recommending cases per mechanism tag. Only mechanisms that
/// occur in `results` appear.
pub fn coverage(results: &[CaseResult]) -> BTreeMap<String, Ratio> {
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in results {
        let entry = counts.entry(&r.mechanism).or_default();
        entry.1 += 1;
        if r.actual.is_recommend() {
            entry.0 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(m, (rec, total))| (m.to_string(), Ratio::new(rec, total)))
        .collect()
}

/// Abstentions per category, with explicit zeros for unused categories.
pub fn abstention_distribution(results: &[CaseResult]) -> BTreeMap<AbstentionCategory, u64> {
    let mut dist: BTreeMap<AbstentionCategory, u64> = AbstentionCategory::ALL
        .into_iter()
        .map(|c| (c, 0))
        .collect();
    for reason in results.iter().filter_map(|r| r.actual.abstention()) {
        *dist.entry(reason.category()).or_default() += 1;
    }
    dist
}
