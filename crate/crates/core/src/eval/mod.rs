//! Suite execution and the evaluation report.

mod metrics;
mod stewardship;
mod summary;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use metrics::{abstention_distribution, concordance, coverage, Ratio};
pub use stewardship::{stewardship_audit, StewardshipCheck, StewardshipFinding};
pub use summary::render_summary;

use crate::canonical::{digest, sha256_hex, to_canonical_bytes};
use crate::diag::{has_errors, Diagnostic};
use crate::engine;
use crate::model::{
    compare_outputs, AbstentionCategory, AuditTrace, CaseInput, ExpectedBehavior, MatchLevel,
    SystemOutput,
};
use crate::policy::{policy_hash, Policy};
use crate::suite::{bind_suite, suite_hash, Suite};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("the suite has no cases")]
    EmptySuite,
    #[error("recommending case `{0}` has no trace to audit")]
    TraceRequired(String),
    #[error("the suite does not match the policy ({} error(s))", .0.iter().filter(|d| d.is_error()).count())]
    Bind(Vec<Diagnostic>),
    #[error("run count must be at least 1")]
    InvalidRunCount,
    #[error("could not start worker threads: {0}")]
    WorkerPool(String),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::EmptySuite => "empty_suite",
            EvalError::TraceRequired(_) => "trace_required",
            EvalError::Bind(_) => "suite_binding",
            EvalError::InvalidRunCount => "invalid_run_count",
            EvalError::WorkerPool(_) => "worker_pool",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseResult {
    pub case_id: String,
    pub actual: SystemOutput,
    pub expected: ExpectedBehavior,
    #[serde(rename = "match")]
    pub match_level: MatchLevel,
    pub mechanism: String,
    /// SHA-256 of the canonical trace.
    pub trace_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvaluationReport {
    pub policy_hash: String,
    pub suite_hash: String,
    pub run_count: u32,
    pub results: Vec<CaseResult>,
    pub concordance_action: Ratio,
    pub concordance_full: Ratio,
    pub coverage_by_mechanism: BTreeMap<String, Ratio>,
    pub abstention_distribution: BTreeMap<AbstentionCategory, u64>,
    pub stewardship_findings: Vec<StewardshipFinding>,
    pub determinism_ok: bool,
    pub run_digests: Vec<String>,
}

impl EvaluationReport {
    /// The machine-readable report: canonical JSON plus a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = to_canonical_bytes(self);
        bytes.push(b'\n');
        bytes
    }

    pub fn digest(&self) -> String {
        sha256_hex(&self.to_bytes())
    }

    /// Full concordance and identical runs: the `--strict` gate.
    pub fn strict_ok(&self) -> bool {
        self.concordance_full == Ratio::new(1, 1) && self.determinism_ok
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &CaseResult> {
        self.results
            .iter()
            .filter(|r| r.match_level != MatchLevel::FullMatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub runs: u32,
    /// Worker threads per run; 1 runs cases sequentially.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { runs: 3, jobs: 1 }
    }
}

/// Run every case `runs` times with the production engine.
pub fn run_suite(p: &Policy, s: &Suite, runs: u32) -> Result<EvaluationReport, EvalError> {
    run_suite_with(p, s, RunOptions { runs, jobs: 1 }, engine::decide)
}

/// Run every case with a caller-supplied decision function. Results and
/// metrics come from the first run; later runs only contribute digests.
pub fn run_suite_with<F>(
    p: &Policy,
    s: &Suite,
    opts: RunOptions,
    decide: F,
) -> Result<EvaluationReport, EvalError>
where
    F: Fn(&Policy, &CaseInput) -> (SystemOutput, AuditTrace) + Sync,
{
    if opts.runs == 0 {
        return Err(EvalError::InvalidRunCount);
    }
    if s.cases.is_empty() {
        return Err(EvalError::EmptySuite);
    }
    let diags = bind_suite(s, p);
    if has_errors(&diags) {
        return Err(EvalError::Bind(diags));
    }

    let pool = if opts.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.jobs)
                .build()
                .map_err(|e| EvalError::WorkerPool(e.to_string()))?,
        )
    } else {
        None
    };
    let execute = || -> Vec<(SystemOutput, AuditTrace)> {
        match &pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                s.cases.par_iter().map(|c| decide(p, c)).collect()
            }),
            None => s.cases.iter().map(|c| decide(p, c)).collect(),
        }
    };

    let first = execute();
    let mut run_digests = vec![run_digest(&s.cases, &first)];
    for _ in 1..opts.runs {
        run_digests.push(run_digest(&s.cases, &execute()));
    }
    let determinism_ok = run_digests.windows(2).all(|w| w[0] == w[1]);

    let mut results = Vec::with_capacity(s.cases.len());
    let mut traces = BTreeMap::new();
    for (case, (actual, trace)) in s.cases.iter().zip(first) {
        results.push(CaseResult {
            case_id: case.case_id.clone(),
            match_level: compare_outputs(&actual, &case.expected),
            actual,
            expected: case.expected.clone(),
            mechanism: case.mechanism.clone(),
            trace_digest: digest(&trace),
        });
        traces.insert(case.case_id.clone(), trace);
    }

    let (concordance_action, concordance_full) = concordance(&results)?;
    let stewardship_findings = stewardship_audit(p, &results, &traces)?;
    Ok(EvaluationReport {
        policy_hash: policy_hash(p),
        suite_hash: suite_hash(s),
        run_count: opts.runs,
        concordance_action,
        concordance_full,
        coverage_by_mechanism: coverage(&results),
        abstention_distribution: abstention_distribution(&results),
        stewardship_findings,
        determinism_ok,
        run_digests,
        results,
    })
}

/// Digest of one run: every case's output and trace, in case-id order.
fn run_digest(cases: &[CaseInput], outputs: &[(SystemOutput, AuditTrace)]) -> String {
    let mut bytes = Vec::new();
    for (case, (output, trace)) in cases.iter().zip(outputs) {
        bytes.extend_from_slice(case.case_id.as_bytes());
        bytes.push(b'\t');
        bytes.extend_from_slice(&to_canonical_bytes(output));
        bytes.push(b'\t');
        bytes.extend_from_slice(&to_canonical_bytes(trace));
        bytes.push(b'\n');
    }
    sha256_hex(&bytes)
}
