//! Acceptance criteria, one line each. Runs under `cargo test`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use absgate_core::engine::decide_fields;
use absgate_core::engine::mutants::{decide_mutant, Stage4Mutation};
use absgate_core::eval::{run_suite_with, Ratio, RunOptions};
use absgate_core::model::ExpectedBehavior;
use absgate_core::{decide, parse_policy, reference, run_suite, validate_policy, SystemOutput};
use common::oracle::{outcome_of, to_field_map, MiniPolicy};
use common::{audit_one, exclusive_form};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const MINI_POLICIES: u64 = 150;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("determinism", determinism),
        ("full behavioral concordance", full_concordance),
        ("typology coverage", typology_coverage),
        ("oracle equivalence", oracle_equivalence),
        ("stewardship properties", stewardship_properties),
        ("output exclusivity", output_exclusivity),
        ("harness sensitivity", harness_sensitivity),
        ("static validation", static_validation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn reference_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/reference")
        .join(name)
}

fn absgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absgate"))
        .args(args)
        .env("ABSGATE_NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

/// `evaluate --strict` on the reference policy; returns exit code, report
/// bytes and wall time.
fn evaluate_strict(suite: &Path, runs: &str, report: &Path) -> (Option<i32>, Vec<u8>, Duration) {
    let policy = reference_path("empiric.policy");
    let start = Instant::now();
    let out = absgate(&[
        "evaluate",
        "--policy",
        policy.to_str().unwrap(),
        "--suite",
        suite.to_str().unwrap(),
        "--runs",
        runs,
        "--strict",
        "--report",
        report.to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    (
        out.status.code(),
        fs::read(report).unwrap_or_default(),
        elapsed,
    )
}

fn determinism() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let suite = reference_path("suite.json");
    let (code_a, a, time_a) = evaluate_strict(&suite, "3", &dir.path().join("a.json"));
    let (code_b, b, time_b) = evaluate_strict(&suite, "3", &dir.path().join("b.json"));
    ensure(code_a == Some(0) && code_b == Some(0), || {
        format!("exit codes {code_a:?} {code_b:?}")
    })?;
    ensure(!a.is_empty() && a == b, || {
        "reports differ between processes".into()
    })?;
    let report: Value = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    ensure(report["determinism_ok"] == true, || {
        "determinism_ok is false".into()
    })?;
    let digests = report["run_digests"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    ensure(
        digests.len() == 3 && digests.iter().all(|d| *d == digests[0]),
        || format!("run digests {digests:?}"),
    )?;
    let slowest = time_a.max(time_b);
    ensure(slowest < Duration::from_secs(1), || {
        format!("took {slowest:?}")
    })?;
    Ok(format!(
        "2 processes byte-identical, 3 equal digests, {} ms",
        slowest.as_millis()
    ))
}

fn full_concordance() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let (code, bytes, _) = evaluate_strict(
        &reference_path("suite.json"),
        "3",
        &dir.path().join("r.json"),
    );
    ensure(code == Some(0), || format!("--strict exit {code:?}"))?;
    let report: Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
    let (action, full) = (&report["concordance_action"], &report["concordance_full"]);
    ensure(action == "1.0000" && full == "1.0000", || {
        format!("action {action} full {full}")
    })?;
    Ok(format!(
        "action {} full {}, --strict exit 0",
        action.as_str().unwrap_or("?"),
        full.as_str().unwrap_or("?")
    ))
}

fn typology_coverage() -> Check {
    let report =
        run_suite(&reference::policy(), &reference::suite(), 1).map_err(|e| e.to_string())?;
    let dist = &report.abstention_distribution;
    ensure(dist.len() == 5 && dist.values().all(|&n| n >= 1), || {
        format!("{dist:?}")
    })?;
    let parts: Vec<String> = dist.iter().map(|(c, n)| format!("{c}={n}")).collect();
    Ok(parts.join(" "))
}

fn oracle_equivalence() -> Check {
    let mut assignments = 0;
    for seed in 0..MINI_POLICIES {
        let mini = MiniPolicy::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = parse_policy(&mini.render()).map_err(|d| format!("seed {seed}: {d:?}"))?;
        for a in mini.assignments() {
            let (output, _) = decide_fields(&p, &to_field_map(&a));
            let (engine, oracle) = (outcome_of(&output), mini.decide(&a));
            ensure(engine == oracle, || {
                format!("seed {seed} {a:?}: engine {engine:?}, oracle {oracle:?}")
            })?;
            assignments += 1;
        }
    }
    Ok(format!(
        "{MINI_POLICIES} policies, {assignments} assignments, 0 discrepancies"
    ))
}

fn stewardship_properties() -> Check {
    let p = reference::policy();
    let s = reference::suite();
    let report = run_suite(&p, &s, 1).map_err(|e| e.to_string())?;
    let mut checked = report.stewardship_findings.len();
    if let Some(f) = report.stewardship_findings.iter().find(|f| !f.pass) {
        return Err(format!("reference finding failed: {f:?}"));
    }
    for seed in 0..MINI_POLICIES {
        let mini = MiniPolicy::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let mp = parse_policy(&mini.render()).map_err(|d| format!("{d:?}"))?;
        for a in mini.assignments() {
            let (output, trace) = decide_fields(&mp, &to_field_map(&a));
            for f in audit_one(&mp, &output, &trace) {
                ensure(f.pass, || format!("seed {seed} {a:?}: {f:?}"))?;
                checked += 1;
            }
        }
    }
    for mutation in [
        Stage4Mutation::WidestSurvivor,
        Stage4Mutation::IgnoreEscalationGate,
    ] {
        let opts = RunOptions { runs: 1, jobs: 1 };
        let mutant = run_suite_with(&p, &s, opts, |p, c| decide_mutant(p, c, mutation))
            .map_err(|e| e.to_string())?;
        ensure(mutant.stewardship_findings.iter().any(|f| !f.pass), || {
            format!("{mutation:?} went undetected")
        })?;
    }
    Ok(format!(
        "{checked} findings pass, both stage-4 mutants detected"
    ))
}

fn output_exclusivity() -> Check {
    let mut outputs: Vec<SystemOutput> = Vec::new();
    let p = reference::policy();
    for case in &reference::suite().cases {
        let (output, trace) = decide(&p, case);
        ensure(trace.final_output == output, || {
            format!("{}: trace disagrees", case.case_id)
        })?;
        outputs.push(output);
    }
    for seed in 0..MINI_POLICIES {
        let mini = MiniPolicy::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let mp = parse_policy(&mini.render()).map_err(|d| format!("{d:?}"))?;
        for a in mini.assignments() {
            outputs.push(decide_fields(&mp, &to_field_map(&a)).0);
        }
    }
    for output in &outputs {
        exclusive_form(output)?;
    }
    Ok(format!(
        "{} outputs, each exactly one action and category",
        outputs.len()
    ))
}

fn harness_sensitivity() -> Check {
    let p = reference::policy();
    let s = reference::suite();
    let n = s.cases.len() as u64;
    let base = run_suite(&p, &s, 1).map_err(|e| e.to_string())?;
    for i in 0..s.cases.len() {
        let mut flipped = s.clone();
        let case = &mut flipped.cases[i];
        case.expected = match &case.expected {
            ExpectedBehavior::Recommend(_) => ExpectedBehavior::Abstain(None),
            ExpectedBehavior::Abstain(_) => ExpectedBehavior::Recommend(None),
        };
        let report = run_suite(&p, &flipped, 1).map_err(|e| e.to_string())?;
        ensure(
            base.concordance_full == Ratio::new(n, n)
                && report.concordance_full == Ratio::new(n - 1, n),
            || {
                format!(
                    "flip {i}: {} -> {}",
                    base.concordance_full, report.concordance_full
                )
            },
        )?;
    }

    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let text = fs::read_to_string(reference_path("suite.json")).map_err(|e| e.to_string())?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    doc["cases"][17]["expect"] = serde_json::json!({"recommend": "class_b"});
    let flipped = dir.path().join("flipped.json");
    fs::write(&flipped, doc.to_string()).map_err(|e| e.to_string())?;
    let (code, bytes, _) = evaluate_strict(&flipped, "1", &dir.path().join("r.json"));
    ensure(code == Some(1), || {
        format!("--strict exit {code:?} on flipped suite")
    })?;
    let report: Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
    let want = Ratio::new(n - 1, n).to_fixed4();
    ensure(report["concordance_full"] == want.as_str(), || {
        format!(
            "concordance_full {} want {want}",
            report["concordance_full"]
        )
    })?;
    Ok(format!(
        "each of {n} flips costs exactly 1/{n}; --strict exit 0 -> 1"
    ))
}

fn static_validation() -> Check {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/defective");
    let mut count = 0;
    let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let Some(code) = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# expect: "))
        else {
            continue;
        };
        let out = absgate(&["validate", "--policy", path.to_str().unwrap()]);
        let stderr = String::from_utf8_lossy(&out.stderr);
        ensure(
            out.status.code() == Some(2) && stderr.contains(&format!("error {code} ")),
            || format!("{} did not report {code}", path.display()),
        )?;
        count += 1;
    }
    ensure(count >= 6, || format!("only {count} fixtures"))?;
    let diags = validate_policy(&reference::policy());
    ensure(diags.is_empty(), || format!("reference policy: {diags:?}"))?;
    let out = absgate(&[
        "validate",
        "--policy",
        reference_path("empiric.policy").to_str().unwrap(),
    ]);
    ensure(out.status.code() == Some(0), || {
        "reference policy fails validate".into()
    })?;
    Ok(format!(
        "{count} defective fixtures flagged, reference clean"
    ))
}
