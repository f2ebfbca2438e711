use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use absgate_core::canonical::to_canonical_string;
use absgate_core::eval::{render_summary, run_suite_with, EvalError, RunOptions};
use absgate_core::{
    bind_suite, decide, diag, parse_policy, parse_suite, policy_hash, suite_hash, validate_policy,
    Diagnostic, Policy, Suite,
};

const EXIT_OK: u8 = 0;
const EXIT_MISMATCH: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "absgate",
    version,
    about = "Policy-gated recommendations with structured abstention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide one case from a suite file.
    Decide {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        case_file: PathBuf,
        #[arg(long)]
        case_id: String,
        /// Also print the audit trace as canonical JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Run a suite against a policy and summarize the results.
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        runs: u32,
        /// Write the machine-readable report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Exit 1 unless every case matches fully and all runs agree.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
    },
    /// Check a policy for errors.
    Validate {
        #[arg(long)]
        policy: PathBuf,
    },
    /// Print the content digest of a policy or suite.
    #[command(group(ArgGroup::new("input").required(true).args(["policy", "suite"])))]
    Hash {
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        suite: Option<PathBuf>,
    },
}

/// Reported on stderr, then the process exits with status 2.
struct Failure(String);

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decide {
            policy,
            case_file,
            case_id,
            trace,
        } => cmd_decide(&policy, &case_file, &case_id, trace),
        Command::Evaluate {
            policy,
            suite,
            runs,
            report,
            strict,
            jobs,
        } => cmd_evaluate(
            &policy,
            &suite,
            runs,
            report.as_deref(),
            strict,
            jobs.into(),
        ),
        Command::Validate { policy } => cmd_validate(&policy),
        Command::Hash { policy, suite } => cmd_hash(policy.as_deref(), suite.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(message)) => {
            if !message.is_empty() {
                eprintln!("absgate: {message}");
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn report_diagnostics(path: &Path, diags: &[Diagnostic]) {
    let mut stderr = std::io::stderr().lock();
    for d in diags {
        let _ = writeln!(stderr, "{}: {d}", path.display());
    }
}

fn load_policy(path: &Path) -> Result<Policy, Failure> {
    parse_policy(&read(path)?).map_err(|diags| {
        report_diagnostics(path, &diags);
        Failure(format!("{} does not parse", path.display()))
    })
}

fn load_suite(path: &Path) -> Result<Suite, Failure> {
    parse_suite(&read(path)?).map_err(|diags| {
        report_diagnostics(path, &diags);
        Failure(format!("{} does not parse", path.display()))
    })
}

fn bind(suite_path: &Path, s: &Suite, p: &Policy) -> Result<(), Failure> {
    let diags = bind_suite(s, p);
    report_diagnostics(suite_path, &diags);
    if diag::has_errors(&diags) {
        return Err(Failure(format!(
            "{} does not match the policy",
            suite_path.display()
        )));
    }
    Ok(())
}

fn cmd_decide(policy: &Path, case_file: &Path, case_id: &str, trace: bool) -> CmdResult {
    let p = load_policy(policy)?;
    let s = load_suite(case_file)?;
    bind(case_file, &s, &p)?;
    let case = s
        .case(case_id)
        .ok_or_else(|| Failure(format!("no case `{case_id}` in {}", case_file.display())))?;
    let (output, audit) = decide(&p, case);
    println!("{output}");
    if trace {
        println!("{}", to_canonical_string(&audit));
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(
    policy: &Path,
    suite: &Path,
    runs: u32,
    report_path: Option<&Path>,
    strict: bool,
    jobs: usize,
) -> CmdResult {
    let p = load_policy(policy)?;
    let s = load_suite(suite)?;
    bind(suite, &s, &p)?;
    let report = run_suite_with(&p, &s, RunOptions { runs, jobs }, decide).map_err(|e| {
        if let EvalError::Bind(diags) = &e {
            report_diagnostics(suite, diags);
        }
        Failure(format!("{}: {e}", e.code()))
    })?;
    if let Some(path) = report_path {
        fs::write(path, report.to_bytes())
            .map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))?;
    }
    print!("{}", render_summary(&report, use_color()));
    if strict && !report.strict_ok() {
        return Ok(EXIT_MISMATCH);
    }
    Ok(EXIT_OK)
}

fn cmd_validate(policy: &Path) -> CmdResult {
    let p = load_policy(policy)?;
    let diags = validate_policy(&p);
    report_diagnostics(policy, &diags);
    if diag::has_errors(&diags) {
        return Err(Failure(String::new()));
    }
    println!("ok sha256:{}", policy_hash(&p));
    Ok(EXIT_OK)
}

fn cmd_hash(policy: Option<&Path>, suite: Option<&Path>) -> CmdResult {
    let digest = match (policy, suite) {
        (Some(path), _) => policy_hash(&load_policy(path)?),
        (None, Some(path)) => suite_hash(&load_suite(path)?),
        (None, None) => unreachable!("clap requires one input"),
    };
    println!("sha256:{digest}");
    Ok(EXIT_OK)
}

fn use_color() -> bool {
    std::env::var("ABSGATE_NO_COLOR").map_or(true, |v| v != "1") && std::io::stdout().is_terminal()
}
