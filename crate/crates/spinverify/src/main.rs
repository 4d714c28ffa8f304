//! Scenario runner CLI. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 parse/validation error, 3 fixture construction inconsistency.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spinverify::error::Error;
use spinverify::scenario::{
    describe_check, describe_fixture, execute, parse_scenario, render_report, CHECK_NAMES,
    FIXTURE_NAMES,
};

#[derive(Parser)]
#[command(name = "spinverify", version, about = "Numerical verification of generalized Killing spinor identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all checks of a scenario and write a JSON report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the scenario's refinement level count.
        #[arg(long)]
        levels: Option<usize>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Include per-check wall-clock timings (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Refinement study: like run, but --levels is required.
    Refine {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        timings: bool,
    },
    /// List available fixtures and checks.
    List,
    /// Explain what a check or fixture verifies.
    Describe { name: String },
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("spinverify: {msg}");
    ExitCode::from(code)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConstructionInconsistency(_) => 3,
        _ => 2,
    }
}

fn run_scenario(
    path: &PathBuf,
    output: Option<&PathBuf>,
    levels: Option<usize>,
    seed: Option<u64>,
    timings: bool,
) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(2, &format!("cannot read {}: {e}", path.display())),
    };
    let mut scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => return fail(2, &format!("{e}")),
    };
    if let Some(l) = levels {
        scenario.levels = l;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let report = match execute(&scenario, timings) {
        Ok(r) => r,
        Err(e) => return fail(exit_code_for(&e), &format!("{e}")),
    };
    let rendered = render_report(&report);
    match output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &rendered) {
                return fail(2, &format!("cannot write {}: {e}", p.display()));
            }
        }
        None => print!("{rendered}"),
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("spinverify: {} check(s) failed", report.checks.values().filter(|c| !c.pass).count());
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, output, levels, seed, timings } => {
            run_scenario(&scenario, output.as_ref(), levels, seed, timings)
        }
        Command::Refine { scenario, output, levels, seed, timings } => {
            if levels < 2 {
                return fail(2, "refine needs --levels >= 2");
            }
            run_scenario(&scenario, output.as_ref(), Some(levels), seed, timings)
        }
        Command::List => {
            println!("fixtures:");
            for name in FIXTURE_NAMES {
                println!("  {name}: {}", describe_fixture(name).unwrap());
            }
            println!("checks:");
            for name in CHECK_NAMES {
                println!("  {name}: {}", describe_check(name).unwrap());
            }
            ExitCode::SUCCESS
        }
        Command::Describe { name } => {
            if let Some(d) = describe_check(&name) {
                println!("check {name}: {d}");
                ExitCode::SUCCESS
            } else if let Some(d) = describe_fixture(&name) {
                println!("fixture {name}: {d}");
                ExitCode::SUCCESS
            } else {
                fail(
                    2,
                    &format!(
                        "unknown name '{name}'; checks: {}; fixtures: {}",
                        CHECK_NAMES.join(", "),
                        FIXTURE_NAMES.join(", ")
                    ),
                )
            }
        }
    }
}
