use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nestcalc::error::{Error, Result};
use nestcalc::scenario::{empty_scenario, run_scenario, Command, Report, Scenario};
use nestcalc::suite::Fault;

#[derive(Parser)]
#[command(name = "nestcalc", version, about = "Multiplication operators on nest algebras")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report file; a CSV mirror is written next to it. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Zero, compactness, weak compactness and quotient verdicts for a task.
    Decide(Common),
    /// Radical seminorm, compact-element test and ideal decomposition.
    Ideal(Common),
    /// Witness sequences with a noncompactness certificate.
    Witness(Common),
    /// Refutes a finite sum of multiplications by compacts.
    Refute(Common),
    /// Lower and upper bounds for the ℓ∞ embedding.
    Embed(Common),
    /// Runs the verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Forge a certificate entry to check that the suite catches it.
        #[arg(long)]
        inject_fault: bool,
    },
}

fn load(path: Option<&Path>, command: Command) -> Result<Scenario> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            Scenario::from_json(&text)
        }
        None if command == Command::Verify => Ok(empty_scenario()),
        None => Err(Error::Config("--config is required".into())),
    }
}

fn emit(report: &Report, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    match out {
        None => {
            let _ = writeln!(std::io::stdout().lock(), "{json}");
            Ok(())
        }
        Some(p) => {
            let io = |e: std::io::Error| Error::Config(format!("{}: {e}", p.display()));
            fs::write(p, json + "\n").map_err(io)?;
            let csv = fs::File::create(p.with_extension("csv")).map_err(io)?;
            report.write_csv(csv)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let (command, common, fault) = match cli.command {
        Cmd::Decide(c) => (Command::Decide, c, None),
        Cmd::Ideal(c) => (Command::Ideal, c, None),
        Cmd::Witness(c) => (Command::Witness, c, None),
        Cmd::Refute(c) => (Command::Refute, c, None),
        Cmd::Embed(c) => (Command::Embed, c, None),
        Cmd::Verify { common, inject_fault } => {
            (Command::Verify, common, inject_fault.then_some(Fault::ForgedCertificate))
        }
    };
    let scenario = load(common.config.as_deref(), command)?;
    let report = run_scenario(command, &scenario, common.seed, fault)?;
    emit(&report, common.out.as_deref())?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
