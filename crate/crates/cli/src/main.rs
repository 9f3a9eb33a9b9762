use std::path::PathBuf;
use std::process::ExitCode;

use adiabat_cli::{commands, scenario, Outcome, Scenario};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

/// Entropy from accessibility relations: closure, meters, charts.
#[derive(Parser)]
#[command(name = "adiabat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario JSON file.
    config: PathBuf,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print CSV instead of text.
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Close the relation and check the axioms.
    Validate(Common),
    /// Canonical entropy on a normal space.
    Canonical(Common),
    /// Entropy-meter bounds and the laws they should satisfy.
    Meter(Common),
    /// Bounds on a non-equilibrium extension.
    Noneq(Common),
    /// Chart calibration, loop check and gluing.
    Charts(Common),
    /// Compare the engine with the brute-force oracle.
    OracleDiff(Common),
}

fn run(cmd: &Command) -> Result<(Outcome, &Common)> {
    let (f, args): (fn(&Scenario) -> Result<Outcome>, &Common) = match cmd {
        Command::Validate(a) => (commands::validate, a),
        Command::Canonical(a) => (commands::canonical, a),
        Command::Meter(a) => (commands::meter, a),
        Command::Noneq(a) => (commands::noneq, a),
        Command::Charts(a) => (commands::charts, a),
        Command::OracleDiff(a) => (commands::oracle_diff, a),
    };
    let scn = scenario::load(&args.config)?;
    Ok((f(&scn)?, args))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, args) = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let out = if args.csv { &outcome.csv } else { &outcome.lines };
    for line in out {
        println!("{line}");
    }
    if let Some(path) = &args.report {
        let written = serde_json::to_string_pretty(&outcome.report)
            .context("serializing report")
            .and_then(|text| std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())));
        if let Err(e) = written {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
