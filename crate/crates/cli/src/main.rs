//! `denjoy-twist <command> [--config FILE] [--set section.key=value]...`
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or construction error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use denjoy_twist::config::RunConfig;
use denjoy_twist::suite::{run_command, Command};

#[derive(Parser, Debug)]
#[command(name = "denjoy-twist", version, about = "Twist maps with a Denjoy-type invariant curve")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build the system and write its summary, sequence and gap tables
    Build(Common),
    /// Run the invariance, estimate, linearity, jump and structural suites
    Verify(Common),
    /// Per-gap second-derivative scan, optionally against a rebuild with larger C
    Regularity(Common),
    /// Phase portrait CSV with the invariant curve as orbit 0
    Portrait(Common),
    /// Stable and unstable segments and their checks
    Manifolds(Common),
    /// Excursion of orbits started off the curve
    Diffusion(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; defaults apply to everything it omits
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set params.big_c=200`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the report JSON to stdout
    #[arg(long)]
    print: bool,
}

impl Cmd {
    fn split(&self) -> (Command, &Common) {
        match self {
            Cmd::Build(c) => (Command::Build, c),
            Cmd::Verify(c) => (Command::Verify, c),
            Cmd::Regularity(c) => (Command::Regularity, c),
            Cmd::Portrait(c) => (Command::Portrait, c),
            Cmd::Manifolds(c) => (Command::Manifolds, c),
            Cmd::Diffusion(c) => (Command::Diffusion, c),
        }
    }
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p, &common.set)?,
        None => RunConfig::from_toml_str("", &common.set)?,
    };
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let (command, common) = cli.command.split();
    let cfg = load_config(common).context("configuration")?;
    let out = run_command(command, &cfg).with_context(|| format!("{} failed", command.name()))?;
    let written = out
        .write(&cfg.output.dir, cfg.output.write_csv)
        .with_context(|| format!("writing outputs to {}", cfg.output.dir.display()))?;
    if common.print {
        println!("{}", out.report.to_json());
    }
    for c in &out.report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        eprintln!("{status} {} measured={:e} tolerance={:e}", c.name, c.measured, c.tolerance);
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(out.report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
