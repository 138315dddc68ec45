use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod io;
mod verify;

use commands::Context;
use config::Loaded;
use error::CliError;
use io::Stamp;

/// Metamorphosis of landmarks and images: simulation, matching, ensembles
/// and self-verification.
#[derive(Parser)]
#[command(name = "metamorph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to METAMORPH_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory.
    Simulate(Common),
    /// Solve the boundary-value problem between two templates.
    Match(Common),
    /// Run a Monte Carlo ensemble and export statistics.
    Uq(Common),
    /// Run the invariant checks; the config is optional.
    Verify(Common),
}

fn threads(arg: Option<usize>) -> Result<Option<usize>, CliError> {
    let t = match arg {
        Some(t) => Some(t),
        None => match std::env::var("METAMORPH_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(v.trim().parse().map_err(|_| CliError::Config {
                key: "METAMORPH_THREADS".into(),
                reason: format!("expected a positive integer, got `{v}`"),
            })?),
            _ => None,
        },
    };
    if t == Some(0) {
        return Err(CliError::Config {
            key: "threads".into(),
            reason: "must be ≥ 1".into(),
        });
    }
    Ok(t)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Match(c) => ("match", c),
        Command::Uq(c) => ("uq", c),
        Command::Verify(c) => ("verify", c),
    };
    let threads = threads(common.threads)?;
    let mut loaded = match &common.config {
        Some(p) => Some(Loaded::from_path(p)?),
        None if name == "verify" => None,
        None => {
            return Err(CliError::Config {
                key: "--config".into(),
                reason: format!("`{name}` needs a configuration file"),
            })
        }
    };
    if let (Some(l), Some(seed)) = (loaded.as_mut(), common.seed) {
        l.config.seed = seed;
    }
    let hash = loaded.as_ref().unwrap_or(&Loaded::defaults()).hash()?;
    let seed = common.seed.or(loaded.as_ref().map(|l| l.config.seed)).unwrap_or(0);

    if name == "verify" {
        let report = verify::run(loaded.as_ref(), seed, hash);
        print!("{}", verify::render(&report));
        if let Some(out) = &common.out {
            std::fs::create_dir_all(out)
                .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", out.display())))?;
            io::write_json(&out.join("verify.json"), &report)?;
        }
        return if report.passed {
            Ok(())
        } else {
            Err(CliError::Verification("see the table above".into()))
        };
    }

    let loaded = loaded.expect("config present");
    let out = common
        .out
        .clone()
        .or_else(|| loaded.config.output.as_ref().map(|p| loaded.resolve(p)))
        .unwrap_or_else(|| commands::default_out(name));
    let ctx = Context {
        loaded,
        out,
        threads,
        stamp: Stamp {
            command: name,
            config_sha256: hash,
            seed,
        },
    };
    match name {
        "simulate" => commands::simulate(&ctx),
        "match" => commands::match_cmd(&ctx),
        _ => commands::uq(&ctx),
    }?;
    println!("{name}: outputs written to {}", ctx.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors; usage errors are invalid input.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("metamorph: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
