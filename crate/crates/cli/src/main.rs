mod cmd;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::CliError;

/// One-shot quantum rate-distortion toolkit.
#[derive(Parser, Debug)]
#[command(name = "qrd", version, about)]
struct Cli {
    /// Worker threads (falls back to QRD_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write a run manifest to this path.
    #[arg(long, global = true)]
    manifest: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropic quantities of states read from matrix files (JSON output).
    Entropy(cmd::entropy::Args),
    /// Converse and achievability bounds on log M (JSON or CSV output).
    Bounds(cmd::bounds::Args),
    /// Finite-blocklength rates of the isotropic qubit source (CSV).
    Isotropic(cmd::isotropic::Args),
    /// Monte Carlo simulation of the teleportation-based code.
    Simulate(cmd::simulate::Args),
    /// Randomized invariant suites.
    Validate(cmd::validate::Args),
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("QRD_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("QRD_THREADS = `{v}` is not a positive integer"))),
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = threads(cli.threads)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let mut m = manifest::RunManifest::start(threads);
    match cli.command {
        Command::Entropy(a) => cmd::entropy::run(&a, &mut m)?,
        Command::Bounds(a) => cmd::bounds::run(&a, &mut m)?,
        Command::Isotropic(a) => cmd::isotropic::run(&a, &mut m)?,
        Command::Simulate(a) => cmd::simulate::run(&a, &mut m)?,
        Command::Validate(a) => {
            let outcome = cmd::validate::run(&a, &mut m);
            m.finish(cli.manifest.as_deref())?;
            return outcome;
        }
    }
    m.finish(cli.manifest.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
