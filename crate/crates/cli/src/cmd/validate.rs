use serde::Serialize;

use qrd_core::validation::{run_suite, Suite};

use super::CliError;
use crate::manifest::RunManifest;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the suite's default instance count.
    #[arg(long)]
    pub instances: Option<usize>,
}

fn suites(name: &str) -> Result<Vec<Suite>, CliError> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::from_name(name).map(|s| vec![s]).ok_or_else(|| {
        let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        CliError::Usage(format!("unknown suite `{name}` (known: all, {})", known.join(", ")))
    })
}

pub fn run(a: &Args, m: &mut RunManifest) -> Result<(), CliError> {
    m.subcommand("validate");
    m.params_from(a);
    m.seed = Some(a.seed);
    let mut failed = Vec::new();
    for s in suites(&a.suite)? {
        let r = run_suite(s, a.seed, a.instances);
        println!(
            "{}: {}/{} pass, {} fail (seed {}, tolerance {:.0e}, worst slack {:.3e})",
            r.suite,
            r.passed,
            r.instances,
            r.instances - r.passed,
            r.seed,
            r.tolerance,
            r.worst_slack
        );
        for f in &r.failures {
            println!("  {f}");
        }
        if !r.ok() {
            failed.push(format!("{} ({}/{})", r.suite, r.instances - r.passed, r.instances));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed(failed.join(", ")))
    }
}
