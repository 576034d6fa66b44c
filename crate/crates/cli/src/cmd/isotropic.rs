use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use qrd_core::isotropic::{sweep_row, IsotropicRow};

use super::{write_file, CliError};
use crate::manifest::RunManifest;

pub const CSV_HEADER: &str =
    "n,D,eps,converse_rate,achievability_rate_quantum,achievability_rate_classical,rate_approx,logS_exact,logS_estimate";

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Blocklengths (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// Distortion levels (comma separated).
    #[arg(long = "D", value_delimiter = ',', required = true)]
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    /// Excess-distortion probabilities (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rates are qubits per symbol; `logS_*` are bits.
pub fn csv_row(r: &IsotropicRow) -> String {
    format!(
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.n,
        r.d,
        r.eps,
        r.converse_rate,
        r.achievability_rate_quantum,
        r.achievability_rate_classical,
        r.rate_approx,
        r.log_s_exact,
        r.log_s_estimate
    )
}

pub fn run(a: &Args, m: &mut RunManifest) -> Result<(), CliError> {
    m.subcommand("isotropic");
    m.params_from(a);
    let grid: Vec<(u64, f64, f64)> = a
        .n
        .iter()
        .flat_map(|&n| a.d.iter().flat_map(move |&d| a.eps.iter().map(move |&e| (n, d, e))))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(n, d, e)| sweep_row(n, d, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&csv_row(r));
        text.push('\n');
    }
    match &a.out {
        Some(p) => write_file(p, &text, m)?,
        None => print!("{text}"),
    }
    Ok(())
}
