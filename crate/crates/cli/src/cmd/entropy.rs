use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use qrd_core::entropies::{self as ent, EntropyResult};
use qrd_core::quantum::{self, DensityOperator};

use super::{load_channels, load_density, require, strs, CliError};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum Op {
    /// H(ρ)
    Vn,
    /// H(A|B) with B given by --cond
    Conditional,
    /// D(ρ‖σ)
    Relative,
    /// D_max(ρ‖σ)
    Dmax,
    /// D_max^ε(ρ‖σ)
    SmoothDmax,
    /// D_H^ε(ρ‖σ)
    Dh,
    /// β_ε(ρ‖σ)
    Beta,
    /// H_min(A|B) with B given by --cond
    Hmin,
    SmoothHmin,
    /// H_0(ρ)
    H0,
    SmoothH0,
    /// I_max(A;B) with A given by --a
    Imax,
    SmoothImax,
    /// Smooth I_max with both product factors optimized
    ImaxAlt,
    /// I(A;B) with A given by --a
    Mi,
    Fidelity,
    PurifiedDistance,
    TraceDistance,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// Quantity to compute.
    #[arg(long)]
    pub op: Op,
    /// State file (density matrix or ket).
    #[arg(long)]
    pub rho: PathBuf,
    /// Second state for divergences and distances.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    /// Smoothing / hypothesis-testing parameter.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Conditioning labels (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub cond: Vec<String>,
    /// First-party labels for I_max and I (default: first factor).
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<String>,
    /// Channel applied to its input-labelled factors of ρ first.
    #[arg(long)]
    pub channel: Option<PathBuf>,
}

pub fn run(a: &Args, m: &mut RunManifest) -> Result<(), CliError> {
    m.subcommand("entropy");
    m.params_from(a);
    let mut rho = load_density(&a.rho, m)?;
    if let Some(p) = &a.channel {
        let ch = load_channels(std::slice::from_ref(p), m)?.remove(0);
        let labels: Vec<String> = ch.input_dims().labels().to_vec();
        rho = ch.apply_to(&rho, &strs(&labels))?;
    }
    let sigma = match &a.sigma {
        Some(p) => Some(load_density(p, m)?),
        None => None,
    };
    let r = evaluate(a, &rho, sigma.as_ref())?;
    let mut out = json!({ "op": a.op });
    if let (Value::Object(o), Value::Object(extra)) = (&mut out, serde_json::to_value(&r).expect("results serialize")) {
        o.extend(extra);
    }
    println!("{out}");
    Ok(())
}

fn evaluate(a: &Args, rho: &DensityOperator, sigma: Option<&DensityOperator>) -> Result<EntropyResult, CliError> {
    let sig = || sigma.ok_or_else(|| CliError::Usage(format!("--sigma is required for --op {}", name(a.op))));
    let eps = || require(a.eps, "--eps", &format!("for --op {}", name(a.op)));
    let cond = strs(&a.cond);
    let first = rho.dims().labels()[0].clone();
    let parties: Vec<&str> = if a.a.is_empty() { vec![first.as_str()] } else { strs(&a.a) };
    let exact = EntropyResult::exact;
    Ok(match a.op {
        Op::Vn => exact(ent::von_neumann(rho)),
        Op::Conditional => exact(ent::conditional_entropy(rho, &cond)?),
        Op::Relative => exact(ent::relative_entropy(rho, sig()?)?),
        Op::Dmax => exact(ent::d_max(rho, sig()?)?),
        Op::SmoothDmax => ent::smooth_d_max(rho, sig()?, eps()?)?,
        Op::Dh => exact(ent::d_h(rho, sig()?, eps()?)?),
        Op::Beta => exact(ent::beta_epsilon(rho, sig()?, eps()?)?),
        Op::Hmin => exact(ent::h_min(rho, &cond)?),
        Op::SmoothHmin => ent::h_min_smooth(rho, &cond, eps()?)?,
        Op::H0 => exact(ent::h0(rho)),
        Op::SmoothH0 => ent::h0_smooth(rho, eps()?)?,
        Op::Imax => exact(ent::i_max(rho, &parties)?),
        Op::SmoothImax => ent::i_max_smooth(rho, &parties, eps()?)?,
        Op::ImaxAlt => ent::i_max_alt(rho, &parties, eps()?)?,
        Op::Mi => exact(ent::mutual_information(rho, &parties)?),
        Op::Fidelity => exact(quantum::fidelity(rho, sig()?)?),
        Op::PurifiedDistance => exact(quantum::purified_distance(rho, sig()?)?),
        Op::TraceDistance => exact(quantum::trace_distance(rho, sig()?)?),
    })
}

fn name(op: Op) -> String {
    op.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}
