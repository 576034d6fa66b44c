use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use qrd_core::bounds::{
    self as b, achievability_embezzling, achievability_mes, canonical_purification, classical_kv_converse,
    compression_sandwich, converse_alt, converse_simple_family, ea_qrd_function_pure, iid_converse_rate, BoundResult,
    FrankWolfeOptions, RateDistortionPoint,
};
use qrd_core::distortion::DistortionObservable;
use qrd_core::io::StateData;
use qrd_core::quantum::{DensityOperator, PureState};
use qrd_core::Error;

use super::{load_channels, load_density, load_observable, load_state, require, write_file, CliError};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Lower bound from a supplied σ_RA (one row per --sigma).
    ConverseAlt,
    /// Per-channel inner value of the simple converse and its family minimum.
    SimpleConverse,
    /// Classical converse from --classical {p, q, d}.
    ClassicalKv,
    /// Embezzling-state achievability (one row per --channel).
    Embezzling,
    /// Maximally-entangled-state achievability (one row per --channel).
    Mes,
    /// Upper and lower bounds minimized over the channel family.
    Sandwich,
    /// Entanglement-assisted rate-distortion function (one point per --D).
    EaRate,
    /// Valid per-symbol i.i.d. converse.
    IidConverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    #[arg(long)]
    pub bound: Bound,
    /// Distortion thresholds (comma separated).
    #[arg(long = "D", value_delimiter = ',', required = true)]
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps_prime: Option<f64>,
    /// Blocklength for the i.i.d. converse.
    #[arg(long)]
    pub n: Option<u64>,
    /// Channel files (repeatable).
    #[arg(long)]
    pub channel: Vec<PathBuf>,
    /// σ_RA state files for converse_alt (repeatable).
    #[arg(long)]
    pub sigma: Vec<PathBuf>,
    /// Source purification |φ⟩_RA (reference first).
    #[arg(long, conflicts_with = "rho")]
    pub phi: Option<PathBuf>,
    /// Source state ρ_A, purified canonically.
    #[arg(long)]
    pub rho: Option<PathBuf>,
    /// Distortion observable file (default: entanglement fidelity on R and B).
    #[arg(long)]
    pub delta: Option<PathBuf>,
    /// Smoothing parameter δ of the MES bound.
    #[arg(long)]
    pub delta_param: Option<f64>,
    /// Excess-distortion level ε₁ of the MES bound.
    #[arg(long)]
    pub eps1: Option<f64>,
    /// Classical instance {"p": [..], "q": [..], "d": [[..]]}.
    #[arg(long)]
    pub classical: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Source {
    phi: PureState,
    rho: DensityOperator,
    delta: DistortionObservable,
}

fn source(a: &Args, m: &mut RunManifest) -> Result<Source, CliError> {
    let (phi, rho) = match (&a.phi, &a.rho) {
        (Some(p), _) => {
            let phi = match load_state(p, m)? {
                StateData::Ket(k) => k,
                StateData::Density(_) => {
                    return Err(CliError::Core(Error::Malformed {
                        path: p.display().to_string(),
                        field: "re".into(),
                        detail: "--phi needs a ket".into(),
                    }))
                }
            };
            let labels = phi.dims().labels();
            if labels.len() < 2 {
                return Err(CliError::Usage("--phi needs a reference factor followed by the source".into()));
            }
            let keep: Vec<&str> = labels[1..].iter().map(String::as_str).collect();
            let rho = phi.density().partial_trace(&keep)?;
            (phi, rho)
        }
        (None, Some(p)) => {
            let rho = load_density(p, m)?;
            (canonical_purification(&rho)?, rho)
        }
        (None, None) => return Err(CliError::Usage("one of --phi or --rho is required".into())),
    };
    let delta = match &a.delta {
        Some(p) => load_observable(p, m)?,
        None => DistortionObservable::entanglement_fidelity(&phi, "B")?,
    };
    Ok(Source { phi, rho, delta })
}

struct Classical {
    p: Vec<f64>,
    q: Vec<f64>,
    d: Vec<Vec<f64>>,
}

fn classical(path: &std::path::Path, m: &mut RunManifest) -> Result<Classical, CliError> {
    m.input(path);
    let name = path.display().to_string();
    let bad = |field: &str, detail: String| {
        CliError::Core(Error::Malformed {
            path: name.clone(),
            field: field.to_string(),
            detail,
        })
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad("<file>", e.to_string()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| bad("<document>", e.to_string()))?;
    let field = |k: &str| -> Result<Value, CliError> { v.get(k).cloned().ok_or_else(|| bad(k, "missing".into())) };
    Ok(Classical {
        p: serde_json::from_value(field("p")?).map_err(|e| bad("p", e.to_string()))?,
        q: serde_json::from_value(field("q")?).map_err(|e| bad("q", e.to_string()))?,
        d: serde_json::from_value(field("d")?).map_err(|e| bad("d", e.to_string()))?,
    })
}

enum Output {
    Bounds(Vec<BoundResult>, Value),
    Rates(Vec<RateDistortionPoint>),
}

pub fn run(a: &Args, m: &mut RunManifest) -> Result<(), CliError> {
    m.subcommand("bounds");
    m.params_from(a);
    let out = evaluate(a, m)?;
    let text = match (a.format, &out) {
        (Format::Json, Output::Bounds(_, v)) => format!("{}\n", json!({ "bound": a.bound, "results": v })),
        (Format::Json, Output::Rates(r)) => format!("{}\n", json!({ "bound": a.bound, "results": r })),
        (Format::Csv, Output::Bounds(rows, _)) => b::to_csv(rows),
        (Format::Csv, Output::Rates(r)) => rates_csv(r),
    };
    match &a.out {
        Some(p) => write_file(p, &text, m)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub const RATE_CSV_HEADER: &str =
    "D,rate_qubits_per_symbol,lo_qubits_per_symbol,hi_qubits_per_symbol,fw_gap,iterations,converged,feasible,D_min";

fn rates_csv(points: &[RateDistortionPoint]) -> String {
    let mut s = String::from(RATE_CSV_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{:.16e}\n",
            p.d, p.rate, p.lo, p.hi, p.fw_gap, p.iterations, p.converged, p.feasible, p.d_min
        ));
    }
    s
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn evaluate(a: &Args, m: &mut RunManifest) -> Result<Output, CliError> {
    let eps = || require(a.eps, "--eps", "for this bound");
    let eps_prime = || require(a.eps_prime, "--eps-prime", "for this bound");
    if a.bound == Bound::ClassicalKv {
        let path = a.classical.as_ref().ok_or_else(|| CliError::Usage("--classical is required for classical_kv".into()))?;
        let c = classical(path, m)?;
        let rows = a
            .d
            .iter()
            .map(|&d| classical_kv_converse(&c.p, &c.d, d, eps()?, &c.q).map_err(CliError::from))
            .collect::<Result<Vec<_>, _>>()?;
        let v = to_value(&rows);
        return Ok(Output::Bounds(rows, v));
    }
    let s = source(a, m)?;
    let channels = load_channels(&a.channel, m)?;
    let need_channels = || {
        if channels.is_empty() {
            Err(CliError::Usage("at least one --channel is required for this bound".into()))
        } else {
            Ok(())
        }
    };
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for &d in &a.d {
        match a.bound {
            Bound::ConverseAlt => {
                if a.sigma.is_empty() {
                    return Err(CliError::Usage("at least one --sigma is required for converse_alt".into()));
                }
                for p in &a.sigma {
                    let sigma = load_density(p, m)?;
                    rows.push(converse_alt(&s.phi, &s.delta, d, eps()?, &sigma)?);
                }
            }
            Bound::SimpleConverse => {
                need_channels()?;
                let f = converse_simple_family(&s.phi, &s.delta, d, eps()?, eps_prime()?, &channels)?;
                rows.extend(f.per_channel.iter().flatten().cloned());
                docs.push(to_value(&f));
            }
            Bound::Embezzling => {
                need_channels()?;
                for ch in &channels {
                    rows.push(achievability_embezzling(&s.phi, ch, eps()?, &s.delta, d)?);
                }
            }
            Bound::Mes => {
                need_channels()?;
                let dp = require(a.delta_param, "--delta-param", "for mes")?;
                let e1 = require(a.eps1, "--eps1", "for mes")?;
                for ch in &channels {
                    rows.push(achievability_mes(&s.phi, ch, dp, &s.delta, d, e1)?);
                }
            }
            Bound::Sandwich => {
                need_channels()?;
                let w = compression_sandwich(&s.phi, &s.delta, d, eps()?, eps_prime()?, &channels)?;
                rows.push(w.upper.clone());
                rows.push(w.lower.clone());
                docs.push(to_value(&w));
            }
            Bound::IidConverse => {
                let n = require(a.n, "--n", "for iid_converse")?;
                rows.push(iid_converse_rate(&s.rho, &s.delta, n, d, eps()?, eps_prime()?)?);
            }
            Bound::EaRate => {}
            Bound::ClassicalKv => unreachable!("handled above"),
        }
    }
    if a.bound == Bound::EaRate {
        let opts = FrankWolfeOptions::default();
        let pts = a
            .d
            .iter()
            .map(|&d| ea_qrd_function_pure(&s.phi, &s.delta, d, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Output::Rates(pts));
    }
    let v = if docs.is_empty() { to_value(&rows) } else { Value::Array(docs) };
    Ok(Output::Bounds(rows, v))
}
