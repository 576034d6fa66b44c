use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use qrd_core::protocol::{simulate_teleportation_rd, SimulationConfig, SimulationReport};
use qrd_core::Error;

use super::{write_file, CliError};
use crate::manifest::RunManifest;

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// JSON config with the same keys as the flags (`n`, `M`, `D`, `trials`,
    /// `seed`, `codebook_mode`); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Codebook size.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<u64>,
    /// Distortion threshold.
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["fresh_per_trial", "fixed", "exhaustive"])]
    pub codebook_mode: Option<String>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the CSV header and row here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the per-distance trial histogram CSV here.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

fn merged_config(a: &Args) -> Result<SimulationConfig, CliError> {
    let mut o = Map::new();
    let mut source = String::from("<flags>");
    if let Some(p) = &a.config {
        source = p.display().to_string();
        let text = std::fs::read_to_string(p).map_err(|e| malformed(&source, "<file>", e.to_string()))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(c)) => o = c,
            Ok(_) => return Err(malformed(&source, "<document>", "expected a JSON object".into())),
            Err(e) => return Err(malformed(&source, "<document>", e.to_string())),
        }
    }
    o.entry("codebook_mode").or_insert_with(|| Value::from("fresh_per_trial"));
    o.entry("seed").or_insert_with(|| Value::from(0u64));
    if let Value::Object(flags) = serde_json::to_value(a).expect("arguments serialize") {
        for k in ["n", "M", "D", "trials", "seed", "codebook_mode"] {
            if let Some(v) = flags.get(k).filter(|v| !v.is_null()) {
                o.insert(k.to_string(), v.clone());
            }
        }
    }
    for k in ["n", "M", "D", "trials"] {
        if !o.contains_key(k) {
            return Err(CliError::Usage(format!("`{k}` must be given by flag or config")));
        }
    }
    serde_json::from_value(Value::Object(o)).map_err(|e| malformed(&source, "<config>", e.to_string()))
}

fn malformed(path: &str, field: &str, detail: String) -> CliError {
    CliError::Core(Error::Malformed {
        path: path.to_string(),
        field: field.to_string(),
        detail,
    })
}

pub fn run(a: &Args, m: &mut RunManifest) -> Result<(), CliError> {
    m.subcommand("simulate");
    if let Some(p) = &a.config {
        m.input(p);
    }
    let cfg = merged_config(a)?;
    m.params_from(cfg);
    m.seed = Some(cfg.seed);
    let r = simulate_teleportation_rd(&cfg)?;
    let json = report_json(&r);
    println!("{json}");
    if let Some(p) = &a.out {
        write_file(p, &format!("{}\n", serde_json::to_string_pretty(&r).expect("reports serialize")), m)?;
    }
    if let Some(p) = &a.csv {
        write_file(p, &format!("{}\n{}\n", SimulationReport::CSV_HEADER, r.csv_row()), m)?;
    }
    if let Some(p) = &a.histogram {
        write_file(p, &r.histogram_csv(), m)?;
    }
    Ok(())
}

fn report_json(r: &SimulationReport) -> String {
    serde_json::to_string(r).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrd_core::protocol::CodebookMode;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        std::fs::write(&p, r#"{"n": 4, "M": 10, "D": 0.25, "trials": 100, "seed": 3}"#).unwrap();
        let a = Args {
            config: Some(p),
            n: None,
            m: Some(20),
            d: None,
            trials: None,
            seed: None,
            codebook_mode: Some("fixed".into()),
            out: None,
            csv: None,
            histogram: None,
        };
        let c = merged_config(&a).unwrap();
        assert_eq!((c.n, c.m, c.d, c.trials, c.seed), (4, 20, 0.25, 100, 3));
        assert_eq!(c.codebook_mode, CodebookMode::Fixed);
    }
}
