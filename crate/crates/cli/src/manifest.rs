use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::cmd::CliError;

/// Record of one invocation: enough to rerun it and reproduce its numbers.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub version: &'static str,
    pub threads: Option<usize>,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(threads: Option<usize>) -> Self {
        Self {
            subcommand: String::new(),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            seed: None,
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION"),
            threads,
            wall_clock_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn subcommand(&mut self, name: &str) {
        self.subcommand = name.to_string();
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    /// Records every field of a serializable argument set as a parameter.
    pub fn params_from(&mut self, args: impl Serialize) {
        if let Value::Object(o) = serde_json::to_value(args).expect("arguments serialize") {
            self.parameters.extend(o);
        }
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    /// Companion manifest path of an output artifact.
    pub fn companion(p: &Path) -> PathBuf {
        let mut s = p.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    /// Writes the manifest to `explicit`, and next to every output artifact.
    pub fn finish(mut self, explicit: Option<&Path>) -> Result<(), CliError> {
        self.wall_clock_seconds = self.started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n";
        let mut targets: Vec<PathBuf> = self.outputs.iter().map(|o| Self::companion(Path::new(o))).collect();
        if let Some(p) = explicit {
            targets.push(p.to_path_buf());
        }
        for t in targets {
            std::fs::write(&t, &text).map_err(|e| CliError::Io(format!("{}: {e}", t.display())))?;
        }
        Ok(())
    }
}
