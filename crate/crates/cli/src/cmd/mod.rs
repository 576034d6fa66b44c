pub mod bounds;
pub mod entropy;
pub mod isotropic;
pub mod simulate;
pub mod validate;

use std::fmt;
use std::path::{Path, PathBuf};

use qrd_core::distortion::DistortionObservable;
use qrd_core::io::{self, StateData};
use qrd_core::quantum::{DensityOperator, QuantumChannel};
use qrd_core::Error;

use crate::manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(String),
    ValidationFailed(String),
}

impl CliError {
    /// 1 = usage or input error, 2 = numeric/solver failure, 3 = failed
    /// validation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::ValidationFailed(_) => 3,
            CliError::Core(e) => match e {
                Error::Solver { .. } | Error::Singular { .. } | Error::ConstraintViolated(_) => 2,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(s) => write!(f, "{s}"),
            CliError::ValidationFailed(s) => write!(f, "validation failed: {s}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub fn load_state(p: &Path, m: &mut RunManifest) -> Result<StateData, CliError> {
    m.input(p);
    Ok(io::read_state(p)?)
}

pub fn load_density(p: &Path, m: &mut RunManifest) -> Result<DensityOperator, CliError> {
    Ok(load_state(p, m)?.density())
}

pub fn load_channels(ps: &[PathBuf], m: &mut RunManifest) -> Result<Vec<QuantumChannel>, CliError> {
    ps.iter()
        .map(|p| {
            m.input(p);
            io::read_channel(p).map_err(CliError::from)
        })
        .collect()
}

pub fn load_observable(p: &Path, m: &mut RunManifest) -> Result<DistortionObservable, CliError> {
    m.input(p);
    Ok(io::read_observable(p)?)
}

pub fn write_file(p: &Path, text: &str, m: &mut RunManifest) -> Result<(), CliError> {
    std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    m.output(p);
    Ok(())
}

pub fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn require<T: Copy>(v: Option<T>, flag: &str, why: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{flag} is required {why}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::ValidationFailed("x".into()).exit_code(), 3);
        assert_eq!(CliError::from(Error::InvalidParameter("x".into())).exit_code(), 1);
        assert_eq!(
            CliError::from(Error::Malformed {
                path: "a".into(),
                field: "re".into(),
                detail: "x".into()
            })
            .exit_code(),
            1
        );
        assert_eq!(
            CliError::from(Error::Solver {
                status: "stalled".into(),
                detail: "x".into()
            })
            .exit_code(),
            2
        );
        assert_eq!(CliError::from(Error::ConstraintViolated("x".into())).exit_code(), 2);
    }
}
