use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, labelled tensor factors of a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl SystemDims {
    pub fn new<S: Into<String>>(labels: Vec<S>, dims: Vec<usize>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels but {} dimensions",
                labels.len(),
                dims.len()
            )));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::DimensionMismatch(format!("subsystem dimension {d}")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::LabelCollision(l.clone()));
            }
        }
        Ok(Self { labels, dims })
    }

    /// A single factor.
    pub fn single(label: &str, dim: usize) -> Self {
        Self::new(vec![label], vec![dim]).expect("single factor")
    }

    /// Trivial (one-dimensional, factor-free) space.
    pub fn scalar() -> Self {
        Self {
            labels: vec![],
            dims: vec![],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.position(label)?])
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.position(l)).collect()
    }

    pub fn concat(&self, other: &SystemDims) -> Result<SystemDims> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut dims = self.dims.clone();
        dims.extend(other.dims.iter().copied());
        SystemDims::new(labels, dims)
    }

    /// Sub-space made of the factors at `positions`, in that order.
    pub fn select(&self, positions: &[usize]) -> SystemDims {
        SystemDims {
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
            dims: positions.iter().map(|&p| self.dims[p]).collect(),
        }
    }

    /// Positions of every factor not listed.
    pub fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|p| !positions.contains(p)).collect()
    }

    pub fn relabel<S: Into<String>>(&self, labels: Vec<S>) -> Result<SystemDims> {
        SystemDims::new(labels, self.dims.clone())
    }
}

impl std::fmt::Display for SystemDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .zip(&self.dims)
            .map(|(l, d)| format!("{l}:{d}"))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
