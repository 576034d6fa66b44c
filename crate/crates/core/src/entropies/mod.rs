//! Entropic quantities: exact values from spectra, smoothed values from
//! convex programs or structured searches, hypothesis testing from the
//! Neyman–Pearson structure.

mod ball;
mod basic;
mod dmax;
mod hmin;
mod hypothesis;
mod imax;

use serde::Serialize;

pub use basic::{conditional_entropy, expectation, mutual_information, relative_entropy, von_neumann};
pub use dmax::{d_max, d_max_matrix, smooth_d_max, smooth_d_max_with};
pub use hmin::{h0, h0_smooth, h_min, h_min_smooth, RANK_TOL};
pub use hypothesis::{
    beta_epsilon, beta_epsilon_sdp, classical_beta, d_h, neyman_pearson, NeymanPearson,
    ZERO_BLOCK_TOL,
};
pub use imax::{
    i_max, i_max_alt, i_max_smooth, i_max_smooth_fixed_marginal, i_max_smooth_sweep,
    ImaxSmoothing,
};

use crate::error::{Error, Result};
use crate::quantum::{purified_distance, DensityOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Exact,
    CertifiedInterval,
    HeuristicUpperBound,
}

/// A value in bits together with how much of it is guaranteed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyResult {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub value: f64,
    pub certainty: Certainty,
    #[serde(serialize_with = "crate::io::ser_opt_pair")]
    pub interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EntropyResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            certainty: Certainty::Exact,
            interval: None,
            note: None,
        }
    }

    /// `lo ≤ value ≤ hi` is enforced by widening.
    pub fn interval(value: f64, lo: f64, hi: f64) -> Self {
        Self {
            value,
            certainty: Certainty::CertifiedInterval,
            interval: Some((lo.min(value), hi.max(value))),
            note: None,
        }
    }

    pub fn heuristic(value: f64) -> Self {
        Self {
            value,
            certainty: Certainty::HeuristicUpperBound,
            interval: None,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn lo(&self) -> f64 {
        self.interval.map_or(self.value, |i| i.0)
    }

    pub fn hi(&self) -> f64 {
        self.interval.map_or(self.value, |i| i.1)
    }
}

/// Subnormalized states within purified distance `epsilon` of `center`.
#[derive(Debug, Clone)]
pub struct SmoothingBall {
    pub center: DensityOperator,
    pub epsilon: f64,
}

impl SmoothingBall {
    pub fn new(center: DensityOperator, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius {epsilon} outside [0, 1)"
            )));
        }
        Ok(Self { center, epsilon })
    }

    pub fn contains(&self, x: &DensityOperator, slack: f64) -> Result<bool> {
        Ok(x.trace() <= 1.0 + 1e-9 && purified_distance(&self.center, x)? <= self.epsilon + slack)
    }
}
