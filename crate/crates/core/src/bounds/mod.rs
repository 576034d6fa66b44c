//! Converse and achievability bounds on the minimum qubit compression size
//! `log₂ M*`, the entanglement-assisted rate-distortion function and the
//! i.i.d. converse chain built on it.
//!
//! Converses that need a minimum over all channels are only evaluated per
//! channel (or over a supplied family) and are labelled conditional; the
//! valid generic converse goes through `iid_converse_rate`, whose only
//! optimization is convex and certified.

mod achievability;
mod converse;
mod ea;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distortion::{excess_projector, DistortionObservable};
use crate::error::{Error, Result};
use crate::linalg::{h2, re_trace_product};
use crate::quantum::DensityOperator;

pub use achievability::{achievability_embezzling, achievability_mes, mes_parameters, compression_sandwich, MesParameters, Sandwich};
pub use converse::{
    classical_kv_converse, converse_alt, converse_alt_state, converse_simple_family, converse_simple_inner,
    max_beta_over_psi, FamilyConverse, PsiOptimum,
};
pub use ea::{
    canonical_purification, ea_qrd_function, ea_qrd_function_pure, ea_qrd_sweep, iid_converse_rate, FrankWolfeOptions,
    RateDistortionPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    #[serde(rename = "lower_bound_on_logM")]
    LowerBoundOnLogM,
    #[serde(rename = "upper_bound_on_logM")]
    UpperBoundOnLogM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    Conditional,
}

impl Validity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Validity::Valid => "valid",
            Validity::Conditional => "conditional",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundParameters {
    #[serde(rename = "D")]
    pub d: f64,
    pub eps: Option<f64>,
    pub eps_prime: Option<f64>,
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl BoundParameters {
    pub fn new(d: f64) -> Self {
        Self {
            d,
            ..Self::default()
        }
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn eps_prime(mut self, eps_prime: f64) -> Self {
        self.eps_prime = Some(eps_prime);
        self
    }

    pub fn n(mut self, n: u64) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }
}

/// A bound on `log₂ M` in qubits. `lo`/`hi` bracket the numerically computed
/// value (solver certificates); they equal `value` for closed-form terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub value: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub lo: f64,
    #[serde(serialize_with = "crate::io::ser_f64")]
    pub hi: f64,
    pub direction: Direction,
    pub validity: Validity,
    pub provenance: &'static str,
    pub parameters: BoundParameters,
    /// Named additive pieces of `value` (entropic term, corrections, …).
    #[serde(serialize_with = "crate::io::ser_f64_map")]
    pub components: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundResult {
    fn new(value: f64, direction: Direction, validity: Validity, provenance: &'static str, parameters: BoundParameters) -> Self {
        Self {
            value,
            lo: value,
            hi: value,
            direction,
            validity,
            provenance,
            parameters,
            components: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn lower(value: f64, validity: Validity, provenance: &'static str, parameters: BoundParameters) -> Self {
        Self::new(value, Direction::LowerBoundOnLogM, validity, provenance, parameters)
    }

    fn upper(value: f64, validity: Validity, provenance: &'static str, parameters: BoundParameters) -> Self {
        Self::new(value, Direction::UpperBoundOnLogM, validity, provenance, parameters)
    }

    fn interval(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo.min(self.value);
        self.hi = hi.max(self.value);
        self
    }

    fn component(mut self, name: &str, v: f64) -> Self {
        self.components.insert(name.to_string(), v);
        self
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// The bound value that is safe to use in its direction.
    pub fn safe_value(&self) -> f64 {
        match self.direction {
            Direction::LowerBoundOnLogM => self.lo,
            Direction::UpperBoundOnLogM => self.hi,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bound results serialize")
    }
}

pub const CSV_HEADER: &str = "provenance,D,eps,eps_prime,n,value_qubits,lo_qubits,hi_qubits,direction,validity";

fn opt_f(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.16e}"))
}

pub fn csv_row(b: &BoundResult) -> String {
    let p = &b.parameters;
    format!(
        "{},{:.16e},{},{},{},{:.16e},{:.16e},{:.16e},{},{}",
        b.provenance,
        p.d,
        opt_f(p.eps),
        opt_f(p.eps_prime),
        p.n.map_or(String::new(), |n| n.to_string()),
        b.value,
        b.lo,
        b.hi,
        match b.direction {
            Direction::LowerBoundOnLogM => "lower",
            Direction::UpperBoundOnLogM => "upper",
        },
        b.validity.as_str()
    )
}

pub fn to_csv(rows: &[BoundResult]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

/// `χ₁ = 2log(5/ε) + 4 + log log(|B| + (5/ε)²)`; the `log log` argument is
/// clamped below at 2, and the second value reports whether that happened.
pub fn chi1(eps: f64, dim_b: usize) -> Result<(f64, bool)> {
    check_open("eps", eps)?;
    let r = 5.0 / eps;
    let arg = dim_b as f64 + r * r;
    let clamped = arg < 2.0;
    Ok((2.0 * r.log2() + 4.0 + arg.max(2.0).log2().log2(), clamped))
}

/// `χ₂ = ½ log[(1/ε′ + 1/(1−√(2ε′))) · 1/(ε′/2 − ε)]`.
pub fn chi2(eps: f64, eps_prime: f64) -> Result<f64> {
    check_pair(eps, eps_prime, true)?;
    let s = (2.0 * eps_prime).sqrt();
    Ok(0.5 * ((1.0 / eps_prime + 1.0 / (1.0 - s)) / (eps_prime / 2.0 - eps)).log2())
}

/// `ε″ = ε′(ε′/2 − ε)`.
pub fn eps_double_prime(eps: f64, eps_prime: f64) -> f64 {
    eps_prime * (eps_prime / 2.0 - eps)
}

/// `f(ε, ε′, n) = (1/2n)[5√(2ε′) n log|R| − 3h₂(√(2ε′)) + log(ε′/2 − ε)]`.
pub fn finite_n_correction(eps: f64, eps_prime: f64, n: u64, dim_r: usize) -> Result<f64> {
    check_pair(eps, eps_prime, true)?;
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be ≥ 1".into()));
    }
    let s = (2.0 * eps_prime).sqrt();
    let nf = n as f64;
    Ok((5.0 * s * nf * (dim_r as f64).log2() - 3.0 * h2(s) + (eps_prime / 2.0 - eps).log2()) / (2.0 * nf))
}

fn check_open(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("{name} = {v} outside (0, 1)")));
    }
    Ok(())
}

/// `ε ∈ (0,1)`, `ε′ ∈ (0,1)`, `ε′ ≥ 2ε` (strict when `strict`), and
/// `√(2ε′) < 1`.
fn check_pair(eps: f64, eps_prime: f64, strict: bool) -> Result<()> {
    check_open("eps", eps)?;
    check_open("eps_prime", eps_prime)?;
    let ok = if strict { eps_prime > 2.0 * eps } else { eps_prime >= 2.0 * eps };
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "eps_prime = {eps_prime} must be {} 2·eps = {}",
            if strict { ">" } else { "≥" },
            2.0 * eps
        )));
    }
    if (2.0 * eps_prime).sqrt() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "√(2·eps_prime) = {} must be < 1",
            (2.0 * eps_prime).sqrt()
        )));
    }
    Ok(())
}

/// Slack for the excess-distortion constraint checks.
const CONSTRAINT_TOL: f64 = 1e-9;

/// `Tr{Π_{≤D} ω}` for `ω` on the factors of `delta`.
pub fn within_distortion_probability(omega: &DensityOperator, delta: &DistortionObservable, d: f64) -> Result<f64> {
    if omega.dims().dims() != delta.dims().dims() {
        return Err(Error::DimensionMismatch(format!(
            "state on {} against an observable on {}",
            omega.dims(),
            delta.dims()
        )));
    }
    let p = excess_projector(delta, d)?;
    Ok(re_trace_product(&p.complement(), omega.matrix()))
}

/// Fails unless `Tr{Π_{≤D} ω} ≥ 1 − eps1`.
fn require_excess(omega: &DensityOperator, delta: &DistortionObservable, d: f64, eps1: f64) -> Result<f64> {
    let within = within_distortion_probability(omega, delta, d)?;
    if within < 1.0 - eps1 - CONSTRAINT_TOL {
        return Err(Error::ConstraintViolated(format!(
            "Tr{{Π_≤D ω}} = {within:.12} < 1 − {eps1} at D = {d}"
        )));
    }
    Ok(within)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_values() {
        let (c1, clamped) = chi1(0.5, 2).unwrap();
        let want = 2.0 * 10f64.log2() + 4.0 + 102f64.log2().log2();
        assert!((c1 - want).abs() < 1e-12);
        assert!((c1 - 13.39).abs() < 1e-2);
        assert!(!clamped);
        let c2 = chi2(0.01, 0.05).unwrap();
        let want = 0.5 * ((20.0 + 1.0 / (1.0 - 0.1f64.sqrt())) / 0.015).log2();
        assert!((c2 - want).abs() < 1e-12);
        assert!((c2 - 5.241).abs() < 1e-3);
        assert!(chi2(0.01, 0.02).is_err());
        assert!(chi2(0.1, 0.6).is_err());
    }

    #[test]
    fn chi1_grows_as_eps_shrinks() {
        let mut prev = 0.0;
        for eps in [0.9, 0.5, 0.1, 0.01, 1e-4] {
            let (c, _) = chi1(eps, 4).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn correction_example() {
        let f = finite_n_correction(0.01, 0.05, 100, 2).unwrap();
        let s = 0.1f64.sqrt();
        let want = (5.0 * s * 100.0 - 3.0 * h2(s) + 0.015f64.log2()) / 200.0;
        assert!((f - want).abs() < 1e-14);
        assert!((f - 0.7468).abs() < 1e-4);
        // n → ∞ limit (5/2)√(2ε′) log|R|.
        let big = finite_n_correction(0.01, 0.05, 1 << 40, 2).unwrap();
        assert!((big - 2.5 * s).abs() < 1e-9);
        assert!((eps_double_prime(0.01, 0.05) - 0.05 * 0.015).abs() < 1e-18);
    }

    #[test]
    fn csv_shape() {
        let b = BoundResult::lower(0.5, Validity::Valid, "x", BoundParameters::new(0.1).eps(0.01).n(4));
        let row = csv_row(&b);
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.ends_with("lower,valid"));
        let json: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        assert_eq!(json["parameters"]["D"], 0.1);
        assert_eq!(json["direction"], "lower_bound_on_logM");
    }
}
