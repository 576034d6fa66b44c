//! Randomized invariant suites shared by the CLI `validate` command and the
//! acceptance tests. Each instance draws from its own ChaCha stream of the
//! suite seed, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::{DistortionObservable, SymbolwiseObservable};
use crate::entropies::{
    beta_epsilon, beta_epsilon_sdp, d_h, d_max, h0, h0_smooth, h_min, h_min_smooth, i_max, mutual_information,
    smooth_d_max, von_neumann,
};
use crate::error::{Error, Result};
use crate::linalg::{eigh, identity, sqrtm_psd, trace_norm_hermitian, CMat};
use crate::quantum::{fidelity, purified_distance, trace_distance, DensityOperator, PureState, SystemDims};
use crate::random::{random_density, random_effect, random_state};
use crate::sdp::SdpOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fvg,
    Triangle,
    Gentle,
    TestDifference,
    Smoothing,
    ImaxMi,
    EntropyOrder,
    DhDmaxSandwich,
    BetaOracle,
    SymbolwiseSpectrum,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Fvg,
        Suite::Triangle,
        Suite::Gentle,
        Suite::TestDifference,
        Suite::Smoothing,
        Suite::ImaxMi,
        Suite::EntropyOrder,
        Suite::DhDmaxSandwich,
        Suite::BetaOracle,
        Suite::SymbolwiseSpectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fvg => "fvg",
            Suite::Triangle => "triangle",
            Suite::Gentle => "gentle",
            Suite::TestDifference => "test_difference",
            Suite::Smoothing => "smoothing",
            Suite::ImaxMi => "imax_mi",
            Suite::EntropyOrder => "entropy_order",
            Suite::DhDmaxSandwich => "dh_dmax_sandwich",
            Suite::BetaOracle => "beta_oracle",
            Suite::SymbolwiseSpectrum => "symbolwise_spectrum",
        }
    }

    /// Also accepts the short aliases `lemma1`, `lemma2` and `lemma7`.
    pub fn from_name(s: &str) -> Option<Suite> {
        match s {
            "lemma1" => Some(Suite::DhDmaxSandwich),
            "lemma2" => Some(Suite::TestDifference),
            "lemma7" => Some(Suite::SymbolwiseSpectrum),
            _ => Suite::ALL.into_iter().find(|x| x.name() == s),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::Fvg => "1 − F ≤ ½‖ρ−σ‖₁ ≤ √(1−F²)",
            Suite::Triangle => "purified distance triangle inequality",
            Suite::Gentle => "‖ρ − √Λρ√Λ‖₁ ≤ 2√ε when Tr Λρ ≥ 1−ε",
            Suite::TestDifference => "Tr Λρ ≥ Tr Λσ − ½‖ρ−σ‖₁",
            Suite::Smoothing => "smoothed quantities move monotonically with ε",
            Suite::ImaxMi => "I_max ≥ I",
            Suite::EntropyOrder => "H_0 ≥ H ≥ H_min",
            Suite::DhDmaxSandwich => "D_max^√(2(1−ε)) + log 1/(1−ε) ≤ D_H^ε ≤ D_max + log 1/(1−ε)",
            Suite::BetaOracle => "Neyman–Pearson β_ε equals the SDP value",
            Suite::SymbolwiseSpectrum => "dense and structured symbol-wise spectra agree",
        }
    }

    pub fn default_instances(self) -> usize {
        match self {
            Suite::Fvg => 200,
            Suite::BetaOracle => 50,
            Suite::SymbolwiseSpectrum => SPECTRUM_CASES.len(),
            _ => 100,
        }
    }

    /// Smallest admissible slack.
    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Fvg | Suite::Triangle | Suite::Gentle | Suite::EntropyOrder => 1e-9,
            Suite::TestDifference => 1e-12,
            Suite::Smoothing => 1e-5,
            Suite::ImaxMi => 1e-6,
            Suite::DhDmaxSandwich => 1e-4,
            Suite::BetaOracle => 1e-6,
            Suite::SymbolwiseSpectrum => 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub description: &'static str,
    pub seed: u64,
    pub instances: usize,
    pub passed: usize,
    pub tolerance: f64,
    /// Smallest slack over all instances (negative = violated).
    pub worst_slack: f64,
    /// First few failures.
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.instances
    }
}

const MAX_REPORTED: usize = 10;

fn stream_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i as u64);
    r
}

fn qudit(d: usize) -> SystemDims {
    SystemDims::single("A", d)
}

fn scaled(rho: &DensityOperator, t: f64) -> DensityOperator {
    rho.scaled(t).expect("scaling by t ≤ 1 keeps a state valid")
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Slack of instance `i` (all inequalities of the instance folded by `min`).
fn instance(suite: Suite, seed: u64, i: usize) -> Result<f64> {
    let mut rng = stream_rng(seed, i);
    let d = 2 + i % 3;
    match suite {
        Suite::Fvg => {
            let rho = random_state(qudit(d), &mut rng);
            let sigma = random_state(qudit(d), &mut rng);
            let f = fidelity(&rho, &sigma)?;
            let t = trace_distance(&rho, &sigma)?;
            Ok(min_of(&[t - (1.0 - f), (1.0 - f * f).max(0.0).sqrt() - t]))
        }
        Suite::Triangle => {
            let draw = |rng: &mut ChaCha8Rng| {
                let s = random_state(qudit(d), rng);
                let t = if rng.random::<bool>() { 1.0 } else { rng.random_range(0.3..1.0) };
                scaled(&s, t)
            };
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            Ok(purified_distance(&a, &b)? + purified_distance(&b, &c)? - purified_distance(&a, &c)?)
        }
        Suite::Gentle => {
            let rho = random_state(qudit(d), &mut rng);
            let t: f64 = rng.random_range(0.0..1.0);
            let lambda = identity(d) - random_effect(d, &mut rng).scale(t * t);
            let eps = (1.0 - crate::entropies::expectation(&lambda, &rho)).max(0.0);
            let s = sqrtm_psd(&lambda);
            let disturbed = &s * rho.matrix() * &s;
            Ok(2.0 * eps.sqrt() - trace_norm_hermitian(&(rho.matrix() - disturbed)))
        }
        Suite::TestDifference => {
            let rho = random_state(qudit(d), &mut rng);
            let sigma = random_state(qudit(d), &mut rng);
            let lambda = random_effect(d, &mut rng);
            let e = |x: &DensityOperator| crate::entropies::expectation(&lambda, x);
            Ok(e(&rho) - e(&sigma) + trace_distance(&rho, &sigma)?)
        }
        Suite::Smoothing => smoothing_instance(i, &mut rng),
        Suite::ImaxMi => {
            let db = 2 + i % 2;
            let rho = random_state(SystemDims::new(vec!["A", "B"], vec![2, db])?, &mut rng);
            Ok(i_max(&rho, &["A"])? - mutual_information(&rho, &["A"])?)
        }
        Suite::EntropyOrder => {
            let rank = rng.random_range(1..=d);
            let rho = random_density(qudit(d), rank, &mut rng);
            let h = von_neumann(&rho);
            Ok(min_of(&[h0(&rho) - h, h - h_min(&rho, &[])?]))
        }
        Suite::DhDmaxSandwich => {
            let eps: f64 = [0.3, 0.5, 0.8][i % 3];
            let d = 2 + (i / 3) % 3;
            let rho = random_state(qudit(d), &mut rng);
            let sigma = scaled(&random_state(qudit(d), &mut rng), rng.random_range(0.3..=1.0));
            let shift = -(1.0 - eps).log2();
            let dh = d_h(&rho, &sigma, eps)?;
            let radius = (2.0 * (1.0 - eps)).sqrt();
            let lower = smooth_d_max(&rho, &sigma, radius)?.value + shift;
            let upper = d_max(&rho, &sigma)? + shift;
            Ok(min_of(&[dh - lower, upper - dh]))
        }
        Suite::BetaOracle => {
            let d = 2 + i % 7;
            let eps = rng.random_range(0.05..0.95);
            let rho = random_state(qudit(d), &mut rng);
            let sigma = random_state(qudit(d), &mut rng);
            let np = beta_epsilon(&rho, &sigma, eps)?;
            let (sdp, _) = beta_epsilon_sdp(&rho, &sigma, eps, &SdpOptions::default().with_tol_gap(1e-10))?;
            Ok(suite.tolerance() - (np - sdp).abs())
        }
        Suite::SymbolwiseSpectrum => {
            let (base, n) = SPECTRUM_CASES[i % SPECTRUM_CASES.len()];
            Ok(suite.tolerance() - symbolwise_spectrum_error(&base_observable(base)?, n)?)
        }
    }
}

fn smoothing_instance(i: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (e1, e2) = (0.1, 0.2);
    match i % 4 {
        0 => {
            let rho = random_state(qudit(2), rng);
            let sigma = random_state(qudit(2), rng);
            Ok(smooth_d_max(&rho, &sigma, e1)?.value - smooth_d_max(&rho, &sigma, e2)?.value)
        }
        1 => {
            let rho = random_state(SystemDims::new(vec!["A", "B"], vec![2, 2])?, rng);
            Ok(h_min_smooth(&rho, &["B"], e2)?.value - h_min_smooth(&rho, &["B"], e1)?.value)
        }
        2 => {
            let rho = random_state(qudit(4), rng);
            Ok(h0_smooth(&rho, e1)?.value - h0_smooth(&rho, e2)?.value)
        }
        _ => {
            let rho = random_state(qudit(3), rng);
            let sigma = random_state(qudit(3), rng);
            Ok(d_h(&rho, &sigma, e2)? - d_h(&rho, &sigma, e1)?)
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Base {
    EntFid,
    Hamming(usize),
}

const SPECTRUM_CASES: [(Base, usize); 5] = [
    (Base::EntFid, 2),
    (Base::EntFid, 3),
    (Base::Hamming(2), 2),
    (Base::Hamming(2), 3),
    (Base::Hamming(4), 2),
];

fn base_observable(b: Base) -> Result<DistortionObservable> {
    match b {
        Base::EntFid => DistortionObservable::entanglement_fidelity(&PureState::bell("R", "A")?, "B"),
        Base::Hamming(q) => DistortionObservable::hamming(q),
    }
}

/// Largest discrepancy between the dense average observable and the
/// structured spectral form (eigenvalue multiset, then level projectors).
pub fn symbolwise_spectrum_error(base: &DistortionObservable, n: usize) -> Result<f64> {
    let s = SymbolwiseObservable::new(base.clone(), n)?;
    let dense = s.dense()?;
    let ev = dense.eigenvalues();
    let st = s.structured_eigenvalues()?;
    if ev.len() != st.len() {
        return Err(Error::DimensionMismatch(format!("{} dense vs {} structured eigenvalues", ev.len(), st.len())));
    }
    let mut err: f64 = ev.iter().zip(&st).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let e = eigh(dense.operator());
    for (value, proj) in s.structured_level_projectors()? {
        let oracle: CMat = e.projector(|v| (v - value).abs() < 1e-9);
        err = err.max((proj - oracle).norm());
    }
    Ok(err)
}

pub fn run_suite(suite: Suite, seed: u64, instances: Option<usize>) -> SuiteReport {
    let count = instances.unwrap_or_else(|| suite.default_instances());
    let tol = suite.tolerance();
    let results: Vec<Result<f64>> = (0..count).into_par_iter().map(|i| instance(suite, seed, i)).collect();
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(slack) if slack >= -tol => {
                passed += 1;
                worst = worst.min(slack);
            }
            Ok(slack) => {
                worst = worst.min(slack);
                if failures.len() < MAX_REPORTED {
                    failures.push(format!("instance {i}: slack {slack:.3e}"));
                }
            }
            Err(e) => {
                if failures.len() < MAX_REPORTED {
                    failures.push(format!("instance {i}: {e}"));
                }
            }
        }
    }
    SuiteReport {
        suite: suite.name(),
        description: suite.description(),
        seed,
        instances: count,
        passed,
        tolerance: tol,
        worst_slack: worst,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
        assert_eq!(Suite::from_name("lemma1"), Some(Suite::DhDmaxSandwich));
        assert_eq!(Suite::from_name("nope"), None);
    }

    #[test]
    fn cheap_suites_pass() {
        for s in [Suite::Fvg, Suite::Triangle, Suite::Gentle, Suite::TestDifference, Suite::EntropyOrder, Suite::SymbolwiseSpectrum] {
            let r = run_suite(s, 7, None);
            assert!(r.ok(), "{r:?}");
            assert!(r.instances >= 5);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| run_suite(Suite::Fvg, 3, Some(30)));
        let b = run_suite(Suite::Fvg, 3, Some(30));
        assert_eq!(a, b);
    }
}
