//! Monte Carlo simulation of the teleportation-based code for the isotropic
//! qubit source, the dense check of its distortion identity, and an
//! empirical look at the Hoeffding tail of symbol-wise distortion.
//!
//! Bell-measurement outcomes on maximally entangled pairs are uniform and
//! independent, so a trial samples the outcome word directly; the dense
//! `n ≤ 3` construction in `verify_distortion_equivalence` ties that
//! shortcut to the quantum states.

mod hoeffding;

use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::distortion::{DistortionObservable, SymbolwiseObservable, DENSE_MAX_N};
use crate::error::{Error, Result};
use crate::isotropic;
use crate::linalg::{self, c, cr, kron, CMat, CVec};
use crate::quantum::PureState;

pub use hoeffding::{hoeffding_check, HoeffdingReport};

/// Largest `M·n` (symbols held in a codebook).
pub const MAX_CODEBOOK_SYMBOLS: u64 = 1 << 28;
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMode {
    /// New i.i.d. uniform codebook every trial (the random-coding ensemble).
    FreshPerTrial,
    /// One i.i.d. uniform codebook shared by all trials.
    Fixed,
    /// All `4ⁿ` words in lexicographic order (`M` must equal `4ⁿ`).
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "D")]
    pub d: f64,
    pub trials: u64,
    pub seed: u64,
    pub codebook_mode: CodebookMode,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.trials == 0 {
            return Err(Error::InvalidParameter("n, M and trials must be ≥ 1".into()));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(Error::InvalidParameter(format!("D = {} must be a finite non-negative number", self.d)));
        }
        let symbols = (self.m as u128) * (self.n as u128);
        if symbols > MAX_CODEBOOK_SYMBOLS as u128 {
            return Err(Error::SizeGuard(format!(
                "codebook of {} words × {} symbols exceeds {} symbols",
                self.m, self.n, MAX_CODEBOOK_SYMBOLS
            )));
        }
        if self.codebook_mode == CodebookMode::Exhaustive {
            let full = 4u128.checked_pow(self.n as u32);
            if full != Some(self.m as u128) {
                return Err(Error::InvalidParameter(format!("exhaustive codebook needs M = 4^{}", self.n)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub excess_count: u64,
    pub empirical_excess: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(1 − S_{⌊nD⌋}4^{−n})^M`.
    pub target: f64,
    pub mean_distortion_hat: f64,
    /// Trials per Hamming distance `0..=n` of the chosen codeword.
    pub distance_histogram: Vec<u64>,
}

impl SimulationReport {
    pub const CSV_HEADER: &'static str =
        "n,M,D,trials,seed,codebook_mode,excess_count,empirical_excess_probability,ci_low_probability,ci_high_probability,target_probability,mean_distortion_hat";

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{:.16e},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c.n,
            c.m,
            c.d,
            c.trials,
            c.seed,
            serde_json::to_value(c.codebook_mode).expect("enum serializes").as_str().unwrap_or_default(),
            self.excess_count,
            self.empirical_excess,
            self.ci_low,
            self.ci_high,
            self.target,
            self.mean_distortion_hat
        )
    }

    /// Per-distance histogram as CSV.
    pub fn histogram_csv(&self) -> String {
        let n = self.config.n as f64;
        let mut s = String::from("hamming_distance,distortion,trials\n");
        for (k, &cnt) in self.distance_histogram.iter().enumerate() {
            s.push_str(&format!("{k},{:.16e},{cnt}\n", k as f64 / n));
        }
        s
    }

    /// Excess count recomputed by thresholding the sorted per-trial distances.
    pub fn excess_from_histogram(&self) -> u64 {
        let kmax = max_within(self.config.n, self.config.d);
        self.distance_histogram.iter().skip(kmax as usize + 1).sum()
    }
}

/// Largest Hamming distance `k` with `k/n ≤ D` (boundary rule of the
/// distortion module).
fn max_within(n: usize, d: f64) -> u64 {
    let k = isotropic::ball_index(n as u64, d);
    k.min(n as u64)
}

/// Two-sided Clopper–Pearson interval for `x` successes in `n` trials.
pub fn clopper_pearson(x: u64, n: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (xf, nf) = (x as f64, n as f64);
    let lo = if x == 0 { 0.0 } else { inv_beta_reg(xf, nf - xf + 1.0, alpha / 2.0) };
    let hi = if x == n { 1.0 } else { inv_beta_reg(xf + 1.0, nf - xf, 1.0 - alpha / 2.0) };
    (lo, hi)
}

/// Deterministic generator for trial `t`: stream `t` of the seed's key.
fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform 4-ary symbols, two bits each.
fn fill_symbols(rng: &mut ChaCha8Rng, out: &mut [u8]) {
    for chunk in out.chunks_mut(32) {
        let mut bits = rng.next_u64();
        for s in chunk {
            *s = (bits & 3) as u8;
            bits >>= 2;
        }
    }
}

fn hamming(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// Hamming distance to the nearest codeword (linear scan, ties to the lowest index).
fn nearest(x: &[u8], codebook: &[u8], n: usize) -> u32 {
    let mut best = u32::MAX;
    for w in codebook.chunks_exact(n) {
        let d = hamming(x, w);
        if d < best {
            best = d;
            if d == 0 {
                break;
            }
        }
    }
    best
}

pub fn simulate_teleportation_rd(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let n = cfg.n;
    let fixed: Option<Vec<u8>> = match cfg.codebook_mode {
        CodebookMode::Fixed => {
            let mut cb = vec![0u8; cfg.m as usize * n];
            fill_symbols(&mut trial_rng(cfg.seed, u64::MAX), &mut cb);
            Some(cb)
        }
        _ => None,
    };
    let distances: Vec<u32> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let mut x = vec![0u8; n];
            fill_symbols(&mut rng, &mut x);
            match cfg.codebook_mode {
                // Every word is a codeword.
                CodebookMode::Exhaustive => 0,
                CodebookMode::Fixed => nearest(&x, fixed.as_deref().expect("fixed codebook"), n),
                CodebookMode::FreshPerTrial => {
                    let mut best = u32::MAX;
                    let mut w = vec![0u8; n];
                    for _ in 0..cfg.m {
                        fill_symbols(&mut rng, &mut w);
                        best = best.min(hamming(&x, &w));
                    }
                    best
                }
            }
        })
        .collect();

    let mut hist = vec![0u64; n + 1];
    for &k in &distances {
        hist[k as usize] += 1;
    }
    let kmax = max_within(n, cfg.d) as usize;
    let excess: u64 = hist.iter().skip(kmax + 1).sum();
    let total_distance: u64 = hist.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
    let (lo, hi) = clopper_pearson(excess, cfg.trials, CONFIDENCE);
    let target = isotropic::achievability_eps(n as u64, &num_bigint::BigUint::from(cfg.m), cfg.d.min(1.0))?;
    Ok(SimulationReport {
        config: *cfg,
        excess_count: excess,
        empirical_excess: excess as f64 / cfg.trials as f64,
        ci_low: lo,
        ci_high: hi,
        target,
        mean_distortion_hat: total_distance as f64 / (n as f64 * cfg.trials as f64),
        distance_histogram: hist,
    })
}

/// Pauli `σ_k`, `k ∈ {0,1,2,3}` = `I, X, Y, Z`.
pub fn pauli(k: u8) -> CMat {
    let z = cr(0.0);
    let o = cr(1.0);
    match k {
        0 => linalg::identity(2),
        1 => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMat::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        _ => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Dense `n`-symbol average entanglement-fidelity observable, built once per `n`.
fn average_fidelity_observable(n: usize) -> Result<&'static CMat> {
    static DENSE: [OnceLock<CMat>; DENSE_MAX_N] = [const { OnceLock::new() }; DENSE_MAX_N];
    let cell = &DENSE[n - 1];
    if let Some(m) = cell.get() {
        return Ok(m);
    }
    let bell = PureState::bell("R", "B")?;
    let base = DistortionObservable::entanglement_fidelity(&bell, "B")?;
    let dense = SymbolwiseObservable::new(base, n)?.dense()?;
    Ok(cell.get_or_init(|| dense.operator().clone()))
}

/// `(Tr{Δ̄ Φ_{x,y}}, (1/n) Σ 1{x_i ≠ y_i})` with
/// `|Φ_{x,y}⟩ = ⊗_i (I ⊗ σ_{y_i}σ_{x_i})|Φ⟩` and `Δ̄` the average
/// entanglement-fidelity observable.
pub fn verify_distortion_equivalence(x: &[u8], y: &[u8]) -> Result<(f64, f64)> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::InvalidParameter("words must be non-empty and of equal length".into()));
    }
    if n > DENSE_MAX_N {
        return Err(Error::SizeGuard(format!("dense construction limited to n ≤ {DENSE_MAX_N}")));
    }
    if x.iter().chain(y).any(|&s| s > 3) {
        return Err(Error::InvalidParameter("symbols must be in {0,1,2,3}".into()));
    }
    let bell = PureState::bell("R", "B")?;
    let dense = average_fidelity_observable(n)?;
    let mut v = CVec::from_element(1, cr(1.0));
    for i in 0..n {
        let u = kron(&linalg::identity(2), &(pauli(y[i]) * pauli(x[i])));
        v = v.kronecker(&(u * bell.vector()));
    }
    let lhs = (v.adjoint() * dense * &v)[(0, 0)].re;
    let rhs = hamming(x, y) as f64 / n as f64;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta_reg;

    fn cfg(n: usize, m: u64, d: f64, trials: u64, mode: CodebookMode) -> SimulationConfig {
        SimulationConfig {
            n,
            m,
            d,
            trials,
            seed: 42,
            codebook_mode: mode,
        }
    }

    #[test]
    fn clopper_pearson_tails() {
        let (lo, hi) = clopper_pearson(30, 1000, 0.99);
        // Oracle: the defining binomial tail identities via the regularized beta.
        assert!((beta_reg(30.0, 971.0, lo) - 0.005).abs() < 1e-9);
        assert!((beta_reg(31.0, 970.0, hi) - 0.995).abs() < 1e-9);
        assert!(lo < 0.03 && 0.03 < hi);
        assert_eq!(clopper_pearson(0, 10, 0.99).0, 0.0);
        assert_eq!(clopper_pearson(10, 10, 0.99).1, 1.0);
        let (_, hi0) = clopper_pearson(0, 100, 0.99);
        assert!((hi0 - (1.0 - 0.005f64.powf(0.01))).abs() < 1e-9);
    }

    #[test]
    fn trivial_cases() {
        let r = simulate_teleportation_rd(&cfg(6, 3, 1.0, 500, CodebookMode::FreshPerTrial)).unwrap();
        assert_eq!(r.excess_count, 0);
        let r = simulate_teleportation_rd(&cfg(3, 64, 0.0, 500, CodebookMode::Exhaustive)).unwrap();
        assert_eq!(r.excess_count, 0);
        assert!(simulate_teleportation_rd(&cfg(3, 63, 0.0, 5, CodebookMode::Exhaustive)).is_err());
        assert!(matches!(
            simulate_teleportation_rd(&cfg(1 << 10, 1 << 20, 0.1, 1, CodebookMode::Fixed)),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn deterministic_and_consistent() {
        for mode in [CodebookMode::FreshPerTrial, CodebookMode::Fixed] {
            let c = cfg(8, 50, 0.25, 3000, mode);
            let a = simulate_teleportation_rd(&c).unwrap();
            let b = simulate_teleportation_rd(&c).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.excess_from_histogram(), a.excess_count);
            assert!(a.ci_low <= a.empirical_excess && a.empirical_excess <= a.ci_high);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = cfg(8, 40, 0.25, 2000, CodebookMode::FreshPerTrial);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_teleportation_rd(&c).unwrap());
        let b = four.install(|| simulate_teleportation_rd(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn matches_random_coding_average() {
        let r = simulate_teleportation_rd(&cfg(8, 1000, 0.25, 20000, CodebookMode::FreshPerTrial)).unwrap();
        assert!((r.target - 0.01448).abs() < 1e-5);
        assert!(r.ci_low <= r.target && r.target <= r.ci_high, "{r:?}");
    }

    #[test]
    fn equivalence_examples() {
        assert_eq!(verify_distortion_equivalence(&[2], &[2]).unwrap().1, 0.0);
        let (l, r) = verify_distortion_equivalence(&[0], &[1]).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && r == 1.0);
        let (l, r) = verify_distortion_equivalence(&[0, 1, 2], &[0, 1, 3]).unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-12 && (r - 1.0 / 3.0).abs() < 1e-15);
        assert!(verify_distortion_equivalence(&[0; 4], &[0; 4]).is_err());
    }

    #[test]
    fn equivalence_exhaustive_small() {
        for n in 1..=2usize {
            let words: Vec<Vec<u8>> = (0..4usize.pow(n as u32))
                .map(|mut k| {
                    (0..n)
                        .map(|_| {
                            let s = (k % 4) as u8;
                            k /= 4;
                            s
                        })
                        .collect()
                })
                .collect();
            for x in &words {
                for y in &words {
                    let (l, r) = verify_distortion_equivalence(x, y).unwrap();
                    assert!((l - r).abs() < 1e-12, "{x:?} {y:?}: {l} vs {r}");
                }
            }
        }
    }

    #[test]
    fn symbols_are_uniform() {
        let mut rng = trial_rng(1, 0);
        let mut buf = vec![0u8; 400_000];
        fill_symbols(&mut rng, &mut buf);
        let mut counts = [0usize; 4];
        for s in buf {
            counts[s as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 100_000.0 - 1.0).abs() < 0.02);
        }
    }
}
