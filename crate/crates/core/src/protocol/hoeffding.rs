use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::{group_weights, on_boundary, DistortionObservable, SymbolwiseObservable};
use crate::error::{Error, Result};
use crate::quantum::{PureState, QuantumChannel};

use super::{clopper_pearson, trial_rng, CONFIDENCE};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoeffdingReport {
    pub n: usize,
    #[serde(rename = "D")]
    pub d: f64,
    pub mean_distortion: f64,
    pub delta_gap: f64,
    pub d_max: f64,
    /// `exp(−2nδ²/d_max²)`.
    pub hoeffding_bound: f64,
    /// `Tr{Π_{>D} ω^{⊗n}}` by exact convolution of the level distribution.
    pub exact_tail: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: u64,
    /// `estimate ≤ bound + 3·(CI half-width)`.
    pub bound_holds: bool,
    /// `exact_tail` inside the Clopper–Pearson interval.
    pub estimate_matches_exact: bool,
}

/// Samples the symbol-wise distortion of `ω^{⊗n}` through the spectral
/// measurement of `Δ` (outcome `z` with `p_Z(z) = ⟨φ_z|ω|φ_z⟩`) and compares
/// the excess frequency with Hoeffding's bound and the exact tail.
pub fn hoeffding_check(
    delta: &DistortionObservable,
    channel: &QuantumChannel,
    phi: &PureState,
    n: usize,
    d: f64,
    trials: u64,
    seed: u64,
) -> Result<HoeffdingReport> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter("n and trials must be ≥ 1".into()));
    }
    let omega = channel.extend_to_reference(phi)?;
    let groups = delta.groups();
    let weights = group_weights(&omega, &groups)?;
    let values: Vec<f64> = groups.iter().map(|g| g.value).collect();
    let mean: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let gap = d - mean;
    if !(gap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean distortion {mean} is not below D = {d}; the tail bound needs a positive gap"
        )));
    }
    let d_max = delta.d_max();
    let bound = if d_max > 0.0 { (-2.0 * n as f64 * gap * gap / (d_max * d_max)).exp() } else { 0.0 };
    let exact = SymbolwiseObservable::new(delta.clone(), n)?.excess_iid(&omega, d)?.probability;

    let sampler = WeightedIndex::new(weights.iter().map(|w| w.max(0.0))).map_err(|e| Error::InvalidParameter(format!("outcome distribution: {e}")))?;
    let excess: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let avg = (0..n).map(|_| values[sampler.sample(&mut rng)]).sum::<f64>() / n as f64;
            u64::from(!on_boundary(avg, d) && avg > d)
        })
        .sum();
    let estimate = excess as f64 / trials as f64;
    let (lo, hi) = clopper_pearson(excess, trials, CONFIDENCE);
    Ok(HoeffdingReport {
        n,
        d,
        mean_distortion: mean,
        delta_gap: gap,
        d_max,
        hoeffding_bound: bound,
        exact_tail: exact,
        estimate,
        ci_low: lo,
        ci_high: hi,
        trials,
        seed,
        bound_holds: estimate <= bound + 3.0 * 0.5 * (hi - lo),
        estimate_matches_exact: lo <= exact && exact <= hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::SystemDims;
    use statrs::distribution::{Binomial, DiscreteCDF};

    fn setup(p: f64) -> (DistortionObservable, QuantumChannel, PureState) {
        let phi = PureState::bell("R", "A").unwrap();
        let delta = DistortionObservable::entanglement_fidelity(&phi, "B").unwrap();
        let ch = QuantumChannel::depolarizing(p, SystemDims::single("A", 2), SystemDims::single("B", 2)).unwrap();
        (delta, ch, phi)
    }

    #[test]
    fn identity_channel_has_no_tail() {
        let (delta, ch, phi) = setup(0.0);
        let r = hoeffding_check(&delta, &ch, &phi, 20, 0.1, 500, 1).unwrap();
        assert!(r.exact_tail < 1e-30);
        assert_eq!(r.estimate, 0.0);
        assert!(r.bound_holds && r.estimate_matches_exact);
    }

    #[test]
    fn depolarizing_example() {
        let (delta, ch, phi) = setup(0.2);
        let r = hoeffding_check(&delta, &ch, &phi, 50, 0.3, 20000, 7).unwrap();
        assert!((r.mean_distortion - 0.15).abs() < 1e-12);
        assert!((r.hoeffding_bound - (-2.25f64).exp()).abs() < 1e-12);
        assert!((r.hoeffding_bound - 0.105).abs() < 1e-3);
        assert!(r.exact_tail <= r.hoeffding_bound);
        assert!(r.bound_holds && r.estimate_matches_exact, "{r:?}");
    }

    #[test]
    fn exponent_grows_with_n() {
        let (delta, ch, phi) = setup(0.2);
        let tails: Vec<f64> = [25, 50, 100]
            .iter()
            .map(|&n| hoeffding_check(&delta, &ch, &phi, n, 0.3, 1, 0).unwrap().exact_tail)
            .collect();
        // Ent-fid distortion of a depolarized Bell pair is Bernoulli(3p/4).
        for (t, n) in tails.iter().zip([25u64, 50, 100]) {
            let oracle = Binomial::new(0.15, n).unwrap().sf((0.3 * n as f64).floor() as u64);
            assert!((t - oracle).abs() <= 1e-9 * oracle, "{t} vs {oracle}");
        }
        // The log-tail falls at least at the Hoeffding rate between consecutive n.
        let rate = 2.0 * 0.15f64.powi(2);
        assert!((tails[1].ln() - tails[0].ln()) / 25.0 <= -rate);
        assert!((tails[2].ln() - tails[1].ln()) / 50.0 <= -rate);
    }

    #[test]
    fn rejects_nonpositive_gap() {
        let (delta, ch, phi) = setup(0.4);
        assert!(hoeffding_check(&delta, &ch, &phi, 10, 0.3, 10, 0).is_err());
    }
}
