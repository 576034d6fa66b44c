//! Max-information `I_max(A;B) = min_σ D_max(ρ_AB ‖ ρ_A ⊗ σ_B)` and its
//! smoothed variants.
//!
//! With the smoothed state's own marginal the joint problem is not convex;
//! it is attacked by alternation (fix `τ_A`, solve for `ρ̃`, re-evaluate the
//! exact value of `ρ̃`, set `τ_A ← ρ̃_A`) over several deterministic restarts
//! and reported as an upper bound. Fixing the marginal at `ρ_A` gives a convex
//! program with a certified interval.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{self, partial_trace_positions, CMat};
use crate::quantum::{purified_distance_matrix, DensityOperator, SystemDims};
use crate::sdp::SdpOptions;

use super::ball::{min_trace_dominating, Side, Target};
use super::hmin::split;
use super::EntropyResult;

const RESTARTS: usize = 6;
const MAX_ROUNDS: usize = 10;
/// Allowed excess of the purified distance from solver round-off.
const BALL_SLACK: f64 = 1e-6;

fn opts() -> SdpOptions {
    SdpOptions::default().with_tol_gap(1e-8)
}

fn log_or_neg_inf(v: f64) -> f64 {
    if v > 0.0 {
        v.log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// Exact `I_max` of a matrix ordered `(A, B)`.
fn i_max_matrix(m: &CMat, da: usize, db: usize) -> Result<f64> {
    let ma = partial_trace_positions(m, &[da, db], &[0]);
    let dom = min_trace_dominating(&ma, Side::First, db, Target::Fixed(m), &opts())?;
    Ok(log_or_neg_inf(dom.value))
}

/// `I_max(A;B)` where `A` is `a` and `B` every other factor.
pub fn i_max(rho: &DensityOperator, a: &[&str]) -> Result<f64> {
    let (m, da, db) = split_first(rho, a)?;
    i_max_matrix(&m, da, db)
}

fn split_first(rho: &DensityOperator, a: &[&str]) -> Result<(CMat, usize, usize)> {
    let b: Vec<&str> = rho
        .dims()
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| !a.contains(l))
        .collect();
    split(rho, &b)
}

/// Convex variant with the first marginal fixed at `ρ_A`.
pub fn i_max_smooth_fixed_marginal(rho: &DensityOperator, a: &[&str], eps: f64) -> Result<EntropyResult> {
    let (m, da, db) = split_first(rho, a)?;
    if eps == 0.0 {
        return Ok(EntropyResult::exact(i_max_matrix(&m, da, db)?));
    }
    if eps >= 1.0 {
        return Ok(EntropyResult::exact(f64::NEG_INFINITY));
    }
    let ma = partial_trace_positions(&m, &[da, db], &[0]);
    let dom = min_trace_dominating(&ma, Side::First, db, Target::Ball { center: &m, eps }, &opts())?;
    let v = log_or_neg_inf(dom.value);
    Ok(EntropyResult::interval(v, log_or_neg_inf(dom.lower.min(dom.value)), v)
        .with_note("first marginal fixed at the unsmoothed state"))
}

/// Both smoothing conventions side by side.
#[derive(Debug, Clone, Serialize)]
pub struct ImaxSmoothing {
    pub own_marginal: EntropyResult,
    pub fixed_marginal: EntropyResult,
}

struct Candidate {
    value: f64,
    state: CMat,
}

fn restart_marginal(ma: &CMat, k: usize, rng: &mut ChaCha8Rng) -> CMat {
    if k == 0 {
        return ma.clone();
    }
    let d = ma.nrows();
    let r = crate::random::random_state(SystemDims::single("A", d), rng);
    let t = 0.15 * k as f64 / RESTARTS as f64 + 0.05;
    ma.scale(1.0 - t) + r.matrix().scale(t)
}

/// One alternating descent from the starting marginal `tau`.
fn descend(m: &CMat, da: usize, db: usize, eps: f64, mut tau: CMat, best: &mut Candidate) -> Result<()> {
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_ROUNDS {
        let dom = match min_trace_dominating(&tau, Side::First, db, Target::Ball { center: m, eps }, &opts()) {
            Ok(d) => d,
            Err(_) => break,
        };
        let cand = dom.rho;
        if purified_distance_matrix(m, &cand) > eps + BALL_SLACK {
            break;
        }
        let v = i_max_matrix(&cand, da, db)?;
        if v < best.value {
            best.value = v;
            best.state = cand.clone();
        }
        if !(v < prev - 1e-9) {
            break;
        }
        prev = v;
        tau = partial_trace_positions(&cand, &[da, db], &[0]);
    }
    Ok(())
}

fn smooth_own(m: &CMat, da: usize, db: usize, eps: f64, warm: Option<&CMat>) -> Result<Candidate> {
    let mut best = Candidate {
        value: i_max_matrix(m, da, db)?,
        state: m.clone(),
    };
    if let Some(w) = warm {
        if purified_distance_matrix(m, w) <= eps + BALL_SLACK {
            let v = i_max_matrix(w, da, db)?;
            if v < best.value {
                best = Candidate {
                    value: v,
                    state: w.clone(),
                };
            }
            let tau = partial_trace_positions(w, &[da, db], &[0]);
            descend(m, da, db, eps, tau, &mut best)?;
        }
    }
    let ma = partial_trace_positions(m, &[da, db], &[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b_3c4d);
    for k in 0..RESTARTS {
        let tau = restart_marginal(&ma, k, &mut rng);
        descend(m, da, db, eps, tau, &mut best)?;
    }
    Ok(best)
}

/// Smooth `I_max` with the smoothed state's own marginal (heuristic upper bound).
pub fn i_max_smooth(rho: &DensityOperator, a: &[&str], eps: f64) -> Result<EntropyResult> {
    let (m, da, db) = split_first(rho, a)?;
    if eps == 0.0 {
        return Ok(EntropyResult::exact(i_max_matrix(&m, da, db)?));
    }
    if eps >= 1.0 {
        return Ok(EntropyResult::exact(f64::NEG_INFINITY));
    }
    let best = smooth_own(&m, da, db, eps, None)?;
    Ok(EntropyResult::heuristic(best.value)
        .with_note(format!("alternating minimization, {RESTARTS} restarts")))
}

/// Smooth `I_max` over an increasing list of radii, warm-starting each radius
/// from the previous optimizer so the reported values are non-increasing.
pub fn i_max_smooth_sweep(rho: &DensityOperator, a: &[&str], eps: &[f64]) -> Result<Vec<EntropyResult>> {
    let (m, da, db) = split_first(rho, a)?;
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&i, &j| eps[i].total_cmp(&eps[j]));
    let mut out = vec![EntropyResult::exact(0.0); eps.len()];
    let mut warm: Option<CMat> = None;
    let mut prev = f64::INFINITY;
    for i in order {
        let e = eps[i];
        let r = if e == 0.0 {
            let v = i_max_matrix(&m, da, db)?;
            warm = Some(m.clone());
            EntropyResult::exact(v)
        } else if e >= 1.0 {
            EntropyResult::exact(f64::NEG_INFINITY)
        } else {
            let best = smooth_own(&m, da, db, e, warm.as_ref())?;
            let v = best.value.min(prev);
            if best.value <= prev {
                warm = Some(best.state);
            }
            EntropyResult::heuristic(v)
        };
        prev = prev.min(r.value);
        out[i] = r;
    }
    Ok(out)
}

fn target_for(center: &CMat, eps: f64) -> Target<'_> {
    if eps == 0.0 {
        Target::Fixed(center)
    } else {
        Target::Ball { center, eps }
    }
}

/// Alternative smooth max-information `min_{ρ̃} min_{σ_A, τ_B} D_max(ρ̃ ‖ σ_A ⊗ τ_B)`,
/// by alternating between the two product factors.
pub fn i_max_alt(rho: &DensityOperator, a: &[&str], eps: f64) -> Result<EntropyResult> {
    let (m, da, db) = split_first(rho, a)?;
    if eps >= 1.0 {
        return Ok(EntropyResult::exact(f64::NEG_INFINITY));
    }
    let ma = partial_trace_positions(&m, &[da, db], &[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a17);
    let mut best = f64::INFINITY;
    for k in 0..RESTARTS {
        let mut sigma = restart_marginal(&ma, k, &mut rng);
        let t = linalg::trace(&sigma).re;
        sigma.unscale_mut(t);
        let mut prev = f64::INFINITY;
        for _ in 0..MAX_ROUNDS {
            let Ok(step_b) = min_trace_dominating(&sigma, Side::First, db, target_for(&m, eps), &opts()) else {
                break;
            };
            let v1 = log_or_neg_inf(step_b.value);
            best = best.min(v1);
            if step_b.value <= 0.0 || !step_b.value.is_finite() {
                break;
            }
            let tau = step_b.x.unscale(step_b.value);
            let Ok(step_a) = min_trace_dominating(&tau, Side::Second, da, target_for(&m, eps), &opts()) else {
                break;
            };
            let v2 = log_or_neg_inf(step_a.value);
            best = best.min(v2);
            if !(v2 < prev - 1e-9) || step_a.value <= 0.0 || !step_a.value.is_finite() {
                break;
            }
            prev = v2;
            sigma = step_a.x.unscale(step_a.value);
        }
    }
    let result = if eps == 0.0 {
        EntropyResult::heuristic(best).with_note("alternating product-state minimization")
    } else {
        EntropyResult::heuristic(best)
            .with_note(format!("alternating minimization, {RESTARTS} restarts"))
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::PureState;
    use rand::SeedableRng;

    #[test]
    fn bell_and_product() {
        let phi = PureState::bell("A", "B").unwrap().density();
        assert!((i_max(&phi, &["A"]).unwrap() - 2.0).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = crate::random::random_state(SystemDims::single("A", 2), &mut rng);
        let b = crate::random::random_state(SystemDims::single("B", 3), &mut rng);
        let ab = a.tensor(&b).unwrap();
        assert!(i_max(&ab, &["A"]).unwrap().abs() < 1e-6);
    }

    #[test]
    fn smoothing_lowers_value() {
        let phi = PureState::bell("A", "B").unwrap().density();
        let s = i_max_smooth(&phi, &["A"], 0.2).unwrap();
        assert!(s.value < 2.0 && s.value > 0.0, "{}", s.value);
        let f = i_max_smooth_fixed_marginal(&phi, &["A"], 0.2).unwrap();
        assert!(f.value <= 2.0 + 1e-7);
        let alt = i_max_alt(&phi, &["A"], 0.2).unwrap();
        assert!(alt.value <= s.value + 1e-6);
    }
}
