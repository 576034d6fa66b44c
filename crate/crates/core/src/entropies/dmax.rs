use crate::error::{Error, Result};
use crate::linalg::{self, cr, diag_real, eigh, CMat, TOL};
use crate::quantum::DensityOperator;
use crate::sdp::{self, SdpOptions, SdpProblem};

use super::ball::{max_fidelity_on, Ball};
use super::EntropyResult;

/// Mass of `rho` outside the support of `sigma`, relative to `Tr ρ`.
fn leakage(rho: &CMat, sigma: &CMat) -> f64 {
    let (u, _) = linalg::support(sigma, &TOL);
    let inside = linalg::trace(&(u.adjoint() * rho * &u)).re;
    let tr = linalg::trace(rho).re;
    (tr - inside) / tr.max(1e-300)
}

/// `D_max(ρ‖σ) = log λ_max(σ^{-1/2} ρ σ^{-1/2})` on `supp σ`; `+∞` if the
/// support condition fails.
pub fn d_max(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dims(),
            sigma.dims()
        )));
    }
    Ok(d_max_matrix(rho.matrix(), sigma.matrix()))
}

pub fn d_max_matrix(rho: &CMat, sigma: &CMat) -> f64 {
    if linalg::trace(rho).re <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if leakage(rho, sigma) > 1e-10 {
        return f64::INFINITY;
    }
    let (u, lam) = linalg::support(sigma, &TOL);
    // Entry-wise scaling by 1/√(λ_i λ_j) keeps diagonal entries one rounding
    // away from exact.
    let inner = u.adjoint() * rho * &u;
    let m = CMat::from_fn(lam.len(), lam.len(), |i, j| inner[(i, j)] / (lam[i] * lam[j]).sqrt());
    let top = eigh(&m).max();
    if top <= 0.0 {
        f64::NEG_INFINITY
    } else {
        top.log2()
    }
}

/// `min_{ρ̃ ∈ B^ε(ρ)} D_max(ρ̃‖σ)` as a convex program in `(μ, ρ̃)`.
pub fn smooth_d_max(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<EntropyResult> {
    smooth_d_max_with(rho, sigma, eps, &SdpOptions::default().with_tol_gap(1e-8))
}

pub fn smooth_d_max_with(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    eps: f64,
    opts: &SdpOptions,
) -> Result<EntropyResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dims(),
            sigma.dims()
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be ≥ 0")));
    }
    if eps == 0.0 {
        return Ok(EntropyResult::exact(d_max(rho, sigma)?));
    }
    // A radius of at least one admits the zero operator.
    if eps >= 1.0 {
        return Ok(EntropyResult::exact(f64::NEG_INFINITY)
            .with_note("radius ≥ 1: the ball contains the zero operator"));
    }
    let (u, lam) = linalg::support(sigma.matrix(), &TOL);
    let need = (1.0 - eps * eps).sqrt();
    if rho.is_normalized() && max_fidelity_on(rho.matrix(), &u) < need - 1e-12 {
        return Ok(EntropyResult::exact(f64::INFINITY)
            .with_note("no state in the ball is supported on supp σ"));
    }
    let s = lam.len();
    let sigma_s = diag_real(&lam);

    let mut p = SdpProblem::new();
    let mu = p.add_block(1);
    p.add_objective(mu, CMat::from_element(1, 1, cr(1.0)));
    let ball = Ball::add(&mut p, rho.matrix(), eps, &u)?;
    let slack = p.add_block(s);
    let adj_mu = move |e: &CMat| CMat::from_element(1, 1, cr(linalg::re_trace_product(&sigma_s, e)));
    let adj_b = ball.adjoint();
    let adj_neg_b = move |e: &CMat| -adj_b(e);
    let neg = |e: &CMat| -e.clone();
    p.add_matrix_equality(
        &[(mu, &adj_mu), (ball.g, &adj_neg_b), (slack, &neg)],
        &CMat::zeros(s, s),
    );
    let sol = sdp::solve_with(&p, opts)?;
    let sol = sdp::require_optimal(sol, "smooth_d_max")?;
    let hi = sol.primal_value;
    let lo = sol.dual_value.min(hi);
    let log_or_neg_inf = |v: f64| if v > 0.0 { v.log2() } else { f64::NEG_INFINITY };
    Ok(EntropyResult::interval(
        log_or_neg_inf(hi),
        log_or_neg_inf(lo),
        log_or_neg_inf(hi),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{purified_distance_matrix, SystemDims};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q() -> SystemDims {
        SystemDims::single("A", 2)
    }

    #[test]
    fn exact_values() {
        let k0 = DensityOperator::basis(0, q());
        let mix = DensityOperator::maximally_mixed(q());
        assert!((d_max(&k0, &mix).unwrap() - 1.0).abs() < 1e-12);
        assert!(d_max(&mix, &mix).unwrap().abs() < 1e-12);
        assert_eq!(d_max(&mix, &k0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let rho = crate::random::random_state(SystemDims::single("A", 3), &mut rng);
            let sigma = crate::random::random_state(SystemDims::single("A", 3), &mut rng);
            let v = d_max(&rho, &sigma).unwrap();
            let (mut lo, mut hi) = (-10.0_f64, 30.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let m = sigma.matrix().scale(mid.exp2()) - rho.matrix();
                if eigh(&m).min() >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((v - hi).abs() < 1e-8, "{v} vs {hi}");
        }
    }

    #[test]
    fn smooth_qubit_against_grid() {
        let k0 = DensityOperator::basis(0, q());
        let mix = DensityOperator::maximally_mixed(q());
        let r = smooth_d_max(&k0, &mix, 0.2).unwrap();
        // Grid over rank-≤2 subnormalized ρ̃ = [[a, z],[z*, b]].
        let mut best = f64::INFINITY;
        let n = 60;
        for ia in 0..=n {
            let a = 0.9 + 0.1 * ia as f64 / n as f64;
            for ib in 0..=n {
                let b = (1.0 - a) * ib as f64 / n as f64;
                for iz in 0..=10 {
                    let zr = (a * b).sqrt() * iz as f64 / 10.0;
                    let m = CMat::from_row_slice(2, 2, &[cr(a), cr(zr), cr(zr), cr(b)]);
                    if purified_distance_matrix(k0.matrix(), &m) <= 0.2 {
                        best = best.min(d_max_matrix(&m, mix.matrix()));
                    }
                }
            }
        }
        assert!((r.value - best).abs() < 2e-3, "{} vs {}", r.value, best);
        assert!((r.value - 1.92f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn smoothing_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = crate::random::random_state(q(), &mut rng);
        let sigma = crate::random::random_state(q(), &mut rng);
        let a = smooth_d_max(&rho, &sigma, 0.1).unwrap().value;
        let b = smooth_d_max(&rho, &sigma, 0.2).unwrap().value;
        assert!(a >= b - 1e-7);
        assert!(d_max(&rho, &sigma).unwrap() >= a - 1e-7);
    }
}
