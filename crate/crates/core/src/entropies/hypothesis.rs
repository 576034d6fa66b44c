//! Optimal type-II error `β_ε(ρ‖σ) = min{Tr Λσ : Tr Λρ ≥ 1−ε, 0 ⪯ Λ ⪯ I}`.
//!
//! The Neyman–Pearson backend maximizes the concave dual
//! `g(μ) = μ(1−ε) − Tr(μρ − σ)₊` by bisection on its derivative; the optimal
//! test is `P₊ + c·P₀` built from the spectral projectors of `μ*ρ − σ`.

use crate::error::{Error, Result};
use crate::linalg::{eigh, re_trace_product, CMat, Eigh};
use crate::quantum::DensityOperator;
use crate::sdp::{self, Relation, SdpOptions, SdpProblem, SdpSolution};

/// Relative width of the zero eigenspace of `μρ − σ`.
pub const ZERO_BLOCK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NeymanPearson {
    pub beta: f64,
    /// Optimal dual multiplier (inverse likelihood-ratio threshold).
    pub mu: f64,
    /// Optimal test `Λ = P₊ + c·P₀`.
    pub test: CMat,
    /// Randomization weight on the zero block.
    pub weight: f64,
    /// `Tr Λσ` for the constructed test.
    pub primal: f64,
    /// `Tr Λρ` for the constructed test.
    pub type_one: f64,
}

/// Spectrum of `μρ − σ`, `Tr(μρ − σ)₊` and `Tr P₊ρ` (strictly positive part).
fn positive_part(rho: &CMat, sigma: &CMat, mu: f64) -> (Eigh, f64, f64) {
    let e = eigh(&(rho.scale(mu) - sigma));
    let mut pos_trace = 0.0;
    let mut rho_weight = 0.0;
    for k in 0..e.dim() {
        if e.values[k] > 0.0 {
            pos_trace += e.values[k];
            let v = e.vector(k);
            rho_weight += (v.adjoint() * rho * &v)[(0, 0)].re;
        }
    }
    (e, pos_trace, rho_weight)
}

fn check_pair(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dims(),
            sigma.dims()
        )));
    }
    if !(0.0..=1.0).contains(&eps) || eps.is_nan() {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1]")));
    }
    Ok(())
}

/// Neyman–Pearson evaluation of `β_ε` together with the optimal test.
pub fn neyman_pearson(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<NeymanPearson> {
    check_pair(rho, sigma, eps)?;
    let (r, s) = (rho.matrix(), sigma.matrix());
    let d = rho.dim();
    if eps >= 1.0 {
        return Ok(NeymanPearson {
            beta: 0.0,
            mu: 0.0,
            test: CMat::zeros(d, d),
            weight: 0.0,
            primal: 0.0,
            type_one: 0.0,
        });
    }
    let target = (1.0 - eps) * rho.trace();
    if eps == 0.0 {
        // The test must act as the identity on supp ρ.
        let er = eigh(r);
        let cut = 1e-13 * er.max_abs();
        let p = er.projector(|v| v > cut);
        let primal = re_trace_product(&p, s);
        return Ok(NeymanPearson {
            beta: primal,
            mu: f64::INFINITY,
            test: p,
            weight: 1.0,
            primal,
            type_one: rho.trace(),
        });
    }

    let deriv = |mu: f64| {
        let (_, _, w) = positive_part(r, s, mu);
        target - w
    };
    let value = |mu: f64| {
        let (_, pos, _) = positive_part(r, s, mu);
        mu * target - pos
    };

    let mut hi = 1.0;
    let mut guard = 0;
    while deriv(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(Error::Solver {
                status: "max_iter".into(),
                detail: "Neyman–Pearson bracket did not close".into(),
            });
        }
    }
    let mut lo = if guard == 0 { 0.0 } else { hi / 2.0 };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (value(lo), value(hi));
    let mu = if g_hi >= g_lo { hi } else { lo };
    let beta = g_lo.max(g_hi).clamp(0.0, 1.0);

    // Optimal test at μ*.
    let (e, _, _) = positive_part(r, s, mu);
    let tol = ZERO_BLOCK_TOL * e.max_abs();
    let p_pos = e.projector(|v| v > tol);
    let w_pos = re_trace_product(&p_pos, r);
    let p_zero = e.projector(|v| v.abs() <= tol);
    let w_zero = re_trace_product(&p_zero, r);
    let weight = if w_zero > 0.0 {
        ((target - w_pos) / w_zero).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let test = p_pos + p_zero.scale(weight);
    let primal = re_trace_product(&test, s);
    let type_one = re_trace_product(&test, r);
    Ok(NeymanPearson {
        beta,
        mu,
        test,
        weight,
        primal,
        type_one,
    })
}

pub fn beta_epsilon(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<f64> {
    Ok(neyman_pearson(rho, sigma, eps)?.beta)
}

/// `β_ε` as an explicit SDP over the bounded test block.
pub fn beta_epsilon_sdp(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    eps: f64,
    opts: &SdpOptions,
) -> Result<(f64, SdpSolution)> {
    check_pair(rho, sigma, eps)?;
    let mut p = SdpProblem::new();
    let l = p.add_bounded_block(rho.dim());
    p.add_objective(l, sigma.matrix().clone());
    p.add_constraint(
        vec![(l, rho.matrix().clone())],
        Relation::Ge,
        (1.0 - eps) * rho.trace(),
    );
    let sol = sdp::require_optimal(sdp::solve_with(&p, opts)?, "beta_epsilon")?;
    Ok((sol.primal_value, sol))
}

/// `D_H^ε = −log β_ε`; `+∞` when `β = 0`.
pub fn d_h(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<f64> {
    let b = beta_epsilon(rho, sigma, eps)?;
    Ok(if b <= 0.0 { f64::INFINITY } else { -b.log2() })
}

/// Classical `β_ε(p‖q)` by sorting likelihood ratios.
pub fn classical_beta(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameter("negative or non-finite probability".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1]")));
    }
    let mut idx: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    // Descending p/q, with q = 0 first; compare p_i q_j vs p_j q_i to avoid division.
    idx.sort_by(|&i, &j| (p[j] * q[i]).total_cmp(&(p[i] * q[j])));
    let mut need = (1.0 - eps) * p.iter().sum::<f64>();
    let mut beta = 0.0;
    for i in idx {
        if need <= 0.0 {
            break;
        }
        let take = (need / p[i]).min(1.0);
        beta += take * q[i];
        need -= take * p[i];
    }
    Ok(beta)
}
