use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::quantum::DensityOperator;
use crate::sdp::SdpOptions;

use super::ball::{min_trace_dominating, Side, Target};
use super::{EntropyResult, Certainty};

/// Eigenvalues above `RANK_TOL · λ_max` count towards the rank.
pub const RANK_TOL: f64 = 1e-10;

/// Splits `rho` into `(A, B)` with `B = cond`, returning the reordered matrix
/// and `(d_A, d_B)`.
pub(crate) fn split(rho: &DensityOperator, cond: &[&str]) -> Result<(CMat, usize, usize)> {
    for l in cond {
        rho.dims().position(l)?;
    }
    let mut order: Vec<&str> = rho
        .dims()
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| !cond.contains(l))
        .collect();
    let da: usize = order
        .iter()
        .map(|l| rho.dims().dim_of(l).expect("label checked"))
        .product();
    order.extend(cond.iter().copied());
    let r = rho.reorder(&order)?;
    let db = rho.dim() / da;
    Ok((r.into_matrix(), da, db))
}

fn opts() -> SdpOptions {
    SdpOptions::default().with_tol_gap(1e-8)
}

fn neg_log(v: f64) -> f64 {
    if v > 0.0 {
        -v.log2()
    } else {
        f64::INFINITY
    }
}

/// `H_min(A|B) = −log min{Tr σ_B : I_A ⊗ σ_B ⪰ ρ_AB}`; with no conditioning
/// system it is `−log λ_max(ρ)`.
pub fn h_min(rho: &DensityOperator, cond: &[&str]) -> Result<f64> {
    if cond.is_empty() {
        return Ok(neg_log(linalg::max_eigenvalue(rho.matrix())));
    }
    let (m, da, db) = split(rho, cond)?;
    let dom = min_trace_dominating(
        &linalg::identity(da),
        Side::First,
        db,
        Target::Fixed(&m),
        &opts(),
    )?;
    Ok(neg_log(dom.value))
}

/// Smooth conditional min-entropy: maximized jointly over the ball.
pub fn h_min_smooth(rho: &DensityOperator, cond: &[&str], eps: f64) -> Result<EntropyResult> {
    if eps == 0.0 {
        return Ok(EntropyResult::exact(h_min(rho, cond)?));
    }
    if eps >= 1.0 {
        return Ok(EntropyResult::exact(f64::INFINITY)
            .with_note("radius ≥ 1: the ball contains the zero operator"));
    }
    let (m, da, db) = split(rho, cond)?;
    let dom = min_trace_dominating(
        &linalg::identity(da),
        Side::First,
        db,
        Target::Ball { center: &m, eps },
        &opts(),
    )?;
    let value = neg_log(dom.value);
    Ok(EntropyResult::interval(value, value, neg_log(dom.lower.min(dom.value))))
}

/// `log rank ρ`.
pub fn h0(rho: &DensityOperator) -> f64 {
    let ev = rho.eigenvalues();
    let top = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rank = ev.iter().filter(|&&v| v > RANK_TOL * top).count();
    if rank == 0 {
        f64::NEG_INFINITY
    } else {
        (rank as f64).log2()
    }
}

/// Smooth `H_0` by greedy truncation of the smallest eigenvalues: the
/// renormalized truncation keeping mass `t` sits at purified distance
/// `√(1−t)`, so eigenvalues are dropped while the removed mass stays `≤ ε²`.
pub fn h0_smooth(rho: &DensityOperator, eps: f64) -> Result<EntropyResult> {
    rho.require_normalized()?;
    let mut ev = rho.eigenvalues();
    let top = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    ev.retain(|&v| v > RANK_TOL * top);
    let budget = eps * eps;
    let mut removed = 0.0;
    let mut rank = ev.len();
    for &v in &ev {
        if rank <= 1 || removed + v > budget {
            break;
        }
        removed += v;
        rank -= 1;
    }
    Ok(EntropyResult {
        value: (rank as f64).log2(),
        certainty: Certainty::Exact,
        interval: None,
        note: Some(format!(
            "spectral truncation: removed mass {removed:.3e}, purified distance {:.6}",
            removed.max(0.0).sqrt()
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;
    use crate::quantum::{PureState, SystemDims};

    #[test]
    fn reference_values() {
        let mix = DensityOperator::maximally_mixed(SystemDims::single("A", 2));
        assert!((h_min(&mix, &[]).unwrap() - 1.0).abs() < 1e-12);
        assert!((h0(&mix) - 1.0).abs() < 1e-12);
        let phi = PureState::bell("A", "B").unwrap().density();
        assert!((h_min(&phi, &["B"]).unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn h0_truncation_example() {
        let rho = DensityOperator::new(diag_real(&[0.9, 0.1]), SystemDims::single("A", 2)).unwrap();
        assert_eq!(h0_smooth(&rho, 0.4).unwrap().value, 0.0);
        assert_eq!(h0_smooth(&rho, 0.0).unwrap().value, h0(&rho));
        assert_eq!(h0_smooth(&rho, 0.3).unwrap().value, 1.0);
    }

    #[test]
    fn smooth_h_min_monotone() {
        let phi = PureState::bell("A", "B").unwrap().density();
        let a = h_min_smooth(&phi, &["B"], 0.1).unwrap().value;
        let b = h_min_smooth(&phi, &["B"], 0.2).unwrap().value;
        let base = h_min(&phi, &["B"]).unwrap();
        assert!(base <= a + 1e-7 && a <= b + 1e-7, "{base} {a} {b}");
    }
}
