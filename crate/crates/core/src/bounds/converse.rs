//! Converse bounds: the `σ_RA`-family converse with its exact eigenvalue
//! inner problem, the per-channel simple converse, and the classical
//! ratio bound.

use serde::Serialize;

use crate::distortion::{excess_projector, on_boundary, DistortionObservable};
use crate::entropies::{beta_epsilon, classical_beta};
use crate::error::{Error, Result};
use crate::linalg::{self, embed_positions, max_eigenvalue, partial_trace_positions, sqrtm_psd, CMat};
use crate::quantum::{DensityOperator, PureState, QuantumChannel, SystemDims};
use crate::sdp::{self, AdjointMap, Relation, SdpOptions, SdpProblem};

use super::{check_open, eps_double_prime, require_excess, BoundParameters, BoundResult, Validity};

fn log2_or_neg_inf(v: f64) -> f64 {
    if v > 0.0 {
        v.log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// `½[−log λ_max(K) − D_H^ε(φ‖σ)]` with `K = Tr_R{(σ_R ⊗ I_B) Π_{≤D}}`.
pub fn converse_alt(phi: &PureState, delta: &DistortionObservable, d: f64, eps: f64, sigma_ra: &DensityOperator) -> Result<BoundResult> {
    converse_alt_state(&phi.density(), delta, d, eps, sigma_ra)
}

/// Same bound with an arbitrary (possibly mixed) source–reference state in
/// place of the purification. The reference factors are the labels shared
/// by `rho_ra` and `delta`.
pub fn converse_alt_state(
    rho_ra: &DensityOperator,
    delta: &DistortionObservable,
    d: f64,
    eps: f64,
    sigma_ra: &DensityOperator,
) -> Result<BoundResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1)")));
    }
    if rho_ra.dims() != sigma_ra.dims() {
        return Err(Error::DimensionMismatch(format!("σ on {} for a source on {}", sigma_ra.dims(), rho_ra.dims())));
    }
    sigma_ra.require_normalized()?;
    let ddims = delta.dims();
    let refs: Vec<&str> = ddims
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| rho_ra.dims().contains(l))
        .collect();
    if refs.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "observable on {} shares no reference factor with {}",
            ddims,
            rho_ra.dims()
        )));
    }
    let ref_pos = ddims.positions(&refs)?;
    for (&p, l) in ref_pos.iter().zip(&refs) {
        if ddims.dims()[p] != rho_ra.dims().dim_of(l)? {
            return Err(Error::DimensionMismatch(format!("reference factor `{l}` differs in dimension")));
        }
    }
    let out_pos = ddims.complement(&ref_pos);

    let sigma_r = sigma_ra.partial_trace(&refs)?;
    let root = embed_positions(&sqrtm_psd(sigma_r.matrix()), ddims.dims(), &ref_pos);
    let within = excess_projector(delta, d)?.complement();
    let k = partial_trace_positions(&(&root * within * &root), ddims.dims(), &out_pos);
    let lmax = max_eigenvalue(&linalg::symmetrize(&k));

    let beta = beta_epsilon(rho_ra, sigma_ra, eps)?;
    let dh = if beta > 0.0 { -beta.log2() } else { f64::INFINITY };
    let params = BoundParameters::new(d).eps(eps);
    let mut b = if dh.is_infinite() {
        BoundResult::lower(f64::NEG_INFINITY, Validity::Valid, "sigma_family_converse", params)
            .note("D_H = +∞: the hypotheses are perfectly distinguishable at this ε")
    } else {
        BoundResult::lower(0.5 * (-log2_or_neg_inf(lmax) - dh), Validity::Valid, "sigma_family_converse", params)
    };
    b = b.component("lambda_max_K", lmax).component("d_h", dh);
    Ok(b)
}

/// Outcome of `max_ψ β_t(ω ‖ φ_R ⊗ ψ_B)` where `t` is the type-I threshold.
#[derive(Debug, Clone, Serialize)]
pub struct PsiOptimum {
    /// Certified bracket on the maximum.
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// Neyman–Pearson value at the returned `ψ` (itself a lower bound).
    pub beta_np: f64,
    #[serde(skip)]
    pub psi: CMat,
}

impl PsiOptimum {
    /// Best certified feasible value.
    pub fn beta(&self) -> f64 {
        self.beta_lo.max(self.beta_np)
    }
}

/// `max_ψ min{Tr Λ(φ_R⊗ψ) : Tr Λω ≥ t, 0 ⪯ Λ ⪯ I}` for `ω` ordered `(R, B)`.
///
/// The inner minimum is replaced by its dual `max μt − Tr Z`,
/// `Z ⪰ μω − φ_R⊗ψ`, `Z ⪰ 0`, which is jointly linear in `(μ, Z, ψ)`: the
/// whole problem is one SDP. Neyman–Pearson at the optimal `ψ` cross-checks.
pub fn max_beta_over_psi(omega: &CMat, dr: usize, db: usize, t: f64) -> Result<PsiOptimum> {
    let d = dr * db;
    if omega.nrows() != d {
        return Err(Error::DimensionMismatch(format!("{}x{} state for {dr}·{db}", omega.nrows(), omega.ncols())));
    }
    let phi_r = partial_trace_positions(omega, &[dr, db], &[0]);
    let mut p = SdpProblem::new();
    let z = p.add_block(d);
    let s = p.add_block(d);
    let mu = p.add_block(1);
    let psi = p.add_block(db);
    p.add_objective(z, linalg::identity(d));
    p.add_objective(mu, linalg::diag_real(&[-t]));
    let id: &dyn Fn(&CMat) -> CMat = &|e: &CMat| e.clone();
    let neg: &dyn Fn(&CMat) -> CMat = &|e: &CMat| -e.clone();
    let om = omega.clone();
    let mu_adj = move |e: &CMat| linalg::diag_real(&[-linalg::re_trace_product(&om, e)]);
    let pr = embed_positions(&phi_r, &[dr, db], &[0]);
    let psi_adj = move |e: &CMat| linalg::symmetrize(&partial_trace_positions(&(&pr * e), &[dr, db], &[1]));
    let terms: [(sdp::BlockId, AdjointMap<'_>); 4] = [(z, id), (s, neg), (mu, &mu_adj), (psi, &psi_adj)];
    p.add_matrix_equality(&terms, &CMat::zeros(d, d));
    p.add_constraint(vec![(psi, linalg::identity(db))], Relation::Eq, 1.0);
    let opts = SdpOptions::default().with_tol_gap(1e-9);
    let sol = sdp::require_optimal(sdp::solve_with(&p, &opts)?, "max_beta_over_psi")?;
    let (lo, hi) = sol.interval();
    let mut psi_m = linalg::symmetrize(sol.block(psi));
    let e = linalg::eigh(&psi_m);
    psi_m = e.map(|v| v.max(0.0));
    let tr = linalg::trace(&psi_m).re;
    psi_m.unscale_mut(tr);

    let dims = SystemDims::new(vec!["R", "B"], vec![dr, db])?;
    let w = DensityOperator::from_parts(omega.clone(), dims.clone());
    let sig = DensityOperator::from_parts(linalg::kron(&phi_r, &psi_m), dims);
    let beta_np = beta_epsilon(&w, &sig, 1.0 - t)?;
    Ok(PsiOptimum {
        beta_lo: (-hi).max(0.0),
        beta_hi: (-lo).max(0.0),
        beta_np,
        psi: psi_m,
    })
}

/// `ω = (id ⊗ N)(φ)` with the number of reference factors.
fn channel_output(phi: &PureState, channel: &QuantumChannel, delta: &DistortionObservable) -> Result<(DensityOperator, usize, usize)> {
    let omega = channel.extend_to_reference(phi)?;
    if omega.dims().dims() != delta.dims().dims() {
        return Err(Error::DimensionMismatch(format!(
            "channel output state on {} against an observable on {}",
            omega.dims(),
            delta.dims()
        )));
    }
    let db = channel.output_dims().total();
    Ok((omega.clone(), omega.dim() / db, db))
}

/// `½[min_ψ D_H^{1−ε′}(ω ‖ φ_R ⊗ ψ_B) − log(1/ε″)]` for one channel with
/// `Tr{Π_{≤D} ω} ≥ 1 − ε`; conditional because the converse needs the
/// minimum over every such channel.
pub fn converse_simple_inner(
    phi: &PureState,
    delta: &DistortionObservable,
    d: f64,
    eps: f64,
    eps_prime: f64,
    channel: &QuantumChannel,
) -> Result<BoundResult> {
    check_open("eps", eps)?;
    check_open("eps_prime", eps_prime)?;
    let params = BoundParameters::new(d).eps(eps).eps_prime(eps_prime);
    let degenerate = (eps_prime - 2.0 * eps).abs() <= 4.0 * f64::EPSILON * eps_prime;
    if eps_prime < 2.0 * eps && !degenerate {
        return Err(Error::InvalidParameter(format!("eps_prime = {eps_prime} < 2·eps = {}", 2.0 * eps)));
    }
    let (omega, dr, db) = channel_output(phi, channel, delta)?;
    let within = require_excess(&omega, delta, d, eps)?;
    if degenerate {
        return Ok(BoundResult::lower(f64::NEG_INFINITY, Validity::Conditional, "simple_converse_inner", params)
            .component("eps_double_prime", 0.0)
            .note("eps_prime = 2·eps gives ε″ = 0 and a vacuous bound"));
    }
    let epp = eps_double_prime(eps, eps_prime);
    let opt = max_beta_over_psi(omega.matrix(), dr, db, eps_prime)?;
    let dh = -log2_or_neg_inf(opt.beta());
    let dh_lo = -log2_or_neg_inf(opt.beta_hi.max(opt.beta()));
    let half_log = 0.5 * epp.log2();
    Ok(
        BoundResult::lower(0.5 * dh + half_log, Validity::Conditional, "simple_converse_inner", params)
            .interval(0.5 * dh_lo + half_log, 0.5 * dh + half_log)
            .component("min_psi_d_h", dh)
            .component("eps_double_prime", epp)
            .component("within_distortion_probability", within)
            .component("beta_np_at_psi", opt.beta_np)
            .note("inner value for one channel; the converse is the minimum over all channels meeting the excess-distortion constraint"),
    )
}

/// Per-channel inner values and their minimum over the channels that meet
/// the constraint.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyConverse {
    /// `None` where the channel violates the excess-distortion constraint.
    pub per_channel: Vec<Option<BoundResult>>,
    pub minimum: Option<BoundResult>,
    pub argmin: Option<usize>,
}

pub fn converse_simple_family(
    phi: &PureState,
    delta: &DistortionObservable,
    d: f64,
    eps: f64,
    eps_prime: f64,
    family: &[QuantumChannel],
) -> Result<FamilyConverse> {
    let mut per_channel = Vec::with_capacity(family.len());
    for ch in family {
        match converse_simple_inner(phi, delta, d, eps, eps_prime, ch) {
            Ok(b) => per_channel.push(Some(b)),
            Err(Error::ConstraintViolated(_)) => per_channel.push(None),
            Err(e) => return Err(e),
        }
    }
    let argmin = per_channel
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.as_ref().map(|b| (i, b.lo)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let minimum = argmin.map(|i| {
        per_channel[i]
            .clone()
            .expect("argmin is feasible")
            .note(format!("minimum over a family of {} channels; not a global minimum", family.len()))
    });
    Ok(FamilyConverse {
        per_channel,
        minimum,
        argmin,
    })
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} is not a probability vector")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// `log β_ε(p‖q) − log max_y Σ_x q(x)·1{d(x,y) ≤ D}`, in bits.
pub fn classical_kv_converse(px: &[f64], dist: &[Vec<f64>], d: f64, eps: f64, q: &[f64]) -> Result<BoundResult> {
    check_distribution("p", px)?;
    check_distribution("q", q)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1)")));
    }
    if dist.len() != px.len() || px.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distortion matrix with {} rows for distributions of length {} and {}",
            dist.len(),
            px.len(),
            q.len()
        )));
    }
    let ny = dist.first().map_or(0, Vec::len);
    if ny == 0 || dist.iter().any(|r| r.len() != ny) {
        return Err(Error::InvalidParameter("distortion matrix must be rectangular and non-empty".into()));
    }
    let ball = (0..ny)
        .map(|y| {
            (0..px.len())
                .filter(|&x| dist[x][y] <= d || on_boundary(dist[x][y], d))
                .map(|x| q[x])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if ball <= 0.0 {
        return Err(Error::InvalidParameter(format!("q puts no mass within distortion {d} of any reproduction")));
    }
    let beta = classical_beta(px, q, eps)?;
    let params = BoundParameters::new(d).eps(eps);
    Ok(
        BoundResult::lower(log2_or_neg_inf(beta) - ball.log2(), Validity::Valid, "classical_ratio_converse", params)
            .component("beta", beta)
            .component("max_ball_mass", ball)
            .note("bits of a classical code (twice the qubit count of the embedded quantum instance)"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::SymbolwiseObservable;
    use crate::isotropic;
    use crate::linalg::diag_real;

    fn bell() -> PureState {
        PureState::bell("R", "A").unwrap()
    }

    fn ent_fid() -> DistortionObservable {
        DistortionObservable::entanglement_fidelity(&bell(), "B").unwrap()
    }

    fn q(l: &str) -> SystemDims {
        SystemDims::single(l, 2)
    }

    #[test]
    fn isotropic_single_symbol() {
        let phi = bell();
        let b = converse_alt(&phi, &ent_fid(), 0.0, 0.1, &phi.density()).unwrap();
        assert!((b.value - 0.5 * (2.0 + 0.9f64.log2())).abs() < 1e-9, "{}", b.value);
        assert!((b.value - 0.9240).abs() < 1e-4);
        assert!((b.components["lambda_max_K"] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn isotropic_blocks_match_closed_form() {
        let base = ent_fid();
        for n in 1..=3usize {
            let mut phi = bell().relabel(vec!["R1", "A1"]).unwrap();
            for k in 2..=n {
                phi = phi.tensor(&bell().relabel(vec![format!("R{k}"), format!("A{k}")]).unwrap()).unwrap();
            }
            let dense = SymbolwiseObservable::new(base.clone(), n).unwrap().dense().unwrap();
            for (dd, eps) in [(0.25, 0.01), (0.34, 0.1), (0.5, 0.05)] {
                let b = converse_alt(&phi, &dense, dd, eps, &phi.density()).unwrap();
                let want = n as f64 * isotropic::converse_rate(n as u64, dd, eps).unwrap();
                assert!((b.value - want).abs() < 1e-9, "n {n} D {dd}: {} vs {want}", b.value);
            }
        }
    }

    #[test]
    fn vacuous_values_are_not_clamped() {
        // Product σ with a pure reference: K has full weight on one vector.
        let phi = bell();
        let sigma = DensityOperator::basis(0, SystemDims::new(vec!["R", "A"], vec![2, 2]).unwrap());
        let b = converse_alt(&phi, &ent_fid(), 1.0, 0.1, &sigma).unwrap();
        assert!(b.value <= 0.0);
        assert!(b.value.is_finite() || b.value == f64::NEG_INFINITY);
    }

    #[test]
    fn classical_examples() {
        let u = [0.25; 4];
        let ham: Vec<Vec<f64>> = (0..4).map(|x| (0..4).map(|y| if x == y { 0.0 } else { 1.0 }).collect()).collect();
        let b = classical_kv_converse(&u, &ham, 0.0, 0.1, &u).unwrap();
        assert!((b.value - (0.9f64.log2() + 2.0)).abs() < 1e-12);
        let p = [0.5, 0.2, 0.2, 0.1];
        let q2 = [0.1, 0.3, 0.3, 0.3];
        let b = classical_kv_converse(&p, &ham, 1.0, 0.2, &p).unwrap();
        assert!((b.value - 0.8f64.log2()).abs() < 1e-12);
        assert!(classical_kv_converse(&p, &ham, 0.0, 0.2, &q2).unwrap().value.is_finite());
        assert!(classical_kv_converse(&[0.5, 0.6, 0.0, 0.0], &ham, 0.0, 0.1, &u).is_err());
    }

    #[test]
    fn classical_matches_diagonal_embedding() {
        let p = [0.4, 0.3, 0.2, 0.1];
        let qv = [0.1, 0.2, 0.3, 0.4];
        let dist: Vec<Vec<f64>> = (0..4)
            .map(|x| (0..3).map(|y| ((x as f64) - 1.5 * y as f64).abs() / 3.0).collect())
            .collect();
        let delta = DistortionObservable::classical(&dist, None).unwrap();
        let dims = SystemDims::new(vec![delta.dims().labels()[0].as_str(), "A"], vec![4, 4]).unwrap();
        let embed = |w: &[f64]| {
            let mut m = vec![0.0; 16];
            for x in 0..4 {
                m[x * 4 + x] = w[x];
            }
            DensityOperator::from_parts(diag_real(&m), dims.clone())
        };
        for (dd, eps) in [(0.2, 0.1), (0.5, 0.3), (0.0, 0.05)] {
            let kv = classical_kv_converse(&p, &dist, dd, eps, &qv).unwrap();
            let qb = converse_alt_state(&embed(&p), &delta, dd, eps, &embed(&qv)).unwrap();
            assert!((kv.value - 2.0 * qb.value).abs() < 1e-9, "D {dd}: {} vs {}", kv.value, qb.value);
        }
    }

    #[test]
    fn identity_channel_inner_value() {
        let phi = bell();
        let ch = QuantumChannel::identity(q("A"), q("B")).unwrap();
        let b = converse_simple_inner(&phi, &ent_fid(), 0.0, 0.01, 0.05, &ch).unwrap();
        // β_{1−ε′}(Φ‖π⊗ψ) = ε′/4 for every ψ.
        let epp = 0.05 * 0.015;
        let want = 0.5 * ((4.0f64 / 0.05).log2() + f64::log2(epp));
        assert!((b.value - want).abs() < 1e-6, "{} vs {want}", b.value);
        assert!((b.components["eps_double_prime"] - 7.5e-4).abs() < 1e-15);
        assert_eq!(b.validity, Validity::Conditional);
        let d = converse_simple_inner(&phi, &ent_fid(), 0.0, 0.01, 0.02, &ch).unwrap();
        assert_eq!(d.value, f64::NEG_INFINITY);
        assert!(converse_simple_inner(&phi, &ent_fid(), 0.0, 0.01, 0.015, &ch).is_err());
        let noisy = QuantumChannel::depolarizing(0.5, q("A"), q("B")).unwrap();
        assert!(matches!(
            converse_simple_inner(&phi, &ent_fid(), 0.0, 0.01, 0.05, &noisy),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn psi_maximum_beats_np_on_grid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let phi = crate::random::random_pure(SystemDims::new(vec!["R", "A"], vec![2, 2]).unwrap(), &mut rng);
        let ch = crate::random::random_channel(q("A"), q("B"), 2, &mut rng).unwrap();
        let w = ch.extend_to_reference(&phi).unwrap();
        let opt = max_beta_over_psi(w.matrix(), 2, 2, 0.3).unwrap();
        assert!((opt.beta_np - opt.beta_lo).abs() < 1e-6, "{} vs {}", opt.beta_np, opt.beta_lo);
        let phi_r = partial_trace_positions(w.matrix(), &[2, 2], &[0]);
        let dims = SystemDims::new(vec!["R", "B"], vec![2, 2]).unwrap();
        // Oracle: brute force over pure and mixed qubit ψ on a Bloch grid.
        let mut best: f64 = 0.0;
        for i in 0..=12 {
            for j in 0..24 {
                for r in [0.5, 1.0] {
                    let th = std::f64::consts::PI * i as f64 / 12.0;
                    let ph = std::f64::consts::PI * j as f64 / 12.0;
                    let (x, y, z) = (r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos());
                    let psi = CMat::from_row_slice(
                        2,
                        2,
                        &[
                            linalg::cr(0.5 * (1.0 + z)),
                            linalg::c(0.5 * x, -0.5 * y),
                            linalg::c(0.5 * x, 0.5 * y),
                            linalg::cr(0.5 * (1.0 - z)),
                        ],
                    );
                    let sig = DensityOperator::from_parts(linalg::kron(&phi_r, &psi), dims.clone());
                    let wr = DensityOperator::from_parts(w.matrix().clone(), dims.clone());
                    best = best.max(beta_epsilon(&wr, &sig, 0.7).unwrap());
                }
            }
        }
        assert!(best <= opt.beta_hi + 1e-7, "{best} > {}", opt.beta_hi);
        assert!(best >= opt.beta() - 2e-2, "grid {best} vs {}", opt.beta());
    }

    #[test]
    fn family_minimum() {
        let phi = bell();
        let family: Vec<QuantumChannel> = [0.0, 0.05, 0.1, 0.5]
            .iter()
            .map(|&p| QuantumChannel::depolarizing(p, q("A"), q("B")).unwrap())
            .collect();
        let f = converse_simple_family(&phi, &ent_fid(), 0.0, 0.1, 0.3, &family).unwrap();
        assert!(f.per_channel[3].is_none());
        let m = f.minimum.unwrap();
        let vals: Vec<f64> = f.per_channel.iter().flatten().map(|b| b.lo).collect();
        assert!(vals.iter().all(|&v| m.lo <= v));
        assert_eq!(m.validity, Validity::Conditional);
    }
}
