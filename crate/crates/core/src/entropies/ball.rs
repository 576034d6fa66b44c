//! SDP encoding of the purified-distance ball over subnormalized states, and
//! of the operator-dominance programs behind `D_max`, `H_min` and `I_max`.
//!
//! Membership `P(ρ, ρ̃) ≤ ε` is `F̄(ρ, ρ̃) ≥ √(1−ε²)`, with the root fidelity
//! written as `max Re Tr Y` over `[[ρ, Y], [Y†, ρ̃]] ⪰ 0` and the
//! subnormalization term `√(1−Tr ρ̃)` as the epigraph of a 2×2 block.

use crate::error::{Error, Result};
use crate::linalg::{self, cr, diag_real, kron, partial_trace_positions, CMat, TOL};
use crate::sdp::{
    self, embed_block, embed_offdiag, BlockId, Relation, SdpOptions, SdpProblem, SdpSolution,
};

/// Ball variables inside an SDP. `ρ̃ = U ρ̃_c U†` where `ρ̃_c` is the lower
/// right `s × s` block of `G`.
pub(crate) struct Ball {
    pub g: BlockId,
    r: usize,
    s: usize,
    u: CMat,
}

impl Ball {
    /// Adds the ball of radius `eps < 1` around `center`, restricted to states
    /// supported on the range of the isometry `u` (`d × s`).
    pub fn add(p: &mut SdpProblem, center: &CMat, eps: f64, u: &CMat) -> Result<Ball> {
        let (v, lam) = linalg::support(center, &TOL);
        let r = lam.len();
        if r == 0 {
            return Err(Error::InvalidParameter("smoothing around the zero operator".into()));
        }
        let s = u.ncols();
        let n = r + s;
        let g = p.add_block(n);
        let q = p.add_block(2);

        let top: &dyn Fn(&CMat) -> CMat = &|e: &CMat| embed_block(e, n, 0);
        p.add_matrix_equality(&[(g, top)], &diag_real(&lam));

        p.add_constraint(vec![(q, diag_real(&[0.0, 1.0]))], Relation::Eq, 1.0);
        p.add_constraint(
            vec![
                (q, diag_real(&[1.0, 0.0])),
                (g, embed_block(&linalg::identity(s), n, r)),
            ],
            Relation::Eq,
            1.0,
        );

        let overlap = v.adjoint() * u; // r × s
        let mut terms = vec![(g, embed_offdiag(&overlap, n, 0, r))];
        let deficit = (1.0 - linalg::trace(center).re).max(0.0).sqrt();
        if deficit > 0.0 {
            let one = CMat::from_element(1, 1, cr(deficit));
            terms.push((q, embed_offdiag(&one, 2, 0, 1)));
        }
        p.add_constraint(terms, Relation::Ge, (1.0 - eps * eps).max(0.0).sqrt());
        Ok(Ball {
            g,
            r,
            s,
            u: u.clone(),
        })
    }

    /// Adjoint of `G ↦ ρ̃_c`.
    pub fn adjoint(&self) -> impl Fn(&CMat) -> CMat {
        let (n, r) = (self.r + self.s, self.r);
        move |e: &CMat| embed_block(e, n, r)
    }

    pub fn compressed(&self, sol: &SdpSolution) -> CMat {
        sol.block(self.g)
            .view((self.r, self.r), (self.s, self.s))
            .into_owned()
    }

    pub fn extract(&self, sol: &SdpSolution) -> CMat {
        let c = self.compressed(sol);
        linalg::symmetrize(&(&self.u * c * self.u.adjoint()))
    }
}

/// Largest achievable root fidelity between a normalized `center` and states
/// supported on the range of `u`: `√Tr(P_U ρ)`.
pub(crate) fn max_fidelity_on(center: &CMat, u: &CMat) -> f64 {
    let p = u * u.adjoint();
    linalg::re_trace_product(&p, center).max(0.0).sqrt()
}

/// Which side of the tensor product the fixed operator sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// `F ⊗ X`
    First,
    /// `X ⊗ F`
    Second,
}

/// The dominated operator: either fixed, or free in a smoothing ball.
pub(crate) enum Target<'a> {
    Fixed(&'a CMat),
    Ball { center: &'a CMat, eps: f64 },
}

pub(crate) struct Dominance {
    pub value: f64,
    pub lower: f64,
    /// The dominated operator at the optimum (full space).
    pub rho: CMat,
    /// Optimal `X` (unnormalized, `Tr X = value`).
    pub x: CMat,
}

/// `min Tr X` subject to `F ⊗ X ⪰ ρ` (or `X ⊗ F ⪰ ρ`), `X ⪰ 0`, with the
/// space compressed to `supp F` so the program has a strictly feasible point.
/// `F` lives on `df` dimensions and `X` on `dx`.
pub(crate) fn min_trace_dominating(
    f: &CMat,
    side: Side,
    dx: usize,
    target: Target<'_>,
    opts: &SdpOptions,
) -> Result<Dominance> {
    let df = f.nrows();
    let (vf, lam) = linalg::support(f, &TOL);
    let rf = lam.len();
    if rf == 0 {
        return Err(Error::InvalidParameter("dominance with a zero operator".into()));
    }
    let fc = diag_real(&lam);
    let idx = linalg::identity(dx);
    let w = match side {
        Side::First => kron(&vf, &idx),
        Side::Second => kron(&idx, &vf),
    };
    let dc = rf * dx;
    let fixed_pos = match side {
        Side::First => 0usize,
        Side::Second => 1usize,
    };
    let cdims = match side {
        Side::First => [rf, dx],
        Side::Second => [dx, rf],
    };

    let mut p = SdpProblem::new();
    let x = p.add_block(dx);
    p.add_objective(x, linalg::identity(dx));
    let fxi = match side {
        Side::First => kron(&fc, &idx),
        Side::Second => kron(&idx, &fc),
    };
    // Adjoint of X ↦ F_c ⊗ X is E ↦ Tr_F[(F_c ⊗ I) E].
    let adj_x = move |e: &CMat| -> CMat {
        let weighted = &fxi * e;
        let weighted = linalg::symmetrize(&weighted);
        partial_trace_positions(&weighted, &cdims, &[1 - fixed_pos])
    };
    let neg: &dyn Fn(&CMat) -> CMat = &|e: &CMat| -e.clone();
    let slack = p.add_block(dc);

    let (ball, fixed_c) = match target {
        Target::Fixed(rho) => {
            if rho.nrows() != df * dx {
                return Err(Error::DimensionMismatch(format!(
                    "dominated operator of size {} for {}x{}",
                    rho.nrows(),
                    df,
                    dx
                )));
            }
            let leak = linalg::trace(rho).re - linalg::trace(&(w.adjoint() * rho * &w)).re;
            if leak > 1e-9 * linalg::trace(rho).re.abs().max(1e-300) {
                return Ok(Dominance {
                    value: f64::INFINITY,
                    lower: f64::INFINITY,
                    rho: rho.clone(),
                    x: CMat::zeros(dx, dx),
                });
            }
            (None, Some(linalg::symmetrize(&(w.adjoint() * rho * &w))))
        }
        Target::Ball { center, eps } => (Some(Ball::add(&mut p, center, eps, &w)?), None),
    };

    let adj_x_ref: &dyn Fn(&CMat) -> CMat = &adj_x;
    match (&ball, &fixed_c) {
        (Some(b), _) => {
            let adj_b = b.adjoint();
            let adj_neg_b = move |e: &CMat| -> CMat { -adj_b(e) };
            let adj_neg_b: &dyn Fn(&CMat) -> CMat = &adj_neg_b;
            p.add_matrix_equality(
                &[(x, adj_x_ref), (b.g, adj_neg_b), (slack, neg)],
                &CMat::zeros(dc, dc),
            );
        }
        (None, Some(rc)) => {
            p.add_matrix_equality(&[(x, adj_x_ref), (slack, neg)], rc);
        }
        _ => unreachable!(),
    }

    let sol = sdp::require_optimal(sdp::solve_with(&p, opts)?, "dominance program")?;
    let rho = match (&ball, target_full(&fixed_c, &w)) {
        (Some(b), _) => b.extract(&sol),
        (None, Some(full)) => full,
        _ => unreachable!(),
    };
    let xm = linalg::symmetrize(sol.block(x));
    Ok(Dominance {
        value: sol.primal_value,
        lower: sol.dual_value,
        rho,
        x: xm,
    })
}

fn target_full(fixed_c: &Option<CMat>, w: &CMat) -> Option<CMat> {
    fixed_c.as_ref().map(|c| w * c * w.adjoint())
}
