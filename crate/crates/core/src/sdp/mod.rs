//! Dense semidefinite programming.

mod problem;
mod solver;

pub use problem::{
    embed_block, embed_offdiag, AdjointMap, BlockId, Constraint, Relation, SdpProblem,
    MAX_VARIABLE_DIM,
};
pub use solver::{solve, solve_with, IterLog, SdpOptions, SdpSolution, SdpStatus};

use crate::error::{Error, Result};

/// Converts a non-optimal solve into an error carrying the status.
pub fn require_optimal(sol: SdpSolution, what: &str) -> Result<SdpSolution> {
    match sol.status {
        SdpStatus::Optimal => Ok(sol),
        s => Err(Error::Solver {
            status: s.as_str().into(),
            detail: format!(
                "{what}: primal {:.6e}, dual {:.6e}, residuals {:.2e}/{:.2e} after {} iterations",
                sol.primal_value,
                sol.dual_value,
                sol.primal_residual,
                sol.dual_residual,
                sol.iterations
            ),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c, cr, diag_real, CMat};

    #[test]
    fn trace_above_projector() {
        // min Tr X  s.t.  X − |0⟩⟨0| ⪰ 0
        let mut p = SdpProblem::new();
        let x = p.add_block(2);
        p.add_objective(x, linalg::identity(2));
        let neg: &dyn Fn(&CMat) -> CMat = &|e: &CMat| -e.clone();
        let id: &dyn Fn(&CMat) -> CMat = &|e: &CMat| e.clone();
        let s = p.add_block(2);
        p.add_matrix_equality(&[(x, id), (s, neg)], &diag_real(&[1.0, 0.0]));
        let sol = solve(&p, 1e-9, 100).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_value - 1.0).abs() < 1e-7, "{}", sol.primal_value);
        let (lo, hi) = sol.interval();
        assert!(lo <= 1.0 + 1e-7 && hi >= 1.0 - 1e-7);
    }

    #[test]
    fn bounded_block_beta_identical_hypotheses() {
        let rho = CMat::from_row_slice(2, 2, &[cr(0.7), c(0.2, 0.1), c(0.2, -0.1), cr(0.3)]);
        let mut p = SdpProblem::new();
        let l = p.add_bounded_block(2);
        p.add_objective(l, rho.clone());
        p.add_constraint(vec![(l, rho.clone())], Relation::Ge, 0.5);
        let sol = solve(&p, 1e-10, 100).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.primal_value - 0.5).abs() < 1e-8);
    }

    #[test]
    fn iterates_keep_complementarity_nonnegative_and_log() {
        let mut p = SdpProblem::new();
        let x = p.add_block(3);
        p.add_objective(x, diag_real(&[1.0, 2.0, 3.0]));
        p.add_constraint(vec![(x, linalg::identity(3))], Relation::Eq, 1.0);
        let sol = solve(&p, 1e-9, 100).unwrap();
        assert!((sol.primal_value - 1.0).abs() < 1e-8);
        assert!(sol.log.iter().all(|l| l.gap >= 0.0));
        for l in &sol.log {
            if l.primal_residual < 1e-12 && l.dual_residual < 1e-12 {
                assert!(l.dual <= l.primal + 1e-12);
            }
        }
        assert!(sol.log_csv().lines().count() == sol.log.len() + 1);
    }

    #[test]
    fn deterministic() {
        let mut p = SdpProblem::new();
        let x = p.add_bounded_block(2);
        p.add_objective(x, diag_real(&[0.3, 0.7]));
        p.add_constraint(vec![(x, diag_real(&[0.6, 0.4]))], Relation::Ge, 0.8);
        let a = solve(&p, 1e-9, 100).unwrap();
        let b = solve(&p, 1e-9, 100).unwrap();
        assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn infeasible_is_flagged() {
        // X ⪰ 0, Tr X = −1
        let mut p = SdpProblem::new();
        let x = p.add_block(2);
        p.add_objective(x, linalg::identity(2));
        p.add_constraint(vec![(x, linalg::identity(2))], Relation::Eq, -1.0);
        let sol = solve(&p, 1e-9, 200).unwrap();
        assert_ne!(sol.status, SdpStatus::Optimal);
    }

    #[test]
    fn size_guard() {
        let mut p = SdpProblem::new();
        let x = p.add_block(300);
        p.add_constraint(vec![(x, linalg::identity(300))], Relation::Eq, 1.0);
        assert!(matches!(solve(&p, 1e-7, 10), Err(Error::SizeGuard(_))));
    }
}
