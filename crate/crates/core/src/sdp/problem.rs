use crate::error::{Error, Result};
use crate::linalg::{self, frobenius, hermitian_basis, re_trace_product, CMat};

/// Handle to a PSD variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub(crate) usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// One scalar constraint `Σ_k ⟨A_k, X_{block_k}⟩ = b` in standard form.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, CMat)>,
    pub rhs: f64,
}

/// Block semidefinite program in standard form
/// `min Σ⟨C_j, X_j⟩  s.t.  Σ_j ⟨A_ij, X_j⟩ = b_i,  X_j ⪰ 0`.
///
/// Inequalities get 1×1 slack blocks; bounded blocks `0 ⪯ X ⪯ I` get a
/// partner block `Y` with `X + Y = I`.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    pub(crate) blocks: Vec<usize>,
    pub(crate) objective: Vec<Option<CMat>>,
    pub(crate) constraints: Vec<Constraint>,
    user_dim: usize,
}

/// Adjoint of a linear map from a block into a common target space.
pub type AdjointMap<'a> = &'a dyn Fn(&CMat) -> CMat;

pub const MAX_VARIABLE_DIM: usize = 256;

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_block(&mut self, dim: usize) -> BlockId {
        self.blocks.push(dim);
        self.objective.push(None);
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_block(&mut self, dim: usize) -> BlockId {
        assert!(dim > 0, "block dimension must be positive");
        self.user_dim += dim;
        self.push_block(dim)
    }

    /// Block constrained to `0 ⪯ X ⪯ I`.
    pub fn add_bounded_block(&mut self, dim: usize) -> BlockId {
        let x = self.add_block(dim);
        let y = self.push_block(dim);
        let id: &dyn Fn(&CMat) -> CMat = &|e: &CMat| e.clone();
        self.add_matrix_equality(&[(x, id), (y, id)], &linalg::identity(dim));
        x
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self, b: BlockId) -> usize {
        self.blocks[b.0]
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Dimension declared by the caller (automatic slack blocks excluded).
    pub fn variable_dim(&self) -> usize {
        self.user_dim
    }

    /// Adds `⟨C, X_b⟩` to the (minimized) objective.
    pub fn add_objective(&mut self, b: BlockId, c: CMat) {
        assert_eq!(c.nrows(), self.blocks[b.0]);
        let c = linalg::symmetrize(&c);
        self.objective[b.0] = Some(match self.objective[b.0].take() {
            Some(prev) => prev + c,
            None => c,
        });
    }

    /// `Σ ⟨A_k, X_k⟩ (rel) rhs`.
    pub fn add_constraint(&mut self, terms: Vec<(BlockId, CMat)>, rel: Relation, rhs: f64) {
        let mut t: Vec<(usize, CMat)> = terms
            .into_iter()
            .map(|(b, a)| {
                assert_eq!(a.nrows(), self.blocks[b.0], "constraint block size");
                (b.0, linalg::symmetrize(&a))
            })
            .collect();
        match rel {
            Relation::Eq => {}
            Relation::Le | Relation::Ge => {
                let s = self.push_block(1);
                let sign = if rel == Relation::Le { 1.0 } else { -1.0 };
                t.push((s.0, linalg::diag_real(&[sign])));
            }
        }
        self.constraints.push(Constraint { terms: t, rhs });
    }

    /// `Σ_k L_k(X_k) = T` over Hermitian `d × d` matrices, given the adjoints
    /// `L_k*`. One scalar constraint per element of an orthonormal Hermitian
    /// basis.
    pub fn add_matrix_equality(&mut self, terms: &[(BlockId, AdjointMap<'_>)], target: &CMat) {
        let d = target.nrows();
        for e in hermitian_basis(d) {
            let mut row = Vec::with_capacity(terms.len());
            for &(b, adj) in terms {
                let a = adj(&e);
                if frobenius(&a) > 0.0 {
                    row.push((b, a));
                }
            }
            let rhs = re_trace_product(&e, target);
            if row.is_empty() {
                debug_assert!(rhs.abs() < 1e-12, "inconsistent empty matrix constraint");
                continue;
            }
            self.add_constraint(row, Relation::Eq, rhs);
        }
    }

    /// `Σ_k L_k(X_k) ⪯ T`, via a PSD slack block.
    pub fn add_matrix_le(&mut self, terms: &[(BlockId, AdjointMap<'_>)], target: &CMat) -> BlockId {
        let s = self.push_block(target.nrows());
        let id: &dyn Fn(&CMat) -> CMat = &|e: &CMat| e.clone();
        let mut all: Vec<(BlockId, AdjointMap<'_>)> = terms.to_vec();
        all.push((s, id));
        self.add_matrix_equality(&all, target);
        s
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.user_dim > MAX_VARIABLE_DIM {
            return Err(Error::SizeGuard(format!(
                "total variable dimension {} exceeds {}",
                self.user_dim, MAX_VARIABLE_DIM
            )));
        }
        if self.constraints.is_empty() {
            return Err(Error::InvalidParameter("SDP without constraints".into()));
        }
        Ok(())
    }
}

/// Embeds `e` (`k × k`) at offset `off` of an `n × n` zero matrix.
pub fn embed_block(e: &CMat, n: usize, off: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m.view_mut((off, off), (e.nrows(), e.ncols())).copy_from(e);
    m
}

/// Off-diagonal embedding: places `y` at rows `r0..`, cols `c0..` and its
/// adjoint symmetrically, halving so that `⟨M, G⟩ = Re Tr(y† G_{r0,c0})`.
pub fn embed_offdiag(y: &CMat, n: usize, r0: usize, c0: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    let h = y.scale(0.5);
    m.view_mut((r0, c0), (y.nrows(), y.ncols())).copy_from(&h);
    m.view_mut((c0, r0), (y.ncols(), y.nrows()))
        .copy_from(&h.adjoint());
    m
}
