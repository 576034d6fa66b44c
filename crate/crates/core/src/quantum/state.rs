use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, eigh, frobenius, kron, outer, partial_trace_positions, permute_positions,
    permute_vector, CMat, CVec, Eigh, Tolerance, TOL,
};

use super::SystemDims;

/// Possibly subnormalized density operator (`Tr ρ ≤ 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
    dims: SystemDims,
    asymmetry: f64,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and `Tr ≤ 1` under the default policy.
    pub fn new(matrix: CMat, dims: SystemDims) -> Result<Self> {
        Self::with_tolerance(matrix, dims, &TOL)
    }

    pub fn with_tolerance(matrix: CMat, dims: SystemDims, tol: &Tolerance) -> Result<Self> {
        check_shape(&matrix, &dims)?;
        let (h, asymmetry) = linalg::hermitian_part(&matrix);
        let scale = frobenius(&h).max(1.0);
        if asymmetry > tol.hermitian_rel * scale {
            return Err(Error::NotHermitian {
                asymmetry,
                tolerance: tol.hermitian_rel * scale,
            });
        }
        let e = eigh(&h);
        let floor = tol.psd_floor(e.max_abs());
        if e.min() < -floor {
            return Err(Error::NotPositive {
                min_eigenvalue: e.min(),
                tolerance: floor,
            });
        }
        let tr = linalg::trace(&h).re;
        if tr > 1.0 + tol.trace {
            return Err(Error::TraceExceeded { trace: tr });
        }
        Ok(Self {
            matrix: h,
            dims,
            asymmetry,
        })
    }

    /// Skips validation; used internally where positivity holds by construction.
    pub(crate) fn from_parts(matrix: CMat, dims: SystemDims) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.total());
        Self {
            matrix: linalg::symmetrize(&matrix),
            dims,
            asymmetry: 0.0,
        }
    }

    /// Like [`new`](Self::new) but additionally requires unit trace.
    pub fn normalized(matrix: CMat, dims: SystemDims) -> Result<Self> {
        let rho = Self::new(matrix, dims)?;
        rho.require_normalized()?;
        Ok(rho)
    }

    pub fn maximally_mixed(dims: SystemDims) -> Self {
        let d = dims.total();
        Self::from_parts(linalg::identity(d).scale(1.0 / d as f64), dims)
    }

    pub fn diagonal(probs: &[f64], dims: SystemDims) -> Result<Self> {
        if probs.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal entries for total dimension {}",
                probs.len(),
                dims.total()
            )));
        }
        Self::new(linalg::diag_real(probs), dims)
    }

    /// Computational basis projector `|k⟩⟨k|`.
    pub fn basis(k: usize, dims: SystemDims) -> Self {
        let d = dims.total();
        let mut m = CMat::zeros(d, d);
        m[(k, k)] = cr(1.0);
        Self::from_parts(m, dims)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Norm of the anti-Hermitian part removed at construction.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn eigh(&self) -> Eigh {
        eigh(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= TOL.trace
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                trace: self.trace(),
            })
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.matrix.scale(c), self.dims.clone())
    }

    pub fn relabel<S: Into<String>>(&self, labels: Vec<S>) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.clone(),
            dims: self.dims.relabel(labels)?,
            asymmetry: self.asymmetry,
        })
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        let dims = self.dims.concat(&other.dims)?;
        Ok(Self::from_parts(kron(&self.matrix, &other.matrix), dims))
    }

    /// Traces out every factor not in `keep`; kept factors retain their order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        let mut pos = self.dims.positions(keep)?;
        pos.sort_unstable();
        pos.dedup();
        let m = partial_trace_positions(&self.matrix, self.dims.dims(), &pos);
        Ok(Self::from_parts(m, self.dims.select(&pos)))
    }

    /// Reorders the tensor factors to the given label order.
    pub fn reorder(&self, labels: &[&str]) -> Result<Self> {
        let perm = full_permutation(&self.dims, labels)?;
        let m = permute_positions(&self.matrix, self.dims.dims(), &perm);
        Ok(Self::from_parts(m, self.dims.select(&perm)))
    }

    /// Purification on `self ⊗ P`, with `P` of dimension `rank(ρ)`.
    pub fn purify(&self, purifier: &str) -> Result<PureState> {
        self.require_normalized()?;
        if self.dims.contains(purifier) {
            return Err(Error::LabelCollision(purifier.into()));
        }
        let e = self.eigh();
        let cut = TOL.pinv_rel.max(1e-13) * e.max_abs();
        let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > cut).collect();
        let r = keep.len();
        let d = self.dim();
        let mut v = CVec::zeros(d * r);
        for (j, &k) in keep.iter().enumerate() {
            let s = e.values[k].sqrt();
            for a in 0..d {
                v[a * r + j] = e.vectors[(a, k)] * s;
            }
        }
        let norm = v.norm();
        v.unscale_mut(norm);
        let dims = self.dims.concat(&SystemDims::single(purifier, r))?;
        PureState::new(v, dims)
    }
}

/// Unit vector over labelled factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: CVec,
    dims: SystemDims,
}

impl PureState {
    pub fn new(vector: CVec, dims: SystemDims) -> Result<Self> {
        if vector.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} over {}",
                vector.len(),
                dims
            )));
        }
        let n = vector.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { trace: n * n });
        }
        Ok(Self { vector, dims })
    }

    pub fn basis(k: usize, dims: SystemDims) -> Self {
        let mut v = CVec::zeros(dims.total());
        v[k] = cr(1.0);
        Self { vector: v, dims }
    }

    /// `Σ_k |k⟩|k⟩/√d` on `first ⊗ second`.
    pub fn maximally_entangled(d: usize, first: &str, second: &str) -> Result<Self> {
        let dims = SystemDims::new(vec![first, second], vec![d, d])?;
        let mut v = CVec::zeros(d * d);
        let a = 1.0 / (d as f64).sqrt();
        for k in 0..d {
            v[k * d + k] = cr(a);
        }
        Ok(Self { vector: v, dims })
    }

    pub fn bell(first: &str, second: &str) -> Result<Self> {
        Self::maximally_entangled(2, first, second)
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_parts(outer(&self.vector), self.dims.clone())
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let dims = self.dims.concat(&other.dims)?;
        Ok(Self {
            vector: self.vector.kronecker(&other.vector),
            dims,
        })
    }

    pub fn reorder(&self, labels: &[&str]) -> Result<Self> {
        let perm = full_permutation(&self.dims, labels)?;
        Ok(Self {
            vector: permute_vector(&self.vector, self.dims.dims(), &perm),
            dims: self.dims.select(&perm),
        })
    }

    pub fn relabel<S: Into<String>>(&self, labels: Vec<S>) -> Result<Self> {
        Ok(Self {
            vector: self.vector.clone(),
            dims: self.dims.relabel(labels)?,
        })
    }

    /// For a bipartite state `Σ C[r,a] |r⟩|a⟩`, the coefficient matrix `C`
    /// (rows indexed by the first factor, columns by the second).
    pub fn coefficient_matrix(&self) -> Result<CMat> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix needs a bipartite state, got {}",
                self.dims
            )));
        }
        let (r, a) = (self.dims.dims()[0], self.dims.dims()[1]);
        Ok(CMat::from_fn(r, a, |i, j| self.vector[i * a + j]))
    }
}

fn check_shape(m: &CMat, dims: &SystemDims) -> Result<()> {
    if !m.is_square() || m.nrows() != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix over {}",
            m.nrows(),
            m.ncols(),
            dims
        )));
    }
    Ok(())
}

fn full_permutation(dims: &SystemDims, labels: &[&str]) -> Result<Vec<usize>> {
    let perm = dims.positions(labels)?;
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != dims.len() || perm.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "reorder needs every label of {} exactly once",
            dims
        )));
    }
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frobenius};

    fn qubit(l: &str) -> SystemDims {
        SystemDims::single(l, 2)
    }

    #[test]
    fn rejects_bad_operators() {
        let m = CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.3), cr(0.0), cr(0.5)]);
        assert!(matches!(
            DensityOperator::new(m, qubit("A")),
            Err(Error::NotHermitian { .. })
        ));
        let m = linalg::diag_real(&[1.2, -0.2]);
        assert!(matches!(
            DensityOperator::new(m, qubit("A")),
            Err(Error::NotPositive { .. })
        ));
        let m = linalg::diag_real(&[0.8, 0.4]);
        assert!(matches!(
            DensityOperator::new(m, qubit("A")),
            Err(Error::TraceExceeded { .. })
        ));
    }

    #[test]
    fn maximally_mixed_product() {
        let a = DensityOperator::maximally_mixed(qubit("A"));
        let b = DensityOperator::maximally_mixed(qubit("B"));
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.dims().dims(), &[2, 2]);
        assert!(frobenius(&(ab.matrix() - linalg::identity(4).scale(0.25))) < 1e-15);
        assert!(a.tensor(&a).is_err());
    }

    #[test]
    fn bell_marginal_is_mixed() {
        let phi = PureState::bell("R", "B").unwrap().density();
        let r = phi.partial_trace(&["R"]).unwrap();
        assert!(frobenius(&(r.matrix() - linalg::identity(2).scale(0.5))) < 1e-15);
        assert!(phi.partial_trace(&["Q"]).is_err());
    }

    #[test]
    fn purify_pure_and_mixed() {
        let psi = CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let rho = PureState::new(psi, qubit("A")).unwrap().density();
        let p = rho.purify("P").unwrap();
        assert_eq!(p.dims().dims(), &[2, 1]);
        let back = p.density().partial_trace(&["A"]).unwrap();
        assert!(frobenius(&(back.matrix() - rho.matrix())) < 1e-12);

        let mixed = DensityOperator::maximally_mixed(qubit("A"));
        let p = mixed.purify("R").unwrap();
        assert_eq!(p.dims().dims(), &[2, 2]);
        let back = p.density().partial_trace(&["A"]).unwrap();
        assert!(frobenius(&(back.matrix() - mixed.matrix())) < 1e-12);
    }

    #[test]
    fn reorder_swaps_product() {
        let a = DensityOperator::basis(0, qubit("A"));
        let b = DensityOperator::basis(1, SystemDims::single("B", 3));
        let ab = a.tensor(&b).unwrap();
        let ba = ab.reorder(&["B", "A"]).unwrap();
        let want = b.tensor(&a).unwrap();
        assert_eq!(ba.dims(), want.dims());
        assert!(frobenius(&(ba.matrix() - want.matrix())) < 1e-15);
    }

    #[test]
    fn coefficient_matrix_of_bell() {
        let c = PureState::bell("R", "A").unwrap().coefficient_matrix().unwrap();
        assert!(frobenius(&(c - linalg::identity(2).scale(std::f64::consts::FRAC_1_SQRT_2))) < 1e-15);
    }
}
