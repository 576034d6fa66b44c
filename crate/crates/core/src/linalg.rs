//! Dense complex linear algebra shared by every module.
//!
//! Everything funnels through one Hermitian eigendecomposition so that PSD
//! checks, matrix functions and pseudo-inverses all agree on the same
//! tolerance policy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Numerical tolerance policy used across the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Negative eigenvalues down to `-psd_rel * max|eig|` are treated as zero.
    pub psd_rel: f64,
    /// Allowed excess of a trace above one.
    pub trace: f64,
    /// Eigenvalues below `pinv_rel * max|eig|` are dropped by the pseudo-inverse.
    pub pinv_rel: f64,
    /// Relative Hermiticity tolerance (Frobenius norm of the anti-Hermitian part).
    pub hermitian_rel: f64,
}

pub const TOL: Tolerance = Tolerance {
    psd_rel: 1e-9,
    trace: 1e-9,
    pinv_rel: 1e-12,
    hermitian_rel: 1e-9,
};

impl Default for Tolerance {
    fn default() -> Self {
        TOL
    }
}

impl Tolerance {
    pub fn psd_floor(&self, scale: f64) -> f64 {
        self.psd_rel * scale.max(1e-300)
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn log2(x: f64) -> f64 {
    x.log2()
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn h2(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Shannon entropy (bits) of a probability vector.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = cr(v);
    }
    m
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `Re Tr(A B)` without forming the product.
pub fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Hilbert–Schmidt inner product `Re Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Hermitian part `(M + M†)/2` together with the Frobenius norm of the
/// discarded anti-Hermitian part.
pub fn hermitian_part(m: &CMat) -> (CMat, f64) {
    let h = (m + m.adjoint()).scale(0.5);
    let asym = frobenius(&(m - &h));
    (h, asym)
}

pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Σ f(λ_k) |v_k⟩⟨v_k|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            for r in 0..n {
                scaled[(r, k)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Projector onto eigenvectors whose eigenvalue satisfies `pred`.
    pub fn projector(&self, pred: impl Fn(f64) -> bool) -> CMat {
        self.map(|v| if pred(v) { 1.0 } else { 0.0 })
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }
}

/// Hermitian eigendecomposition. The input is symmetrized first.
pub fn eigh(m: &CMat) -> Eigh {
    assert!(m.is_square(), "eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        };
    }
    if n == 1 {
        return Eigh {
            values: vec![m[(0, 0)].re],
            vectors: identity(1),
        };
    }
    let h = symmetrize(m);
    let se = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).values
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigh(m).min()
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    eigh(m).max()
}

/// Operator norm of a Hermitian matrix.
pub fn operator_norm(m: &CMat) -> f64 {
    eigh(m).max_abs()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    eigh(m).values.iter().map(|v| v.abs()).sum()
}

/// Trace norm of an arbitrary square matrix via `Tr sqrt(M† M)`.
pub fn trace_norm(m: &CMat) -> f64 {
    let g = m.adjoint() * m;
    eigh(&g).values.iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Square root of a PSD matrix; negative round-off eigenvalues are clipped.
pub fn sqrtm_psd(m: &CMat) -> CMat {
    eigh(m).map(|v| v.max(0.0).sqrt())
}

/// Moore–Penrose pseudo-inverse of a Hermitian matrix with cutoff
/// `pinv_rel * max|eig|`.
pub fn pinv_hermitian(m: &CMat, tol: &Tolerance) -> CMat {
    let e = eigh(m);
    let cut = tol.pinv_rel * e.max_abs();
    e.map(|v| if v.abs() > cut { 1.0 / v } else { 0.0 })
}

/// Inverse square root on the support (pseudo-inverse of `sqrt`).
pub fn inv_sqrt_psd(m: &CMat, tol: &Tolerance) -> CMat {
    let e = eigh(m);
    let cut = tol.pinv_rel * e.max_abs();
    e.map(|v| if v > cut { 1.0 / v.sqrt() } else { 0.0 })
}

/// Strict inverse of a Hermitian matrix; errors if any eigenvalue falls under
/// the cutoff.
pub fn inv_hermitian(m: &CMat, tol: &Tolerance) -> Result<CMat> {
    let e = eigh(m);
    let cut = tol.pinv_rel * e.max_abs();
    if e.values.iter().any(|v| v.abs() <= cut) {
        return Err(Error::Singular { cutoff: cut });
    }
    Ok(e.map(|v| 1.0 / v))
}

/// Orthonormal basis (Hilbert–Schmidt) of the real vector space of `d × d`
/// Hermitian matrices.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..d {
        let mut e = CMat::zeros(d, d);
        e[(k, k)] = cr(1.0);
        basis.push(e);
    }
    for k in 0..d {
        for l in (k + 1)..d {
            let mut e = CMat::zeros(d, d);
            e[(k, l)] = cr(s);
            e[(l, k)] = cr(s);
            basis.push(e);
            let mut f = CMat::zeros(d, d);
            f[(k, l)] = c(0.0, s);
            f[(l, k)] = c(0.0, -s);
            basis.push(f);
        }
    }
    basis
}

/// Row-major strides of a tensor product with the given factor dimensions.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets, in a space with factor `dims`, of all multi-indices that
/// range over `positions` (in the given order) with every other factor at 0.
fn offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &base in &out {
            for k in 0..dims[p] {
                next.push(base + k * st[p]);
            }
        }
        out = next;
    }
    out
}

fn complement(n: usize, positions: &[usize]) -> Vec<usize> {
    (0..n).filter(|k| !positions.contains(k)).collect()
}

/// Partial trace keeping the factors at `keep` (result ordered as `keep`).
pub fn partial_trace_positions(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let traced = complement(dims.len(), keep);
    let ok = offsets(dims, keep);
    let ot = offsets(dims, &traced);
    let n = ok.len();
    let mut out = CMat::zeros(n, n);
    for (i, &ri) in ok.iter().enumerate() {
        for (j, &cj) in ok.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &ot {
                acc += m[(ri + t, cj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Embeds `op`, acting on the factors `positions` of a space with factor
/// `dims` (its own factor order given by `positions`), as `op ⊗ I_rest`.
pub fn embed_positions(op: &CMat, dims: &[usize], positions: &[usize]) -> CMat {
    let rest = complement(dims.len(), positions);
    let os = offsets(dims, positions);
    let or = offsets(dims, &rest);
    assert_eq!(os.len(), op.nrows(), "operator size does not match factors");
    let total: usize = dims.iter().product();
    let mut out = CMat::zeros(total, total);
    for (i, &ri) in os.iter().enumerate() {
        for (j, &cj) in os.iter().enumerate() {
            let v = op[(i, j)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for &t in &or {
                out[(ri + t, cj + t)] = v;
            }
        }
    }
    out
}

/// Reorders tensor factors: new factor `k` is old factor `perm[k]`.
pub fn permute_positions(m: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let idx = offsets(dims, perm);
    let n = idx.len();
    let mut out = CMat::zeros(n, n);
    for (i, &ri) in idx.iter().enumerate() {
        for (j, &cj) in idx.iter().enumerate() {
            out[(i, j)] = m[(ri, cj)];
        }
    }
    out
}

pub fn permute_vector(v: &CVec, dims: &[usize], perm: &[usize]) -> CVec {
    let idx = offsets(dims, perm);
    CVec::from_iterator(idx.len(), idx.iter().map(|&k| v[k]))
}

/// Isometry onto the eigenvectors of a PSD matrix with eigenvalue above the
/// pseudo-inverse cutoff, together with those eigenvalues.
pub fn support(m: &CMat, tol: &Tolerance) -> (CMat, Vec<f64>) {
    let e = eigh(m);
    let cut = tol.pinv_rel.max(1e-13) * e.max_abs();
    let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > cut).collect();
    let mut v = CMat::zeros(m.nrows(), keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        v.set_column(dst, &e.vectors.column(k));
    }
    (v, keep.iter().map(|&k| e.values[k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[cr(2.0), c(0.0, 1.0), c(0.0, -1.0), cr(2.0)],
        );
        let e = eigh(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
        assert!(frobenius(&(e.map(|v| v) - &m)) < 1e-12);
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let b = hermitian_basis(3);
        assert_eq!(b.len(), 9);
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let ip = re_trace_product(x, y);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn embed_then_partial_trace() {
        let a = CMat::from_row_slice(2, 2, &[cr(0.7), c(0.1, 0.2), c(0.1, -0.2), cr(0.3)]);
        let dims = [3, 2, 2];
        let big = embed_positions(&a, &dims, &[1]);
        let back = partial_trace_positions(&big, &dims, &[1]);
        assert!(frobenius(&(back - a.scale(6.0))) < 1e-12);
    }

    #[test]
    fn permutation_swaps_kron_factors() {
        let a = CMat::from_row_slice(2, 2, &[cr(1.0), cr(2.0), cr(3.0), cr(4.0)]);
        let b = CMat::from_row_slice(3, 3, &[cr(1.0), cr(0.0), cr(5.0), cr(0.0), cr(2.0), cr(0.0), cr(7.0), cr(0.0), cr(3.0)]);
        let ab = kron(&a, &b);
        let ba = permute_positions(&ab, &[2, 3], &[1, 0]);
        assert!(frobenius(&(ba - kron(&b, &a))) < 1e-14);
    }

    #[test]
    fn binary_entropy_edges() {
        assert_eq!(h2(0.0), 0.0);
        assert_eq!(h2(1.0), 0.0);
        assert!((h2(0.5) - 1.0).abs() < 1e-15);
    }
}
