use crate::error::{Error, Result};
use crate::linalg::{eigh, re_trace_product, TOL};
use crate::quantum::DensityOperator;

/// `−Σ λ log λ` over the spectrum, in bits.
pub fn von_neumann(rho: &DensityOperator) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| -v * v.log2())
        .sum::<f64>()
        .max(0.0)
}

fn complement_labels<'a>(rho: &'a DensityOperator, labels: &[&str]) -> Result<Vec<&'a str>> {
    for l in labels {
        rho.dims().position(l)?;
    }
    Ok(rho
        .dims()
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| !labels.contains(l))
        .collect())
}

/// `H(A|B) = H(AB) − H(B)` where `B` is `cond`.
pub fn conditional_entropy(rho: &DensityOperator, cond: &[&str]) -> Result<f64> {
    complement_labels(rho, cond)?;
    if cond.is_empty() {
        return Ok(von_neumann(rho));
    }
    Ok(von_neumann(rho) - von_neumann(&rho.partial_trace(cond)?))
}

/// `I(A;B) = H(A) + H(B) − H(AB)`, with `B` every factor not in `a`.
pub fn mutual_information(rho: &DensityOperator, a: &[&str]) -> Result<f64> {
    let b = complement_labels(rho, a)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter(
            "mutual information needs two non-empty parties".into(),
        ));
    }
    let ha = von_neumann(&rho.partial_trace(a)?);
    let hb = von_neumann(&rho.partial_trace(&b)?);
    Ok((ha + hb - von_neumann(rho)).max(0.0))
}

/// `D(ρ‖σ) = Tr ρ log ρ − Tr ρ log σ`; `+∞` when `supp ρ ⊄ supp σ`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dims(),
            sigma.dims()
        )));
    }
    let es = eigh(sigma.matrix());
    let cut = TOL.pinv_rel.max(1e-13) * es.max_abs();
    let mut cross = 0.0;
    let mut leak = 0.0;
    for k in 0..es.dim() {
        let v = es.vector(k);
        let w = (v.adjoint() * rho.matrix() * &v)[(0, 0)].re;
        if es.values[k] > cut {
            cross += w * es.values[k].log2();
        } else {
            leak += w;
        }
    }
    if leak > 1e-10 * rho.trace().max(1e-300) {
        return Ok(f64::INFINITY);
    }
    let neg_h: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| v * v.log2())
        .sum();
    Ok(neg_h - cross)
}

/// `Tr(ρ σ)` convenience for expectation values.
pub fn expectation(op: &crate::linalg::CMat, rho: &DensityOperator) -> f64 {
    re_trace_product(op, rho.matrix())
}
