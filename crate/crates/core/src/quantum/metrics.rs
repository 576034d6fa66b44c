//! Fidelity-based distances. Fidelity here is the root fidelity `‖√ρ√σ‖₁`.

use crate::error::{Error, Result};
use crate::linalg::{eigh, sqrtm_psd, trace_norm_hermitian, CMat};

use super::DensityOperator;

fn same_space(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dims(),
            sigma.dims()
        )));
    }
    Ok(())
}

/// `‖√A √B‖₁` for PSD matrices.
pub fn root_fidelity_matrix(a: &CMat, b: &CMat) -> f64 {
    let sa = sqrtm_psd(a);
    let inner = &sa * b * &sa;
    eigh(&inner).values.iter().map(|v| v.max(0.0).sqrt()).sum()
}

pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_space(rho, sigma)?;
    Ok(root_fidelity_matrix(rho.matrix(), sigma.matrix()).min(1.0))
}

/// `F + √((1−Tr ρ)(1−Tr σ))`.
pub fn generalized_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_space(rho, sigma)?;
    Ok(generalized_fidelity_matrix(rho.matrix(), sigma.matrix()))
}

pub fn generalized_fidelity_matrix(a: &CMat, b: &CMat) -> f64 {
    let f = root_fidelity_matrix(a, b);
    let ta = crate::linalg::trace(a).re;
    let tb = crate::linalg::trace(b).re;
    let extra = ((1.0 - ta).max(0.0) * (1.0 - tb).max(0.0)).sqrt();
    (f + extra).clamp(0.0, 1.0)
}

pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let f = generalized_fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

pub fn purified_distance_matrix(a: &CMat, b: &CMat) -> f64 {
    let f = generalized_fidelity_matrix(a, b);
    (1.0 - f * f).max(0.0).sqrt()
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_space(rho, sigma)?;
    Ok(0.5 * trace_norm_hermitian(&(rho.matrix() - sigma.matrix())))
}
