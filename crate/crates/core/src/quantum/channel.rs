use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, eigh, frobenius, kron, partial_trace_positions, permute_positions, CMat, CVec, TOL,
};

use super::{DensityOperator, PureState, SystemDims};

/// CPTP map held in both Kraus and Choi form.
///
/// Choi convention: `J = Σ_{ij} |i⟩⟨j| ⊗ N(|i⟩⟨j|)`, input factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMat>,
    choi: CMat,
    input: SystemDims,
    output: SystemDims,
}

const TP_TOL: f64 = 1e-9;

impl QuantumChannel {
    pub fn from_kraus(kraus: Vec<CMat>, input: SystemDims, output: SystemDims) -> Result<Self> {
        let (din, dout) = (input.total(), output.total());
        if kraus.is_empty() {
            return Err(Error::DimensionMismatch("no Kraus operators".into()));
        }
        for k in &kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {}x{} for a map {} -> {}",
                    k.nrows(),
                    k.ncols(),
                    input,
                    output
                )));
            }
        }
        let mut sum = CMat::zeros(din, din);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let deviation = frobenius(&(sum - linalg::identity(din)));
        if deviation > TP_TOL * (din as f64).sqrt().max(1.0) {
            return Err(Error::NotTracePreserving { deviation });
        }
        let choi = choi_from_kraus(&kraus, din, dout);
        Ok(Self {
            kraus,
            choi,
            input,
            output,
        })
    }

    pub fn from_choi(choi: CMat, input: SystemDims, output: SystemDims) -> Result<Self> {
        let (din, dout) = (input.total(), output.total());
        if !choi.is_square() || choi.nrows() != din * dout {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix {}x{} for a map {} -> {}",
                choi.nrows(),
                choi.ncols(),
                input,
                output
            )));
        }
        let (h, asym) = linalg::hermitian_part(&choi);
        if asym > TOL.hermitian_rel * frobenius(&h).max(1.0) {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tolerance: TOL.hermitian_rel,
            });
        }
        let e = eigh(&h);
        let floor = TOL.psd_floor(e.max_abs());
        if e.min() < -floor {
            return Err(Error::NotPositive {
                min_eigenvalue: e.min(),
                tolerance: floor,
            });
        }
        let tr_out = partial_trace_positions(&h, &[din, dout], &[0]);
        let deviation = frobenius(&(tr_out - linalg::identity(din)));
        if deviation > TP_TOL * (din as f64).sqrt().max(1.0) {
            return Err(Error::NotTracePreserving { deviation });
        }
        let cut = 1e-13 * e.max_abs();
        let mut kraus = Vec::new();
        for k in 0..e.dim() {
            let lam = e.values[k];
            if lam <= cut {
                continue;
            }
            let s = lam.sqrt();
            kraus.push(CMat::from_fn(dout, din, |o, i| {
                e.vectors[(i * dout + o, k)] * s
            }));
        }
        Ok(Self {
            kraus,
            choi: h,
            input,
            output,
        })
    }

    pub fn identity(input: SystemDims, output: SystemDims) -> Result<Self> {
        if input.total() != output.total() {
            return Err(Error::DimensionMismatch(format!(
                "identity channel {input} -> {output}"
            )));
        }
        let d = input.total();
        Self::from_kraus(vec![linalg::identity(d)], input, output)
    }

    /// `ρ ↦ (1−p)ρ + p·Tr(ρ)·I/d`, for `0 ≤ p ≤ 1 + 1/(d²−1)`.
    pub fn depolarizing(p: f64, input: SystemDims, output: SystemDims) -> Result<Self> {
        let d = input.total();
        if output.total() != d {
            return Err(Error::DimensionMismatch(format!(
                "depolarizing channel {input} -> {output}"
            )));
        }
        let dd = (d * d) as f64;
        if !(0.0..=1.0 + 1.0 / (dd - 1.0).max(1e-300)).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing parameter {p} outside the CP range"
            )));
        }
        let mut phi = CVec::zeros(d * d);
        for k in 0..d {
            phi[k * d + k] = cr(1.0);
        }
        let choi = (&phi * phi.adjoint()).scale(1.0 - p) + linalg::identity(d * d).scale(p / d as f64);
        Self::from_choi(choi, input, output)
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn input_dims(&self) -> &SystemDims {
        &self.input
    }

    pub fn output_dims(&self) -> &SystemDims {
        &self.output
    }

    /// Kraus-form action on a bare matrix.
    pub fn apply_matrix(&self, rho: &CMat) -> CMat {
        let d = self.output.total();
        let mut out = CMat::zeros(d, d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// Choi-form action `Tr_in[(ρᵀ ⊗ I) J]`.
    pub fn apply_matrix_choi(&self, rho: &CMat) -> CMat {
        let (din, dout) = (self.input.total(), self.output.total());
        let mut out = CMat::zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                let w = rho[(i, j)];
                if w == cr(0.0) {
                    continue;
                }
                for o in 0..dout {
                    for p in 0..dout {
                        out[(o, p)] += w * self.choi[(i * dout + o, j * dout + p)];
                    }
                }
            }
        }
        out
    }

    /// Heisenberg-picture adjoint `Y ↦ Σ K† Y K`.
    pub fn adjoint_matrix(&self, y: &CMat) -> CMat {
        let d = self.input.total();
        let mut out = CMat::zeros(d, d);
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.input.total() {
            return Err(Error::DimensionMismatch(format!(
                "channel input {} applied to {}",
                self.input,
                rho.dims()
            )));
        }
        Ok(DensityOperator::from_parts(
            self.apply_matrix(rho.matrix()),
            self.output.clone(),
        ))
    }

    /// Applies the channel to the factors `targets` of `rho`; untouched factors
    /// come first in the result, followed by the output factors.
    pub fn apply_to(&self, rho: &DensityOperator, targets: &[&str]) -> Result<DensityOperator> {
        let dims = rho.dims();
        let tpos = dims.positions(targets)?;
        let tdim: usize = tpos.iter().map(|&p| dims.dims()[p]).product();
        if tdim != self.input.total() {
            return Err(Error::DimensionMismatch(format!(
                "channel input {} applied to factors {:?} of {}",
                self.input, targets, dims
            )));
        }
        let rest = dims.complement(&tpos);
        let mut perm = rest.clone();
        perm.extend(&tpos);
        let permuted = permute_positions(rho.matrix(), dims.dims(), &perm);
        let drest: usize = rest.iter().map(|&p| dims.dims()[p]).product();
        let id = linalg::identity(drest);
        let dout = drest * self.output.total();
        let mut out = CMat::zeros(dout, dout);
        for k in &self.kraus {
            let big = kron(&id, k);
            out += &big * &permuted * big.adjoint();
        }
        let out_dims = dims.select(&rest).concat(&self.output)?;
        Ok(DensityOperator::from_parts(out, out_dims))
    }

    /// `(id_R ⊗ N)(|φ⟩⟨φ|)`, the channel acting on the input-labelled factors.
    pub fn extend_to_reference(&self, phi: &PureState) -> Result<DensityOperator> {
        let labels: Vec<&str> = self.input.labels().iter().map(String::as_str).collect();
        self.apply_to(&phi.density(), &labels)
    }
}

fn choi_from_kraus(kraus: &[CMat], din: usize, dout: usize) -> CMat {
    let mut j = CMat::zeros(din * dout, din * dout);
    for k in kraus {
        let v = CVec::from_fn(din * dout, |idx, _| k[(idx % dout, idx / dout)]);
        j += &v * v.adjoint();
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn q(l: &str) -> SystemDims {
        SystemDims::single(l, 2)
    }

    #[test]
    fn identity_leaves_input() {
        let ch = QuantumChannel::identity(q("A"), q("B")).unwrap();
        let rho = DensityOperator::basis(1, q("A"));
        let out = ch.apply(&rho).unwrap();
        assert!(frobenius(&(out.matrix() - rho.matrix())) < 1e-15);
        assert_eq!(out.dims().labels(), &["B".to_string()]);
    }

    #[test]
    fn full_depolarizing_on_bell() {
        let ch = QuantumChannel::depolarizing(1.0, q("A"), q("B")).unwrap();
        let phi = PureState::bell("R", "A").unwrap();
        let w = ch.extend_to_reference(&phi).unwrap();
        assert_eq!(w.dims().labels(), &["R".to_string(), "B".to_string()]);
        assert!(frobenius(&(w.matrix() - linalg::identity(4).scale(0.25))) < 1e-12);
    }

    #[test]
    fn kraus_choi_agree() {
        let k0 = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.6f64.sqrt())]);
        let k1 = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.4f64.sqrt()), cr(0.0), cr(0.0)]);
        let ch = QuantumChannel::from_kraus(vec![k0, k1], q("A"), q("B")).unwrap();
        let back = QuantumChannel::from_choi(ch.choi().clone(), q("A"), q("B")).unwrap();
        let rho = CMat::from_row_slice(2, 2, &[cr(0.3), c(0.1, 0.2), c(0.1, -0.2), cr(0.7)]);
        let a = ch.apply_matrix(&rho);
        assert!(frobenius(&(&a - ch.apply_matrix_choi(&rho))) < 1e-12);
        assert!(frobenius(&(&a - back.apply_matrix(&rho))) < 1e-12);
    }

    #[test]
    fn rejects_non_tp() {
        let k = linalg::identity(2).scale(0.9);
        assert!(matches!(
            QuantumChannel::from_kraus(vec![k], q("A"), q("B")),
            Err(Error::NotTracePreserving { .. })
        ));
    }
}
