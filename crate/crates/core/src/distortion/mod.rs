//! Distortion observables `Δ_RB`, excess-distortion projectors and the
//! excess/mean distortion functionals, for single symbols and for the
//! average symbol-wise observable on `n` copies.

mod symbolwise;

pub use symbolwise::{ExcessTail, Level, SymbolwiseObservable, DENSE_MAX_N};


use crate::error::{Error, Result};
use crate::linalg::{self, diag_real, eigh, kron, CMat, Eigh, TOL};
use crate::quantum::{DensityOperator, PureState, SystemDims};

/// Eigenvalues closer than this (relative to `max(1, d_max)`) form one level.
pub const GROUP_TOL: f64 = 1e-10;
/// Eigenvalues within `BOUNDARY_TOL · max(1, D)` of the threshold count as `≤ D`.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub(crate) fn on_boundary(value: f64, threshold: f64) -> bool {
    (value - threshold).abs() <= BOUNDARY_TOL * threshold.max(1.0)
}

/// One distinct eigenvalue of an observable with its spectral projector.
#[derive(Debug, Clone)]
pub struct SpectralGroup {
    pub value: f64,
    pub projector: CMat,
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct DistortionObservable {
    operator: CMat,
    dims: SystemDims,
    spectrum: Eigh,
    d_max: f64,
}

impl DistortionObservable {
    /// Validates Hermiticity and positivity; eigenvalues within the PSD
    /// tolerance below zero are clamped to zero.
    pub fn new(operator: CMat, dims: SystemDims) -> Result<Self> {
        if operator.nrows() != dims.total() || operator.ncols() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on {dims}",
                operator.nrows(),
                operator.ncols()
            )));
        }
        let (h, asym) = linalg::hermitian_part(&operator);
        let scale = linalg::operator_norm(&h).max(1e-300);
        if asym > TOL.hermitian_rel * scale.max(1.0) {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tolerance: TOL.hermitian_rel * scale.max(1.0),
            });
        }
        let mut spectrum = eigh(&h);
        let floor = TOL.psd_floor(scale);
        if spectrum.min() < -floor {
            return Err(Error::NotPositive {
                min_eigenvalue: spectrum.min(),
                tolerance: floor,
            });
        }
        for v in spectrum.values.iter_mut() {
            *v = v.max(0.0);
        }
        let d_max = spectrum.max();
        Ok(Self {
            operator: h,
            dims,
            spectrum,
            d_max,
        })
    }

    /// `Δ = I − |φ⟩⟨φ|` on the purification's space; the second factor is
    /// relabelled `output`.
    pub fn entanglement_fidelity(purification: &PureState, output: &str) -> Result<Self> {
        let d = purification.dims();
        if d.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "purification must have two factors (reference, source), got {d}"
            )));
        }
        let dims = d.relabel(vec![d.labels()[0].clone(), output.to_string()])?;
        let phi = purification.density();
        let op = linalg::identity(dims.total()) - phi.matrix();
        Self::new(op, dims)
    }

    /// `Σ_x |x⟩⟨x| ⊗ Σ_y d(x,y)|y⟩⟨y|`, optionally rotated into the bases
    /// given by the columns of `(U_R, U_B)`.
    pub fn classical(d: &[Vec<f64>], bases: Option<(&CMat, &CMat)>) -> Result<Self> {
        let nx = d.len();
        let ny = d.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || d.iter().any(|row| row.len() != ny) {
            return Err(Error::InvalidParameter("distortion matrix must be rectangular and non-empty".into()));
        }
        if let Some((x, y, v)) = d
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().enumerate().map(move |(y, &v)| (x, y, v)))
            .find(|&(_, _, v)| !(v >= 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidParameter(format!("distortion d({x},{y}) = {v} is not a finite non-negative number")));
        }
        let diag: Vec<f64> = d.iter().flatten().copied().collect();
        let mut op = diag_real(&diag);
        if let Some((ur, ub)) = bases {
            if ur.nrows() != nx || ur.ncols() != nx || ub.nrows() != ny || ub.ncols() != ny {
                return Err(Error::DimensionMismatch("basis change does not match the distortion matrix".into()));
            }
            let u = kron(ur, ub);
            op = &u * op * u.adjoint();
        }
        Self::new(op, SystemDims::new(vec!["R", "B"], vec![nx, ny])?)
    }

    /// Hamming distortion `d(x,y) = 1{x ≠ y}` on a `q`-ary alphabet.
    pub fn hamming(q: usize) -> Result<Self> {
        let d: Vec<Vec<f64>> = (0..q)
            .map(|x| (0..q).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::classical(&d, None)
    }

    pub fn operator(&self) -> &CMat {
        &self.operator
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn spectrum(&self) -> &Eigh {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.values
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Distinct eigenvalues (ascending, grouped at [`GROUP_TOL`]) with projectors.
    pub fn groups(&self) -> Vec<SpectralGroup> {
        let e = &self.spectrum;
        let gap = GROUP_TOL * self.d_max.max(1.0);
        let mut out: Vec<SpectralGroup> = Vec::new();
        let mut members: Vec<usize> = Vec::new();
        let flush = |members: &mut Vec<usize>, out: &mut Vec<SpectralGroup>| {
            if members.is_empty() {
                return;
            }
            let n = self.dim();
            let mut p = CMat::zeros(n, n);
            let mut sum = 0.0;
            for &k in members.iter() {
                let v = e.vector(k);
                p += &v * v.adjoint();
                sum += e.values[k];
            }
            out.push(SpectralGroup {
                value: sum / members.len() as f64,
                projector: p,
                multiplicity: members.len(),
            });
            members.clear();
        };
        for k in 0..e.dim() {
            if let Some(&last) = members.last() {
                if e.values[k] - e.values[last] > gap {
                    flush(&mut members, &mut out);
                }
            }
            members.push(k);
        }
        flush(&mut members, &mut out);
        out
    }

    fn check_state(&self, omega: &CMat) -> Result<()> {
        if omega.nrows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} for an observable on {}",
                omega.nrows(),
                self.dims
            )));
        }
        Ok(())
    }
}

/// `Π_{>D}` for a dense observable.
#[derive(Debug, Clone)]
pub struct ExcessProjector {
    pub threshold: f64,
    pub projector: CMat,
    pub rank: usize,
    /// Eigenvalues on the threshold, assigned to `Π_{≤D}`.
    pub boundary: usize,
}

impl ExcessProjector {
    pub fn complement(&self) -> CMat {
        linalg::identity(self.projector.nrows()) - &self.projector
    }
}

/// Projector onto the eigenvectors with `d_z > D` (strict).
pub fn excess_projector(delta: &DistortionObservable, threshold: f64) -> Result<ExcessProjector> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("distortion level {threshold} must be ≥ 0")));
    }
    let e = delta.spectrum();
    let n = delta.dim();
    let mut p = CMat::zeros(n, n);
    let (mut rank, mut boundary) = (0, 0);
    for k in 0..e.dim() {
        let v = e.values[k];
        if on_boundary(v, threshold) {
            boundary += 1;
        } else if v > threshold {
            let u = e.vector(k);
            p += &u * u.adjoint();
            rank += 1;
        }
    }
    Ok(ExcessProjector {
        threshold,
        projector: p,
        rank,
        boundary,
    })
}

/// `Tr{Π_{>D} ω}` for a dense projector.
pub fn excess_probability(omega: &DensityOperator, proj: &ExcessProjector) -> Result<f64> {
    if omega.dim() != proj.projector.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a projector of dimension {}",
            omega.dim(),
            proj.projector.nrows()
        )));
    }
    Ok(linalg::re_trace_product(&proj.projector, omega.matrix()).clamp(0.0, 1.0))
}

/// `Tr{Δ ω}`.
pub fn mean_distortion(omega: &DensityOperator, delta: &DistortionObservable) -> Result<f64> {
    delta.check_state(omega.matrix())?;
    Ok(linalg::re_trace_product(delta.operator(), omega.matrix()))
}

/// `Tr{Δ̄ ω_n}` for a dense state on the `n` symbol pairs, evaluated from its
/// single-symbol marginals without forming `Δ̄`.
pub fn mean_distortion_n(omega_n: &DensityOperator, sym: &SymbolwiseObservable) -> Result<f64> {
    let base = sym.base();
    let n = sym.n();
    let factor_dims: Vec<usize> = (0..n).flat_map(|_| base.dims().dims().to_vec()).collect();
    let total: usize = factor_dims.iter().product();
    if omega_n.dim() != total {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for {n} symbols of dimension {}",
            omega_n.dim(),
            base.dim()
        )));
    }
    let per = base.dims().len();
    let mut acc = 0.0;
    for i in 0..n {
        let keep: Vec<usize> = (i * per..(i + 1) * per).collect();
        let marg = linalg::partial_trace_positions(omega_n.matrix(), &factor_dims, &keep);
        acc += linalg::re_trace_product(base.operator(), &marg);
    }
    Ok(acc / n as f64)
}

/// Mean distortion of `ω^{⊗n}`, which equals the single-symbol value.
pub fn mean_distortion_iid(omega: &DensityOperator, sym: &SymbolwiseObservable) -> Result<f64> {
    mean_distortion(omega, sym.base())
}

/// Probabilities `⟨φ_z|ω|φ_z⟩` per spectral group, `Tr{P_g ω}`.
pub fn group_weights(omega: &DensityOperator, groups: &[SpectralGroup]) -> Result<Vec<f64>> {
    if let Some(g) = groups.first() {
        if g.projector.nrows() != omega.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} for an observable of dimension {}",
                omega.dim(),
                g.projector.nrows()
            )));
        }
    }
    Ok(groups
        .iter()
        .map(|g| linalg::re_trace_product(&g.projector, omega.matrix()).max(0.0))
        .collect())
}
