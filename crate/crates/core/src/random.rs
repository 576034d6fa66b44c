//! Seeded random states and channels for property checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{c, CMat, CVec};
use crate::quantum::{DensityOperator, PureState, QuantumChannel, SystemDims};

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

pub fn random_pure<R: Rng + ?Sized>(dims: SystemDims, rng: &mut R) -> PureState {
    let g = ginibre(dims.total(), 1, rng);
    let mut v: CVec = g.column(0).into_owned();
    let n = v.norm();
    v.unscale_mut(n);
    PureState::new(v, dims).expect("normalized by construction")
}

/// `GG†/Tr(GG†)` with a `d × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(dims: SystemDims, rank: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(dims.total(), rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = crate::linalg::trace(&m).re;
    DensityOperator::from_parts(m.unscale(t), dims)
}

/// Full-rank random state.
pub fn random_state<R: Rng + ?Sized>(dims: SystemDims, rng: &mut R) -> DensityOperator {
    let d = dims.total();
    random_density(dims, d, rng)
}

pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    isometry(d, d, rng)
}

fn isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix column phases so the distribution is Haar.
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let ph = d / n;
            for i in 0..rows {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Channel from a random Stinespring isometry with `kraus_rank` Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(
    input: SystemDims,
    output: SystemDims,
    kraus_rank: usize,
    rng: &mut R,
) -> Result<QuantumChannel> {
    let (din, dout) = (input.total(), output.total());
    let r = kraus_rank.max(1);
    let v = isometry(dout * r, din, rng);
    let kraus = (0..r)
        .map(|k| v.rows(k * dout, dout).into_owned())
        .collect();
    QuantumChannel::from_kraus(kraus, input, output)
}

/// Random PSD contraction `0 ⪯ Λ ⪯ I`.
pub fn random_effect<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let u = random_unitary(d, rng);
    let vals: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    &u * crate::linalg::diag_real(&vals) * u.adjoint()
}
