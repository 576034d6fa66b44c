//! The average symbol-wise observable `Δ̄ = (1/n) Σ_i Δ_{R_iB_i}`.
//!
//! Its eigenvectors are products of single-symbol eigenvectors with eigenvalue
//! the average of the factors' eigenvalues, so everything except dense
//! materialization works on the distribution of that average, computed by
//! convolving the per-symbol level distribution.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMat};
use crate::quantum::{DensityOperator, SystemDims};

use super::{group_weights, on_boundary, DistortionObservable, ExcessProjector, SpectralGroup, GROUP_TOL};

/// Largest `n` for which `Δ̄` and its projectors are built densely.
pub const DENSE_MAX_N: usize = 3;

/// One value of the average distortion `(1/n) Σ d_{z_i}` with its weight
/// (a probability, or an eigenvalue multiplicity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub weight: f64,
}

/// `Pr{d̄ > D}` under `ω^{⊗n}` with the boundary bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct ExcessTail {
    pub probability: f64,
    /// Distinct levels within the boundary tolerance of `D`, counted as `≤ D`.
    pub boundary_levels: usize,
    pub boundary_mass: f64,
}

#[derive(Debug)]
pub struct SymbolwiseObservable {
    base: DistortionObservable,
    n: usize,
    groups: Vec<SpectralGroup>,
    spectrum: OnceLock<Vec<Level>>,
}

impl Clone for SymbolwiseObservable {
    fn clone(&self) -> Self {
        Self {
            base: self.base.clone(),
            n: self.n,
            groups: self.groups.clone(),
            spectrum: self.spectrum.clone(),
        }
    }
}

/// Distribution of `(1/n) Σ v_{g_i}` with `g_i` i.i.d. of weight `w_g`
/// (multiplicatively, so multiplicities work too).
pub(crate) fn convolve(values: &[f64], weights: &[f64], n: usize) -> Vec<Level> {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut dp: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for _ in 0..n {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(dp.len() * values.len());
        for &(s, w) in &dp {
            for (&v, &wg) in values.iter().zip(weights) {
                if wg > 0.0 {
                    next.push((s + v, w * wg));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        dp.clear();
        for (s, w) in next {
            match dp.last_mut() {
                Some(last) if s - last.0 <= GROUP_TOL * scale * (1.0 + last.0.abs()) => last.1 += w,
                _ => dp.push((s, w)),
            }
        }
    }
    dp.into_iter()
        .map(|(s, w)| Level {
            value: s / n as f64,
            weight: w,
        })
        .collect()
}

impl SymbolwiseObservable {
    pub fn new(base: DistortionObservable, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be ≥ 1".into()));
        }
        let groups = base.groups();
        Ok(Self {
            base,
            n,
            groups,
            spectrum: OnceLock::new(),
        })
    }

    pub fn base(&self) -> &DistortionObservable {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[SpectralGroup] {
        &self.groups
    }

    pub fn d_max(&self) -> f64 {
        self.base.d_max()
    }

    /// Distinct eigenvalues of `Δ̄` with multiplicities (cached).
    pub fn spectrum_levels(&self) -> &[Level] {
        self.spectrum.get_or_init(|| {
            let v: Vec<f64> = self.groups.iter().map(|g| g.value).collect();
            let w: Vec<f64> = self.groups.iter().map(|g| g.multiplicity as f64).collect();
            convolve(&v, &w, self.n)
        })
    }

    /// Labels `R1, B1, R2, B2, …` from the base labels.
    pub fn dims(&self) -> Result<SystemDims> {
        let bd = self.base.dims();
        let mut labels = Vec::new();
        let mut dims = Vec::new();
        for i in 1..=self.n {
            for (l, &d) in bd.labels().iter().zip(bd.dims()) {
                labels.push(format!("{l}{i}"));
                dims.push(d);
            }
        }
        SystemDims::new(labels, dims)
    }

    fn dense_guard(&self) -> Result<()> {
        if self.n > DENSE_MAX_N {
            return Err(Error::SizeGuard(format!(
                "dense average observable requested at n = {} (limit {DENSE_MAX_N}); use the level distribution instead",
                self.n
            )));
        }
        Ok(())
    }

    /// `(1/n) Σ_i I ⊗ … ⊗ Δ ⊗ … ⊗ I`, built densely.
    pub fn dense(&self) -> Result<DistortionObservable> {
        self.dense_guard()?;
        let dims = self.dims()?;
        let per = self.base.dims().len();
        let mut op = CMat::zeros(dims.total(), dims.total());
        for i in 0..self.n {
            let pos: Vec<usize> = (i * per..(i + 1) * per).collect();
            op += linalg::embed_positions(self.base.operator(), dims.dims(), &pos);
        }
        DistortionObservable::new(op.unscale(self.n as f64), dims)
    }

    /// Every group sequence `(g_1, …, g_n)` in lexicographic order.
    fn sequences(&self) -> Vec<Vec<usize>> {
        let k = self.groups.len();
        let mut out = vec![vec![]];
        for _ in 0..self.n {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (0..k).map(move |g| {
                        let mut t = s.clone();
                        t.push(g);
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Eigenvalues of `Δ̄` from the product structure, ascending, with multiplicity.
    pub fn structured_eigenvalues(&self) -> Result<Vec<f64>> {
        self.dense_guard()?;
        let base = self.base.eigenvalues();
        let mut out = vec![0.0];
        for _ in 0..self.n {
            out = out
                .iter()
                .flat_map(|&s| base.iter().map(move |&v| s + v))
                .collect();
        }
        let mut ev: Vec<f64> = out.into_iter().map(|s| s / self.n as f64).collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Spectral projector of each level, as sums of products of group projectors.
    pub fn structured_level_projectors(&self) -> Result<Vec<(f64, CMat)>> {
        self.dense_guard()?;
        let levels = self.spectrum_levels();
        let d = self.base.dim().pow(self.n as u32);
        let mut out: Vec<(f64, CMat)> = levels.iter().map(|l| (l.value, CMat::zeros(d, d))).collect();
        for seq in self.sequences() {
            let avg = seq.iter().map(|&g| self.groups[g].value).sum::<f64>() / self.n as f64;
            let idx = nearest_level(levels, avg);
            let mut p = self.groups[seq[0]].projector.clone();
            for &g in &seq[1..] {
                p = kron(&p, &self.groups[g].projector);
            }
            out[idx].1 += p;
        }
        Ok(out)
    }

    /// Dense `Π_{>D}` assembled from the product eigenvectors.
    pub fn structured_excess_projector(&self, threshold: f64) -> Result<ExcessProjector> {
        check_threshold(threshold)?;
        let levels = self.structured_level_projectors()?;
        let mult = self.spectrum_levels();
        let d = self.base.dim().pow(self.n as u32);
        let mut p = CMat::zeros(d, d);
        let (mut rank, mut boundary) = (0, 0);
        for ((value, proj), lvl) in levels.into_iter().zip(mult) {
            let m = lvl.weight.round() as usize;
            if on_boundary(value, threshold) {
                boundary += m;
            } else if value > threshold {
                p += proj;
                rank += m;
            }
        }
        Ok(ExcessProjector {
            threshold,
            projector: p,
            rank,
            boundary,
        })
    }

    /// Distribution of the average distortion under `ω^{⊗n}`, where `omega` is
    /// the single-symbol state: level weights `Σ Π_i Tr{P_{g_i} ω}`.
    pub fn level_distribution(&self, omega: &DensityOperator) -> Result<Vec<Level>> {
        let w = group_weights(omega, &self.groups)?;
        let v: Vec<f64> = self.groups.iter().map(|g| g.value).collect();
        Ok(convolve(&v, &w, self.n))
    }

    /// `Tr{Π_{>D} ω^{⊗n}}` without forming any `n`-symbol operator.
    pub fn excess_iid(&self, omega: &DensityOperator, threshold: f64) -> Result<ExcessTail> {
        check_threshold(threshold)?;
        let dist = self.level_distribution(omega)?;
        Ok(tail(&dist, threshold))
    }
}

pub(crate) fn tail(dist: &[Level], threshold: f64) -> ExcessTail {
    let mut t = ExcessTail {
        probability: 0.0,
        boundary_levels: 0,
        boundary_mass: 0.0,
    };
    for l in dist {
        if on_boundary(l.value, threshold) {
            t.boundary_levels += 1;
            t.boundary_mass += l.weight;
        } else if l.value > threshold {
            t.probability += l.weight;
        }
    }
    t.probability = t.probability.clamp(0.0, 1.0);
    t
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("distortion level {threshold} must be ≥ 0")));
    }
    Ok(())
}

fn nearest_level(levels: &[Level], value: f64) -> usize {
    let mut best = 0;
    for (k, l) in levels.iter().enumerate() {
        if (l.value - value).abs() < (levels[best].value - value).abs() {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{excess_probability, excess_projector, mean_distortion, mean_distortion_n};
    use crate::quantum::{PureState, QuantumChannel};
    use crate::linalg::eigh;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ent_fid() -> DistortionObservable {
        DistortionObservable::entanglement_fidelity(&PureState::bell("R", "A").unwrap(), "B").unwrap()
    }

    fn depolarized(p: f64) -> DensityOperator {
        let q = SystemDims::single("A", 2);
        let ch = QuantumChannel::depolarizing(p, q, SystemDims::single("B", 2)).unwrap();
        ch.extend_to_reference(&PureState::bell("R", "A").unwrap()).unwrap()
    }

    #[test]
    fn single_symbol_is_base() {
        let s = SymbolwiseObservable::new(ent_fid(), 1).unwrap();
        let d = s.dense().unwrap();
        assert!((d.operator() - ent_fid().operator()).norm() < 1e-15);
    }

    #[test]
    fn hamming_pairs() {
        let s = SymbolwiseObservable::new(DistortionObservable::hamming(4).unwrap(), 2).unwrap();
        let d = s.dense().unwrap();
        // Basis |x1 y1 x2 y2⟩.
        for x1 in 0..4 {
            for y1 in 0..4 {
                for x2 in 0..4 {
                    for y2 in 0..4 {
                        let k = ((x1 * 4 + y1) * 4 + x2) * 4 + y2;
                        let want = ((x1 != y1) as u8 + (x2 != y2) as u8) as f64 / 2.0;
                        assert!((d.operator()[(k, k)].re - want).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn dense_refused_beyond_three() {
        let s = SymbolwiseObservable::new(ent_fid(), 4).unwrap();
        assert!(matches!(s.dense(), Err(Error::SizeGuard(_))));
        assert_eq!(s.spectrum_levels().len(), 5);
    }

    #[test]
    fn multiplicities_count_the_space() {
        let s = SymbolwiseObservable::new(ent_fid(), 6).unwrap();
        let total: f64 = s.spectrum_levels().iter().map(|l| l.weight).sum();
        assert_eq!(total, 4f64.powi(6));
        // Weight j/6 has C(6,j)·3^j eigenvectors.
        assert_eq!(s.spectrum_levels()[2].weight, 15.0 * 9.0);
    }

    #[test]
    fn implicit_matches_dense_up_to_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = crate::random::random_channel(SystemDims::single("A", 2), SystemDims::single("B", 2), 2, &mut rng).unwrap();
        let omega = ch.extend_to_reference(&PureState::bell("R", "A").unwrap()).unwrap();
        for n in 1..=3 {
            let s = SymbolwiseObservable::new(ent_fid(), n).unwrap();
            let dims = s.dims().unwrap();
            let mut big = omega.matrix().clone();
            for _ in 1..n {
                big = kron(&big, omega.matrix());
            }
            let omega_n = DensityOperator::new(big, dims).unwrap();
            let dense = s.dense().unwrap();
            for t in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.9, 1.0] {
                let implicit = s.excess_iid(&omega, t).unwrap().probability;
                let p = excess_projector(&dense, t).unwrap();
                let direct = excess_probability(&omega_n, &p).unwrap();
                assert!((implicit - direct).abs() < 1e-12, "n {n} D {t}: {implicit} vs {direct}");
            }
            let m = mean_distortion_n(&omega_n, &s).unwrap();
            assert!((m - mean_distortion(&omega, &ent_fid()).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn structured_matches_dense_spectrum() {
        let cases = [
            (ent_fid(), 2),
            (ent_fid(), 3),
            (DistortionObservable::hamming(2).unwrap(), 2),
            (DistortionObservable::hamming(2).unwrap(), 3),
            (DistortionObservable::hamming(4).unwrap(), 2),
        ];
        for (base, n) in cases {
            {
                let s = SymbolwiseObservable::new(base.clone(), n).unwrap();
                let dense = s.dense().unwrap();
                let ev = dense.eigenvalues();
                let st = s.structured_eigenvalues().unwrap();
                assert!(ev.iter().zip(&st).all(|(a, b)| (a - b).abs() < 1e-12));
                for (value, proj) in s.structured_level_projectors().unwrap() {
                    let oracle = eigh(dense.operator()).projector(|v| (v - value).abs() < 1e-9);
                    assert!((proj - oracle).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn dp_against_binomial() {
        // Depolarized Bell pairs: the level j/n has weight C(n,j) q^j (1−q)^{n−j}, q = 3p/4.
        let p = 0.2;
        let q: f64 = 0.75 * p;
        let omega = depolarized(p);
        let n = 12;
        let s = SymbolwiseObservable::new(ent_fid(), n).unwrap();
        let dist = s.level_distribution(&omega).unwrap();
        let mut binom = 1.0;
        for (j, l) in dist.iter().enumerate() {
            let want = binom * q.powi(j as i32) * (1.0 - q).powi((n - j) as i32);
            assert!((l.weight - want).abs() < 1e-12);
            binom = binom * (n - j) as f64 / (j + 1) as f64;
        }
        let t = s.excess_iid(&omega, 0.3).unwrap();
        let oracle: f64 = dist.iter().filter(|l| l.value > 0.3).map(|l| l.weight).sum();
        assert!((t.probability - oracle).abs() < 1e-12);
    }

    #[test]
    fn boundary_levels_go_below() {
        let s = SymbolwiseObservable::new(ent_fid(), 3).unwrap();
        let omega = depolarized(0.5);
        let t = s.excess_iid(&omega, 1.0 / 3.0).unwrap();
        assert_eq!(t.boundary_levels, 1);
        let p = s.structured_excess_projector(1.0 / 3.0).unwrap();
        // Weights j = 1, 2, 3 carry 9, 27, 27 eigenvectors.
        assert_eq!(p.boundary, 9);
        assert_eq!(p.rank, 54);
    }
}
