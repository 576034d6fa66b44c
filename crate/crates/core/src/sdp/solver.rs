//! Infeasible-start primal-dual interior point method with Nesterov–Todd
//! scaling on dense complex Hermitian blocks.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{self, eigh, frobenius, re_trace_product, symmetrize, CMat};

use super::problem::{BlockId, SdpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    InfeasibleSuspected,
}

impl SdpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIter => "max_iter",
            SdpStatus::InfeasibleSuspected => "infeasible_suspected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Relative duality gap `(p − d)/(1 + |p| + |d|)`.
    pub tol_gap: f64,
    /// Relative primal and dual residuals.
    pub tol_feas: f64,
    pub max_iter: usize,
    /// Fraction of the step to the boundary.
    pub step: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-7,
            tol_feas: 1e-8,
            max_iter: 120,
            step: 0.95,
        }
    }
}

impl SdpOptions {
    pub fn with_tol_gap(mut self, tol: f64) -> Self {
        self.tol_gap = tol;
        self.tol_feas = self.tol_feas.min(tol).max(1e-12);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterLog {
    pub iter: usize,
    pub primal: f64,
    pub dual: f64,
    /// Complementarity `⟨X, Z⟩`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal: Vec<CMat>,
    pub dual: Vec<f64>,
    pub dual_slack: Vec<CMat>,
    pub status: SdpStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `primal_value − dual_value`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub log: Vec<IterLog>,
}

impl SdpSolution {
    pub fn block(&self, b: BlockId) -> &CMat {
        &self.primal[b.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// `[dual value, primal value]`, ordered.
    pub fn interval(&self) -> (f64, f64) {
        (
            self.dual_value.min(self.primal_value),
            self.dual_value.max(self.primal_value),
        )
    }

    pub fn relative_gap(&self) -> f64 {
        self.gap.abs() / (1.0 + self.primal_value.abs() + self.dual_value.abs())
    }

    /// Iterate log as CSV.
    pub fn log_csv(&self) -> String {
        let mut s = String::from(
            "iter,primal,dual,gap,primal_residual,dual_residual,step_primal,step_dual\n",
        );
        for l in &self.log {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6},{:.6}\n",
                l.iter,
                l.primal,
                l.dual,
                l.gap,
                l.primal_residual,
                l.dual_residual,
                l.step_primal,
                l.step_dual
            ));
        }
        s
    }
}

/// Sparse-ish view of the constraint data grouped per block.
struct BlockTerms {
    /// For each block, the `(constraint index, A_ij)` pairs touching it.
    per_block: Vec<Vec<(usize, CMat)>>,
}

impl BlockTerms {
    fn new(p: &SdpProblem) -> Self {
        let mut per_block = vec![Vec::new(); p.blocks.len()];
        for (i, c) in p.constraints.iter().enumerate() {
            for (b, a) in &c.terms {
                per_block[*b].push((i, a.clone()));
            }
        }
        Self { per_block }
    }

    /// `𝒜(X)`.
    fn apply(&self, x: &[CMat], m: usize) -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (b, terms) in self.per_block.iter().enumerate() {
            for (i, a) in terms {
                out[*i] += re_trace_product(a, &x[b]);
            }
        }
        out
    }

    /// `𝒜*(y)` per block.
    fn adjoint(&self, y: &DVector<f64>, dims: &[usize]) -> Vec<CMat> {
        dims.iter()
            .enumerate()
            .map(|(b, &d)| {
                let mut s = CMat::zeros(d, d);
                for (i, a) in &self.per_block[b] {
                    if y[*i] != 0.0 {
                        s += a.scale(y[*i]);
                    }
                }
                s
            })
            .collect()
    }
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| re_trace_product(x, y)).sum()
}

fn norm(a: &[CMat]) -> f64 {
    a.iter().map(|x| frobenius(x).powi(2)).sum::<f64>().sqrt()
}

/// Cholesky factor `L` of a Hermitian PD matrix, falling back to an
/// eigenvalue floor when round-off has made it marginally indefinite.
fn chol_l(x: &CMat) -> CMat {
    if let Some(ch) = Cholesky::new(x.clone()) {
        return ch.l();
    }
    let e = eigh(x);
    let floor = 1e-300_f64.max(e.max_abs() * 1e-16);
    Cholesky::new(e.map(|v| v.max(floor)))
        .expect("floored matrix is PD")
        .l()
}

fn lower_inv(l: &CMat) -> CMat {
    l.solve_lower_triangular(&linalg::identity(l.nrows()))
        .expect("triangular solve with nonzero diagonal")
}

fn chol_inv_factor(x: &CMat) -> CMat {
    lower_inv(&chol_l(x))
}

/// Largest `α ≤ 1/step` with `X + αΔX ⪰ 0`, given `L⁻¹` for `X = LL†`.
fn max_step(linv: &CMat, dx: &CMat) -> f64 {
    let t = linv * dx * linv.adjoint();
    let lmin = eigh(&t).min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Scaling {
    w: Vec<CMat>,
    z_inv: Vec<CMat>,
}

fn nt_scaling(x: &[CMat], z: &[CMat]) -> Scaling {
    let mut w = Vec::with_capacity(x.len());
    let mut z_inv = Vec::with_capacity(x.len());
    for (xb, zb) in x.iter().zip(z) {
        let l = chol_l(xb);
        let s = l.adjoint() * zb * &l;
        let e = eigh(&s);
        let s_inv_half = e.map(|v| 1.0 / v.max(1e-300).sqrt());
        w.push(symmetrize(&(&l * s_inv_half * l.adjoint())));
        let lz_inv = chol_inv_factor(zb);
        z_inv.push(lz_inv.adjoint() * lz_inv);
    }
    Scaling { w, z_inv }
}

fn schur(terms: &BlockTerms, sc: &Scaling, m: usize) -> DMatrix<f64> {
    let mut mm = DMatrix::<f64>::zeros(m, m);
    for (b, list) in terms.per_block.iter().enumerate() {
        let w = &sc.w[b];
        let waw: Vec<CMat> = list.iter().map(|(_, a)| w * a * w).collect();
        for (p, (i, ai)) in list.iter().enumerate() {
            for (q, (j, _)) in list.iter().enumerate().skip(p) {
                let v = re_trace_product(ai, &waw[q]);
                mm[(*i, *j)] += v;
                if p != q {
                    mm[(*j, *i)] += v;
                }
            }
        }
    }
    mm
}

enum Factor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn new(m: DMatrix<f64>) -> Self {
        let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
        if let Some(c) = Cholesky::new(m.clone()) {
            return Factor::Chol(c);
        }
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-14 * scale.max(1e-300);
        }
        if let Some(c) = Cholesky::new(reg) {
            return Factor::Chol(c);
        }
        Factor::Lu(m.lu())
    }

    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Chol(c) => c.solve(r),
            Factor::Lu(l) => l.solve(r).unwrap_or_else(|| DVector::zeros(r.len())),
        }
    }
}

/// Initial-point scalings tried in turn; later entries only run when the
/// earlier ones fail to converge.
const INIT_SCALES: [(f64, f64); 4] = [(1.0, 1.0), (10.0, 10.0), (0.1, 1.0), (100.0, 0.1)];

/// Solves `p` with the given options, restarting from rescaled initial points
/// if the first run does not converge; the best run is returned.
pub fn solve_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    p.check()?;
    let mut best: Option<SdpSolution> = None;
    for init in INIT_SCALES {
        let sol = run(p, opts, init);
        if sol.is_optimal() {
            return Ok(sol);
        }
        let better = best.as_ref().is_none_or(|b| merit(&sol) < merit(b));
        if better {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one run"))
}

fn merit(s: &SdpSolution) -> f64 {
    let gap = (s.primal_value - s.dual_value).abs() / (1.0 + s.primal_value.abs() + s.dual_value.abs());
    gap.max(s.primal_residual).max(s.dual_residual)
}

fn run(p: &SdpProblem, opts: &SdpOptions, init: (f64, f64)) -> SdpSolution {
    let dims = p.blocks.clone();
    let m = p.constraints.len();
    let n_total: usize = dims.iter().sum();
    let terms = BlockTerms::new(p);
    let b = DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs));
    let c: Vec<CMat> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| p.objective[k].clone().unwrap_or_else(|| CMat::zeros(d, d)))
        .collect();

    let b_norm = b.norm();
    let c_norm = norm(&c);
    let a_norms: Vec<f64> = p
        .constraints
        .iter()
        .map(|c| {
            c.terms
                .iter()
                .map(|(_, a)| frobenius(a).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let nroot = (n_total as f64).sqrt();
    let xi = (0..m)
        .map(|i| nroot * (1.0 + b[i].abs()) / (1.0 + a_norms[i]))
        .fold(nroot.max(1.0), f64::max)
        * init.0;
    let eta = a_norms
        .iter()
        .copied()
        .fold((1.0 + c_norm).max(nroot), f64::max)
        * init.1;

    let mut x: Vec<CMat> = dims.iter().map(|&d| linalg::identity(d).scale(xi)).collect();
    let mut z: Vec<CMat> = dims.iter().map(|&d| linalg::identity(d).scale(eta)).collect();
    let mut y = DVector::<f64>::zeros(m);

    let mut log = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut best_merit = f64::INFINITY;
    let mut stall = 0usize;
    let mut merits: Vec<f64> = Vec::new();
    // Best iterate by merit; reported when the run ends without converging.
    let mut best: Option<(Vec<CMat>, DVector<f64>, Vec<CMat>, IterLog)> = None;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = terms.apply(&x, m);
        let rp = &b - &ax;
        let aty = terms.adjoint(&y, &dims);
        let rd: Vec<CMat> = (0..dims.len()).map(|k| &c[k] - &aty[k] - &z[k]).collect();
        let pobj = inner(&c, &x);
        let dobj = b.dot(&y);
        let comp = inner(&x, &z);
        let pres = rp.norm() / (1.0 + b_norm);
        let dres = norm(&rd) / (1.0 + c_norm);
        let rel_gap = (pobj - dobj).abs().max(comp.max(0.0))
            / (1.0 + pobj.abs() + dobj.abs());

        let mut entry = IterLog {
            iter,
            primal: pobj,
            dual: dobj,
            gap: comp,
            primal_residual: pres,
            dual_residual: dres,
            step_primal: 0.0,
            step_dual: 0.0,
        };

        if rel_gap <= opts.tol_gap && pres <= opts.tol_feas && dres <= opts.tol_feas {
            log.push(entry);
            status = SdpStatus::Optimal;
            break;
        }
        let big = 1e12 * (1.0 + xi + eta);
        if y.amax() > big || norm(&x) > big {
            log.push(entry);
            status = SdpStatus::InfeasibleSuspected;
            break;
        }
        let cur = rel_gap.max(pres).max(dres);
        if cur < best_merit {
            best = Some((x.clone(), y.clone(), z.clone(), entry.clone()));
        }
        if cur < best_merit * 0.999 {
            stall = 0;
        } else {
            stall += 1;
        }
        best_merit = best_merit.min(cur);
        merits.push(cur);
        // Recent steady progress keeps a run alive even below its earlier best.
        let recent = iter >= 10 && cur < 0.5 * merits[iter - 10];
        if stall >= 25 && !recent {
            log.push(entry);
            status = if pres > 1e3 * opts.tol_feas {
                SdpStatus::InfeasibleSuspected
            } else {
                SdpStatus::MaxIter
            };
            break;
        }
        if iter == opts.max_iter {
            log.push(entry);
            break;
        }

        let mu = comp / n_total as f64;
        let sc = nt_scaling(&x, &z);
        let factor = Factor::new(schur(&terms, &sc, m));
        let lx_inv: Vec<CMat> = x.iter().map(chol_inv_factor).collect();
        let lz_inv: Vec<CMat> = z.iter().map(chol_inv_factor).collect();

        // Complementarity right-hand side `σμZ⁻¹ − X − sym(ΔXₐΔZₐZ⁻¹)`.
        let direction = |sigma: f64, corr: Option<(&[CMat], &[CMat])>| {
            let rc: Vec<CMat> = (0..dims.len())
                .map(|k| {
                    let base = sc.z_inv[k].scale(sigma * mu) - &x[k];
                    match corr {
                        Some((dxa, dza)) => base - symmetrize(&(&dxa[k] * &dza[k] * &sc.z_inv[k])),
                        None => base,
                    }
                })
                .collect();
            let inner_term: Vec<CMat> = (0..dims.len())
                .map(|k| &rc[k] - &sc.w[k] * &rd[k] * &sc.w[k])
                .collect();
            let rhs = &rp - terms.apply(&inner_term, m);
            let dy = factor.solve(&rhs);
            let atdy = terms.adjoint(&dy, &dims);
            let dz: Vec<CMat> = (0..dims.len()).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<CMat> = (0..dims.len())
                .map(|k| symmetrize(&(&rc[k] - &sc.w[k] * &dz[k] * &sc.w[k])))
                .collect();
            (dx, dy, dz)
        };
        let steps = |dx: &[CMat], dz: &[CMat]| {
            let ap = (0..dims.len())
                .map(|k| max_step(&lx_inv[k], &dx[k]))
                .fold(f64::INFINITY, f64::min);
            let ad = (0..dims.len())
                .map(|k| max_step(&lz_inv[k], &dz[k]))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let (dx_a, _, dz_a) = direction(0.0, None);
        let (ap_a, ad_a) = steps(&dx_a, &dz_a);
        let (ap_a, ad_a) = (ap_a.min(1.0), ad_a.min(1.0));
        let mut comp_aff = 0.0;
        for k in 0..dims.len() {
            let xa = &x[k] + dx_a[k].scale(ap_a);
            let za = &z[k] + dz_a[k].scale(ad_a);
            comp_aff += re_trace_product(&xa, &za);
        }
        let mu_aff = comp_aff.max(0.0) / n_total as f64;
        // Short predictor steps call for more centering.
        let expon = (3.0 * ap_a.min(ad_a).powi(2)).max(1.0);
        let sigma = if mu > 0.0 {
            (mu_aff / mu).powf(expon).clamp(0.0, 1.0)
        } else {
            0.0
        };

        let (dx, dy, dz) = direction(sigma, Some((&dx_a, &dz_a)));
        let (ap, ad) = steps(&dx, &dz);
        let ap = (opts.step * ap).min(1.0);
        let ad = (opts.step * ad).min(1.0);
        for k in 0..dims.len() {
            x[k] = symmetrize(&(&x[k] + dx[k].scale(ap)));
            z[k] = symmetrize(&(&z[k] + dz[k].scale(ad)));
        }
        y += dy.scale(ad);
        entry.step_primal = ap;
        entry.step_dual = ad;
        log.push(entry);
    }

    let mut last = log.last().cloned().expect("at least one iterate");
    if status != SdpStatus::Optimal {
        if let Some((bx, by, bz, be)) = best {
            if be.iter != last.iter {
                x = bx;
                y = by;
                z = bz;
                last = be;
            }
        }
    }
    SdpSolution {
        primal: x,
        dual: y.iter().copied().collect(),
        dual_slack: z,
        status,
        primal_value: last.primal,
        dual_value: last.dual,
        gap: last.primal - last.dual,
        primal_residual: last.primal_residual,
        dual_residual: last.dual_residual,
        iterations,
        log,
    }
}

pub fn solve(p: &SdpProblem, tol_gap: f64, max_iter: usize) -> Result<SdpSolution> {
    let opts = SdpOptions {
        max_iter,
        ..SdpOptions::default().with_tol_gap(tol_gap)
    };
    solve_with(p, &opts)
}
