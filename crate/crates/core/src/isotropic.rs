//! Finite-blocklength formulas for the isotropic qubit source under the
//! entanglement-fidelity distortion, where everything reduces to the
//! uniform 4-ary source with Hamming distortion and the ball sizes
//! `S_k = Σ_{j≤k} C(n,j) 3^j`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::h2;

/// `Σ_{j=0}^{k} C(n,j)·3^j`, exactly.
pub fn s_k(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    // Horner form without per-term division: with W_j = n!/(n−j)!·3^j,
    // H_j = j·H_{j−1} + W_j = Σ_{i≤j} W_i j!/i!, and S_k = H_k / k!.
    let mut w = BigUint::one();
    let mut h = BigUint::one();
    let mut fact = BigUint::one();
    for j in 1..=k {
        w *= 3 * (n - j + 1);
        h *= j;
        h += &w;
        fact *= j;
    }
    Ok(h / fact)
}

/// `log₂` of a positive big integer, from its top 64 bits.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let shift = x.bits().saturating_sub(64);
    let top = (x >> shift).to_u64().expect("top 64 bits");
    (top as f64).log2() + shift as f64
}

/// `⌊nD⌋`, rounding `nD` to the nearest integer when it sits on the
/// boundary up to floating-point error (e.g. `100 · 0.29`).
pub(crate) fn ball_index(n: u64, d: f64) -> u64 {
    let x = n as f64 * d;
    let k = if crate::distortion::on_boundary(x, x.round()) { x.round() } else { x.floor() };
    (k.max(0.0) as u64).min(n)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be ≥ 1".into()));
    }
    Ok(())
}

fn check_open_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    Ok(())
}

fn check_interior_d(d: f64) -> Result<()> {
    if !(d > 0.0 && d < 0.75) {
        return Err(Error::InvalidParameter(format!("D = {d} outside (0, 3/4)")));
    }
    Ok(())
}

/// `log₂ S_{⌊nD⌋}`.
pub fn log2_s(n: u64, d: f64) -> Result<f64> {
    Ok(log2_big(&s_k(n, ball_index(n, d))?))
}

/// `C(n,k)·3^k`.
fn ball_shell(n: u64, k: u64) -> BigUint {
    let mut t = BigUint::one();
    for j in 1..=k {
        t *= 3 * (n - j + 1);
        t /= j;
    }
    t
}

/// `log₂ S_{⌊nD⌋}` for every `n` in `lo..=hi`, exactly, walking the ball
/// sizes incrementally: `S(n+1,k) = 4S(n,k) − 3t(n,k)` and
/// `S(n,k+1) = S(n,k) + t(n,k+1)` with shells `t(n,k) = C(n,k)3^k`.
pub fn log2_s_sweep(lo: u64, hi: u64, d: f64) -> Result<Vec<f64>> {
    check_n(lo)?;
    if hi < lo {
        return Err(Error::InvalidParameter(format!("empty range {lo}..={hi}")));
    }
    let mut k = ball_index(lo, d);
    let mut s = s_k(lo, k)?;
    let mut t = ball_shell(lo, k);
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);
    out.push(log2_big(&s));
    for n in lo..hi {
        s = (&s << 2) - &t * 3u32;
        t = t * (n + 1) / (n + 1 - k);
        let target = ball_index(n + 1, d);
        if target < k {
            k = target;
            s = s_k(n + 1, k)?;
            t = ball_shell(n + 1, k);
        }
        while k < target {
            t = t * (3 * (n + 1 - k)) / (k + 1);
            k += 1;
            s += &t;
        }
        out.push(log2_big(&s));
    }
    Ok(out)
}

/// `1 − (1/2n) log₂ S_{⌊nD⌋} + (1/2n) log₂(1−ε)`: a lower bound on the
/// entanglement-assisted qubit rate.
pub fn converse_rate(n: u64, d: f64, eps: f64) -> Result<f64> {
    check_n(n)?;
    check_interior_d(d)?;
    check_open_eps(eps)?;
    let nf = n as f64;
    Ok(1.0 - log2_s(n, d)? / (2.0 * nf) + (1.0 - eps).log2() / (2.0 * nf))
}

/// `ln(1 − x)` with `x = S·4^{−n}`: through `ln_1p` for small `x`, through
/// the exact difference `4^n − S` otherwise.
fn ln_miss(n: u64, d: f64) -> Result<f64> {
    let s = s_k(n, ball_index(n, d))?;
    let total = BigUint::one() << (2 * n);
    if s >= total {
        return Ok(f64::NEG_INFINITY);
    }
    let x = (log2_big(&s) - 2.0 * n as f64).exp2();
    if x < 0.5 {
        return Ok((-x).ln_1p());
    }
    let rest = total - s;
    Ok((log2_big(&rest) - 2.0 * n as f64) * std::f64::consts::LN_2)
}

fn eps_from_ln(ln_miss: f64, m: &BigUint) -> f64 {
    if ln_miss == f64::NEG_INFINITY {
        return 0.0;
    }
    let mf = m.to_f64().unwrap_or(f64::INFINITY);
    (mf * ln_miss).exp()
}

/// Random-coding excess probability `(1 − S_{⌊nD⌋}4^{−n})^M`.
pub fn achievability_eps(n: u64, m: &BigUint, d: f64) -> Result<f64> {
    check_n(n)?;
    if m.is_zero() {
        return Err(Error::InvalidParameter("codebook size must be ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidParameter(format!("D = {d} outside [0, 1]")));
    }
    Ok(eps_from_ln(ln_miss(n, d)?, m))
}

/// Smallest `M` with `achievability_eps(n, M, D) ≤ ε`, by doubling then
/// bisection.
pub fn m_star(n: u64, d: f64, eps: f64) -> Result<BigUint> {
    check_n(n)?;
    check_open_eps(eps)?;
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidParameter(format!("D = {d} outside [0, 1]")));
    }
    let lm = ln_miss(n, d)?;
    let ok = |m: &BigUint| eps_from_ln(lm, m) <= eps;
    let one = BigUint::one();
    if ok(&one) {
        return Ok(one);
    }
    if !(lm < 0.0) {
        return Err(Error::InvalidParameter(format!("miss probability underflows at n = {n}, D = {d}")));
    }
    let mut hi = BigUint::from(2u32);
    while !ok(&hi) {
        hi <<= 1;
    }
    let mut lo = &hi >> 1; // fails
    while &hi - &lo > one {
        let mid = (&lo + &hi) >> 1;
        if ok(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct Achievability {
    pub m_star: String,
    /// `(1/n) log₂ M*` in bits per symbol.
    pub classical_rate: f64,
    /// Half the classical rate, via super-dense coding.
    pub quantum_rate: f64,
}

pub fn achievability_rate(n: u64, d: f64, eps: f64) -> Result<Achievability> {
    let m = m_star(n, d, eps)?;
    let classical = log2_big(&m) / n as f64;
    Ok(Achievability {
        m_star: m.to_string(),
        classical_rate: classical,
        quantum_rate: 0.5 * classical,
    })
}

/// `n h₂(D) + nD log₂3 − ½ log₂ n`, the estimate of `log₂ S_{⌊nD⌋}` without
/// its `O(1)` term.
pub fn asymptotic_estimate(n: u64, d: f64) -> Result<f64> {
    check_n(n)?;
    check_interior_d(d)?;
    let nf = n as f64;
    Ok(nf * h2(d) + nf * d * 3f64.log2() - 0.5 * nf.log2())
}

/// `1 − ½[h₂(D) + D log₂3]`, the entanglement-assisted rate-distortion
/// function of the isotropic qubit (zero for `D ≥ 3/4`).
pub fn closed_form_rate(d: f64) -> f64 {
    if d >= 0.75 {
        return 0.0;
    }
    let d = d.max(0.0);
    1.0 - 0.5 * (h2(d) + d * 3f64.log2())
}

/// `1 − ½[h₂(D) + D log₂3] + (1/4n) log₂ n`, the rate up to `O(1/n)`.
pub fn rate_approx(n: u64, d: f64) -> Result<f64> {
    check_n(n)?;
    check_interior_d(d)?;
    let nf = n as f64;
    Ok(closed_form_rate(d) + nf.log2() / (4.0 * nf))
}

/// One row of an isotropic sweep.
#[derive(Debug, Clone, Serialize)]
pub struct IsotropicRow {
    pub n: u64,
    pub d: f64,
    pub eps: f64,
    pub converse_rate: f64,
    pub achievability_rate_quantum: f64,
    pub achievability_rate_classical: f64,
    pub rate_approx: f64,
    pub log_s_exact: f64,
    pub log_s_estimate: f64,
}

pub fn sweep_row(n: u64, d: f64, eps: f64) -> Result<IsotropicRow> {
    let a = achievability_rate(n, d, eps)?;
    Ok(IsotropicRow {
        n,
        d,
        eps,
        converse_rate: converse_rate(n, d, eps)?,
        achievability_rate_quantum: a.quantum_rate,
        achievability_rate_classical: a.classical_rate,
        rate_approx: rate_approx(n, d)?,
        log_s_exact: log2_s(n, d)?,
        log_s_estimate: asymptotic_estimate(n, d)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_matches_direct_ball_sizes() {
        for d in [0.0, 0.1, 0.25, 0.3, 0.74, 1.0] {
            let sweep = log2_s_sweep(1, 120, d).unwrap();
            for (i, v) in sweep.iter().enumerate() {
                let n = i as u64 + 1;
                assert_eq!(*v, log2_s(n, d).unwrap(), "n = {n}, D = {d}");
            }
        }
        let tail = log2_s_sweep(4000, 4010, 0.25).unwrap();
        assert_eq!(tail[10], log2_s(4010, 0.25).unwrap());
    }

    #[test]
    fn ball_index_tolerates_representation_error() {
        assert_eq!(ball_index(100, 0.29), 29);
        assert_eq!(ball_index(10, 0.3), 3);
        assert_eq!(ball_index(8, 0.26), 2);
        assert_eq!(ball_index(4, 2.0), 4);
    }

    fn binom_oracle(n: u64, k: u64) -> u128 {
        let mut b: u128 = 1;
        for j in 0..k {
            b = b * (n - j) as u128 / (j + 1) as u128;
        }
        b
    }

    #[test]
    fn s_k_values() {
        assert_eq!(s_k(5, 0).unwrap(), BigUint::one());
        assert_eq!(s_k(7, 7).unwrap(), BigUint::from(4u32).pow(7));
        assert_eq!(s_k(20, 3).unwrap(), BigUint::from(32551u32));
        assert_eq!(s_k(8, 2).unwrap(), BigUint::from(277u32));
        assert!(s_k(3, 4).is_err());
        for k in 1..=30 {
            let diff = s_k(30, k).unwrap() - s_k(30, k - 1).unwrap();
            let want = binom_oracle(30, k) * 3u128.pow(k as u32);
            assert_eq!(diff, BigUint::from(want));
        }
    }

    #[test]
    fn big_logs() {
        let x = BigUint::one() << 200u32;
        assert!((log2_big(&x) - 200.0).abs() < 1e-12);
        assert!((log2_big(&BigUint::from(277u32)) - 277f64.log2()).abs() < 1e-15);
        let y = (BigUint::one() << 100u32) * 3u32;
        assert!((log2_big(&y) - (100.0 + 3f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn converse_example() {
        let v = converse_rate(8, 0.25, 0.01).unwrap();
        let want = 1.0 - 277f64.log2() / 16.0 + 0.99f64.log2() / 16.0;
        assert!((v - want).abs() < 1e-14);
        assert!((v - 0.49198).abs() < 1e-5);
    }

    #[test]
    fn achievability_example() {
        let e = achievability_eps(8, &BigUint::from(1000u32), 0.25).unwrap();
        let want = (1.0 - 277.0 / 65536.0f64).powi(1000);
        assert!((e - want).abs() < 1e-14);
        assert!((e - 0.01448).abs() < 1e-5);
        // Everything is within distortion 1.
        assert_eq!(achievability_eps(8, &BigUint::one(), 1.0).unwrap(), 0.0);
        assert_eq!(m_star(8, 1.0, 0.01).unwrap(), BigUint::one());
    }

    #[test]
    fn m_star_is_minimal() {
        for (n, d, eps) in [(8, 0.25, 0.01), (16, 0.1, 0.1), (32, 0.5, 0.01)] {
            let m = m_star(n, d, eps).unwrap();
            assert!(achievability_eps(n, &m, d).unwrap() <= eps);
            let below = &m - BigUint::one();
            if !below.is_zero() {
                assert!(achievability_eps(n, &below, d).unwrap() > eps);
            }
        }
    }

    #[test]
    fn ordering_and_limits() {
        for n in [4, 8, 16, 32, 64] {
            let c = converse_rate(n, 0.25, 0.01).unwrap();
            let a = achievability_rate(n, 0.25, 0.01).unwrap();
            assert!(c <= a.quantum_rate, "n {n}: {c} > {}", a.quantum_rate);
        }
        assert!((closed_form_rate(0.25) - 0.39624).abs() < 1e-5);
        assert_eq!(closed_form_rate(0.8), 0.0);
    }

    #[test]
    fn estimate_band() {
        for n in [16, 64, 256, 1024, 4096] {
            let r = log2_s(n, 0.25).unwrap() - asymptotic_estimate(n, 0.25).unwrap();
            assert!(r.abs() <= 3.0, "n {n}: residual {r}");
        }
    }
}
