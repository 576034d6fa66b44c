//! Achievability costs of channel simulation with embezzling or maximally
//! entangled assistance, and the two-sided bound in terms of smooth
//! max-information.

use serde::Serialize;

use crate::distortion::DistortionObservable;
use crate::entropies::{h0_smooth, h_min_smooth, i_max_smooth, Certainty};
use crate::error::{Error, Result};
use crate::quantum::{DensityOperator, PureState, QuantumChannel};

use super::{check_open, check_pair, chi1, chi2, require_excess, BoundParameters, BoundResult, Validity};

fn output_labels(channel: &QuantumChannel) -> Vec<String> {
    channel.output_dims().labels().to_vec()
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn omega_for(phi: &PureState, channel: &QuantumChannel, delta: &DistortionObservable) -> Result<DensityOperator> {
    let omega = channel.extend_to_reference(phi)?;
    if omega.dims().dims() != delta.dims().dims() {
        return Err(Error::DimensionMismatch(format!(
            "channel output state on {} against an observable on {}",
            omega.dims(),
            delta.dims()
        )));
    }
    Ok(omega)
}

fn imax_note(certainty: Certainty) -> &'static str {
    match certainty {
        Certainty::HeuristicUpperBound => "smooth I_max term is an upper estimate from alternating minimization",
        _ => "smooth I_max term is exact",
    }
}

/// `½ I_max^{ε/5}(B;R)_ω + χ₁` for a channel with `Tr{Π_{≤D} ω} ≥ 1 − ε/5`.
///
/// An over-estimate of the smooth max-information only loosens this upper
/// bound, so the result stays valid with the heuristic smoothing.
pub fn achievability_embezzling(
    phi: &PureState,
    channel: &QuantumChannel,
    eps: f64,
    delta: &DistortionObservable,
    d: f64,
) -> Result<BoundResult> {
    check_open("eps", eps)?;
    let omega = omega_for(phi, channel, delta)?;
    let within = require_excess(&omega, delta, d, eps / 5.0)?;
    let b_labels = output_labels(channel);
    let im = i_max_smooth(&omega, &as_strs(&b_labels), eps / 5.0)?;
    let (c1, clamped) = chi1(eps, channel.output_dims().total())?;
    let mut b = BoundResult::upper(0.5 * im.value + c1, Validity::Valid, "embezzling_achievability", BoundParameters::new(d).eps(eps))
        .component("half_i_max", 0.5 * im.value)
        .component("chi1", c1)
        .component("within_distortion_probability", within)
        .note(imax_note(im.certainty));
    if clamped {
        b = b.note("log log argument clamped at 2");
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MesParameters {
    pub delta: f64,
    /// `δ′ = δ + √(4√δ − 4δ)`.
    pub delta_prime: f64,
    /// Resulting excess-distortion budget `ε = 2√(5δ′) + 2√δ`.
    pub eps: f64,
}

pub fn mes_parameters(delta: f64) -> Result<MesParameters> {
    check_open("delta", delta)?;
    let dp = delta + (4.0 * delta.sqrt() - 4.0 * delta).sqrt();
    Ok(MesParameters {
        delta,
        delta_prime: dp,
        eps: 2.0 * (5.0 * dp).sqrt() + 2.0 * delta.sqrt(),
    })
}

/// `½[H_0^δ(B)_ω − H_min^δ(B|R)_ω] + log(1/δ′)` for a channel with
/// `Tr{Π_{≤D} ω} ≥ 1 − ε₁`.
pub fn achievability_mes(
    phi: &PureState,
    channel: &QuantumChannel,
    delta_param: f64,
    delta: &DistortionObservable,
    d: f64,
    eps1: f64,
) -> Result<BoundResult> {
    let mp = mes_parameters(delta_param)?;
    check_open("eps1", eps1)?;
    let omega = omega_for(phi, channel, delta)?;
    let within = require_excess(&omega, delta, d, eps1)?;
    let b_labels = output_labels(channel);
    let bl = as_strs(&b_labels);
    let omega_b = omega.partial_trace(&bl)?;
    let h0 = h0_smooth(&omega_b, delta_param)?;
    let r_labels: Vec<String> = omega
        .dims()
        .labels()
        .iter()
        .filter(|l| !b_labels.contains(l))
        .cloned()
        .collect();
    let hmin = h_min_smooth(&omega, &as_strs(&r_labels), delta_param)?;
    // H_min enters with a minus sign: its certified lower end keeps the cost an upper bound.
    let value = 0.5 * (h0.value - hmin.lo()) - mp.delta_prime.log2();
    Ok(
        BoundResult::upper(
            value,
            Validity::Valid,
            "mes_achievability",
            BoundParameters::new(d)
                .eps(mp.eps)
                .with("delta", mp.delta)
                .with("delta_prime", mp.delta_prime)
                .with("eps1", eps1),
        )
        .interval(0.5 * (h0.value - hmin.hi()) - mp.delta_prime.log2(), value)
        .component("h0_smooth", h0.value)
        .component("h_min_smooth", hmin.lo())
        .component("log_inv_delta_prime", -mp.delta_prime.log2())
        .component("within_distortion_probability", within)
        .note("H_0 smoothing by spectral truncation (an upper estimate of the smooth H_0)"),
    )
}

/// Both sides of the sandwich, with the chosen channel per side.
#[derive(Debug, Clone, Serialize)]
pub struct Sandwich {
    pub upper: BoundResult,
    pub lower: BoundResult,
    pub upper_channel: usize,
    pub lower_channel: usize,
}

/// Upper: `min ½I_max^{ε/5} + χ₁` over family channels with
/// `Tr{Π_{≤D}ω} ≥ 1 − ε/5`. Lower: `min ½I_max^{2√(2ε′)} − χ₂` over family
/// channels with `Tr{Π_{≤D}ω} ≥ 1 − ε`; conditional since the family is not
/// exhaustive.
pub fn compression_sandwich(
    phi: &PureState,
    delta: &DistortionObservable,
    d: f64,
    eps: f64,
    eps_prime: f64,
    family: &[QuantumChannel],
) -> Result<Sandwich> {
    check_pair(eps, eps_prime, false)?;
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty channel family".into()));
    }
    let c2 = chi2(eps, eps_prime)?;
    let r_low = 2.0 * (2.0 * eps_prime).sqrt();
    let mut upper: Option<(usize, BoundResult)> = None;
    let mut lower: Option<(usize, BoundResult)> = None;
    for (i, ch) in family.iter().enumerate() {
        let omega = omega_for(phi, ch, delta)?;
        let b_labels = output_labels(ch);
        let bl = as_strs(&b_labels);
        if require_excess(&omega, delta, d, eps / 5.0).is_ok() {
            let b = achievability_embezzling(phi, ch, eps, delta, d)?;
            if upper.as_ref().is_none_or(|(_, u)| b.value < u.value) {
                upper = Some((i, b));
            }
        }
        if require_excess(&omega, delta, d, eps).is_ok() {
            let im = if r_low >= 1.0 {
                f64::NEG_INFINITY
            } else {
                i_max_smooth(&omega, &bl, r_low)?.value
            };
            let params = BoundParameters::new(d).eps(eps).eps_prime(eps_prime);
            let b = BoundResult::lower(0.5 * im - c2, Validity::Conditional, "max_information_converse", params)
                .component("half_i_max", 0.5 * im)
                .component("chi2", c2)
                .note("minimum over the supplied channel family only")
                .note("smooth I_max term is an upper estimate from alternating minimization");
            if lower.as_ref().is_none_or(|(_, l)| b.value < l.value) {
                lower = Some((i, b));
            }
        }
    }
    let (ui, upper) = upper.ok_or_else(|| {
        Error::ConstraintViolated(format!("no family channel has excess-distortion probability ≤ ε/5 = {}", eps / 5.0))
    })?;
    let (li, lower) = lower.ok_or_else(|| {
        Error::ConstraintViolated(format!("no family channel has excess-distortion probability ≤ ε = {eps}"))
    })?;
    Ok(Sandwich {
        upper,
        lower,
        upper_channel: ui,
        lower_channel: li,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropies::{h0, h_min, i_max};
    use crate::linalg::{self, cr, CVec};
    use crate::quantum::SystemDims;
    use rand::SeedableRng;

    fn q(l: &str) -> SystemDims {
        SystemDims::single(l, 2)
    }

    fn setup() -> (PureState, DistortionObservable) {
        let phi = PureState::bell("R", "A").unwrap();
        let delta = DistortionObservable::entanglement_fidelity(&phi, "B").unwrap();
        (phi, delta)
    }

    #[test]
    fn embezzling_identity_channel() {
        let (phi, delta) = setup();
        let ch = QuantumChannel::identity(q("A"), q("B")).unwrap();
        let b = achievability_embezzling(&phi, &ch, 0.5, &delta, 0.0).unwrap();
        let (c1, _) = chi1(0.5, 2).unwrap();
        let eps = 0.5;
        assert!((c1 - (2.0 * (5.0f64 / eps).log2() + 4.0 + (2.0 + 100.0f64).log2().log2())).abs() < 1e-12);
        // Smoothing can only lower the unsmoothed value 2.
        assert!(b.value <= 1.0 + c1 + 1e-7);
        assert!((b.value - b.components["half_i_max"] - c1).abs() < 1e-12);
        let w = ch.extend_to_reference(&phi).unwrap();
        assert!((i_max(&w, &["B"]).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn embezzling_checks_constraint() {
        let (phi, delta) = setup();
        let ch = QuantumChannel::depolarizing(0.3, q("A"), q("B")).unwrap();
        assert!(matches!(
            achievability_embezzling(&phi, &ch, 0.1, &delta, 0.0),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn mes_parameters_formula() {
        let m = mes_parameters(0.01).unwrap();
        assert!((m.delta_prime - (0.01 + (0.4f64 - 0.04).sqrt())).abs() < 1e-15);
        assert!((m.eps - (2.0 * (5.0 * m.delta_prime).sqrt() + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn mes_core_versus_embezzling_core() {
        // With the marginal of B held fixed, a pure state of Schmidt rank d has
        // I_max(B;R) = 2 log d, above H_0(B) − H_min(B|R) = log d + 2 log Σ√p.
        let p = [0.7f64, 0.3];
        let v = CVec::from_vec(vec![cr(p[0].sqrt()), cr(0.0), cr(0.0), cr(p[1].sqrt())]);
        let w = PureState::new(v, SystemDims::new(vec!["R", "B"], vec![2, 2]).unwrap()).unwrap().density();
        let core = h0(&w.partial_trace(&["B"]).unwrap()) - h_min(&w, &["R"]).unwrap();
        let want = 1.0 + 2.0 * (p[0].sqrt() + p[1].sqrt()).log2();
        assert!((core - want).abs() < 1e-6, "{core} vs {want}");
        let im = i_max(&w, &["B"]).unwrap();
        assert!((im - 2.0).abs() < 1e-5, "{im}");
        assert!(im > core + 0.05);
        // What does hold: I_max(B;R) ≤ −log λ_min(ω_B) − H_min(B|R) on full-rank ω_B.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let phi = crate::random::random_pure(SystemDims::new(vec!["R", "A"], vec![2, 2]).unwrap(), &mut rng);
            let ch = crate::random::random_channel(q("A"), q("B"), 2, &mut rng).unwrap();
            let w = ch.extend_to_reference(&phi).unwrap();
            let lmin = linalg::eigvalsh(w.partial_trace(&["B"]).unwrap().matrix())[0];
            let bound = -lmin.log2() - h_min(&w, &["R"]).unwrap();
            let im = i_max(&w, &["B"]).unwrap();
            assert!(im <= bound + 1e-6, "{im} > {bound}");
        }
    }

    #[test]
    fn mes_bound_evaluates() {
        let (phi, delta) = setup();
        let ch = QuantumChannel::identity(q("A"), q("B")).unwrap();
        let b = achievability_mes(&phi, &ch, 0.01, &delta, 0.0, 0.1).unwrap();
        let comp = &b.components;
        let want = 0.5 * (comp["h0_smooth"] - comp["h_min_smooth"]) + comp["log_inv_delta_prime"];
        assert!((b.value - want).abs() < 1e-12);
        assert!(b.lo <= b.value);
    }

    #[test]
    fn sandwich_gap_decomposes() {
        let (phi, delta) = setup();
        let ch = QuantumChannel::depolarizing(0.002, q("A"), q("B")).unwrap();
        let (eps, eps_prime) = (0.01, 0.05);
        let s = compression_sandwich(&phi, &delta, 0.05, eps, eps_prime, std::slice::from_ref(&ch)).unwrap();
        assert!(s.upper.value >= s.lower.value);
        let gap = s.upper.value - s.lower.value;
        let parts = s.upper.components["half_i_max"] - s.lower.components["half_i_max"]
            + s.upper.components["chi1"]
            + s.lower.components["chi2"];
        assert!((gap - parts).abs() < 1e-12);
        assert!(compression_sandwich(&phi, &delta, 0.05, 0.01, 0.6, &[ch]).is_err());
    }
}
