//! Null-space-constant upper bounds and the recovery conditions derived from them.
//!
//! For a matrix with `δ_{2K₀} < 1` and `1 ≤ K ≤ K₀`, with `L' = 2K₀ − K + 1`:
//!
//! ```text
//! γ*      = (K / L') · g(ζ)
//! ζ       = L' (π + β) C' / (√K √(L' − 1))
//! C'      = ((√2 + 1)/2) · δ / (1 − δ)
//! π       = max{α, 1/2 + 1/(2L')}
//! ```
//!
//! where `(α, β)` are the Hölder coefficients for `q = 1, s = L'`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::RicProfile;
use crate::holder::select_coefficients;
use crate::spf::{Family, SparsityFunction};

/// Deltas at or above this are rejected; `C'` would no longer be finite-meaningful.
pub const MAX_DELTA: f64 = 1.0 - 1e-15;

/// Constant in the Gaussian sample-size estimate.
pub const GAUSSIAN_ROWS_CONSTANT: f64 = 80.098;

const SQRT2_PLUS_1: f64 = std::f64::consts::SQRT_2 + 1.0;

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) || delta >= MAX_DELTA {
        return Err(Error::domain(format!(
            "delta must lie in [0,1), got {delta}"
        )));
    }
    Ok(())
}

fn check_orders(k: usize, k0: usize) -> Result<()> {
    if k == 0 || k0 < k {
        return Err(Error::domain(format!(
            "orders must satisfy 1 <= K <= K0, got K={k}, K0={k0}"
        )));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("p must lie in (0,1], got {p}")));
    }
    Ok(())
}

/// `C'_{2K₀} = ((√2+1)/2) δ/(1−δ)`.
pub fn c_prime(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(SQRT2_PLUS_1 / 2.0 * delta / (1.0 - delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NscBoundInput {
    pub k: usize,
    pub k0: usize,
    pub delta: f64,
}

impl NscBoundInput {
    pub fn new(k: usize, k0: usize, delta: f64) -> Result<Self> {
        check_orders(k, k0)?;
        check_delta(delta)?;
        Ok(Self { k, k0, delta })
    }

    /// `L' = 2K₀ − K + 1`.
    pub fn l_prime(&self) -> usize {
        2 * self.k0 - self.k + 1
    }

    /// `√K √(L' − 1)`, the common denominator of every ζ.
    fn zeta_denominator(&self) -> f64 {
        (self.k as f64).sqrt() * ((self.l_prime() - 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NscBoundResult {
    pub c_prime: f64,
    pub zeta: f64,
    pub pi_f: f64,
    pub gamma_star: f64,
    pub recoverable: bool,
}

/// Which ζ the mixed-norm bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaVariant {
    /// `max{2L', 3L' − 2p₁L' + 1}`: the general composition.
    #[default]
    Sharp,
    /// `3L' + 1`: the looser closed form.
    Published,
}

/// `ζ₁ = (3L' − 1) C' / (2 √K √(L'−1))`.
pub fn zeta_one(input: &NscBoundInput) -> Result<f64> {
    let lp = input.l_prime() as f64;
    Ok((3.0 * lp - 1.0) * c_prime(input.delta)? / (2.0 * input.zeta_denominator()))
}

/// `ζ₂ = (3L' + 1) C' / (2 √K √(L'−1))`.
pub fn zeta_two(input: &NscBoundInput) -> Result<f64> {
    let lp = input.l_prime() as f64;
    Ok((3.0 * lp + 1.0) * c_prime(input.delta)? / (2.0 * input.zeta_denominator()))
}

/// `ζ̂₂ = max{2L', 3L' − 2p₁L' + 1} C' / (2 √K √(L'−1))`.
pub fn zeta_two_sharp(input: &NscBoundInput, p1: f64) -> Result<f64> {
    let lp = input.l_prime() as f64;
    let num = (2.0 * lp).max(3.0 * lp - 2.0 * p1 * lp + 1.0);
    Ok(num * c_prime(input.delta)? / (2.0 * input.zeta_denominator()))
}

/// The NSC bound `γ*` with the sharp ζ for the mixed norm.
pub fn gamma_star(f: &SparsityFunction, input: &NscBoundInput) -> Result<NscBoundResult> {
    gamma_star_with(f, input, ZetaVariant::Sharp)
}

pub fn gamma_star_with(
    f: &SparsityFunction,
    input: &NscBoundInput,
    variant: ZetaVariant,
) -> Result<NscBoundResult> {
    check_orders(input.k, input.k0)?;
    let c_prime = c_prime(input.delta)?;
    let lp = input.l_prime();
    let coeffs = select_coefficients(f, 1.0, lp)?;
    let pi_f = coeffs.alpha.max(0.5 + 0.5 / lp as f64);
    let zeta = match (f, variant) {
        (SparsityFunction::MixedNorm { .. }, ZetaVariant::Published) => zeta_two(input)?,
        _ => lp as f64 * (pi_f + coeffs.beta) * c_prime / input.zeta_denominator(),
    };
    let gamma_star = input.k as f64 / lp as f64 * f.scale(zeta);
    Ok(NscBoundResult {
        c_prime,
        zeta,
        pi_f,
        gamma_star,
        recoverable: gamma_star < 1.0,
    })
}

/// An NSC bound that uses every available RIC rather than only `δ_{2K₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllRicBound {
    /// The order `K₀'` that attained the minimum.
    pub k0: usize,
    pub result: NscBoundResult,
}

/// Minimum of `γ*(f, K, K₀', δ_{2K₀'})` over `K ≤ K₀' ≤ K₀` with `δ_{2K₀'} < 1`.
///
/// Returns `None` when no admissible order exists.
pub fn gamma_star_all_rics(
    f: &SparsityFunction,
    k: usize,
    k0: usize,
    profile: &RicProfile,
    variant: ZetaVariant,
) -> Result<Option<AllRicBound>> {
    if k == 0 {
        return Err(Error::domain("K must be positive"));
    }
    let mut best: Option<AllRicBound> = None;
    for (order, delta) in profile.iter() {
        if order % 2 != 0 || order / 2 < k || order / 2 > k0 || delta >= MAX_DELTA {
            continue;
        }
        let input = NscBoundInput::new(k, order / 2, delta)?;
        let result = gamma_star_with(f, &input, variant)?;
        if best.is_none_or(|b| result.gamma_star < b.result.gamma_star) {
            best = Some(AllRicBound {
                k0: order / 2,
                result,
            });
        }
    }
    Ok(best)
}

/// Largest `K ∈ [1, K₀]` with `γ*(f, K, K₀, δ) < 1`, or 0.
pub fn largest_certified_k(
    f: &SparsityFunction,
    k0: usize,
    delta: f64,
    variant: ZetaVariant,
) -> Result<usize> {
    let mut best = 0;
    for k in 1..=k0 {
        if gamma_star_with(f, &NscBoundInput::new(k, k0, delta)?, variant)?.recoverable {
            best = k;
        }
    }
    Ok(best)
}

/// The two families with closed-form recovery conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicFamily {
    /// Lorentzian and concave exponential.
    LogExp,
    MixedNorm,
}

impl FromStr for RicFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "log_exp" | "logexp" => Ok(RicFamily::LogExp),
            "mixed_norm" | "mixed" => Ok(RicFamily::MixedNorm),
            other => match other.parse::<Family>() {
                Ok(Family::Lorentzian) | Ok(Family::ConcaveExp) => Ok(RicFamily::LogExp),
                Ok(Family::MixedNorm) => Ok(RicFamily::MixedNorm),
                _ => Err(Error::invalid(format!(
                    "unknown RIC family '{other}' (expected log_exp or mixed_norm)"
                ))),
            },
        }
    }
}

impl RicFamily {
    pub fn name(self) -> &'static str {
        match self {
            RicFamily::LogExp => "log_exp",
            RicFamily::MixedNorm => "mixed_norm",
        }
    }
}

/// The RIC threshold `f₁` (log/exp) or `f₂` (mixed norm, `p` read as `p₂`).
///
/// Recovery of every `K`-sparse vector is certified when `δ_{2K₀}` is below it.
pub fn ric_threshold(family: RicFamily, k: usize, k0: usize, p: f64) -> Result<f64> {
    check_orders(k, k0)?;
    check_p(p)?;
    let lp = (2 * k0 - k + 1) as f64;
    let correction = match family {
        RicFamily::LogExp => 3.0 - 1.0 / lp,
        RicFamily::MixedNorm => 3.0 + 1.0 / lp,
    };
    let coeff = correction * SQRT2_PLUS_1 / 4.0;
    let ratio = (k as f64 / (k0 + 1) as f64).powf(1.0 / p);
    Ok(1.0 / (1.0 + coeff * ratio))
}

fn closed_form_zeta(family: RicFamily, input: &NscBoundInput) -> Result<f64> {
    match family {
        RicFamily::LogExp => zeta_one(input),
        RicFamily::MixedNorm => zeta_two(input),
    }
}

/// The strict condition `p ln ζ < ln(L'/K)` on the exponent.
pub fn max_p_predicate(family: RicFamily, k: usize, k0: usize, delta: f64, p: f64) -> Result<bool> {
    let input = NscBoundInput::new(k, k0, delta)?;
    let zeta = closed_form_zeta(family, &input)?;
    let ratio = input.l_prime() as f64 / k as f64;
    Ok(p * zeta.ln() < ratio.ln())
}

/// Supremum of the exponents `p ∈ [0, 1]` certified for recovery.
///
/// The admissible set is defined by a strict inequality, so the returned value
/// is a supremum: only exponents strictly below it are guaranteed.
pub fn max_p(family: RicFamily, k: usize, k0: usize, delta: f64) -> Result<f64> {
    let input = NscBoundInput::new(k, k0, delta)?;
    let zeta = closed_form_zeta(family, &input)?;
    if zeta <= 1.0 {
        return Ok(1.0);
    }
    let ratio = input.l_prime() as f64 / k as f64;
    Ok((ratio.ln() / zeta.ln()).min(1.0))
}

/// Largest `K ≤ K₀` passing the closed-form recovery predicate, or 0.
///
/// For the mixed norm `p` is `p₂` and `p1` must be supplied.
pub fn max_k(family: RicFamily, k0: usize, delta: f64, p: f64, p1: Option<f64>) -> Result<usize> {
    check_orders(1, k0)?;
    check_delta(delta)?;
    check_p(p)?;
    let p1 = match family {
        RicFamily::LogExp => None,
        RicFamily::MixedNorm => {
            let p1 = p1.ok_or_else(|| Error::invalid("mixed_norm max_k needs p1"))?;
            if !(p1 > 0.0 && p1 <= p) {
                return Err(Error::domain(format!("p1 must lie in (0, p2], got {p1}")));
            }
            Some(p1)
        }
    };
    let mut best = 0;
    for k in 1..=k0 {
        let input = NscBoundInput::new(k, k0, delta)?;
        let zeta = closed_form_zeta(family, &input)?;
        let growth = match p1 {
            None if zeta <= 1.0 => 1.0,
            Some(p1) if zeta <= 1.0 => zeta.powf(p1),
            _ => zeta.powf(p),
        };
        if k as f64 / input.l_prime() as f64 * growth < 1.0 {
            best = k;
        }
    }
    Ok(best)
}

/// Rows of a Gaussian matrix that meet `ric_bound` with probability `1 − ε`.
pub fn gaussian_rows(n: usize, k0: usize, epsilon: f64, ric_bound: f64) -> Result<u64> {
    if k0 == 0 || k0 > n {
        return Err(Error::domain(format!(
            "need 1 <= K0 <= N, got K0={k0}, N={n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    if !(ric_bound > 0.0 && ric_bound < 1.0) {
        return Err(Error::domain(format!(
            "RIC bound must lie in (0,1), got {ric_bound}"
        )));
    }
    let k0 = k0 as f64;
    let log_terms = k0 * ((n as f64 / k0).ln() + 1.0) + (2.0 / epsilon).ln();
    Ok((GAUSSIAN_ROWS_CONSTANT / (ric_bound * ric_bound) * log_terms).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::spf::Measure;
    use approx::assert_relative_eq;

    fn lor(p: f64) -> SparsityFunction {
        SparsityFunction::lorentzian(p).unwrap()
    }

    #[test]
    fn c_prime_examples() {
        assert_eq!(c_prime(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            c_prime(0.5).unwrap(),
            SQRT2_PLUS_1 / 2.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c_prime(0.9998).unwrap(),
            6034.326799152215,
            max_relative = 1e-9
        );
        assert!(c_prime(1.0).is_err());
        assert!(c_prime(-0.1).is_err());
        let msg = c_prime(1.5).unwrap_err().to_string();
        assert!(msg.contains("delta must lie in [0,1)"), "{msg}");
    }

    #[test]
    fn gamma_star_examples() {
        for f in [
            SparsityFunction::power(0.5).unwrap(),
            lor(0.5),
            SparsityFunction::concave_exp(0.5).unwrap(),
            SparsityFunction::mixed_norm(Measure::uniform(0.1, 0.5).unwrap()),
        ] {
            let r = gamma_star(&f, &NscBoundInput::new(1, 1, 0.0).unwrap()).unwrap();
            assert_eq!(r.gamma_star, 0.0);
            assert!(r.recoverable);
        }

        let r = gamma_star(&lor(0.5), &NscBoundInput::new(1, 1, 0.5).unwrap()).unwrap();
        assert_relative_eq!(r.zeta, 3.017766952966369, max_relative = 1e-12);
        assert_relative_eq!(r.gamma_star, 0.8685860569002891, max_relative = 1e-12);
        assert!(r.recoverable);

        let r = gamma_star(&lor(1e-9), &NscBoundInput::new(3, 4, 0.9).unwrap()).unwrap();
        assert!((r.gamma_star - 0.5).abs() < 1e-6);
    }

    #[test]
    fn log_exp_bound_matches_closed_zeta_one() {
        for k0 in 1..=6 {
            for k in 1..=k0 {
                for &delta in &[0.1, 0.5, 0.93] {
                    let input = NscBoundInput::new(k, k0, delta).unwrap();
                    let z1 = zeta_one(&input).unwrap();
                    for f in [lor(0.3), SparsityFunction::concave_exp(0.7).unwrap()] {
                        let r = gamma_star(&f, &input).unwrap();
                        assert_relative_eq!(r.zeta, z1, max_relative = 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_norm_bound_matches_sharp_zeta() {
        let f = SparsityFunction::mixed_norm(Measure::uniform(0.2, 0.6).unwrap());
        for k0 in 1..=5 {
            for k in 1..=k0 {
                let input = NscBoundInput::new(k, k0, 0.7).unwrap();
                let r = gamma_star(&f, &input).unwrap();
                assert_relative_eq!(
                    r.zeta,
                    zeta_two_sharp(&input, 0.2).unwrap(),
                    max_relative = 1e-13
                );
                let published = gamma_star_with(&f, &input, ZetaVariant::Published).unwrap();
                assert!(published.zeta > r.zeta);
                assert!(published.gamma_star >= r.gamma_star);
            }
        }
    }

    #[test]
    fn gamma_star_rejects_delta_one() {
        assert!(NscBoundInput::new(1, 1, 1.0).is_err());
        let bad = NscBoundInput {
            k: 1,
            k0: 1,
            delta: 1.0,
        };
        assert!(matches!(gamma_star(&lor(0.5), &bad), Err(Error::Domain(_))));
        assert!(NscBoundInput::new(3, 2, 0.5).is_err());
    }

    #[test]
    fn gamma_star_monotone_in_delta() {
        let fams = [
            SparsityFunction::power(0.6).unwrap(),
            lor(0.6),
            SparsityFunction::mixed_norm(Measure::uniform(0.1, 0.5).unwrap()),
        ];
        for f in &fams {
            let mut prev = 0.0;
            for delta in linspace(0.0, 0.999, 300) {
                let g = gamma_star(f, &NscBoundInput::new(2, 3, delta).unwrap())
                    .unwrap()
                    .gamma_star;
                assert!(g >= prev, "{}", f.label());
                prev = g;
            }
        }
    }

    #[test]
    fn small_p_limit() {
        for k0 in 1..=5 {
            for k in 1..=k0 {
                let input = NscBoundInput::new(k, k0, 0.99).unwrap();
                let limit = k as f64 / (2 * k0 - k + 1) as f64;
                assert!(zeta_one(&input).unwrap() > 1.0);
                for f in [lor(1e-9), SparsityFunction::concave_exp(1e-9).unwrap()] {
                    let g = gamma_star(&f, &input).unwrap().gamma_star;
                    assert!((g - limit).abs() < 1e-6);
                }
                let mixed = SparsityFunction::mixed_norm(Measure::uniform(5e-10, 1e-9).unwrap());
                let g = gamma_star(&mixed, &input).unwrap().gamma_star;
                assert!((g - limit).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ric_threshold_examples() {
        assert_relative_eq!(
            ric_threshold(RicFamily::LogExp, 1, 1, 0.5).unwrap(),
            0.7260999469448861,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            ric_threshold(RicFamily::MixedNorm, 1, 1, 0.5).unwrap(),
            0.654403487019274,
            max_relative = 1e-12
        );
        assert!(ric_threshold(RicFamily::LogExp, 2, 4, 1e-3).unwrap() > 1.0 - 1e-12);
        assert!(ric_threshold(RicFamily::LogExp, 2, 1, 0.5).is_err());
    }

    #[test]
    fn ric_threshold_ordering_and_monotonicity() {
        for k0 in 1..=8 {
            for k in 1..=k0 {
                let mut prev = (f64::INFINITY, f64::INFINITY);
                for p in linspace(0.05, 1.0, 40) {
                    let f1 = ric_threshold(RicFamily::LogExp, k, k0, p).unwrap();
                    let f2 = ric_threshold(RicFamily::MixedNorm, k, k0, p).unwrap();
                    assert!(f1 >= f2 && f1 <= prev.0 && f2 <= prev.1);
                    if f2 < 1.0 - 1e-12 {
                        assert!(f1 > f2 && f2 < prev.1);
                    }
                    prev = (f1, f2);
                    if k > 1 {
                        assert!(f1 <= ric_threshold(RicFamily::LogExp, k - 1, k0, p).unwrap());
                        assert!(f2 <= ric_threshold(RicFamily::MixedNorm, k - 1, k0, p).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn max_p_examples() {
        assert_relative_eq!(
            max_p(RicFamily::LogExp, 1, 1, 0.5).unwrap(),
            0.6275567453897636,
            max_relative = 1e-12
        );
        assert_eq!(max_p(RicFamily::LogExp, 1, 1, 1e-12).unwrap(), 1.0);
        assert_relative_eq!(
            max_p(RicFamily::MixedNorm, 1, 1, 0.5).unwrap(),
            0.48102171508489283,
            max_relative = 1e-12
        );
        assert!(max_p(RicFamily::LogExp, 1, 1, 1.0).is_err());
    }

    #[test]
    fn max_p_is_supremum_of_predicate() {
        for fam in [RicFamily::LogExp, RicFamily::MixedNorm] {
            for k0 in 1..=5 {
                for k in 1..=k0 {
                    for delta in linspace(0.05, 0.999, 25) {
                        let p_hat = max_p(fam, k, k0, delta).unwrap();
                        assert!(max_p_predicate(fam, k, k0, delta, p_hat * (1.0 - 1e-9)).unwrap());
                        if p_hat < 1.0 {
                            assert!(!max_p_predicate(fam, k, k0, delta, p_hat + 1e-9).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn max_k_examples() {
        assert!(max_k(RicFamily::LogExp, 4, 0.9999, 0.01, None).unwrap() >= 1);
        let input = NscBoundInput::new(1, 4, 0.9999).unwrap();
        let g = gamma_star(&lor(0.01), &input).unwrap().gamma_star;
        assert_relative_eq!(g, 0.13935049758031834, max_relative = 1e-9);
        assert_eq!(max_k(RicFamily::LogExp, 4, 0.9999, 1.0, None).unwrap(), 0);
        for p in [0.01, 0.5, 1.0] {
            assert_eq!(max_k(RicFamily::LogExp, 1, 0.0, p, None).unwrap(), 1);
            assert_eq!(max_k(RicFamily::MixedNorm, 1, 0.0, p, Some(p)).unwrap(), 1);
        }
        assert!(max_k(RicFamily::MixedNorm, 2, 0.5, 0.5, None).is_err());
    }

    #[test]
    fn max_k_agrees_with_gamma_star_scan() {
        for k0 in 1..=6 {
            for delta in linspace(0.0, 0.99, 12) {
                for p in linspace(0.05, 1.0, 8) {
                    let direct = max_k(RicFamily::LogExp, k0, delta, p, None).unwrap();
                    let scan = largest_certified_k(&lor(p), k0, delta, ZetaVariant::Sharp).unwrap();
                    assert_eq!(direct, scan);
                }
            }
        }
    }

    #[test]
    fn gaussian_rows_examples() {
        let base = gaussian_rows(100, 4, 0.01, 0.5).unwrap();
        assert_eq!(base, 7105);
        let near_one = gaussian_rows(100, 4, 0.01, 0.999_999).unwrap();
        // both sides are ceilings, so the quadratic law holds up to rounding
        assert!((base as f64 - 4.0 * near_one as f64).abs() <= 4.0);
        assert!(gaussian_rows(4, 4, 0.5, 0.5).unwrap() > 0);
        assert!(gaussian_rows(3, 4, 0.5, 0.5).is_err());
    }

    #[test]
    fn all_ric_variant_takes_minimum() {
        let profile = RicProfile::from_pairs([(2, 0.5617), (4, 0.9034), (6, 0.9781), (8, 0.9999)]);
        let f = SparsityFunction::power(0.9).unwrap();
        let best = gamma_star_all_rics(&f, 1, 4, &profile, ZetaVariant::Sharp)
            .unwrap()
            .unwrap();
        for k0 in 1..=4 {
            let delta = profile.get(2 * k0).unwrap();
            let g = gamma_star(&f, &NscBoundInput::new(1, k0, delta).unwrap())
                .unwrap()
                .gamma_star;
            assert!(best.result.gamma_star <= g);
        }
        assert!(gamma_star_all_rics(&f, 5, 5, &profile, ZetaVariant::Sharp)
            .unwrap()
            .is_none());
    }

    #[test]
    fn ric_family_parsing() {
        assert_eq!("log-exp".parse::<RicFamily>().unwrap(), RicFamily::LogExp);
        assert_eq!(
            "lorentzian".parse::<RicFamily>().unwrap(),
            RicFamily::LogExp
        );
        assert_eq!(
            "mixed_norm".parse::<RicFamily>().unwrap(),
            RicFamily::MixedNorm
        );
        assert!("power".parse::<RicFamily>().is_err());
    }
}
