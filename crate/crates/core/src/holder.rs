//! Coefficients for the generalised Hölder-type inequality
//!
//! ```text
//! M_f(a) ≤ ‖a‖_q / s^{1/q} ≤ α M_f(a) + β ‖a‖_∞,   M_f(a) = f⁻¹(Σ f(a_j) / s)
//! ```
//!
//! Admissible `(α, β)` satisfy `α + β ≥ 1`, plus `β ≥ (1 − 1/s)^{1/q}` when
//! `u₀ = 0`, or `sup_{u∈(0,u₀)} g(u)/(αu + β)^q ≤ 1` when `u₀ > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spf::SparsityFunction;

/// Number of grid points used for the `u₀ > 0` supremum condition.
pub const DEFAULT_CONDITION_GRID: usize = 10_000;

/// Slack allowed on the supremum condition and on the inequality itself.
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCoefficients {
    pub q: f64,
    pub s: usize,
    pub alpha: f64,
    pub beta: f64,
}

fn check_q_s(q: f64, s: usize) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::domain(format!(
            "q must be a finite real >= 1, got {q}"
        )));
    }
    if s == 0 {
        return Err(Error::domain("s must be a positive integer"));
    }
    Ok(())
}

/// The closed-form coefficient choice for each family.
///
/// `u₀ = 0` families take the smallest admissible `β = (1 − 1/s)^{1/q}`; power
/// and mixed-norm take `α = r`, `β = 1 − r` with `r = p/q` (resp. `p₁/q`).
pub fn select_coefficients(f: &SparsityFunction, q: f64, s: usize) -> Result<HolderCoefficients> {
    check_q_s(q, s)?;
    let (alpha, beta) = match f {
        SparsityFunction::Lorentzian { .. } | SparsityFunction::ConcaveExp { .. } => {
            let beta = (1.0 - 1.0 / s as f64).powf(1.0 / q);
            (1.0 - beta, beta)
        }
        SparsityFunction::Power { p } => (p / q, 1.0 - p / q),
        SparsityFunction::MixedNorm { measure } => {
            let r = measure.p1() / q;
            (r, 1.0 - r)
        }
    };
    Ok(HolderCoefficients { q, s, alpha, beta })
}

/// Sample points in `(0, u0)`: half log-spaced down to `1e-12 u0`, half linear.
fn condition_grid(u0: f64, size: usize) -> Vec<f64> {
    let n_log = size / 2;
    let n_lin = size - n_log;
    let mut pts = Vec::with_capacity(size);
    let (lo, hi) = ((1e-12 * u0).ln(), u0.ln());
    for i in 0..n_log {
        // exclude the right endpoint: the supremum is over the open interval
        pts.push((lo + (hi - lo) * i as f64 / n_log as f64).exp());
    }
    for i in 1..=n_lin {
        pts.push(u0 * i as f64 / (n_lin + 1) as f64);
    }
    pts
}

/// `sup g(u) / (αu + β)^q` over the condition grid on `(0, u0)`.
pub fn condition_three_sup(f: &SparsityFunction, c: &HolderCoefficients, grid_size: usize) -> f64 {
    let u0 = f.u_zero();
    if u0 == 0.0 {
        return 0.0;
    }
    condition_grid(u0, grid_size)
        .into_iter()
        .map(|u| f.scale(u) / (c.alpha * u + c.beta).powf(c.q))
        .fold(0.0, f64::max)
}

/// Checks all admissibility conditions; condition three on `grid_size` points.
pub fn verify_coefficients(
    f: &SparsityFunction,
    c: &HolderCoefficients,
    grid_size: usize,
) -> Result<bool> {
    if grid_size < 100 {
        return Err(Error::invalid(format!(
            "condition grid needs at least 100 points, got {grid_size}"
        )));
    }
    check_q_s(c.q, c.s)?;
    if !(c.alpha >= 0.0 && c.beta >= 0.0) {
        return Ok(false);
    }
    if c.alpha + c.beta < 1.0 - 1e-12 {
        return Ok(false);
    }
    if f.u_zero() == 0.0 {
        let needed = (1.0 - 1.0 / c.s as f64).powf(1.0 / c.q);
        return Ok(c.beta >= needed - 1e-12);
    }
    Ok(condition_three_sup(f, c, grid_size) <= 1.0 + SLACK)
}

/// Shrinks `β` along `α + β = 1` while the coefficients stay admissible.
///
/// Starts from [`select_coefficients`] and bisects on `β`; never returns a
/// pair that fails [`verify_coefficients`] on the default grid.
pub fn refine_coefficients(f: &SparsityFunction, q: f64, s: usize) -> Result<HolderCoefficients> {
    let start = select_coefficients(f, q, s)?;
    let admissible = |beta: f64| {
        let c = HolderCoefficients {
            alpha: 1.0 - beta,
            beta,
            ..start
        };
        verify_coefficients(f, &c, DEFAULT_CONDITION_GRID).unwrap_or(false)
    };
    let (mut lo, mut hi) = (0.0, start.beta);
    if admissible(lo) {
        hi = lo;
    }
    for _ in 0..60 {
        if hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(HolderCoefficients {
        alpha: 1.0 - hi,
        beta: hi,
        ..start
    })
}

/// The three members of the inequality chain for a vector `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderSides {
    /// Generalised f-mean.
    pub f_mean: f64,
    /// `‖a‖_q / s^{1/q}`.
    pub q_mean: f64,
    /// `α · f_mean + β · ‖a‖_∞`.
    pub upper: f64,
}

pub fn holder_sides(
    f: &SparsityFunction,
    c: &HolderCoefficients,
    a: &[f64],
) -> Result<HolderSides> {
    if a.len() != c.s {
        return Err(Error::LengthMismatch {
            expected: c.s,
            got: a.len(),
        });
    }
    let f_mean = f.generalized_mean(a)?;
    let max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let q_mean = if max == 0.0 {
        0.0
    } else {
        // scale by the max entry so large q cannot overflow
        let sum: f64 = a.iter().map(|x| (x.abs() / max).powf(c.q)).sum();
        max * (sum / c.s as f64).powf(1.0 / c.q)
    };
    Ok(HolderSides {
        f_mean,
        q_mean,
        upper: c.alpha * f_mean + c.beta * max,
    })
}

/// True when both inequalities hold for `|a|`, with relative slack `1e-9`.
pub fn check_holder_inequality(
    f: &SparsityFunction,
    c: &HolderCoefficients,
    a: &[f64],
) -> Result<bool> {
    let sides = holder_sides(f, c, a)?;
    let lower_ok = sides.f_mean <= sides.q_mean * (1.0 + SLACK);
    let upper_ok = sides.q_mean <= sides.upper * (1.0 + SLACK);
    Ok(lower_ok && upper_ok)
}
