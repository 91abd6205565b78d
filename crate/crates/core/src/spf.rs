//! Sparsity-promoting functions.
//!
//! A sparsity-promoting function `f` is even, vanishes at zero, is strictly
//! increasing on `[0, ∞)` and concave on `(0, ∞)`. Four families are built in:
//!
//! | family        | f(x)                  | g(y)                          | (L_ψ, l_ψ) |
//! |---------------|-----------------------|-------------------------------|------------|
//! | `Power`       | `|x|^p`               | `y^p`                         | (p, p)     |
//! | `Lorentzian`  | `ln(1 + |x|^p)`       | `1` on `(0,1]`, `y^p` above   | (p, 0)     |
//! | `ConcaveExp`  | `1 - exp(-|x|^p)`     | `1` on `(0,1]`, `y^p` above   | (p, 0)     |
//! | `MixedNorm`   | `E_ν[|x|^p]`          | `y^p1` on `(0,1]`, `y^p2` above | (p2, p1) |
//!
//! Every evaluation path has a log-space twin (`ln_eval`, `elasticity_ln`) so
//! that ratios like `f(xy)/f(x)` stay finite for `x` far outside the `f64` range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{log_sum_exp, LogGrid};

/// Tolerance on the total mass of a discrete measure.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Half-width of the default `ln x` range used by [`SparsityFunction::scale_numeric`].
pub const DEFAULT_SCALE_LN_RANGE: f64 = 2.0e4;
/// Number of points in the default scale grid.
pub const DEFAULT_SCALE_GRID_POINTS: usize = 2001;

/// Probability measure over exponents for the mixed-norm family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    /// Uniform on `[p1, p2]`.
    UniformInterval { p1: f64, p2: f64 },
    /// Finitely many atoms `(exponent, weight)`.
    DiscreteAtoms { atoms: Vec<(f64, f64)> },
}

impl Measure {
    pub fn uniform(p1: f64, p2: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 <= p2 && p2 < 1.0) {
            return Err(Error::invalid(format!(
                "uniform measure needs 0 < p1 <= p2 < 1, got [{p1}, {p2}]"
            )));
        }
        Ok(Measure::UniformInterval { p1, p2 })
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("discrete measure needs at least one atom"));
        }
        for &(p, w) in &atoms {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("atom exponent {p} not in (0,1)")));
            }
            if !(w > 0.0) {
                return Err(Error::invalid(format!("atom weight {w} must be positive")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(Measure::DiscreteAtoms { atoms })
    }

    /// Infimum of the support.
    pub fn p1(&self) -> f64 {
        match self {
            Measure::UniformInterval { p1, .. } => *p1,
            Measure::DiscreteAtoms { atoms } => {
                atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Supremum of the support.
    pub fn p2(&self) -> f64 {
        match self {
            Measure::UniformInterval { p2, .. } => *p2,
            Measure::DiscreteAtoms { atoms } => {
                atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// `ln E_ν[exp(c p)]`.
    fn ln_mgf(&self, c: f64) -> f64 {
        match self {
            Measure::UniformInterval { p1, p2 } => c * p1 + ln_expm1_over(c * (p2 - p1)),
            Measure::DiscreteAtoms { atoms } => {
                log_sum_exp(atoms.iter().map(|&(p, w)| w.ln() + c * p))
            }
        }
    }

    /// Mean of `p` under the tilted measure `exp(c p) dν / E_ν[exp(c p)]`.
    fn tilted_mean(&self, c: f64) -> f64 {
        match self {
            Measure::UniformInterval { p1, p2 } => {
                let w = p2 - p1;
                p1 + w * truncated_exp_mean(c * w)
            }
            Measure::DiscreteAtoms { atoms } => {
                let norm = self.ln_mgf(c);
                atoms
                    .iter()
                    .map(|&(p, w)| p * (w.ln() + c * p - norm).exp())
                    .sum()
            }
        }
    }
}

/// `ln((e^t - 1)/t)`, continuous at `t = 0`.
fn ln_expm1_over(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if t > 50.0 {
        t + (-(-t).exp_m1()).ln() - t.ln()
    } else {
        (t.exp_m1() / t).ln()
    }
}

/// Mean of the density proportional to `e^{t u}` on `u ∈ [0, 1]`.
fn truncated_exp_mean(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        0.5 + t / 12.0
    } else {
        1.0 / (-(-t).exp_m1()) - 1.0 / t
    }
}

/// Which of the built-in families a function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Power,
    Lorentzian,
    ConcaveExp,
    MixedNorm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::Lorentzian => "lorentzian",
            Family::ConcaveExp => "concave_exp",
            Family::MixedNorm => "mixed_norm",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "power" | "lp" => Ok(Family::Power),
            "lorentzian" | "log" => Ok(Family::Lorentzian),
            "concave_exp" | "exp" => Ok(Family::ConcaveExp),
            "mixed_norm" | "mixed" => Ok(Family::MixedNorm),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }
}

/// A sparsity-promoting function from one of the built-in families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SparsityFunction {
    Power { p: f64 },
    Lorentzian { p: f64 },
    ConcaveExp { p: f64 },
    MixedNorm { measure: Measure },
}

fn check_exponent(p: f64) -> Result<f64> {
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(Error::invalid(format!(
            "exponent p must lie in (0,1], got {p}"
        )))
    }
}

impl SparsityFunction {
    pub fn power(p: f64) -> Result<Self> {
        Ok(SparsityFunction::Power {
            p: check_exponent(p)?,
        })
    }

    pub fn lorentzian(p: f64) -> Result<Self> {
        Ok(SparsityFunction::Lorentzian {
            p: check_exponent(p)?,
        })
    }

    pub fn concave_exp(p: f64) -> Result<Self> {
        Ok(SparsityFunction::ConcaveExp {
            p: check_exponent(p)?,
        })
    }

    pub fn mixed_norm(measure: Measure) -> Self {
        SparsityFunction::MixedNorm { measure }
    }

    /// Builds a single-exponent family member. Mixed norm is not single-exponent.
    pub fn with_exponent(family: Family, p: f64) -> Result<Self> {
        match family {
            Family::Power => Self::power(p),
            Family::Lorentzian => Self::lorentzian(p),
            Family::ConcaveExp => Self::concave_exp(p),
            Family::MixedNorm => Err(Error::invalid(
                "mixed_norm is parameterised by a measure, not a single exponent",
            )),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            SparsityFunction::Power { .. } => Family::Power,
            SparsityFunction::Lorentzian { .. } => Family::Lorentzian,
            SparsityFunction::ConcaveExp { .. } => Family::ConcaveExp,
            SparsityFunction::MixedNorm { .. } => Family::MixedNorm,
        }
    }

    /// True when `x f'(x)/f(x)` is non-increasing (power, Lorentzian, concave exponential).
    pub fn has_nonincreasing_elasticity(&self) -> bool {
        !matches!(self, SparsityFunction::MixedNorm { .. })
    }

    /// `f(|x|)`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        if x == 0.0 {
            return 0.0;
        }
        match self {
            SparsityFunction::Power { p } => x.powf(*p),
            SparsityFunction::Lorentzian { p } => x.powf(*p).ln_1p(),
            SparsityFunction::ConcaveExp { p } => -(-x.powf(*p)).exp_m1(),
            SparsityFunction::MixedNorm { measure } => measure.ln_mgf(x.ln()).exp(),
        }
    }

    /// `ln f(x)` as a function of `ln x`.
    pub fn ln_eval(&self, ln_x: f64) -> f64 {
        match self {
            SparsityFunction::Power { p } => p * ln_x,
            SparsityFunction::Lorentzian { p } => {
                let u = p * ln_x;
                if u > 40.0 {
                    (u + (-u).exp().ln_1p()).ln()
                } else {
                    let v = u.exp();
                    if v == 0.0 {
                        u
                    } else if v < 1e-3 {
                        u + (v.ln_1p() / v).ln()
                    } else {
                        v.ln_1p().ln()
                    }
                }
            }
            SparsityFunction::ConcaveExp { p } => {
                let u = p * ln_x;
                let v = u.exp();
                if v == 0.0 {
                    u
                } else if v < 1.0 {
                    u + (-(-v).exp_m1() / v).ln()
                } else {
                    (-(-v).exp()).ln_1p()
                }
            }
            SparsityFunction::MixedNorm { measure } => measure.ln_mgf(ln_x),
        }
    }

    /// `f'(x)` for `x > 0`.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("derivative requires x > 0, got {x}")));
        }
        Ok(match self {
            SparsityFunction::Power { p } => p * x.powf(p - 1.0),
            SparsityFunction::Lorentzian { p } => {
                let u = x.powf(*p);
                p * x.powf(p - 1.0) / (1.0 + u)
            }
            SparsityFunction::ConcaveExp { p } => {
                let u = x.powf(*p);
                p * x.powf(p - 1.0) * (-u).exp()
            }
            SparsityFunction::MixedNorm { measure } => {
                let c = x.ln();
                (measure.ln_mgf(c) - c).exp() * measure.tilted_mean(c)
            }
        })
    }

    /// Supremum of `f` over `[0, ∞)`.
    pub fn sup_value(&self) -> f64 {
        match self {
            SparsityFunction::ConcaveExp { .. } => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// `f^{-1}(y)` on `[0, ∞)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::domain(format!("inverse requires y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if y >= self.sup_value() {
            return Err(Error::OutOfRange {
                value: y,
                sup: self.sup_value(),
            });
        }
        Ok(match self {
            SparsityFunction::Power { p } => y.powf(1.0 / p),
            SparsityFunction::Lorentzian { p } => y.exp_m1().powf(1.0 / p),
            SparsityFunction::ConcaveExp { p } => (-(-y).ln_1p()).powf(1.0 / p),
            SparsityFunction::MixedNorm { .. } => self.inverse_ln(y.ln()).exp(),
        })
    }

    /// Solves `ln f(x) = ln_y` for `ln x` by bracketing and bisection.
    fn inverse_ln(&self, ln_y: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while self.ln_eval(lo) > ln_y {
            lo *= 2.0;
        }
        while self.ln_eval(hi) < ln_y {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_eval(mid) < ln_y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Generalised f-mean `f^{-1}(Σ f(|a_j|) / s)`.
    ///
    /// Evaluated without forming the mean of `f` directly where that would
    /// round to the supremum of a bounded family.
    pub fn generalized_mean(&self, a: &[f64]) -> Result<f64> {
        if a.is_empty() {
            return Err(Error::invalid("generalised mean of an empty vector"));
        }
        let s = a.len() as f64;
        if a.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        match self {
            SparsityFunction::ConcaveExp { p } => {
                let mean_f = a.iter().map(|&x| self.eval(x)).sum::<f64>() / s;
                let neg_ln_complement = if mean_f < 0.5 {
                    -(-mean_f).ln_1p()
                } else {
                    let ln_c = log_sum_exp(a.iter().map(|&x| -x.abs().powf(*p))) - s.ln();
                    -ln_c
                };
                Ok(neg_ln_complement.powf(1.0 / p))
            }
            SparsityFunction::Power { p } => {
                let ln_mean = self.ln_mean(a);
                Ok((ln_mean / p).exp())
            }
            SparsityFunction::Lorentzian { .. } => {
                let mean_f = a.iter().map(|&x| self.eval(x)).sum::<f64>() / s;
                self.inverse(mean_f)
            }
            SparsityFunction::MixedNorm { .. } => Ok(self.inverse_ln(self.ln_mean(a)).exp()),
        }
    }

    fn ln_mean(&self, a: &[f64]) -> f64 {
        let terms = a.iter().map(|&x| {
            if x == 0.0 {
                f64::NEG_INFINITY
            } else {
                self.ln_eval(x.abs().ln())
            }
        });
        log_sum_exp(terms) - (a.len() as f64).ln()
    }

    /// Elasticity `ψ(x) = x f'(x) / f(x)` for `x > 0`.
    pub fn elasticity(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("elasticity requires x > 0, got {x}")));
        }
        Ok(self.elasticity_ln(x.ln()))
    }

    /// Elasticity as a function of `ln x`.
    pub fn elasticity_ln(&self, ln_x: f64) -> f64 {
        match self {
            SparsityFunction::Power { p } => *p,
            SparsityFunction::Lorentzian { p } => {
                let lu = p * ln_x;
                if lu > 700.0 {
                    // (1+u) ln(1+u) ≈ u ln u once u overflows
                    return 1.0 / ln_x;
                }
                let u = lu.exp();
                if u == 0.0 {
                    return *p;
                }
                p * u / ((1.0 + u) * u.ln_1p())
            }
            SparsityFunction::ConcaveExp { p } => {
                let lu = p * ln_x;
                if lu > 700.0 {
                    return 0.0;
                }
                let u = lu.exp();
                if u == 0.0 {
                    return *p;
                }
                p * u / u.exp_m1()
            }
            SparsityFunction::MixedNorm { measure } => measure.tilted_mean(ln_x),
        }
    }

    /// Closed-form `(L_ψ, l_ψ)`: the supremum and infimum of the elasticity.
    pub fn elasticity_extrema(&self) -> (f64, f64) {
        match self {
            SparsityFunction::Power { p } => (*p, *p),
            SparsityFunction::Lorentzian { p } | SparsityFunction::ConcaveExp { p } => (*p, 0.0),
            SparsityFunction::MixedNorm { measure } => (measure.p2(), measure.p1()),
        }
    }

    /// Closed-form scale function `g(y) = sup_{x>0} f(xy)/f(x)`.
    pub fn scale(&self, y: f64) -> f64 {
        let y = y.abs();
        if y == 0.0 {
            return 0.0;
        }
        match self {
            SparsityFunction::Power { p } => y.powf(*p),
            SparsityFunction::Lorentzian { p } | SparsityFunction::ConcaveExp { p } => {
                if y <= 1.0 {
                    1.0
                } else {
                    y.powf(*p)
                }
            }
            SparsityFunction::MixedNorm { measure } => {
                if y <= 1.0 {
                    y.powf(measure.p1())
                } else {
                    y.powf(measure.p2())
                }
            }
        }
    }

    /// Scale function by direct maximisation of `f(xy)/f(x)` over `grid`.
    ///
    /// Grid endpoints stand in for the limits `x → 0` and `x → ∞`.
    pub fn scale_numeric(&self, y: f64, grid: &LogGrid) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!(
                "scale_numeric requires y > 0, got {y}"
            )));
        }
        if grid.is_empty() {
            return Err(Error::invalid("scale grid is empty"));
        }
        let ln_y = y.ln();
        let best = grid
            .ln_points()
            .iter()
            .map(|&lx| self.ln_eval(lx + ln_y) - self.ln_eval(lx))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(best.exp())
    }

    /// [`scale_numeric`](Self::scale_numeric) on the default grid.
    pub fn scale_numeric_default(&self, y: f64) -> Result<f64> {
        self.scale_numeric(y, &default_scale_grid())
    }

    /// Elasticity-based `(lower, upper)` enclosure of `g(y)` for `y ≠ 1`.
    pub fn scale_bounds(&self, y: f64) -> Result<(f64, f64)> {
        if !(y > 0.0) || y == 1.0 {
            return Err(Error::domain(format!(
                "scale bounds require y > 0 and y != 1, got {y}"
            )));
        }
        let (l_max, l_min) = self.elasticity_extrema();
        let (lower_psi, upper_psi) = if y > 1.0 {
            (l_min, l_max)
        } else {
            (l_max, l_min)
        };
        let upper = 1.0 + (y - 1.0) * upper_psi;
        let lower = 1.0 / (1.0 + (1.0 - y) * lower_psi / y);
        Ok((lower, upper))
    }

    /// `u₀ = inf{u ∈ (0,1] : g(u) = 1}`.
    pub fn u_zero(&self) -> f64 {
        match self {
            SparsityFunction::Lorentzian { .. } | SparsityFunction::ConcaveExp { .. } => 0.0,
            SparsityFunction::Power { .. } | SparsityFunction::MixedNorm { .. } => 1.0,
        }
    }

    /// Short human-readable label, e.g. `lorentzian(p=0.5)`.
    pub fn label(&self) -> String {
        match self {
            SparsityFunction::Power { p } => format!("power(p={p})"),
            SparsityFunction::Lorentzian { p } => format!("lorentzian(p={p})"),
            SparsityFunction::ConcaveExp { p } => format!("concave_exp(p={p})"),
            SparsityFunction::MixedNorm { measure } => match measure {
                Measure::UniformInterval { p1, p2 } => format!("mixed_norm(uniform[{p1},{p2}])"),
                Measure::DiscreteAtoms { atoms } => format!("mixed_norm({} atoms)", atoms.len()),
            },
        }
    }
}

/// Default grid for [`SparsityFunction::scale_numeric`].
pub fn default_scale_grid() -> LogGrid {
    LogGrid::from_ln_range(
        -DEFAULT_SCALE_LN_RANGE,
        DEFAULT_SCALE_LN_RANGE,
        DEFAULT_SCALE_GRID_POINTS,
    )
    .expect("static grid parameters are valid")
}
