//! Sample grids shared by the numeric routines.

use crate::error::{Error, Result};

/// A grid of positive reals stored by their natural logarithms.
///
/// Storing `ln x` lets the numeric suprema reach far past the `f64` range,
/// which matters for limits that converge only logarithmically.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    ln_points: Vec<f64>,
}

impl LogGrid {
    /// `count` points evenly spaced in `ln x` between `ln_lo` and `ln_hi`.
    pub fn from_ln_range(ln_lo: f64, ln_hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("grid must contain at least one point"));
        }
        if !(ln_lo.is_finite() && ln_hi.is_finite()) || ln_lo > ln_hi {
            return Err(Error::invalid(format!(
                "invalid grid range [{ln_lo}, {ln_hi}] in log space"
            )));
        }
        if count == 1 {
            return Ok(Self {
                ln_points: vec![ln_lo],
            });
        }
        let step = (ln_hi - ln_lo) / (count - 1) as f64;
        let ln_points = (0..count)
            .map(|i| {
                if i + 1 == count {
                    ln_hi
                } else {
                    ln_lo + step * i as f64
                }
            })
            .collect();
        Ok(Self { ln_points })
    }

    /// `count` log-spaced points in `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > 0.0) {
            return Err(Error::invalid("log-spaced grid needs positive endpoints"));
        }
        Self::from_ln_range(lo.ln(), hi.ln(), count)
    }

    /// Wraps explicit positive values, which must be sorted ascending.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid must contain at least one point"));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("grid values must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("grid values must be sorted"));
        }
        Ok(Self {
            ln_points: values.iter().map(|v| v.ln()).collect(),
        })
    }

    pub fn ln_points(&self) -> &[f64] {
        &self.ln_points
    }

    pub fn len(&self) -> usize {
        self.ln_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_points.is_empty()
    }
}

/// `count` evenly spaced values in `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        hi
                    } else {
                        lo + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// `count` log-spaced values in `[lo, hi]`, both positive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), count)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Checks that a grid is non-empty and strictly increasing.
pub fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} grid has non-finite values")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}

/// `ln(sum exp(v))`, ignoring `-inf` terms. Returns `-inf` for an all-zero sum.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(0.0, 1.0, 11);
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[10], 1.0);
        assert!((v[3] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn log_grid_rejects_unsorted() {
        assert!(LogGrid::from_values(&[1.0, 0.5]).is_err());
        assert!(LogGrid::from_values(&[]).is_err());
        assert!(LogGrid::from_values(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn lse_matches_direct_sum() {
        let v = [0.1f64, -2.0, 3.5];
        let direct = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(v) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp([-1e4, -1e4]) - (-1e4 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn strictly_increasing_check() {
        assert!(check_increasing("p", &[0.1, 0.2]).is_ok());
        assert!(check_increasing("p", &[0.1, 0.1]).is_err());
        assert!(check_increasing("p", &[]).is_err());
    }
}
