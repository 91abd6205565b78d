//! Exact analysis of small sensing matrices: brute-force restricted isometry
//! constants, spark, and the null-space constant of a matrix whose null space
//! is a single line.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{log_sum_exp, LogGrid};
use crate::spf::SparsityFunction;

/// Upper limit on the number of supports enumerated by [`ric`] and [`spark`].
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Relative singular-value tolerance for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

const JACOBI_TOLERANCE: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Default `t` grid of the numeric null-space constant, in `ln t`.
pub const DEFAULT_NSC_LN_RANGE: f64 = 2.0e4;
pub const DEFAULT_NSC_GRID_POINTS: usize = 4001;

/// A dense `M × N` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SensingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                "matrix must have at least one row and column",
            ));
        }
        if cols < rows {
            return Err(Error::invalid(format!(
                "sensing matrix needs N >= M, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Self::new(m, n, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales every nonzero column to unit Euclidean norm.
    pub fn normalize_columns(&mut self) {
        for j in 0..self.cols {
            let norm = self.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for i in 0..self.rows {
                    self.data[i * self.cols + j] /= norm;
                }
            }
        }
    }

    /// The Gram matrix `Φ_Sᵀ Φ_S` of the given columns, row-major.
    pub fn sub_gram(&self, support: &[usize]) -> Vec<f64> {
        let k = support.len();
        let cols: Vec<Vec<f64>> = support.iter().map(|&j| self.column(j)).collect();
        let mut gram = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
                gram[a * k + b] = dot;
                gram[b * k + a] = dot;
            }
        }
        gram
    }

    /// Parses a `rows,cols` header line followed by that many comma-separated
    /// rows. Blank lines and `#` comments are skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let bad = |msg: String| Error::invalid(format!("matrix csv: {msg}"));
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| bad("empty input".into()))?
            .map_err(|e| bad(e.to_string()))?;
        let dims: Vec<usize> = header
            .iter()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("first line must be the header 'rows,cols'".into()))?;
        let &[rows, cols] = dims.as_slice() else {
            return Err(bad("first line must be the header 'rows,cols'".into()));
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for record in records {
            let record = record.map_err(|e| bad(e.to_string()))?;
            seen += 1;
            if record.len() != cols {
                return Err(bad(format!(
                    "row {seen} has {} entries, header says {cols}",
                    record.len()
                )));
            }
            for field in record.iter() {
                data.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| bad(format!("row {seen}: cannot parse '{field}'")))?,
                );
            }
        }
        if seen != rows {
            return Err(bad(format!("header says {rows} rows, found {seen}")));
        }
        Self::new(rows, cols, data)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        wtr.write_record([self.rows.to_string(), self.cols.to_string()])
            .map_err(|e| Error::invalid(format!("matrix csv: {e}")))?;
        for i in 0..self.rows {
            wtr.write_record(self.row(i).iter().map(|v| format!("{v:e}")))
                .map_err(|e| Error::invalid(format!("matrix csv: {e}")))?;
        }
        wtr.flush()
            .map_err(|e| Error::invalid(format!("matrix csv: {e}")))
    }
}

/// Eigenvalues of a symmetric `n × n` row-major matrix by cyclic Jacobi
/// rotations, sorted ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let scale = a
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Singular values of the matrix whose columns are given, by one-sided
/// (Hestenes) Jacobi orthogonalization, sorted descending.
pub fn singular_values(columns: &[Vec<f64>]) -> Vec<f64> {
    let mut u = columns.to_vec();
    let r = u.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..r {
            for j in i + 1..r {
                let alpha = dot(&u[i], &u[i]);
                let beta = dot(&u[j], &u[j]);
                let gamma = dot(&u[i], &u[j]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = u.split_at_mut(j);
                for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, yj) = (*x, *y);
                    *x = c * xi - s * yj;
                    *y = s * xi + c * yj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|c| dot(c, c).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `RANK_TOLERANCE` times the largest.
pub fn numerical_rank(columns: &[Vec<f64>]) -> usize {
    let sv = singular_values(columns);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * top).count()
}

/// `C(n, k)` in `u128`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn check_budget(n: usize, k: usize, budget: u128) -> Result<()> {
    let required = binomial(n, k);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Restricted isometry constants indexed by order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RicProfile(BTreeMap<usize, f64>);

impl RicProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        Self(pairs.into_iter().collect())
    }

    pub fn insert(&mut self, order: usize, delta: f64) {
        self.0.insert(order, delta);
    }

    pub fn get(&self, order: usize) -> Option<f64> {
        self.0.get(&order).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which restricted isometry constant to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicConvention {
    /// `max(λ_max − 1, 1 − λ_min)` for the matrix as given.
    #[default]
    Raw,
    /// The constant of `cΦ` with the best `c > 0`: `(λ_max − λ_min)/(λ_max + λ_min)`.
    ///
    /// Null-space constants are invariant under scaling, so a bound built from
    /// this value certifies `Φ` itself.
    Scaled,
}

impl std::str::FromStr for RicConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(RicConvention::Raw),
            "scaled" => Ok(RicConvention::Scaled),
            other => Err(Error::invalid(format!(
                "unknown RIC convention '{other}' (expected raw or scaled)"
            ))),
        }
    }
}

/// Extreme eigenvalues `(λ_min, λ_max)` of `Φ_Sᵀ Φ_S` over all `|S| = K`.
pub fn gram_extremes(m: &SensingMatrix, k: usize, budget: u128) -> Result<(f64, f64)> {
    let n = m.cols();
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "order must satisfy 1 <= K <= N={n}, got {k}"
        )));
    }
    check_budget(n, k, budget)?;
    let merge = |a: (f64, f64), b: (f64, f64)| (a.0.min(b.0), a.1.max(b.1));
    let empty = (f64::INFINITY, f64::NEG_INFINITY);
    // partitioned by the smallest index of the support
    Ok((0..=n - k)
        .into_par_iter()
        .map(|lead| {
            (lead + 1..n)
                .combinations(k - 1)
                .map(|rest| {
                    let mut support = Vec::with_capacity(k);
                    support.push(lead);
                    support.extend(rest);
                    let eig = symmetric_eigenvalues(&m.sub_gram(&support), k);
                    (eig[0], eig[k - 1])
                })
                .fold(empty, merge)
        })
        .reduce(|| empty, merge))
}

/// Brute-force `δ_K` with the default enumeration budget.
pub fn ric(m: &SensingMatrix, k: usize) -> Result<f64> {
    ric_with_budget(m, k, DEFAULT_BUDGET)
}

pub fn ric_with_budget(m: &SensingMatrix, k: usize, budget: u128) -> Result<f64> {
    let (lo, hi) = gram_extremes(m, k, budget)?;
    Ok((hi - 1.0).max(1.0 - lo))
}

/// `δ_K` under the chosen convention.
pub fn ric_with(m: &SensingMatrix, k: usize, convention: RicConvention) -> Result<f64> {
    let (lo, hi) = gram_extremes(m, k, DEFAULT_BUDGET)?;
    Ok(match convention {
        RicConvention::Raw => (hi - 1.0).max(1.0 - lo),
        RicConvention::Scaled => (hi - lo) / (hi + lo),
    })
}

/// `δ_1, …, δ_{k_max}`.
pub fn ric_profile(m: &SensingMatrix, k_max: usize) -> Result<RicProfile> {
    let mut profile = RicProfile::new();
    for k in 1..=k_max {
        profile.insert(k, ric(m, k)?);
    }
    Ok(profile)
}

/// Largest `K₀` with `δ_{2K₀}` present and below 1, or 0.
pub fn k0_from_rics(profile: &RicProfile) -> usize {
    profile
        .iter()
        .filter(|&(order, delta)| order % 2 == 0 && delta < 1.0)
        .map(|(order, _)| order / 2)
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Spark {
    /// Size of the smallest linearly dependent set of columns.
    Finite(usize),
    /// No subset of columns is dependent.
    Full,
}

impl fmt::Display for Spark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spark::Finite(r) => write!(f, "{r}"),
            Spark::Full => write!(f, "full"),
        }
    }
}

pub fn spark(m: &SensingMatrix) -> Result<Spark> {
    spark_with_budget(m, DEFAULT_BUDGET)
}

pub fn spark_with_budget(m: &SensingMatrix, budget: u128) -> Result<Spark> {
    let n = m.cols();
    let columns: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    for r in 1..=n {
        if r > m.rows() {
            return Ok(Spark::Finite(r));
        }
        check_budget(n, r, budget)?;
        let dependent = (0..n).combinations(r).par_bridge().any(|support| {
            let subset: Vec<Vec<f64>> = support.iter().map(|&j| columns[j].clone()).collect();
            numerical_rank(&subset) < r
        });
        if dependent {
            return Ok(Spark::Finite(r));
        }
    }
    Ok(Spark::Full)
}

/// A nonzero null-space vector together with its sorted magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceVector {
    pub z: Vec<f64>,
    pub z_plus: Vec<f64>,
}

impl NullSpaceVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("null-space vector entries must be finite"));
        }
        if z.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("null-space vector must be nonzero"));
        }
        let mut z_plus: Vec<f64> = z.iter().map(|v| v.abs()).collect();
        z_plus.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { z, z_plus })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

fn determinant(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap();
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for r in col + 1..n {
            let factor = a[r * n + col] / d;
            for k in col..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
        }
    }
    det
}

/// The unit-norm spanning vector of a one-dimensional null space, signed so
/// that its largest-magnitude entry is positive.
///
/// Requires `N = M + 1` and full row rank.
pub fn null_space_vector(m: &SensingMatrix) -> Result<NullSpaceVector> {
    let (rows, cols) = (m.rows(), m.cols());
    if cols != rows + 1 {
        return Err(Error::domain(format!(
            "null-space extraction needs N = M + 1, got {rows}x{cols}"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    if numerical_rank(&columns) < rows {
        return Err(Error::NullSpaceTooLarge);
    }
    // signed maximal minors: z_j = (-1)^j det(Φ without column j)
    let mut z: Vec<f64> = (0..cols)
        .map(|skip| {
            let minor: Vec<f64> = (0..rows)
                .flat_map(|i| (0..cols).filter(move |&j| j != skip).map(move |j| (i, j)))
                .map(|(i, j)| m.get(i, j))
                .collect();
            let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(minor, rows)
        })
        .collect();
    let top = z.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if top == 0.0 {
        return Err(Error::NullSpaceTooLarge);
    }
    let lead = z.iter().copied().find(|v| v.abs() == top).unwrap();
    let norm = z.iter().map(|v| (v / top).powi(2)).sum::<f64>().sqrt() * top;
    let sign = lead.signum();
    for v in &mut z {
        *v *= sign / norm;
    }
    NullSpaceVector::new(z)
}

fn check_split(z: &NullSpaceVector, k: usize) -> Result<()> {
    if k == 0 || k >= z.len() {
        return Err(Error::domain(format!(
            "K must satisfy 1 <= K < N={}, got {k}",
            z.len()
        )));
    }
    Ok(())
}

/// `Σ_{i≤K} (z⁺_i)^p / Σ_{i>K} (z⁺_i)^p`, infinite when the tail vanishes.
pub fn exact_nsc_power(z: &NullSpaceVector, k: usize, p: f64) -> Result<f64> {
    check_split(z, k)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("p must lie in (0,1], got {p}")));
    }
    let top = z.z_plus[0];
    let term = |v: &f64| if *v == 0.0 { 0.0 } else { (v / top).powf(p) };
    let head: f64 = z.z_plus[..k].iter().map(term).sum();
    let tail: f64 = z.z_plus[k..].iter().map(term).sum();
    if tail == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(head / tail)
}

/// `r(t) = Σ_{i≤K} f(t z⁺_i) / Σ_{i>K} f(t z⁺_i)` at every grid point.
pub fn nsc_ratio_profile(
    f: &SparsityFunction,
    z: &NullSpaceVector,
    k: usize,
    t_grid: &LogGrid,
) -> Result<Vec<f64>> {
    check_split(z, k)?;
    if t_grid.is_empty() {
        return Err(Error::invalid("t grid must be non-empty"));
    }
    let ln_z: Vec<f64> = z.z_plus.iter().map(|v| v.ln()).collect();
    let ln_sum = |part: &[f64], ln_t: f64| {
        log_sum_exp(
            part.iter()
                .filter(|v| v.is_finite())
                .map(|&lz| f.ln_eval(ln_t + lz)),
        )
    };
    Ok(t_grid
        .ln_points()
        .iter()
        .map(|&ln_t| {
            let num = ln_sum(&ln_z[..k], ln_t);
            let den = ln_sum(&ln_z[k..], ln_t);
            if den == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (num - den).exp()
            }
        })
        .collect())
}

/// Grid supremum of `r(t)`.
pub fn exact_nsc_numeric(
    f: &SparsityFunction,
    z: &NullSpaceVector,
    k: usize,
    t_grid: &LogGrid,
) -> Result<f64> {
    Ok(nsc_ratio_profile(f, z, k, t_grid)?
        .into_iter()
        .fold(0.0, f64::max))
}

pub fn default_nsc_grid() -> LogGrid {
    LogGrid::from_ln_range(
        -DEFAULT_NSC_LN_RANGE,
        DEFAULT_NSC_LN_RANGE,
        DEFAULT_NSC_GRID_POINTS,
    )
    .expect("default grid is valid")
}
