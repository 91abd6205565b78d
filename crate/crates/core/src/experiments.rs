//! Seeded, deterministic experiment pipelines that emit tabular data.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    gamma_star, gamma_star_all_rics, largest_certified_k, ric_threshold, NscBoundInput, RicFamily,
    ZetaVariant,
};
use crate::error::{Error, Result};
use crate::exact::{
    exact_nsc_power, k0_from_rics, null_space_vector, ric_with, spark, NullSpaceVector,
    RicConvention, RicProfile, SensingMatrix, Spark,
};
use crate::grid::{check_increasing, linspace, logspace};
use crate::rng::DetRng;
use crate::spf::{Family, SparsityFunction};

pub const DEFAULT_LAMBDA_MIN: f64 = 1e-2;
pub const DEFAULT_LAMBDA_MAX: f64 = 1e3;
pub const DEFAULT_LAMBDA_POINTS: usize = 200;
pub const DEFAULT_P_POINTS: usize = 100;

const BOUNDARY_LO: f64 = 1e-6;
const BOUNDARY_HI: f64 = 1e9;
const BOUNDARY_REL_TOL: f64 = 1e-7;

/// Formats like C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A table that serialises to CSV with a fixed header.
pub trait CsvTable {
    fn header(&self) -> &'static [&'static str];
    fn records(&self) -> Vec<Vec<String>>;

    fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::invalid(format!("csv output: {e}"));
        wtr.write_record(self.header()).map_err(io)?;
        for record in self.records() {
            wtr.write_record(&record).map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::invalid(format!("csv output: {e}")))
    }

    fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::invalid(format!("cannot create {}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn check_index(v: &NullSpaceVector, i: usize) -> Result<()> {
    if i >= v.len() {
        return Err(Error::invalid(format!(
            "index {i} out of range for vector of length {}",
            v.len()
        )));
    }
    Ok(())
}

/// Whether `λ e_i` is the unique minimiser over `λ e_i + span{v}`, i.e.
/// `Σ_{j≠i} f(λ|v_j|/|v_i|) ≥ f(λ)`. Ties count as recovery.
pub fn recovery_test_1sparse(
    f: &SparsityFunction,
    v: &NullSpaceVector,
    i: usize,
    lambda: f64,
) -> Result<bool> {
    check_index(v, i)?;
    if !(lambda > 0.0) {
        return Err(Error::domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let vi = v.z[i].abs();
    if vi == 0.0 {
        return Ok(true);
    }
    let rest: f64 =
        v.z.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, vj)| f.eval(lambda * vj.abs() / vi))
            .sum();
    Ok(rest >= f.eval(lambda))
}

/// Index of the largest-magnitude entry.
pub fn dominant_index(v: &NullSpaceVector) -> usize {
    v.z.iter()
        .enumerate()
        .fold((0, -1.0), |best, (j, x)| {
            if x.abs() > best.1 {
                (j, x.abs())
            } else {
                best
            }
        })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub family: Family,
    pub lambda_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    /// `recovered[a][b]` is the outcome at `lambda_grid[a]`, `p_grid[b]`.
    pub recovered: Vec<Vec<bool>>,
}

impl PhaseDiagram {
    pub fn column(&self, b: usize) -> Vec<bool> {
        self.recovered.iter().map(|row| row[b]).collect()
    }
}

impl CsvTable for PhaseDiagram {
    fn header(&self) -> &'static [&'static str] {
        &["lambda", "p", "recovered"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.lambda_grid.len() * self.p_grid.len());
        for (a, &lambda) in self.lambda_grid.iter().enumerate() {
            for (b, &p) in self.p_grid.iter().enumerate() {
                let flag = if self.recovered[a][b] { "1" } else { "0" };
                out.push(vec![fmt_sig(lambda), fmt_sig(p), flag.to_string()]);
            }
        }
        out
    }
}

pub fn default_lambda_grid() -> Vec<f64> {
    logspace(
        DEFAULT_LAMBDA_MIN,
        DEFAULT_LAMBDA_MAX,
        DEFAULT_LAMBDA_POINTS,
    )
}

/// `k / count` for `k = 1..=count`.
pub fn default_p_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / count as f64).collect()
}

fn check_p_grid(p_grid: &[f64]) -> Result<()> {
    check_increasing("p grid", p_grid)?;
    if p_grid[0] <= 0.0 || p_grid[p_grid.len() - 1] > 1.0 {
        return Err(Error::invalid("p grid must lie in (0,1]"));
    }
    Ok(())
}

pub fn phase_diagram(
    family: Family,
    v: &NullSpaceVector,
    i: usize,
    lambda_grid: &[f64],
    p_grid: &[f64],
) -> Result<PhaseDiagram> {
    check_index(v, i)?;
    check_increasing("lambda grid", lambda_grid)?;
    if lambda_grid[0] <= 0.0 {
        return Err(Error::invalid("lambda grid must be positive"));
    }
    check_p_grid(p_grid)?;
    let functions = p_grid
        .iter()
        .map(|&p| SparsityFunction::with_exponent(family, p))
        .collect::<Result<Vec<_>>>()?;
    let recovered = lambda_grid
        .par_iter()
        .map(|&lambda| {
            functions
                .iter()
                .map(|f| recovery_test_1sparse(f, v, i, lambda))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram {
        family,
        lambda_grid: lambda_grid.to_vec(),
        p_grid: p_grid.to_vec(),
        recovered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "snake_case")]
pub enum RecoveryBoundary {
    /// The outcome flips at this amplitude.
    Crossing(f64),
    AlwaysRecovered,
    NeverRecovered,
}

/// Amplitude at which the 1-sparse recovery outcome flips, searched by
/// bisection in `ln λ` over `[1e-6, 1e9]`.
pub fn recovery_boundary(
    f: &SparsityFunction,
    v: &NullSpaceVector,
    i: usize,
) -> Result<RecoveryBoundary> {
    let test = |lambda: f64| recovery_test_1sparse(f, v, i, lambda);
    let (mut lo, mut hi) = (BOUNDARY_LO, BOUNDARY_HI);
    let at_lo = test(lo)?;
    match (at_lo, test(hi)?) {
        (true, true) => return Ok(RecoveryBoundary::AlwaysRecovered),
        (false, false) => return Ok(RecoveryBoundary::NeverRecovered),
        _ => {}
    }
    while hi / lo > 1.0 + BOUNDARY_REL_TOL {
        let mid = (lo * hi).sqrt();
        if test(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RecoveryBoundary::Crossing((lo * hi).sqrt()))
}

/// `M × N` standard normal entries from the seeded stream, row-major, then
/// columns scaled to unit norm.
pub fn random_gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Result<SensingMatrix> {
    let mut rng = DetRng::new(seed);
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    let mut m = SensingMatrix::new(rows, cols, data)?;
    m.normalize_columns();
    Ok(m)
}

/// Everything the NSC experiments need about one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixAnalysis {
    pub convention: RicConvention,
    pub profile: RicProfile,
    pub k0: usize,
    pub spark: Spark,
    pub null_vector: NullSpaceVector,
}

impl MatrixAnalysis {
    /// `δ_{2K₀}`.
    pub fn delta(&self) -> f64 {
        self.profile.get(2 * self.k0).unwrap_or(f64::NAN)
    }
}

/// Even-order RICs up to the first one reaching 1, plus `K₀`, spark and the
/// null-space vector.
pub fn analyze_matrix(m: &SensingMatrix, convention: RicConvention) -> Result<MatrixAnalysis> {
    let null_vector = null_space_vector(m)?;
    let mut profile = RicProfile::new();
    for order in (2..=m.cols()).step_by(2) {
        let delta = ric_with(m, order, convention)?;
        profile.insert(order, delta);
        if delta >= 1.0 {
            break;
        }
    }
    let k0 = k0_from_rics(&profile);
    if k0 == 0 {
        return Err(Error::domain(
            "no even order has a restricted isometry constant below 1",
        ));
    }
    Ok(MatrixAnalysis {
        convention,
        profile,
        k0,
        spark: spark(m)?,
        null_vector,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NscComparisonRow {
    pub p: f64,
    pub gamma_exact: f64,
    pub gamma1_star: f64,
    pub gamma2_star: f64,
    pub gamma1f_star: f64,
    pub gamma2f_star: f64,
}

impl NscComparisonRow {
    pub fn bounds(&self) -> [f64; 4] {
        [
            self.gamma1_star,
            self.gamma2_star,
            self.gamma1f_star,
            self.gamma2f_star,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NscComparison {
    pub k: usize,
    pub k0: usize,
    pub rows: Vec<NscComparisonRow>,
}

impl CsvTable for NscComparison {
    fn header(&self) -> &'static [&'static str] {
        &[
            "p",
            "gamma_exact",
            "gamma1_star",
            "gamma2_star",
            "gamma1f_star",
            "gamma2f_star",
        ]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.p,
                    r.gamma_exact,
                    r.gamma1_star,
                    r.gamma2_star,
                    r.gamma1f_star,
                    r.gamma2f_star,
                ]
                .iter()
                .map(|&x| fmt_sig(x))
                .collect()
            })
            .collect()
    }
}

fn all_ric_gamma(f: &SparsityFunction, k: usize, a: &MatrixAnalysis) -> Result<f64> {
    Ok(
        gamma_star_all_rics(f, k, a.k0, &a.profile, ZetaVariant::Sharp)?
            .map_or(f64::INFINITY, |b| b.result.gamma_star),
    )
}

/// Exact NSC against the power bound (`γ₁*`), the log/exp bound (`γ₂*`) and
/// their all-RIC variants, for each `p`.
pub fn nsc_comparison(a: &MatrixAnalysis, k: usize, p_grid: &[f64]) -> Result<NscComparison> {
    check_p_grid(p_grid)?;
    if k == 0 || k > a.k0 {
        return Err(Error::domain(format!(
            "K must satisfy 1 <= K <= K0={}, got {k}",
            a.k0
        )));
    }
    let input = NscBoundInput::new(k, a.k0, a.delta())?;
    let rows = p_grid
        .par_iter()
        .map(|&p| {
            let power = SparsityFunction::power(p)?;
            let log = SparsityFunction::lorentzian(p)?;
            Ok(NscComparisonRow {
                p,
                gamma_exact: exact_nsc_power(&a.null_vector, k, p)?,
                gamma1_star: gamma_star(&power, &input)?.gamma_star,
                gamma2_star: gamma_star(&log, &input)?.gamma_star,
                gamma1f_star: all_ric_gamma(&power, k, a)?,
                gamma2f_star: all_ric_gamma(&log, k, a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NscComparison { k, k0: a.k0, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoverableK {
    pub k_exact: usize,
    pub k_gamma1: usize,
    pub k_gamma2: usize,
    pub k_gamma1f: usize,
    pub k_gamma2f: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverableKTable {
    pub p_grid: Vec<f64>,
    pub rows: Vec<RecoverableK>,
}

impl CsvTable for RecoverableKTable {
    fn header(&self) -> &'static [&'static str] {
        &[
            "p",
            "k_exact",
            "k_gamma1",
            "k_gamma2",
            "k_gamma1f",
            "k_gamma2f",
        ]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.p_grid
            .iter()
            .zip(&self.rows)
            .map(|(&p, r)| {
                let mut rec = vec![fmt_sig(p)];
                rec.extend(
                    [r.k_exact, r.k_gamma1, r.k_gamma2, r.k_gamma1f, r.k_gamma2f]
                        .iter()
                        .map(|k| k.to_string()),
                );
                rec
            })
            .collect()
    }
}

fn largest_all_ric_k(f: &SparsityFunction, a: &MatrixAnalysis) -> Result<usize> {
    let mut best = 0;
    for k in 1..=a.k0 {
        if all_ric_gamma(f, k, a)? < 1.0 {
            best = k;
        }
    }
    Ok(best)
}

/// Largest recoverable sparsity per `p`, exactly and as certified by each bound.
pub fn recoverable_k_vs_p(a: &MatrixAnalysis, p_grid: &[f64]) -> Result<RecoverableKTable> {
    check_p_grid(p_grid)?;
    let n = a.null_vector.len();
    let rows = p_grid
        .par_iter()
        .map(|&p| {
            let power = SparsityFunction::power(p)?;
            let log = SparsityFunction::lorentzian(p)?;
            let mut k_exact = 0;
            for k in 1..n {
                if exact_nsc_power(&a.null_vector, k, p)? < 1.0 {
                    k_exact = k;
                }
            }
            Ok(RecoverableK {
                k_exact,
                k_gamma1: largest_certified_k(&power, a.k0, a.delta(), ZetaVariant::Sharp)?,
                k_gamma2: largest_certified_k(&log, a.k0, a.delta(), ZetaVariant::Sharp)?,
                k_gamma1f: largest_all_ric_k(&power, a)?,
                k_gamma2f: largest_all_ric_k(&log, a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoverableKTable {
        p_grid: p_grid.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K0Ratio {
    /// `K₀ = K`.
    Equal,
    /// `K₀ = 2K`.
    Double,
}

impl K0Ratio {
    pub fn k0(self, k: usize) -> usize {
        match self {
            K0Ratio::Equal => k,
            K0Ratio::Double => 2 * k,
        }
    }
}

impl std::str::FromStr for K0Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "equal" | "k0=k" => Ok(K0Ratio::Equal),
            "2" | "double" | "k0=2k" => Ok(K0Ratio::Double),
            other => Err(Error::invalid(format!(
                "unknown K0 ratio '{other}' (expected equal or double)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBoundRow {
    pub k: usize,
    pub k0: usize,
    pub p: f64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBoundTable {
    pub rows: Vec<DeltaBoundRow>,
}

impl CsvTable for DeltaBoundTable {
    fn header(&self) -> &'static [&'static str] {
        &["K", "K0", "p", "f1", "f2"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    r.k0.to_string(),
                    fmt_sig(r.p),
                    fmt_sig(r.f1),
                    fmt_sig(r.f2),
                ]
            })
            .collect()
    }
}

pub fn default_delta_p_grid() -> Vec<f64> {
    linspace(0.05, 1.0, 96)
}

/// RIC thresholds `f₁`, `f₂` for each `K` and `p`.
pub fn delta_bound_comparison(
    k_list: &[usize],
    ratio: K0Ratio,
    p_grid: &[f64],
) -> Result<DeltaBoundTable> {
    check_p_grid(p_grid)?;
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(Error::invalid("K list must be non-empty and positive"));
    }
    let mut rows = Vec::with_capacity(k_list.len() * p_grid.len());
    for &k in k_list {
        let k0 = ratio.k0(k);
        for &p in p_grid {
            rows.push(DeltaBoundRow {
                k,
                k0,
                p,
                f1: ric_threshold(RicFamily::LogExp, k, k0, p)?,
                f2: ric_threshold(RicFamily::MixedNorm, k, k0, p)?,
            });
        }
    }
    Ok(DeltaBoundTable { rows })
}

/// Where a sensing matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    Csv { path: PathBuf },
    Gaussian { rows: usize, cols: usize },
}

/// Inputs shared by the experiment pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub matrix: Option<MatrixSpec>,
    pub lambda_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub families: Vec<Family>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            matrix: None,
            lambda_grid: default_lambda_grid(),
            p_grid: default_p_grid(DEFAULT_P_POINTS),
            families: vec![Family::Power, Family::Lorentzian, Family::ConcaveExp],
            out_dir: PathBuf::from("."),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_increasing("lambda grid", &self.lambda_grid)?;
        check_p_grid(&self.p_grid)?;
        if self.families.is_empty() {
            return Err(Error::invalid("family list must be non-empty"));
        }
        if let Some(MatrixSpec::Gaussian { .. }) = self.matrix {
            if self.seed.is_none() {
                return Err(Error::invalid("a Gaussian matrix needs --seed"));
            }
        }
        Ok(())
    }

    pub fn load_matrix(&self) -> Result<SensingMatrix> {
        match &self.matrix {
            None => Err(Error::invalid("no matrix given")),
            Some(MatrixSpec::Csv { path }) => SensingMatrix::from_csv_path(path),
            Some(MatrixSpec::Gaussian { rows, cols }) => {
                let seed = self
                    .seed
                    .ok_or_else(|| Error::invalid("a Gaussian matrix needs --seed"))?;
                random_gaussian_matrix(*rows, *cols, seed)
            }
        }
    }
}
