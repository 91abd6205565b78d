//! Command-line front end.
//!
//! Every subcommand writes its result under `--out` (or `$JNSC_OUT_DIR`, or
//! the working directory) and prints a one-line summary. Exit status is 0 on
//! success, 2 for malformed input and 3 for numeric-domain failures.
//!
//! `--config FILE` reads a JSON object whose keys are flag names; explicit
//! flags on the command line take precedence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    gamma_star_with, gaussian_rows, max_k, max_p, ric_threshold, NscBoundInput, RicFamily,
    ZetaVariant,
};
use crate::error::{Error, Result};
use crate::exact::{
    default_nsc_grid, exact_nsc_numeric, exact_nsc_power, k0_from_rics, null_space_vector,
    ric_with, spark, NullSpaceVector, RicConvention, RicProfile, SensingMatrix,
};
use crate::experiments::{
    analyze_matrix, default_lambda_grid, default_p_grid, delta_bound_comparison, dominant_index,
    fmt_sig, nsc_comparison, phase_diagram, recoverable_k_vs_p, CsvTable, ExperimentConfig,
    K0Ratio, MatrixSpec, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_MIN, DEFAULT_LAMBDA_POINTS,
    DEFAULT_P_POINTS,
};
use crate::grid::{linspace, logspace};
use crate::spf::{Family, Measure, SparsityFunction};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "JNSC_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "jnsc",
    version,
    about = "Recovery certificates for sparse recovery with nonconvex penalties",
    allow_negative_numbers = true
)]
struct Cli {
    /// JSON file of flag values; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Null-space-constant and RIC bounds.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Exact analysis of a small matrix.
    #[command(subcommand)]
    Exact(ExactCommand),
    /// 1-sparse recovery map over (lambda, p).
    PhaseDiagram(PhaseArgs),
    /// Exact NSC against its bounds as p varies.
    Fig3(Fig3Args),
    /// Largest recoverable sparsity as p varies.
    Fig4(MatrixArgs),
    /// RIC thresholds f1 and f2 as p varies.
    Fig5(Fig5Args),
    /// Gaussian rows needed to meet a RIC bound.
    GaussianRows(RowsArgs),
}

#[derive(Debug, Subcommand)]
enum BoundCommand {
    /// NSC upper bound gamma*.
    Nsc(NscArgs),
    /// RIC threshold f1 (log_exp) or f2 (mixed_norm).
    Ric(RicArgs),
    /// Supremum of certified exponents.
    MaxP(MaxPArgs),
    /// Largest certified sparsity.
    MaxK(MaxKArgs),
}

#[derive(Debug, Subcommand)]
enum ExactCommand {
    /// Brute-force restricted isometry constant(s).
    Ric(ExactRicArgs),
    /// Smallest number of dependent columns.
    Spark(MatrixArgs),
    /// Exact null-space constant of a matrix with a one-dimensional kernel.
    Nsc(ExactNscArgs),
}

#[derive(Debug, Clone, Args)]
struct FunctionArgs {
    /// power, lorentzian, concave_exp or mixed_norm.
    #[arg(long)]
    family: Option<Family>,
    /// Exponent of a single-exponent family.
    #[arg(long)]
    p: Option<f64>,
    /// Lower end of a uniform mixed-norm measure.
    #[arg(long)]
    p1: Option<f64>,
    /// Upper end of a uniform mixed-norm measure.
    #[arg(long)]
    p2: Option<f64>,
    /// Discrete mixed-norm measure as exponent:weight pairs.
    #[arg(long, value_delimiter = ',', value_name = "P:W")]
    atoms: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ZetaArg {
    Sharp,
    Published,
}

#[derive(Debug, Args)]
struct NscArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    /// delta_{2K0}.
    #[arg(long)]
    delta: Option<f64>,
    /// Mixed-norm zeta form.
    #[arg(long, value_enum, default_value = "sharp")]
    zeta: ZetaArg,
}

#[derive(Debug, Args)]
struct RicArgs {
    /// log_exp or mixed_norm.
    #[arg(long)]
    family: Option<RicFamily>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    /// p (p2 for mixed_norm).
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Debug, Args)]
struct MaxPArgs {
    #[arg(long)]
    family: Option<RicFamily>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Args)]
struct MaxKArgs {
    #[arg(long)]
    family: Option<RicFamily>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// p (p2 for mixed_norm).
    #[arg(long)]
    p: Option<f64>,
    /// p1, mixed_norm only.
    #[arg(long)]
    p1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct MatrixArgs {
    /// Matrix CSV: a "rows,cols" header line, then the rows.
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
    /// Seeded column-normalised Gaussian matrix, e.g. 8x9.
    #[arg(long, value_name = "MxN", value_parser = parse_dims)]
    gaussian: Option<(usize, usize)>,
    /// Seed for --gaussian.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of points k/n, k = 1..n, on the p grid.
    #[arg(long)]
    p_points: Option<usize>,
    /// raw or scaled (best rescaling of the matrix). Default: raw for
    /// `exact ric`, scaled for fig3/fig4.
    #[arg(long)]
    ric_convention: Option<RicConvention>,
}

#[derive(Debug, Args)]
struct ExactRicArgs {
    #[command(flatten)]
    source: MatrixArgs,
    /// Single order K.
    #[arg(long)]
    k: Option<usize>,
    /// All orders 1..=K.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Debug, Args)]
struct ExactNscArgs {
    #[command(flatten)]
    source: MatrixArgs,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Also evaluate the grid supremum for this family.
    #[arg(long)]
    family: Option<Family>,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[command(flatten)]
    source: MatrixArgs,
    /// Null-space vector given directly, comma separated.
    #[arg(long, value_delimiter = ',')]
    v: Vec<f64>,
    /// Index of the 1-sparse support (default: largest |v_i|).
    #[arg(long)]
    index: Option<usize>,
    /// Comma-separated families (default: power,lorentzian,concave_exp).
    #[arg(long, value_delimiter = ',')]
    family: Vec<Family>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    lambda_points: Option<usize>,
}

#[derive(Debug, Args)]
struct Fig3Args {
    #[command(flatten)]
    source: MatrixArgs,
    /// Sparsity level (default: every K up to K0).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct Fig5Args {
    /// Largest K in the list 1..=K.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// equal (K0 = K) or double (K0 = 2K); default both.
    #[arg(long)]
    ratio: Option<K0Ratio>,
    #[arg(long, default_value_t = 0.05)]
    p_min: f64,
    #[arg(long, default_value_t = 96)]
    p_points: usize,
}

#[derive(Debug, Args)]
struct RowsArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Target RIC bound; computed from --family/--k/--p when absent.
    #[arg(long)]
    ric_bound: Option<f64>,
    #[arg(long)]
    family: Option<RicFamily>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected MxN, got '{s}'"))?;
    let m = m
        .trim()
        .parse()
        .map_err(|_| format!("bad row count in '{s}'"))?;
    let n = n
        .trim()
        .parse()
        .map_err(|_| format!("bad column count in '{s}'"))?;
    Ok((m, n))
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Invalid(format!("missing required flag --{flag}")))
}

fn build_command() -> clap::Command {
    fn override_self(cmd: clap::Command) -> clap::Command {
        cmd.args_override_self(true).mut_subcommands(override_self)
    }
    override_self(Cli::command())
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let matches = match parse_with_config(&argv) {
        Ok(m) => m,
        Err(Failure::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
        Err(Failure::Lib(e)) => return report(&e),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_INVALID;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_INVALID
    }
}

enum Failure {
    Clap(clap::Error),
    Lib(Error),
}

fn parse_with_config(argv: &[OsString]) -> std::result::Result<ArgMatches, Failure> {
    let first = build_command()
        .try_get_matches_from(argv)
        .map_err(Failure::Clap)?;
    let Some(path) = first.get_one::<PathBuf>("config") else {
        return Ok(first);
    };
    let config_flags = config_to_flags(path).map_err(Failure::Lib)?;
    // subcommand names, then config flags, then the user's own tokens so they win
    let mut names = Vec::new();
    let mut cursor = &first;
    while let Some((name, sub)) = cursor.subcommand() {
        names.push(name.to_string());
        cursor = sub;
    }
    let mut rest: Vec<OsString> = argv[1..].to_vec();
    let mut from = 0;
    for name in &names {
        if let Some(pos) = rest[from..].iter().position(|t| t == name.as_str()) {
            rest.remove(from + pos);
            from += pos;
        }
    }
    let mut merged = vec![argv[0].clone()];
    merged.extend(names.iter().map(OsString::from));
    merged.extend(config_flags.into_iter().map(OsString::from));
    merged.extend(rest);
    build_command()
        .try_get_matches_from(merged)
        .map_err(Failure::Clap)
}

fn config_to_flags(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(Error::Invalid("config must be a JSON object".into()));
    };
    let mut flags = Vec::new();
    for (key, value) in map {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(Error::Invalid(format!(
                "config key '{key}': unsupported value {other}"
            ))),
        };
        match &value {
            Value::Bool(true) => flags.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    flags.push(flag.clone());
                    flags.push(scalar(item)?);
                }
            }
            other => {
                flags.push(flag);
                flags.push(scalar(other)?);
            }
        }
    }
    Ok(flags)
}

struct Context {
    out_dir: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            Error::Invalid(format!("cannot create {}: {e}", self.out_dir.display()))
        })?;
        Ok(self.out_dir.join(name))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name)?;
        let text = serde_json::to_string_pretty(value).expect("serialisable output");
        fs::write(&path, text + "\n")
            .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_csv<T: CsvTable>(&self, name: &str, table: &T) -> Result<PathBuf> {
        let path = self.path(name)?;
        table.save_csv(&path)?;
        Ok(path)
    }
}

fn execute(cli: Cli) -> Result<String> {
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context { out_dir };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Invalid("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let command = cli.command;
    pool.install(|| dispatch(command, &ctx))
}

fn dispatch(command: Command, ctx: &Context) -> Result<String> {
    match command {
        Command::Bound(BoundCommand::Nsc(a)) => bound_nsc(a, ctx),
        Command::Bound(BoundCommand::Ric(a)) => bound_ric(a, ctx),
        Command::Bound(BoundCommand::MaxP(a)) => bound_max_p(a, ctx),
        Command::Bound(BoundCommand::MaxK(a)) => bound_max_k(a, ctx),
        Command::Exact(ExactCommand::Ric(a)) => exact_ric(a, ctx),
        Command::Exact(ExactCommand::Spark(a)) => exact_spark(a, ctx),
        Command::Exact(ExactCommand::Nsc(a)) => exact_nsc(a, ctx),
        Command::PhaseDiagram(a) => phase(a, ctx),
        Command::Fig3(a) => fig3(a, ctx),
        Command::Fig4(a) => fig4(a, ctx),
        Command::Fig5(a) => fig5(a, ctx),
        Command::GaussianRows(a) => rows(a, ctx),
    }
}

fn sparsity_function(a: &FunctionArgs) -> Result<SparsityFunction> {
    let family = need(a.family, "family")?;
    if family != Family::MixedNorm {
        return SparsityFunction::with_exponent(family, need(a.p, "p")?);
    }
    if !a.atoms.is_empty() {
        let atoms = a
            .atoms
            .iter()
            .map(|s| {
                let (p, w) = s
                    .split_once(':')
                    .ok_or_else(|| Error::Invalid(format!("atom '{s}' is not P:W")))?;
                let num = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Invalid(format!("atom '{s}' is not numeric")))
                };
                Ok((num(p)?, num(w)?))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(SparsityFunction::mixed_norm(Measure::atoms(atoms)?));
    }
    let p2 = a.p2.or(a.p);
    Ok(SparsityFunction::mixed_norm(Measure::uniform(
        need(a.p1, "p1")?,
        need(p2, "p2")?,
    )?))
}

fn bound_nsc(a: NscArgs, ctx: &Context) -> Result<String> {
    let f = sparsity_function(&a.function)?;
    let input = NscBoundInput::new(need(a.k, "k")?, need(a.k0, "k0")?, need(a.delta, "delta")?)?;
    let variant = match a.zeta {
        ZetaArg::Sharp => ZetaVariant::Sharp,
        ZetaArg::Published => ZetaVariant::Published,
    };
    let r = gamma_star_with(&f, &input, variant)?;
    ctx.write_json(
        "bound_nsc.json",
        &json!({ "function": f, "input": input, "zeta_variant": variant, "result": r }),
    )?;
    Ok(format!(
        "gamma_star = {} (zeta = {}, recoverable = {})",
        fmt_sig(r.gamma_star),
        fmt_sig(r.zeta),
        r.recoverable
    ))
}

fn bound_ric(a: RicArgs, ctx: &Context) -> Result<String> {
    let family = need(a.family, "family")?;
    let (k, k0, p) = (need(a.k, "k")?, need(a.k0, "k0")?, need(a.p, "p")?);
    let threshold = ric_threshold(family, k, k0, p)?;
    ctx.write_json(
        "bound_ric.json",
        &json!({ "family": family, "k": k, "k0": k0, "p": p, "threshold": threshold }),
    )?;
    let name = if family == RicFamily::LogExp {
        "f1"
    } else {
        "f2"
    };
    Ok(format!("{name} = {}", fmt_sig(threshold)))
}

fn bound_max_p(a: MaxPArgs, ctx: &Context) -> Result<String> {
    let family = need(a.family, "family")?;
    let (k, k0, delta) = (need(a.k, "k")?, need(a.k0, "k0")?, need(a.delta, "delta")?);
    let p = max_p(family, k, k0, delta)?;
    ctx.write_json(
        "bound_max_p.json",
        &json!({ "family": family, "k": k, "k0": k0, "delta": delta, "max_p": p }),
    )?;
    Ok(format!(
        "max_p = {} (supremum; certified for p strictly below)",
        fmt_sig(p)
    ))
}

fn bound_max_k(a: MaxKArgs, ctx: &Context) -> Result<String> {
    let family = need(a.family, "family")?;
    let (k0, delta, p) = (need(a.k0, "k0")?, need(a.delta, "delta")?, need(a.p, "p")?);
    let k = max_k(family, k0, delta, p, a.p1)?;
    ctx.write_json(
        "bound_max_k.json",
        &json!({ "family": family, "k0": k0, "delta": delta, "p": p, "p1": a.p1, "max_k": k }),
    )?;
    Ok(format!("max_k = {k}"))
}

fn experiment_config(src: &MatrixArgs) -> Result<ExperimentConfig> {
    let matrix = match (&src.matrix, src.gaussian) {
        (Some(_), Some(_)) => {
            return Err(Error::Invalid(
                "give either --matrix or --gaussian, not both".into(),
            ))
        }
        (Some(path), None) => Some(MatrixSpec::Csv { path: path.clone() }),
        (None, Some((rows, cols))) => Some(MatrixSpec::Gaussian { rows, cols }),
        (None, None) => None,
    };
    if src.p_points == Some(0) {
        return Err(Error::Invalid("--p-points must be positive".into()));
    }
    let config = ExperimentConfig {
        seed: src.seed,
        matrix,
        p_grid: default_p_grid(src.p_points.unwrap_or(DEFAULT_P_POINTS)),
        ..ExperimentConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn load_matrix(src: &MatrixArgs) -> Result<(ExperimentConfig, SensingMatrix)> {
    let config = experiment_config(src)?;
    if config.matrix.is_none() {
        return Err(Error::Invalid(
            "missing matrix: give --matrix FILE or --gaussian MxN --seed S".into(),
        ));
    }
    let m = config.load_matrix()?;
    Ok((config, m))
}

fn exact_ric(a: ExactRicArgs, ctx: &Context) -> Result<String> {
    let (_, m) = load_matrix(&a.source)?;
    let convention = a.source.ric_convention.unwrap_or(RicConvention::Raw);
    let orders: Vec<usize> = match (a.k, a.k_max) {
        (Some(k), None) => vec![k],
        (None, Some(k)) => (1..=k).collect(),
        (None, None) => (1..=m.cols()).collect(),
        (Some(_), Some(_)) => return Err(Error::Invalid("give either --k or --k-max".into())),
    };
    let mut profile = RicProfile::new();
    for &k in &orders {
        profile.insert(k, ric_with(&m, k, convention)?);
    }
    ctx.write_json(
        "exact_ric.json",
        &json!({ "rows": m.rows(), "cols": m.cols(), "convention": convention, "ric": profile,
                 "k0": k0_from_rics(&profile) }),
    )?;
    Ok(profile
        .iter()
        .map(|(k, d)| format!("delta_{k} = {}", fmt_sig(d)))
        .collect::<Vec<_>>()
        .join(", "))
}

fn exact_spark(a: MatrixArgs, ctx: &Context) -> Result<String> {
    let (_, m) = load_matrix(&a)?;
    let s = spark(&m)?;
    ctx.write_json(
        "exact_spark.json",
        &json!({ "rows": m.rows(), "cols": m.cols(), "spark": s }),
    )?;
    Ok(format!("spark = {s}"))
}

fn exact_nsc(a: ExactNscArgs, ctx: &Context) -> Result<String> {
    let (_, m) = load_matrix(&a.source)?;
    let (k, p) = (need(a.k, "k")?, need(a.p, "p")?);
    let z = null_space_vector(&m)?;
    let gamma = exact_nsc_power(&z, k, p)?;
    let numeric =
        match a.family {
            None => None,
            Some(Family::MixedNorm) => return Err(Error::Invalid(
                "the exact NSC formula needs non-increasing elasticity; mixed_norm is not covered"
                    .into(),
            )),
            Some(family) => {
                let f = SparsityFunction::with_exponent(family, p)?;
                Some(exact_nsc_numeric(&f, &z, k, &default_nsc_grid())?)
            }
        };
    ctx.write_json(
        "exact_nsc.json",
        &json!({ "k": k, "p": p, "null_vector": z, "gamma": gamma, "gamma_numeric": numeric,
                 "family": a.family, "recoverable": gamma < 1.0 }),
    )?;
    Ok(format!(
        "gamma = {} (recoverable = {})",
        fmt_sig(gamma),
        gamma < 1.0
    ))
}

fn phase(a: PhaseArgs, ctx: &Context) -> Result<String> {
    let lambda_grid = match (a.lambda_min, a.lambda_max, a.lambda_points) {
        (None, None, None) => default_lambda_grid(),
        (lo, hi, n) => {
            let (lo, hi) = (
                lo.unwrap_or(DEFAULT_LAMBDA_MIN),
                hi.unwrap_or(DEFAULT_LAMBDA_MAX),
            );
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Invalid(
                    "lambda range must satisfy 0 < min < max".into(),
                ));
            }
            logspace(lo, hi, n.unwrap_or(DEFAULT_LAMBDA_POINTS))
        }
    };
    let config = ExperimentConfig {
        lambda_grid,
        families: if a.family.is_empty() {
            ExperimentConfig::default().families
        } else {
            a.family.clone()
        },
        ..experiment_config(&a.source)?
    };
    config.validate()?;
    let v = match (config.matrix.is_some(), a.v.is_empty()) {
        (true, true) => null_space_vector(&config.load_matrix()?)?,
        (false, false) => NullSpaceVector::new(a.v.clone())?,
        (true, false) => {
            return Err(Error::Invalid(
                "give either --v or a matrix, not both".into(),
            ))
        }
        (false, true) => {
            return Err(Error::Invalid(
                "missing vector: give --v, --matrix or --gaussian".into(),
            ))
        }
    };
    let index = a.index.unwrap_or_else(|| dominant_index(&v));
    let mut written = Vec::new();
    for &family in &config.families {
        let d = phase_diagram(family, &v, index, &config.lambda_grid, &config.p_grid)?;
        written.push(ctx.write_csv(&format!("phase_{}.csv", family.name()), &d)?);
    }
    Ok(format!(
        "phase diagram: {} lambda x {} p nodes, wrote {}",
        config.lambda_grid.len(),
        config.p_grid.len(),
        display_paths(&written)
    ))
}

fn display_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fig3(a: Fig3Args, ctx: &Context) -> Result<String> {
    let (config, m) = load_matrix(&a.source)?;
    let analysis = analyze_matrix(&m, a.source.ric_convention.unwrap_or(RicConvention::Scaled))?;
    ctx.write_json("matrix_analysis.json", &analysis)?;
    let ks: Vec<usize> = match a.k {
        Some(k) => vec![k],
        None => (1..=analysis.k0).collect(),
    };
    let mut written = Vec::new();
    for k in ks {
        let table = nsc_comparison(&analysis, k, &config.p_grid)?;
        written.push(ctx.write_csv(&format!("fig3_k{k}.csv"), &table)?);
    }
    Ok(format!(
        "fig3: K0 = {}, delta_{} = {}, wrote {}",
        analysis.k0,
        2 * analysis.k0,
        fmt_sig(analysis.delta()),
        display_paths(&written)
    ))
}

fn fig4(a: MatrixArgs, ctx: &Context) -> Result<String> {
    let (config, m) = load_matrix(&a)?;
    let analysis = analyze_matrix(&m, a.ric_convention.unwrap_or(RicConvention::Scaled))?;
    ctx.write_json("matrix_analysis.json", &analysis)?;
    let table = recoverable_k_vs_p(&analysis, &config.p_grid)?;
    let path = ctx.write_csv("fig4.csv", &table)?;
    Ok(format!(
        "fig4: K0 = {}, wrote {}",
        analysis.k0,
        path.display()
    ))
}

fn fig5(a: Fig5Args, ctx: &Context) -> Result<String> {
    if a.k_max == 0 || a.p_points == 0 {
        return Err(Error::Invalid(
            "--k-max and --p-points must be positive".into(),
        ));
    }
    let p_grid = linspace(a.p_min, 1.0, a.p_points);
    let ks: Vec<usize> = (1..=a.k_max).collect();
    let ratios = match a.ratio {
        Some(r) => vec![r],
        None => vec![K0Ratio::Equal, K0Ratio::Double],
    };
    let mut written = Vec::new();
    for ratio in ratios {
        let table = delta_bound_comparison(&ks, ratio, &p_grid)?;
        let name = match ratio {
            K0Ratio::Equal => "fig5_k0_eq_k.csv",
            K0Ratio::Double => "fig5_k0_eq_2k.csv",
        };
        written.push(ctx.write_csv(name, &table)?);
    }
    Ok(format!("fig5: wrote {}", display_paths(&written)))
}

fn rows(a: RowsArgs, ctx: &Context) -> Result<String> {
    let (n, k0, epsilon) = (
        need(a.n, "n")?,
        need(a.k0, "k0")?,
        need(a.epsilon, "epsilon")?,
    );
    let bound = match a.ric_bound {
        Some(b) => b,
        None => ric_threshold(
            need(a.family, "family (or --ric-bound)")?,
            need(a.k, "k")?,
            k0,
            need(a.p, "p")?,
        )?,
    };
    let m = gaussian_rows(n, k0, epsilon, bound)?;
    ctx.write_json(
        "gaussian_rows.json",
        &json!({ "n": n, "k0": k0, "epsilon": epsilon, "ric_bound": bound, "rows": m }),
    )?;
    Ok(format!("rows = {m} (ric bound {})", fmt_sig(bound)))
}
