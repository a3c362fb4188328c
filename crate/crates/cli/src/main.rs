//! `lrvtest`: simulate dependent error processes, fit linear models, run
//! corrected Fisher tests and regenerate level/power tables.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 when the data
//! make the requested computation numerically impossible (rank deficient
//! design, zero residuals, nonpositive long-run variance).

mod config;
mod data;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lrv_core::design::{regularity_report, DEFAULT_REGULARITY_TOL};
use lrv_core::inference::{fisher_classic, fisher_corrected};
use lrv_core::montecarlo::{acf_report, acf_report_from_series, build_design, run_experiment, DesignKind};
use lrv_core::ols::{check_noisy, fit, nested_rss};
use lrv_core::processes::{geometric_coeffs, ProcessConfig};
use lrv_core::spectral::{default_bandwidth, lrv, AcfSource, LrvMethod};
use lrv_core::{DesignMatrix, ExperimentSpec, ReferenceKind};

const THREADS_ENV: &str = "LRVTEST_THREADS";

#[derive(Parser)]
#[command(name = "lrvtest", version, about = "Fisher tests for linear models with dependent errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an error process and write it as a one-column CSV.
    Simulate(SimulateArgs),
    /// Least-squares fit; prints coefficients, residuals and RSS as JSON.
    Fit(FitArgs),
    /// Classic and corrected Fisher tests of a nested hypothesis, as JSON.
    Test(TestArgs),
    /// Monte Carlo level/power table from an experiment config, as CSV.
    Table(TableArgs),
    /// Sample autocovariances as `lag,value` CSV.
    Acf(AcfArgs),
    /// Design regularity diagnostics as JSON.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set process.scale=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY.PATH=VALUE")]
    sets: Vec<String>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Ar1,
    Intermittent,
    Linear,
}

impl SimKind {
    fn tag(self) -> &'static str {
        match self {
            SimKind::Ar1 => "ar1_nonmixing",
            SimKind::Intermittent => "intermittent",
            SimKind::Linear => "linear_process",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: Option<SimKind>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Intermittent map exponent (default 0.25).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    scale: Option<f64>,
    /// Linear process coefficients, comma separated (default 0.5^i, 64 terms).
    #[arg(long, value_delimiter = ',')]
    coeffs: Option<Vec<f64>>,
    /// Linear process innovations: gaussian, rademacher or uniform.
    #[arg(long)]
    innovation: Option<String>,
}

#[derive(Args)]
struct DesignArgs {
    /// Data CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column.
    #[arg(long)]
    y: String,
    /// Regressor columns, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "design")]
    x: Vec<String>,
    /// Prepend a column of ones to the `--x` columns.
    #[arg(long, requires = "x")]
    intercept: bool,
    /// Built-in design in the row index i = 1..n instead of `--x`.
    #[arg(long, value_enum)]
    design: Option<DesignArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    InterceptLinear,
    InterceptQuadratic,
    InterceptSqrtLog,
}

impl From<DesignArg> for DesignKind {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::InterceptLinear => DesignKind::InterceptLinear,
            DesignArg::InterceptQuadratic => DesignKind::InterceptQuadratic,
            DesignArg::InterceptSqrtLog => DesignKind::InterceptSqrtLog,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Truncated,
    Kernel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Chi2,
    Fisher,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Zero-based indices of the tested coefficients.
    #[arg(long, value_delimiter = ',', required = true)]
    null_cols: Vec<usize>,
    #[arg(long, value_enum, default_value = "truncated")]
    method: MethodArg,
    /// Truncation lag of the truncated estimator.
    #[arg(long, default_value_t = 0)]
    a_n: usize,
    /// Weight 2 on lags 1..a_n (true) or weight 1 (false).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    symmetrized: bool,
    /// Lag-window bandwidth; defaults to the rule-of-thumb value.
    #[arg(long)]
    bandwidth: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    /// Reference distribution for the classic statistic.
    #[arg(long, value_enum, default_value = "chi2")]
    reference: ReferenceArg,
    /// Allow testing every coefficient (`RSS₀ = ‖Y‖²`).
    #[arg(long)]
    allow_zero_model: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    a_n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
}

#[derive(Args)]
struct AcfArgs {
    #[command(flatten)]
    common: Common,
    /// Series CSV; without it the residuals of one simulated replication of
    /// the `--config` experiment are used.
    #[arg(long, requires = "column")]
    data: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    /// Sample size for the simulated replication.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 20)]
    max_lag: usize,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Data CSV holding the design columns.
    #[arg(long, requires = "x")]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    x: Vec<String>,
    #[arg(long, requires = "x")]
    intercept: bool,
    #[arg(long, value_enum, conflicts_with = "data", requires = "n")]
    design: Option<DesignArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
    lags: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_REGULARITY_TOL)]
    tol: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn emit_json(output: Option<&Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(output, &text)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = config::load(args.common.config.as_deref())?;
    config::apply_sets(&mut cfg, &args.common.sets)?;
    let flags = [
        ("kind", args.kind.map(|k| json!(k.tag()))),
        ("seed", args.seed.map(|v| json!(v))),
        ("gamma", args.gamma.map(|v| json!(v))),
        ("burn_in", args.burn_in.map(|v| json!(v))),
        ("scale", args.scale.map(|v| json!(v))),
        ("coeffs", args.coeffs.map(|v| json!(v))),
        ("innovation", args.innovation.map(|v| json!(v))),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config::set_path(&mut cfg, key, v)?;
        }
    }
    match cfg.get("kind").and_then(Value::as_str) {
        None => bail!("no process kind given; use --kind or a config with \"kind\""),
        Some("intermittent") => config::set_default(&mut cfg, "gamma", json!(0.25)),
        Some("linear_process") => {
            config::set_default(&mut cfg, "coeffs", json!(geometric_coeffs(0.5, 64)));
            config::set_default(&mut cfg, "innovation", json!("gaussian"));
        }
        Some(_) => {}
    }
    let process: ProcessConfig = serde_json::from_value(cfg).context("process config")?;
    let series = process.simulate(args.n)?;
    let mut text = String::new();
    writeln!(text, "# config: {}", serde_json::to_string(&process)?)?;
    writeln!(text, "# n: {}", args.n)?;
    text.push_str("value\n");
    for v in &series {
        writeln!(text, "{v}")?;
    }
    emit(args.common.output.as_deref(), &text)
}

struct LoadedModel {
    x: DesignMatrix,
    y: Vec<f64>,
    columns: Vec<String>,
}

fn load_model(args: &DesignArgs) -> Result<LoadedModel> {
    let table = data::Table::read(&args.data)?;
    let y = table.column(&args.y)?.to_vec();
    let n = table.nrows();
    let (x, columns) = match args.design {
        Some(kind) => {
            let kind = DesignKind::from(kind);
            let names = match kind {
                DesignKind::InterceptLinear => vec!["1", "i"],
                DesignKind::InterceptQuadratic => vec!["1", "i", "i^2"],
                DesignKind::InterceptSqrtLog => vec!["1", "sqrt(i)", "log(i)"],
            };
            (build_design(kind, n)?, names.into_iter().map(String::from).collect())
        }
        None => {
            if args.x.is_empty() {
                bail!("give regressors with --x or a built-in --design");
            }
            let mut cols = Vec::new();
            let mut names = Vec::new();
            if args.intercept {
                cols.push(vec![1.0; n]);
                names.push("1".to_string());
            }
            for name in &args.x {
                cols.push(table.column(name)?.to_vec());
                names.push(name.clone());
            }
            (DesignMatrix::from_columns(&cols)?, names)
        }
    };
    Ok(LoadedModel { x, y, columns })
}

fn fit_cmd(args: FitArgs) -> Result<()> {
    let model = load_model(&args.design)?;
    let result = fit(&model.x, &model.y)?;
    emit_json(
        args.output.as_deref(),
        &json!({
            "columns": model.columns,
            "fit": result,
        }),
    )
}

fn test_cmd(args: TestArgs) -> Result<()> {
    let model = load_model(&args.design)?;
    let n = model.x.nrows();
    let p = model.x.ncols();
    let rss = nested_rss(&model.x, &args.null_cols, &model.y, args.allow_zero_model)?;
    check_noisy(rss.rss_full, &model.y)?;
    let reference = match args.reference {
        ReferenceArg::Chi2 => ReferenceKind::Chi2OverDof,
        ReferenceArg::Fisher => ReferenceKind::Fisher,
    };
    let classic = fisher_classic(rss.rss_null, rss.rss_full, n, p, rss.p0, reference)?;
    let method = match args.method {
        MethodArg::Truncated => LrvMethod::Truncated {
            a_n: args.a_n,
            symmetrized: args.symmetrized,
        },
        MethodArg::Kernel => LrvMethod::KernelF0 {
            bandwidth: match args.bandwidth {
                Some(c) => c,
                None => default_bandwidth(n, args.delta)?,
            },
        },
    };
    let residuals = fit(&model.x, &model.y)?.residuals;
    let estimate = lrv(&residuals, method)?;
    let corrected = fisher_corrected(rss.rss_null, rss.rss_full, &estimate, p, rss.p0)?;
    emit_json(
        args.output.as_deref(),
        &json!({
            "config": {
                "data": args.design.data,
                "y": args.design.y,
                "columns": model.columns,
                "null_cols": args.null_cols,
                "lrv_method": method,
                "reference": reference,
            },
            "n": n,
            "p": p,
            "p0": rss.p0,
            "rss_full": rss.rss_full,
            "rss_null": rss.rss_null,
            "lrv": estimate,
            "classic": classic,
            "corrected": corrected,
        }),
    )
}

fn experiment_spec(common: &Common, flags: &[(&str, Option<Value>)]) -> Result<ExperimentSpec> {
    if common.config.is_none() {
        bail!("--config is required");
    }
    let mut cfg = config::load(common.config.as_deref())?;
    config::apply_sets(&mut cfg, &common.sets)?;
    for (key, value) in flags {
        if let Some(v) = value {
            config::set_path(&mut cfg, key, v.clone())?;
        }
    }
    Ok(ExperimentSpec::from_json(&cfg.to_string())?)
}

fn table_cmd(args: TableArgs) -> Result<()> {
    let spec = experiment_spec(
        &args.common,
        &[
            ("replications", args.replications.map(|v| json!(v))),
            ("master_seed", args.seed.map(|v| json!(v))),
            ("a_n", args.a_n.map(|v| json!(v))),
            ("n_values", args.n_values.map(|v| json!(v))),
        ],
    )?;
    let table = run_experiment(&spec)?;
    emit(args.common.output.as_deref(), &table.to_csv())
}

fn acf_cmd(args: AcfArgs) -> Result<()> {
    let mut text = String::new();
    let points = match &args.data {
        Some(path) => {
            let column = args.column.as_deref().unwrap_or_default();
            let table = data::Table::read(path)?;
            writeln!(text, "# source: {} column {column}", path.display())?;
            acf_report_from_series(table.column(column)?, args.max_lag, AcfSource::RawSeries)?
        }
        None => {
            let spec = experiment_spec(&args.common, &[])?;
            let n = args.n.unwrap_or(spec.n_values[0]);
            writeln!(text, "# spec: {}", spec.to_json())?;
            writeln!(text, "# residuals of replication 0 at n: {n}")?;
            acf_report(&spec, n, args.max_lag)?
        }
    };
    text.push_str("lag,value\n");
    for pt in points {
        writeln!(text, "{},{}", pt.lag, pt.value)?;
    }
    emit(args.common.output.as_deref(), &text)
}

fn diagnose_cmd(args: DiagnoseArgs) -> Result<()> {
    let (x, source) = match (&args.data, args.design) {
        (Some(path), _) => {
            let table = data::Table::read(path)?;
            let n = table.nrows();
            let mut cols = Vec::new();
            if args.intercept {
                cols.push(vec![1.0; n]);
            }
            for name in &args.x {
                cols.push(table.column(name)?.to_vec());
            }
            (DesignMatrix::from_columns(&cols)?, json!({"data": path, "x": args.x, "intercept": args.intercept}))
        }
        (None, Some(kind)) => {
            let n = args.n.unwrap_or_default();
            let kind = DesignKind::from(kind);
            (build_design(kind, n)?, json!({"design": kind, "n": n}))
        }
        (None, None) => bail!("give --data with --x, or --design with --n"),
    };
    let report = regularity_report(&x, &args.lags, args.tol)?;
    emit_json(args.output.as_deref(), &json!({"config": source, "report": report}))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Test(a) => test_cmd(a),
        Command::Table(a) => table_cmd(a),
        Command::Acf(a) => acf_cmd(a),
        Command::Diagnose(a) => diagnose_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .downcast_ref::<lrv_core::Error>()
                .is_some_and(lrv_core::Error::is_numerical);
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}
