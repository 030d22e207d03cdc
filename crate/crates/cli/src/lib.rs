//! `kdr` subcommands: `fit`, `bench`, `probe` and `generate`.
//!
//! Exit codes:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success                                  |
//! | 1    | numeric or i/o failure                   |
//! | 2    | malformed input CSV or unknown method    |
//! | 3    | constant covariate column                |
//! | 4    | invalid target dimension                 |
//! | 64   | invalid command-line arguments           |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kdr_core::csvio::{write_dataset, write_matrix, ResponseSelector};
use kdr_core::evalbench::{probe_trials, run_benchmark, BenchConfig, BenchResult, Method};
use kdr_core::kernelgram::{Continuation, KernelConfig};
use kdr_core::optim::{fit_kdr, OptimConfig};
use kdr_core::synthdata::{generate, standardize, unstandardize_subspace, GenSpec, Regression};
use kdr_core::{KdrError, RegCoeff};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_CONSTANT_COLUMN: i32 = 3;
pub const EXIT_BAD_DIM: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "kdr", version, about = "Kernel dimension reduction for regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a KDR subspace to a CSV data set.
    Fit(FitArgs),
    /// Monte Carlo comparison of KDR, SIR, SAVE and pHd on a synthetic regression.
    Bench(BenchArgs),
    /// Compare the contrast at the true subspace with a random subspace.
    Probe(ProbeArgs),
    /// Write a synthetic data set as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Regularization coefficient.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Fixed covariate kernel scale c in exp(-|z - z'|^2 / c).
    #[arg(long)]
    pub kernel_scale_x: Option<f64>,
    /// Response kernel scale (defaults to the covariate scale).
    #[arg(long)]
    pub kernel_scale_y: Option<f64>,
    /// Number of descent iterations.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Response column: header name or 0-based index (default: last column).
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Linear sigma^2 schedule START:END; ignored when --kernel-scale-x is set
    /// and this flag is absent.
    #[arg(long)]
    pub continuation: Option<String>,
    /// Covariate standard deviation after standardization.
    #[arg(long, default_value_t = 5.0)]
    pub target_sd: f64,
    /// Extra random starting points.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub regression: String,
    /// Comma-separated subset of kdr,sir,save,phd.
    #[arg(long, default_value = "kdr,sir,save,phd")]
    pub methods: String,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Comma-separated noise levels (or offsets for C); defaults to the three standard levels.
    #[arg(long)]
    pub params: Option<String>,
    /// Sample size per replication (defaults to 100 for A/B, 500 for C).
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Covariate standard deviation after standardization.
    #[arg(long, default_value_t = 1.0)]
    pub target_sd: f64,
    /// Slice counts searched for SIR and SAVE.
    #[arg(long, default_value = "4,5,8,10,20")]
    pub slices_grid: String,
    /// Fill the wall_time_s column (makes the output run-dependent).
    #[arg(long)]
    pub timing: bool,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, default_value = "A")]
    pub regression: String,
    #[arg(long, default_value_t = 0.1)]
    pub param: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub regression: String,
    #[arg(long)]
    pub param: f64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl From<KdrError> for CliError {
    fn from(e: KdrError) -> Self {
        let code = match e {
            KdrError::Parse { .. } => EXIT_BAD_INPUT,
            KdrError::ConstantColumn { .. } => EXIT_CONSTANT_COLUMN,
            KdrError::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_FAILURE, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Probe(a) => cmd_probe(&a),
        Command::Generate(a) => cmd_generate(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str, code: i32) -> CliResult<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|_| CliError::new(code, format!("invalid {what} '{}'", t.trim()))))
        .collect()
}

fn parse_continuation(s: &str) -> CliResult<Continuation> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::new(EXIT_USAGE, format!("continuation must be START:END, got '{s}'")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| CliError::new(EXIT_USAGE, format!("invalid continuation value '{v}'")))
    };
    Ok(Continuation::new(parse(a)?, parse(b)?)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let table = kdr_core::csvio::parse_table(
        fs::File::open(&args.data).map_err(|e| CliError::new(EXIT_BAD_INPUT, format!("{}: {e}", args.data.display())))?,
    )?;
    let selector = match &args.response {
        Some(s) => ResponseSelector::parse(s),
        None => ResponseSelector::Index(table.values.ncols().saturating_sub(1)),
    };
    let data = kdr_core::csvio::table_to_dataset(&table, &selector)?;
    if args.dim == 0 || args.dim >= data.m() {
        return Err(CliError::new(
            EXIT_BAD_DIM,
            format!("--dim must satisfy 1 <= dim < {} (number of covariates)", data.m()),
        ));
    }
    let continuation = match (&args.continuation, args.kernel.kernel_scale_x) {
        (Some(s), _) => Some(parse_continuation(s)?),
        (None, Some(_)) => None,
        (None, None) => Some(Continuation::default()),
    };
    let scale_x = args
        .kernel
        .kernel_scale_x
        .unwrap_or_else(|| continuation.map_or(Continuation::default().sigma_sq_end, |c| c.sigma_sq_end));
    let scale_y = args.kernel.kernel_scale_y.unwrap_or(scale_x);
    let kcfg = KernelConfig::new(scale_x, scale_y, continuation)?;
    let eps = RegCoeff::new(args.kernel.epsilon)?;
    let ocfg = OptimConfig {
        iterations: args.kernel.iters,
        seed: args.kernel.seed,
        restarts: args.restarts,
        ..Default::default()
    };
    ocfg.validate()?;

    let std_data = standardize(&data, args.target_sd)?;
    let fit = fit_kdr(&std_data, args.dim, &kcfg, eps, &ocfg)?;
    let record = std_data.standardization.as_ref().expect("standardize records its map");
    let b_orig = unstandardize_subspace(&fit.b_hat, record)?;

    fs::create_dir_all(&args.out)?;
    let dims: Vec<String> = (0..args.dim).map(|k| format!("b{k}")).collect();
    write_matrix(fs::File::create(args.out.join("basis.csv"))?, Some(&dims), b_orig.matrix())?;

    let projected = &data.x * b_orig.matrix();
    let mut header: Vec<String> = (0..args.dim).map(|k| format!("z{k}")).collect();
    header.push("y".into());
    let mut joined = kdr_core::DMatrix::zeros(data.n(), args.dim + 1);
    joined.columns_mut(0, args.dim).copy_from(&projected);
    joined.column_mut(args.dim).copy_from(&data.y.column(0));
    write_matrix(fs::File::create(args.out.join("projected.csv"))?, Some(&header), &joined)?;

    let trace = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
    let mut manifest = String::new();
    let mut kv = |k: &str, v: String| manifest.push_str(&format!("{k}={v}\n"));
    kv("command", "fit".into());
    kv("data", args.data.display().to_string());
    kv("response", format!("{selector:?}"));
    kv("n", data.n().to_string());
    kv("m", data.m().to_string());
    kv("dim", args.dim.to_string());
    kv("epsilon", format!("{:?}", eps.value()));
    kv("kernel_scale_x", format!("{scale_x:?}"));
    kv("kernel_scale_y", format!("{scale_y:?}"));
    kv(
        "continuation",
        continuation.map_or("none".into(), |c| format!("{:?}:{:?}", c.sigma_sq_start, c.sigma_sq_end)),
    );
    kv("iters", ocfg.iterations.to_string());
    kv("restarts", ocfg.restarts.to_string());
    kv("seed", ocfg.seed.to_string());
    kv("target_sd", format!("{:?}", args.target_sd));
    kv("standardization_mean", trace(&record.mean));
    kv("standardization_scale", trace(&record.scale));
    kv("final_objective", format!("{:?}", fit.final_objective));
    kv("line_search_exhausted", fit.converged_flag.to_string());
    kv("start_index", fit.start_index.to_string());
    kv("objective_trace", trace(&fit.objective_trace));
    kv("sigma_sq_trace", trace(&fit.sigma_sq_trace));
    write_text(&args.out.join("manifest.txt"), &manifest)?;
    eprintln!(
        "fit: n={} m={} d={} final objective {:.6}; wrote {}",
        data.n(),
        data.m(),
        args.dim,
        fit.final_objective,
        args.out.display()
    );
    Ok(())
}

/// Header written at the top of every bench CSV.
pub const BENCH_COLUMNS: &str = "method,regression,parameter,reps,mean,sd,failures,wall_time_s";

fn reference_notes(reg: Regression) -> &'static [&'static str] {
    match reg {
        Regression::A => &["# reference values (not run): GCR mean distance 0.28, 0.33, 0.45 at sigma 0.1, 0.4, 0.8"],
        Regression::B => &[],
        Regression::C => &["# reference values (not run): SCR and GCR mean distance above 1.3"],
    }
}

pub fn bench_row(r: &BenchResult, timing: bool) -> String {
    let mean = if r.mean.is_finite() { format!("{:?}", r.mean) } else { String::new() };
    format!(
        "{},{},{:?},{},{},{},{},{}",
        r.method,
        r.regression,
        r.parameter,
        r.replications,
        mean,
        fmt_opt(r.sd),
        r.failures,
        if timing { format!("{:.3}", r.wall_time_s) } else { String::new() }
    )
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let regression: Regression = args
        .regression
        .parse()
        .map_err(|_| CliError::new(EXIT_USAGE, format!("unknown regression '{}'", args.regression)))?;
    let methods: Vec<Method> = parse_list(&args.methods, "method", EXIT_BAD_INPUT)?;
    if methods.is_empty() {
        return Err(CliError::new(EXIT_BAD_INPUT, "no methods given"));
    }
    let params: Vec<f64> = match &args.params {
        Some(p) => parse_list(p, "parameter", EXIT_USAGE)?,
        None => regression.table_parameters().to_vec(),
    };
    let slices_grid: Vec<usize> = parse_list(&args.slices_grid, "slice count", EXIT_USAGE)?;
    let cfg = BenchConfig {
        base_seed: args.kernel.seed,
        n: args.n,
        target_sd: Some(args.target_sd),
        kernel_scale: args.kernel.kernel_scale_x,
        kernel_scale_y: args.kernel.kernel_scale_y,
        epsilon: RegCoeff::new(args.kernel.epsilon)?,
        optim: OptimConfig { iterations: args.kernel.iters, ..Default::default() },
        slices_grid,
    };
    cfg.optim.validate()?;

    let mut out = String::new();
    out.push_str(&format!(
        "# regression {regression}; seed {}; reps {}; target_sd {:?}; epsilon {:?}; iters {}\n",
        args.kernel.seed,
        args.reps,
        args.target_sd,
        cfg.epsilon.value(),
        args.kernel.iters
    ));
    for line in reference_notes(regression) {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(BENCH_COLUMNS);
    out.push('\n');
    for &method in &methods {
        for &p in &params {
            let r = run_benchmark(regression, p, method, args.reps, &cfg)?;
            eprintln!(
                "{method} ({regression}, {p}): mean {:.3} sd {} failures {} slices {} in {:.1}s",
                r.mean,
                r.sd.map_or("-".into(), |s| format!("{s:.3}")),
                r.failures,
                r.slices.map_or("-".into(), |h| h.to_string()),
                r.wall_time_s
            );
            out.push_str(&bench_row(&r, args.timing));
            out.push('\n');
        }
    }
    match &args.out {
        Some(path) => write_text(path, &out)?,
        None => std::io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_probe(args: &ProbeArgs) -> CliResult<()> {
    let regression: Regression = args
        .regression
        .parse()
        .map_err(|_| CliError::new(EXIT_USAGE, format!("unknown regression '{}'", args.regression)))?;
    let c = args.kernel.kernel_scale_x.unwrap_or(regression.table_kernel_scale());
    let kcfg = KernelConfig::new(c, args.kernel.kernel_scale_y.unwrap_or(c), None)?;
    let eps = RegCoeff::new(args.kernel.epsilon)?;
    let reports = probe_trials(regression, args.param, args.trials, args.kernel.seed, &kcfg, eps)?;
    let mut out = String::from("trial,contrast_true,contrast_random,true_lower\n");
    for (t, r) in reports.iter().enumerate() {
        out.push_str(&format!(
            "{t},{:?},{:?},{}\n",
            r.contrast_containing,
            r.contrast_random,
            r.containing_is_lower()
        ));
    }
    let wins = reports.iter().filter(|r| r.containing_is_lower()).count();
    eprintln!("probe ({regression}, {}): true subspace lower in {wins}/{} trials", args.param, args.trials);
    match &args.out {
        Some(path) => write_text(path, &out)?,
        None => std::io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let regression: Regression = args
        .regression
        .parse()
        .map_err(|_| CliError::new(EXIT_USAGE, format!("unknown regression '{}'", args.regression)))?;
    let spec = GenSpec {
        regression,
        n: args.n.unwrap_or(regression.default_n()),
        noise_or_a: args.param,
        seed: args.seed,
    };
    let data = generate(&spec)?;
    write_dataset(fs::File::create(&args.out)?, &data)?;
    Ok(())
}
