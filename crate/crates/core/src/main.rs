use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use thetaforge::harness::{run_suite, sample_tau, OutputFormat, RunConfig};
use thetaforge::jacobi::{estimate_constant, index_tuples, ConstantEstimate};
use thetaforge::{theta_jet, PeriodMatrix, RationalVector, Result, ThetaError};

#[derive(Parser)]
#[command(name = "thetaforge", version, about = "Theta functions with characteristics and numerical checks of their identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one theta jet and print it as JSON
    Eval(EvalArgs),
    /// Run verification suites and write a report
    Verify(VerifyArgs),
    /// Estimate the constants of the generalized Jacobi formula
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Period matrix as JSON rows of [re, im] pairs, e.g. '[[[0,1]]]'
    #[arg(long)]
    tau: String,
    /// Point as a JSON list of [re, im] pairs; zero when omitted
    #[arg(long)]
    z: Option<String>,
    /// Upper characteristic, e.g. "(1/2, 0)"
    #[arg(long)]
    eps: String,
    /// Lower characteristic
    #[arg(long)]
    delta: String,
    #[arg(long)]
    tail_bound: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON config file; flags given here take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    genus: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    level: Option<Vec<u64>>,
    /// Comma-separated suite names
    #[arg(long)]
    suites: Option<String>,
    /// Run every suite, including the ones skipped by default for cost
    #[arg(long)]
    all: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance applied to every residual check
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    tail_bound: Option<f64>,
    /// Report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    allow_degraded: bool,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
    genus: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
    level: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn parse_pairs(s: &str) -> Result<Vec<Complex64>> {
    let raw: Vec<[f64; 2]> = serde_json::from_str(s).map_err(|e| ThetaError::InvalidArgument(format!("{s}: {e}")))?;
    Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

fn eval(args: EvalArgs) -> Result<ExitCode> {
    let rows: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&args.tau).map_err(|e| ThetaError::InvalidArgument(format!("tau: {e}")))?;
    let g = rows.len();
    if rows.iter().any(|r| r.len() != g) {
        return Err(ThetaError::InvalidPeriodMatrix("tau must be square".into()));
    }
    let tau = PeriodMatrix::new(g, rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect())?;
    let z = match &args.z {
        Some(s) => parse_pairs(s)?,
        None => vec![Complex64::new(0.0, 0.0); g],
    };
    let eps: RationalVector = args.eps.parse()?;
    let delta: RationalVector = args.delta.parse()?;
    let mut policy = thetaforge::TruncationPolicy::default();
    if let Some(t) = args.tail_bound {
        policy.tail_bound = t;
    }
    policy.validate()?;
    let jet = theta_jet(&tau, &z, &eps, &delta, &policy)?;
    println!("{}", serde_json::to_string_pretty(&jet).expect("jet serializes"));
    Ok(ExitCode::SUCCESS)
}

fn build_config(args: &VerifyArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_env()?;
    cfg.suites = RunConfig::default_suites();
    if let Some(path) = &args.config {
        cfg = RunConfig::load(path, &cfg)?;
    }
    if let Some(g) = &args.genus {
        cfg.genus = g.clone();
    }
    if let Some(n) = &args.level {
        cfg.level = n.clone();
    }
    if let Some(s) = &args.suites {
        cfg.suites = s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    }
    if args.all {
        cfg.suites = RunConfig::default_suites();
        cfg.all = true;
    }
    if let Some(k) = args.samples {
        cfg.samples = k;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.tol.is_some() {
        cfg.tolerance = args.tol;
    }
    if let Some(t) = args.tail_bound {
        cfg.truncation.tail_bound = t;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f.into();
    }
    cfg.allow_degraded |= args.allow_degraded;
    cfg.validate()?;
    Ok(cfg)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let cfg = build_config(&args)?;
    let report = run_suite(&cfg)?;
    for s in &report.suites {
        let failed = s.reports.iter().filter(|r| !r.pass).count();
        eprintln!(
            "{:<24} {:>6} checks  {:>4} failed  max residual {:.3e}  {}",
            s.name,
            s.reports.len(),
            failed,
            s.max_residual,
            if s.pass { "PASS" } else { "FAIL" }
        );
    }
    match &cfg.out {
        Some(path) => report.write(path, cfg.format)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match cfg.format {
                OutputFormat::Json => writeln!(lock, "{}", report.to_json())?,
                OutputFormat::Csv => report.write_csv(&mut lock)?,
            }
        }
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct ConstantRow {
    #[serde(flatten)]
    estimate: Option<ConstantEstimate>,
    genus: usize,
    n: u64,
    a: String,
    delta: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn constants(args: ConstantsArgs) -> Result<ExitCode> {
    let seed = match args.seed {
        Some(s) => s,
        None => RunConfig::from_env()?.seed,
    };
    let policy = thetaforge::TruncationPolicy::default();
    let mut rows = Vec::new();
    for &g in &args.genus {
        for &n in &args.level {
            let taus: Vec<PeriodMatrix> = (0..args.samples as u64).map(|i| sample_tau(g, seed, 2000 + i)).collect();
            for (a, delta) in index_tuples(g, n) {
                let est = estimate_constant(&taus, &a, &delta, n, &policy);
                rows.push(ConstantRow {
                    genus: g,
                    n,
                    a: a.to_string(),
                    delta: delta.to_string(),
                    error: est.as_ref().err().map(|e| e.to_string()),
                    estimate: est.ok(),
                });
            }
        }
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize")),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let err = |e: csv::Error| ThetaError::Io(e.to_string());
            w.write_record(["genus", "n", "a", "delta", "constant_re", "constant_im", "relative_std", "samples", "error"])
                .map_err(err)?;
            for r in &rows {
                let (re, im, std, k) = match &r.estimate {
                    Some(e) => (e.estimate.re.to_string(), e.estimate.im.to_string(), e.relative_std.to_string(), e.samples.to_string()),
                    None => Default::default(),
                };
                w.write_record([
                    r.genus.to_string(),
                    r.n.to_string(),
                    r.a.clone(),
                    r.delta.clone(),
                    re,
                    im,
                    std,
                    k,
                    r.error.clone().unwrap_or_default(),
                ])
                .map_err(err)?;
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::Constants(a) => constants(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
