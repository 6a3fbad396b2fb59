//! Command-line lab for least-squares model averaging: run seeded Monte
//! Carlo experiments from TOML configs, fit estimators on CSV data, query
//! the exact risk oracles, and render static SVG plots.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 runtime failure.

mod config;
mod plot;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use mallows_ma::candidates::{build_all_nested, build_group_blocks, build_univariate};
use mallows_ma::estimators::{
    adap_fit, hard_threshold_fit, mma_fit, soft_threshold_fit, FitResult, Penalty, Sigma2Source,
};
use mallows_ma::io as core_io;
use mallows_ma::risk::{all_subset_ratio_denominator, optimal_all_subset_risk, optimal_ma_risk};
use mallows_ma::simlab::{results_to_csv, run_experiment};
use mallows_ma::spectral::{basis_from_svd, validate_basis, MeanSpec, OrthoBasis, ResponseSample};

use config::{ConfigFile, Manifest, ReferencePoint};

#[derive(Parser)]
#[command(
    name = "mallows-ma",
    version,
    about = "Least-squares model averaging lab: simulate, fit, oracle, plot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a TOML config.
    Simulate(SimulateArgs),
    /// Fit an estimator to a response vector over a basis or design matrix.
    Fit(FitArgs),
    /// Evaluate optimal model-averaging risk oracles for given coefficients.
    Oracle(OracleArgs),
    /// Render SVG plots from a results CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replications (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Run the pcr scenario at full scale (n = 500, d = 1000).
    #[arg(long, default_value_t = false)]
    full_scale: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Response CSV: one column, optional header.
    #[arg(long)]
    data: PathBuf,
    /// Orthogonal basis CSV (n rows, p columns); mutually exclusive with --design.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Raw design matrix CSV; a basis is built from its SVD.
    #[arg(long)]
    design: Option<PathBuf>,
    /// One of: adap, soft, hard, mma.
    #[arg(long)]
    method: String,
    /// Known noise variance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Estimate the noise variance from the residual of the first K coordinates.
    #[arg(long, value_name = "K")]
    estimate_sigma2: Option<usize>,
    /// Candidate set for mma: nested, group, univariate.
    #[arg(long, default_value = "nested")]
    candidates: String,
    /// Penalty for mma: mallows, dim_adaptive, log_n, or custom=VALUE.
    #[arg(long, default_value = "mallows")]
    penalty: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Coefficient CSV: one column, optional header.
    #[arg(long)]
    theta: PathBuf,
    #[arg(long)]
    sigma2: f64,
    #[arg(long)]
    n: usize,
    /// Comma-separated list of: nested, allsubset, univariate, group.
    #[arg(long, default_value = "nested,allsubset")]
    candidates: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV from the simulate command.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// svg renders plots; csv re-emits the parsed rows.
    #[arg(long, default_value = "svg")]
    format: String,
}

/// Input/configuration problems exit with 2, runtime failures with 3.
enum CliError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Config(e) => {
                eprintln!("configuration error: {e:#}");
                ExitCode::from(2)
            }
            CliError::Runtime(e) => {
                eprintln!("runtime error: {e:#}");
                ExitCode::from(3)
            }
        }
    }
}

fn config_err<T>(r: anyhow::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Config)
}

fn runtime_err<T>(r: anyhow::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Runtime)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let text = config_err(
        std::fs::read_to_string(&args.config)
            .with_context(|| format!("cannot read config {}", args.config.display())),
    )?;
    let file = config_err(ConfigFile::parse(&text))?;
    let experiment = config_err(file.resolve(args.seed, args.full_scale))?;

    if let Some(threads) = args.threads {
        runtime_err(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .context("thread pool already initialized"),
        )?;
    }

    let result = runtime_err(run_experiment(&experiment).map_err(anyhow::Error::from))?;

    let reference_two_log_p: Vec<ReferencePoint> = {
        let mut points: Vec<(usize, f64)> = result
            .rows
            .iter()
            .filter_map(|r| r.ref_two_log_p.map(|v| (r.p, v)))
            .collect();
        points.sort_by_key(|&(p, _)| p);
        points.dedup();
        points
            .into_iter()
            .map(|(p, two_log_p)| ReferencePoint { p, two_log_p })
            .collect()
    };
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: experiment.master_seed,
        full_scale: args.full_scale,
        config: &file,
        reference_two_log_p,
    };
    let manifest_text =
        runtime_err(toml::to_string_pretty(&manifest).context("manifest serialization"))?;

    let csv_path = runtime_err(write_out(&args.out, "results.csv", &results_to_csv(&result)))?;
    let manifest_path = runtime_err(write_out(&args.out, "manifest.toml", &manifest_text))?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

/// Numeric CSV with an optional single header line.
fn read_numeric_csv(path: &Path) -> anyhow::Result<nalgebra::DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    match core_io::matrix_from_csv(&text) {
        Ok(m) => Ok(m),
        Err(first_err) => {
            // Tolerate one header line.
            let mut lines = text.lines();
            let _ = lines.next();
            let rest: String = lines.map(|l| format!("{l}\n")).collect();
            core_io::matrix_from_csv(&rest)
                .map_err(|_| anyhow::anyhow!("{}: {first_err}", path.display()))
        }
    }
}

fn read_vector_csv(path: &Path) -> anyhow::Result<DVector<f64>> {
    let m = read_numeric_csv(path)?;
    if m.ncols() != 1 {
        bail!("{}: expected one column, found {}", path.display(), m.ncols());
    }
    Ok(m.column(0).into_owned())
}

fn parse_penalty(s: &str) -> anyhow::Result<Penalty> {
    Ok(match s {
        "mallows" => Penalty::Mallows,
        "dim_adaptive" => Penalty::DimAdaptive,
        "log_n" => Penalty::LogN,
        other => {
            if let Some(v) = other.strip_prefix("custom=") {
                Penalty::Custom(v.parse().context("custom penalty value")?)
            } else {
                bail!("unknown penalty '{other}'")
            }
        }
    })
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let y_vec = config_err(read_vector_csv(&args.data))?;
    let y = config_err(ResponseSample::from_vector(y_vec).map_err(anyhow::Error::from))?;

    let basis: OrthoBasis = match (&args.basis, &args.design) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(anyhow::anyhow!(
                "give either --basis or --design, not both"
            )))
        }
        (Some(path), None) => {
            let m = config_err(read_numeric_csv(path))?;
            let basis = config_err(OrthoBasis::from_columns(m).map_err(anyhow::Error::from))?;
            let report = config_err(validate_basis(&basis, 1e-6).map_err(anyhow::Error::from))?;
            if !report.pass {
                return Err(CliError::Config(anyhow::anyhow!(
                    "basis fails orthogonality validation (off-diagonal {:.3e}, norm deviation {:.3e})",
                    report.max_off_diagonal,
                    report.max_norm_deviation
                )));
            }
            basis
        }
        (None, Some(path)) => {
            let m = config_err(read_numeric_csv(path))?;
            config_err(basis_from_svd(&m, 1e-10).map_err(anyhow::Error::from))?
        }
        (None, None) => {
            return Err(CliError::Config(anyhow::anyhow!(
                "one of --basis or --design is required"
            )))
        }
    };
    if basis.n() != y.n() {
        return Err(CliError::Config(anyhow::anyhow!(
            "basis has n = {}, response has n = {}",
            basis.n(),
            y.n()
        )));
    }

    let sigma2_source = match (args.sigma2, args.estimate_sigma2) {
        (Some(v), None) => Sigma2Source::Known(v),
        (None, Some(_)) => Sigma2Source::EstimateFromLargest,
        (None, None) => Sigma2Source::Known(0.0),
        (Some(_), Some(_)) => {
            return Err(CliError::Config(anyhow::anyhow!(
                "give either --sigma2 or --estimate-sigma2, not both"
            )))
        }
    };
    let known_sigma2 = |src: Sigma2Source| -> Result<f64, CliError> {
        match (src, args.estimate_sigma2) {
            (Sigma2Source::Known(v), _) => Ok(v),
            (Sigma2Source::EstimateFromLargest, Some(k)) => runtime_err(
                mallows_ma::estimators::estimate_sigma2(&y, &basis, k)
                    .map_err(anyhow::Error::from),
            ),
            _ => unreachable!(),
        }
    };

    let fit: FitResult = match args.method.as_str() {
        "adap" => {
            let s2 = known_sigma2(sigma2_source)?;
            runtime_err(adap_fit(&y, &basis, s2).map_err(anyhow::Error::from))?
        }
        "soft" => {
            let s2 = known_sigma2(sigma2_source)?;
            runtime_err(soft_threshold_fit(&y, &basis, s2).map_err(anyhow::Error::from))?
        }
        "hard" => {
            let s2 = known_sigma2(sigma2_source)?;
            runtime_err(hard_threshold_fit(&y, &basis, s2).map_err(anyhow::Error::from))?
        }
        "mma" => {
            let set = match args.candidates.as_str() {
                "nested" => build_all_nested(basis.p()),
                "group" => build_group_blocks(basis.p()),
                "univariate" => build_univariate(basis.p()),
                other => {
                    return Err(CliError::Config(anyhow::anyhow!(
                        "unknown candidate kind '{other}'"
                    )))
                }
            };
            let set = config_err(set.map_err(anyhow::Error::from))?;
            let penalty = config_err(parse_penalty(&args.penalty))?;
            runtime_err(
                mma_fit(&y, &basis, &set, penalty, sigma2_source).map_err(anyhow::Error::from),
            )?
        }
        other => return Err(CliError::Config(anyhow::anyhow!("unknown method '{other}'"))),
    };

    let fitted_path =
        runtime_err(write_out(&args.out, "fitted.csv", &core_io::fitted_to_csv(&fit)))?;
    let meta_path =
        runtime_err(write_out(&args.out, "fit_meta.csv", &core_io::fit_meta_to_csv(&fit)))?;
    println!("wrote {}", fitted_path.display());
    println!("wrote {}", meta_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let theta = config_err(read_vector_csv(&args.theta))?;
    let theta: Vec<f64> = theta.iter().copied().collect();
    if args.sigma2 < 0.0 {
        return Err(CliError::Config(anyhow::anyhow!("sigma2 must be >= 0")));
    }
    if theta.len() > args.n {
        return Err(CliError::Config(anyhow::anyhow!(
            "p = {} exceeds n = {}",
            theta.len(),
            args.n
        )));
    }
    let mean = config_err(MeanSpec::new(theta.clone(), args.n).map_err(anyhow::Error::from))?;
    let p = theta.len();

    let mut out = String::from("candidates,p,n,sigma2,risk,denominator_offset,denominator\n");
    for kind in args.candidates.split(',') {
        let kind = kind.trim();
        let (risk, offset) = match kind {
            "nested" => {
                let set = config_err(build_all_nested(p).map_err(anyhow::Error::from))?;
                let r = runtime_err(
                    optimal_ma_risk(&mean, args.sigma2, &set).map_err(anyhow::Error::from),
                )?;
                (r.risk, 0.0)
            }
            "allsubset" => {
                let r = runtime_err(
                    optimal_all_subset_risk(&theta, args.sigma2, args.n)
                        .map_err(anyhow::Error::from),
                )?;
                let denom = runtime_err(
                    all_subset_ratio_denominator(&theta, args.sigma2, args.n)
                        .map_err(anyhow::Error::from),
                )?;
                (r.risk, denom - r.risk)
            }
            "univariate" => {
                let set = config_err(build_univariate(p).map_err(anyhow::Error::from))?;
                let r = runtime_err(
                    optimal_ma_risk(&mean, args.sigma2, &set).map_err(anyhow::Error::from),
                )?;
                (r.risk, 0.0)
            }
            "group" => {
                let set = config_err(build_group_blocks(p).map_err(anyhow::Error::from))?;
                let r = runtime_err(
                    optimal_ma_risk(&mean, args.sigma2, &set).map_err(anyhow::Error::from),
                )?;
                (r.risk, 0.0)
            }
            other => {
                return Err(CliError::Config(anyhow::anyhow!(
                    "unknown candidate kind '{other}'"
                )))
            }
        };
        out.push_str(&format!(
            "{kind},{p},{},{},{risk},{offset},{}\n",
            args.n,
            args.sigma2,
            offset + risk
        ));
    }
    let path = runtime_err(write_out(&args.out, "risk_report.csv", &out))?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let text = config_err(
        std::fs::read_to_string(&args.results)
            .with_context(|| format!("cannot read {}", args.results.display())),
    )?;
    let rows = config_err(plot::parse_results(&text))?;
    match args.format.as_str() {
        "svg" => {
            let files = config_err(plot::render_all(&rows))?;
            for (name, contents) in files {
                let path = runtime_err(write_out(&args.out, &name, &contents))?;
                println!("wrote {}", path.display());
            }
        }
        "csv" => {
            let path = runtime_err(write_out(&args.out, "results.csv", &text))?;
            println!("wrote {}", path.display());
        }
        other => return Err(CliError::Config(anyhow::anyhow!("unknown format '{other}'"))),
    }
    Ok(())
}
