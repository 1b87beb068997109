//! The `pca` command-line interface.
//!
//! Five subcommands: `simulate`, `analyze`, `infer`, `bounds`,
//! `experiment`. Every command is deterministic given its flags. Relative
//! output paths resolve against `PCA_OUTPUT_DIR` when that variable is set.
//!
//! Exit codes: `0` success; `2` usage error (bad flags or invalid model
//! parameters); `3` result flagged non-identifiable; `4` numerical or I/O
//! failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pca_core::dynamics::{
    detect_synchronization, fit_geometric, global_transition_matrix, is_ergodic, marginal_of_pi,
    mixing_exponent, period_report, predicts_synchronization, stationary_distribution,
    tau_coefficient, tv_decay,
};
use pca_core::inference::{
    assemble_ensemble, assemble_multitraj, assemble_singletraj, identifiability_report,
    sample_size_bound, solve_constrained, BoundRegime, EnsembleDataset,
};
use pca_core::{Configuration, LocalTransitionMatrix, ModelSpec, Symbol};

use crate::data::{generate_multitraj, DataError, InitDistribution};
use crate::experiments::{
    run_convergence, run_lipschitz, run_sync_predict, threshold_estimate, write_convergence_csv,
    write_lipschitz_csv, write_sync_predict_csv, ExperimentConfig,
};
use crate::formats::{read_dataset, write_dataset, Dataset, Format};
use crate::report::{
    estimator_report, mat_rows, read_matrix_csv, write_json, AnalyzeReport, SpecReport,
};

/// Environment variable naming the default directory for outputs.
pub const OUTPUT_DIR_ENV: &str = "PCA_OUTPUT_DIR";

/// Top-level error with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or invalid model parameters → exit 2.
    #[error("{0}")]
    Usage(String),
    /// The result is flagged non-identifiable → exit 3.
    #[error("{0}")]
    NonIdentifiable(String),
    /// Numerical or I/O failure → exit 4.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NonIdentifiable(_) => 3,
            CliError::Failure(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> CliError {
        match e {
            DataError::InvalidArgument(_) | DataError::CountExceedsPool { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<pca_core::Error> for CliError {
    fn from(e: pca_core::Error) -> CliError {
        match e {
            pca_core::Error::InvalidParameter { .. } | pca_core::Error::InvalidRange { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pca",
    version,
    about = "Probabilistic cellular automata: simulation, exact analysis, and inference"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate trajectory data and write it as a dataset file.
    Simulate(SimulateArgs),
    /// Classify a local matrix and optionally its induced global chain.
    Analyze(AnalyzeArgs),
    /// Estimate the local matrix from a dataset file.
    Infer(InferArgs),
    /// Evaluate the non-asymptotic sample-size bounds.
    Bounds(BoundsArgs),
    /// Run a configured experiment and write its CSV artifacts.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model parameters as `N,K,n_v`.
    #[arg(long)]
    pub spec: String,
    /// CSV file with the K×K local transition matrix.
    #[arg(long = "T", value_name = "FILE")]
    pub t: PathBuf,
    /// Initial law: `uniform`, `point=x_1,…,x_N` (1-based symbols), or
    /// `weights=w_1,…,w_K`.
    #[arg(long, default_value = "uniform")]
    pub init: String,
    /// Number of trajectories.
    #[arg(long = "M")]
    pub m: usize,
    /// Transitions per trajectory.
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset path.
    #[arg(long)]
    pub out: PathBuf,
    /// Output encoding.
    #[arg(long, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV file with the K×K local transition matrix.
    #[arg(long = "T", value_name = "FILE")]
    pub t: PathBuf,
    /// Model parameters as `N,K,n_v`.
    #[arg(long)]
    pub spec: String,
    /// Path for the JSON report.
    #[arg(long)]
    pub report: PathBuf,
    /// Include the full global matrix in the report.
    #[arg(long = "global")]
    pub with_global: bool,
    /// Include stationary distribution, mixing diagnostics, and the fitted
    /// geometric envelope.
    #[arg(long = "stationary")]
    pub with_stationary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Multi,
    Single,
    Ensemble,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Dataset file (CSV or binary, auto-detected).
    #[arg(long)]
    pub data: PathBuf,
    /// Which estimator to assemble.
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    /// Path for the JSON result.
    #[arg(long)]
    pub out: PathBuf,
    /// For `--regime single`: which trajectory to use (0-based).
    #[arg(long, default_value_t = 0)]
    pub trajectory: usize,
    /// Zero entries below this value and re-normalize rows.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundRegimeArg {
    Multi,
    Ensemble,
    Both,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    /// Smallest eigenvalue of the population normal matrix.
    #[arg(long = "lambda-min")]
    pub lambda_min: f64,
    /// Frobenius norm of the target matrix.
    #[arg(long = "frob-T")]
    pub frob_t: f64,
    /// Alphabet size.
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub regime: BoundRegimeArg,
    /// Node count (ensemble regime only).
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Transition count (ensemble regime only).
    #[arg(long = "L")]
    pub l: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Which experiment to run.
    #[arg(value_parser = ["lipschitz", "convergence", "sync-predict"])]
    pub name: String,
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Executes a parsed command line. Successful output goes to stdout as one
/// JSON document; artifacts land at the flag-named paths.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

/// Resolves a relative path against `PCA_OUTPUT_DIR` when set, and makes
/// sure the parent directory exists so artifact writes cannot fail on a
/// fresh output root.
fn resolve_out(path: &Path) -> Result<PathBuf, CliError> {
    let resolved = if path.is_absolute() {
        path.to_path_buf()
    } else {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
            _ => path.to_path_buf(),
        }
    };
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Failure(format!("creating {}: {e}", parent.display()))
            })?;
        }
    }
    Ok(resolved)
}

/// The directory experiment outputs land in: the configured directory if
/// any, the `PCA_OUTPUT_DIR` root otherwise, the working directory as the
/// last resort.
fn resolve_experiment_dir(configured: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = match configured {
        Some(d) if d.is_absolute() => d,
        Some(d) => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(d),
            _ => d,
        },
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root),
            _ => PathBuf::from("."),
        },
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Failure(format!("creating {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Parses `N,K,n_v` into a validated [`ModelSpec`].
fn parse_spec(raw: &str) -> Result<ModelSpec, CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--spec expects N,K,n_v (got {raw:?})"
        )));
    }
    let parse = |s: &str, what: &str| -> Result<usize, CliError> {
        s.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{what} {s:?} is not a nonnegative integer")))
    };
    let n = parse(parts[0], "N")?;
    let k = parse(parts[1], "K")?;
    let n_v = parse(parts[2], "n_v")?;
    if k < 2 {
        return Err(CliError::Usage("K must be ≥ 2".into()));
    }
    Ok(ModelSpec::new(k, n, n_v)?)
}

/// Parses the `--init` flag.
fn parse_init(raw: &str, spec: &ModelSpec) -> Result<InitDistribution, CliError> {
    if raw == "uniform" {
        return Ok(InitDistribution::Uniform);
    }
    if let Some(rest) = raw.strip_prefix("point=") {
        let symbols: Vec<usize> = rest
            .split(',')
            .map(|s| {
                s.trim().parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("point symbol {s:?} is not an integer"))
                })
            })
            .collect::<Result<_, _>>()?;
        if symbols.iter().any(|&s| s == 0 || s > spec.alphabet_size()) {
            return Err(CliError::Usage(format!(
                "point symbols must lie in 1..={}",
                spec.alphabet_size()
            )));
        }
        let states: Vec<Symbol> = symbols.iter().map(|&s| (s - 1) as Symbol).collect();
        let x = Configuration::from_symbols(spec, &states)?;
        return Ok(InitDistribution::PointMass(x));
    }
    if let Some(rest) = raw.strip_prefix("weights=") {
        let weights: Vec<f64> = rest
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("weight {s:?} is not a float")))
            })
            .collect::<Result<_, _>>()?;
        return Ok(InitDistribution::Custom(weights));
    }
    Err(CliError::Usage(format!(
        "--init must be uniform, point=…, or weights=… (got {raw:?})"
    )))
}

/// Loads and validates a `--T` matrix file against the spec's alphabet.
fn load_t(path: &Path, spec: &ModelSpec) -> Result<LocalTransitionMatrix, CliError> {
    let rows = read_matrix_csv(path)?;
    let t = LocalTransitionMatrix::from_rows(&rows)?;
    if t.alphabet_size() != spec.alphabet_size() {
        return Err(CliError::Usage(format!(
            "matrix in {} is {}×{1}, spec says K={}",
            path.display(),
            t.alphabet_size(),
            spec.alphabet_size()
        )));
    }
    Ok(t)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Failure(format!("JSON encoding failed: {e}")))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    spec: SpecReport,
    m: usize,
    l: usize,
    seed: u64,
    out: String,
    predicts_sync: bool,
    /// Fraction of trajectories that hit a constant configuration.
    sync_fraction: f64,
    /// Earliest synchronization time over the dataset, when any.
    first_sync_time: Option<usize>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let t = load_t(&args.t, &spec)?;
    let init = parse_init(&args.init, &spec)?;
    if args.m == 0 {
        return Err(CliError::Usage("--M must be ≥ 1".into()));
    }
    if args.l == 0 {
        return Err(CliError::Usage("--L must be ≥ 1".into()));
    }
    let data = generate_multitraj(&spec, &t, &init, args.m, args.l, args.seed)?;

    let mut synced = 0usize;
    let mut first: Option<usize> = None;
    for traj in data.trajectories() {
        if let Some(t0) = detect_synchronization(traj) {
            synced += 1;
            first = Some(first.map_or(t0, |f| f.min(t0)));
        }
    }

    let out = resolve_out(&args.out)?;
    let generator = args.t.display().to_string();
    write_dataset(
        &out,
        &Dataset::Trajectory(data),
        args.seed,
        Some(&generator),
        args.format,
    )?;

    print_json(&SimulateSummary {
        spec: (&spec).into(),
        m: args.m,
        l: args.l,
        seed: args.seed,
        out: out.display().to_string(),
        predicts_sync: predicts_synchronization(&t),
        sync_fraction: synced as f64 / args.m as f64,
        first_sync_time: first,
    })
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let t = load_t(&args.t, &spec)?;

    let t_report = period_report(t.matrix());
    let mut report = AnalyzeReport::structural(
        &spec,
        &t_report,
        is_ergodic(&t),
        predicts_synchronization(&t),
    );

    if args.with_global || args.with_stationary {
        let p = global_transition_matrix(&spec, &t)?;
        if args.with_global {
            report.p = Some(mat_rows(p.matrix()));
        }
        if args.with_stationary {
            let pi = stationary_distribution(p.matrix(), 1e-12, 1_000_000)
                .map_err(|e| CliError::Failure(format!("stationary analysis: {e}")))?;
            let ell0 = mixing_exponent(p.matrix())?;
            let p_ell0 = {
                let mut q = p.matrix().clone();
                for _ in 1..ell0 {
                    q = q.matmul(p.matrix());
                }
                q
            };
            report.tau = Some(tau_coefficient(&p_ell0));
            report.ell0 = Some(ell0);
            let decay = tv_decay(&p, &pi.weights, (4 * ell0).max(16));
            if let Some((c, rho)) = fit_geometric(&decay) {
                report.fit_c = Some(c);
                report.fit_rho = Some(rho);
            }
            report.marginals = Some(
                (0..spec.node_count())
                    .map(|site| marginal_of_pi(&spec, &pi.weights, site))
                    .collect(),
            );
            report.pi = Some(pi.weights);
            report.residual = Some(pi.residual);
        }
    }

    let out = resolve_out(&args.report)?;
    write_json(&out, &report)?;
    // Stdout carries the same report minus the bulky global matrix.
    let mut stdout_report = report;
    stdout_report.p = None;
    print_json(&stdout_report)
}

fn cmd_infer(args: InferArgs) -> Result<(), CliError> {
    let (_, dataset) = read_dataset(&args.data)?;
    let system = match (args.regime, &dataset) {
        (RegimeArg::Multi, Dataset::Trajectory(data)) => assemble_multitraj(data)?,
        (RegimeArg::Multi, Dataset::Ensemble(_)) => {
            return Err(CliError::Usage(
                "--regime multi needs a trajectory dataset, not an ensemble file".into(),
            ));
        }
        (RegimeArg::Single, Dataset::Trajectory(data)) => {
            let idx = args.trajectory;
            let count = data.trajectory_count();
            if idx >= count {
                return Err(CliError::Usage(format!(
                    "--trajectory {idx} out of range for {count} trajectories"
                )));
            }
            assemble_singletraj(data.spec(), &data.trajectories()[idx])?
        }
        (RegimeArg::Single, Dataset::Ensemble(_)) => {
            return Err(CliError::Usage(
                "--regime single needs a trajectory dataset, not an ensemble file".into(),
            ));
        }
        (RegimeArg::Ensemble, Dataset::Ensemble(data)) => assemble_ensemble(data)?,
        (RegimeArg::Ensemble, Dataset::Trajectory(data)) => {
            assemble_ensemble(&EnsembleDataset::from_trajectories(data))?
        }
    };

    let mut solution = solve_constrained(&system)?;
    if let Some(theta) = args.threshold {
        solution.estimate = threshold_estimate(&solution.estimate, theta)?;
    }
    let identifiability = identifiability_report(&system);
    let report = estimator_report(&solution);

    let out = resolve_out(&args.out)?;
    #[derive(Serialize)]
    struct InferArtifact {
        #[serde(flatten)]
        estimator: crate::report::EstimatorReport,
        condition: f64,
        lambda_max: f64,
    }
    let artifact = InferArtifact {
        estimator: report,
        condition: identifiability.condition,
        lambda_max: identifiability.lambda_max,
    };
    write_json(&out, &artifact)?;
    print_json(&artifact)?;

    if !solution.identifiable {
        return Err(CliError::NonIdentifiable(format!(
            "normal system flagged non-identifiable (λ_min = {:.3e}); result written to {}",
            solution.lambda_min,
            out.display()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundsSummary {
    epsilon: f64,
    delta: f64,
    lambda_min: f64,
    #[serde(rename = "frob_T")]
    frob_t: f64,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    multi: Option<BoundLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<BoundLine>,
}

#[derive(Serialize)]
struct BoundLine {
    alpha: f64,
    s: f64,
    m_required: f64,
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let want_multi = matches!(args.regime, BoundRegimeArg::Multi | BoundRegimeArg::Both);
    let want_ensemble = matches!(args.regime, BoundRegimeArg::Ensemble | BoundRegimeArg::Both);

    let mut summary = BoundsSummary {
        epsilon: args.epsilon,
        delta: args.delta,
        lambda_min: args.lambda_min,
        frob_t: args.frob_t,
        k: args.k,
        multi: None,
        ensemble: None,
    };
    if want_multi {
        let b = sample_size_bound(
            BoundRegime::MultiTrajectory,
            args.k,
            args.frob_t,
            args.lambda_min,
            args.epsilon,
            args.delta,
        )?;
        summary.multi = Some(BoundLine { alpha: b.alpha, s: b.s, m_required: b.m_required });
    }
    if want_ensemble {
        let (n, l) = match (args.n, args.l) {
            (Some(n), Some(l)) => (n, l),
            _ => {
                return Err(CliError::Usage(
                    "--regime ensemble needs --N and --L for the union bound".into(),
                ));
            }
        };
        let b = sample_size_bound(
            BoundRegime::Ensemble { sites: n, transitions: l },
            args.k,
            args.frob_t,
            args.lambda_min,
            args.epsilon,
            args.delta,
        )?;
        summary.ensemble = Some(BoundLine { alpha: b.alpha, s: b.s, m_required: b.m_required });
    }
    print_json(&summary)
}

#[derive(Serialize)]
struct ExperimentSummary {
    experiment: String,
    output: String,
    rows: usize,
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Failure(format!("reading {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::from_toml(&format!("name = \"{}\"", args.name))?,
    };
    if cfg.name != args.name {
        return Err(CliError::Usage(format!(
            "config names experiment {:?} but the command asked for {:?}",
            cfg.name, args.name
        )));
    }
    let out_dir = resolve_experiment_dir(cfg.output_dir.take())?;

    let (path, rows) = match args.name.as_str() {
        "lipschitz" => {
            let out = run_lipschitz(&cfg.lipschitz, cfg.master_seed)?;
            if out.violations > 0 {
                return Err(CliError::Failure(format!(
                    "{} perturbation pairs violated a proven bound",
                    out.violations
                )));
            }
            let path = out_dir.join("lipschitz.csv");
            write_lipschitz_csv(&path, &out)?;
            (path, out.rows.len())
        }
        "convergence" => {
            let rows = run_convergence(&cfg.convergence, cfg.master_seed)?;
            let path = out_dir.join("convergence.csv");
            write_convergence_csv(&path, &rows)?;
            (path, rows.len())
        }
        "sync-predict" => {
            let rows = run_sync_predict(&cfg.sync_predict, cfg.master_seed)?;
            let path = out_dir.join("sync_predict.csv");
            write_sync_predict_csv(&path, &rows)?;
            (path, rows.len())
        }
        other => return Err(CliError::Usage(format!("unknown experiment {other:?}"))),
    };

    print_json(&ExperimentSummary {
        experiment: args.name,
        output: path.display().to_string(),
        rows,
    })
}
