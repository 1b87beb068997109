//! TOML-configured experiment runners producing plot-ready CSVs.
//!
//! Three experiments: `lipschitz` (perturbation-ratio grid), `convergence`
//! (estimator error vs sample count), and `sync-predict` (recovering the
//! synchronization predicate from data). Runners are pure given their
//! config and master seed; CSV writing is a separate, single-threaded
//! step, so parallel execution cannot reorder output rows.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use pca_core::dynamics::{detect_synchronization, lipschitz_ratios, predicts_synchronization};
use pca_core::inference::{
    assemble_ensemble, assemble_multitraj, solve_constrained, trajectory_system, NormalSystem,
};
use pca_core::linalg::tree_reduce;
use pca_core::model::simulate_trajectory;
use pca_core::rng::STREAM_EXPERIMENT;
use pca_core::{Configuration, Error as CoreError, LocalTransitionMatrix, ModelSpec, RngPolicy};

use crate::data::{
    delink_to_ensemble, generate_multitraj, uniform_counts, DataError, InitDistribution,
};
use crate::report::fmt_float;

/// The local matrix used throughout the estimation benchmarks (alphabet
/// size 3; the third row is normalized to sum exactly to one).
pub fn benchmark_t() -> LocalTransitionMatrix {
    LocalTransitionMatrix::from_rows_normalized(&[
        vec![0.4719, 0.0315, 0.4966],
        vec![0.1385, 0.6118, 0.2497],
        vec![0.2895, 0.4999, 0.2107],
    ])
    .expect("rows are positive")
}

/// Zeroes entries below `theta` and re-normalizes each row.
///
/// Useful when the generating matrix is believed sparse: small spurious
/// entries destroy structural predicates (periodicity, synchronization)
/// even when the estimate is numerically close.
pub fn threshold_estimate(
    t: &LocalTransitionMatrix,
    theta: f64,
) -> Result<LocalTransitionMatrix, DataError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(DataError::InvalidArgument(format!(
            "threshold {theta} outside [0, 1]"
        )));
    }
    t.thresholded(theta).map_err(|_| {
        DataError::InvalidArgument(format!("threshold {theta} wipes out an entire row"))
    })
}

// ------------------------------------------------------------- config ----

/// Top-level experiment configuration (TOML).
///
/// `name` picks the experiment; only the matching section is read.
/// Missing sections and fields fall back to the documented defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub lipschitz: LipschitzConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default, rename = "sync-predict")]
    pub sync_predict: SyncPredictConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, DataError> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| DataError::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        match self.name.as_str() {
            "lipschitz" => self.lipschitz.validate(),
            "convergence" => self.convergence.validate(),
            "sync-predict" => self.sync_predict.validate(),
            other => Err(DataError::InvalidArgument(format!(
                "unknown experiment {other:?} (expected lipschitz, convergence, or sync-predict)"
            ))),
        }
    }
}

/// Grid of `(N, K)` cells; each cell draws `pairs` pairs of random
/// row-normalized-uniform matrices.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzConfig {
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_k_list")]
    pub k_list: Vec<usize>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_n_list() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_k_list() -> Vec<usize> {
    vec![2, 3]
}
fn default_pairs() -> usize {
    100
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        LipschitzConfig {
            n_list: default_n_list(),
            k_list: default_k_list(),
            pairs: default_pairs(),
        }
    }
}

impl LipschitzConfig {
    fn validate(&self) -> Result<(), DataError> {
        if self.n_list.is_empty() || self.k_list.is_empty() || self.pairs == 0 {
            return Err(DataError::InvalidArgument(
                "lipschitz grid lists and pair count must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

/// The neighborhood-radius rule used for experiment grids.
pub fn default_radius(n: usize) -> usize {
    (n / 2).min(3)
}

/// Estimator error vs sample count on a fixed generating matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default = "default_conv_n")]
    pub n: usize,
    #[serde(default = "default_conv_k")]
    pub k: usize,
    #[serde(default = "default_conv_nv")]
    pub n_v: usize,
    /// Trajectories in the master pool.
    #[serde(default = "default_pool")]
    pub pool: usize,
    /// Transitions per trajectory.
    #[serde(default = "default_conv_l")]
    pub l: usize,
    /// Sample counts to resample at.
    #[serde(default = "default_m_grid")]
    pub m_grid: Vec<usize>,
    /// Independent resamples per grid point.
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    /// Optional path to the generating matrix; the benchmark matrix
    /// otherwise.
    #[serde(default)]
    pub t_file: Option<PathBuf>,
    /// Initial condition of the pool trajectories: `"ramp"` (default) starts
    /// every trajectory from the fixed configuration `x_n = n mod K`,
    /// `"uniform"` draws i.i.d. uniform starts.
    ///
    /// The ramp matters for the ensemble estimator: de-linked data carries
    /// information only through per-time marginals, and a deterministic
    /// non-constant start gives those marginals a transient to learn from.
    /// Under a uniform start the marginals sit at near-stationarity from
    /// step one and the ensemble normal matrix is nearly rank-deficient.
    #[serde(default = "default_conv_init")]
    pub init: String,
}

fn default_conv_init() -> String {
    "ramp".to_owned()
}

/// The fixed "ramp" configuration `x_n = n mod K`.
pub fn ramp_configuration(spec: &ModelSpec) -> Configuration {
    let symbols: Vec<pca_core::Symbol> = (0..spec.node_count())
        .map(|n| (n % spec.alphabet_size()) as pca_core::Symbol)
        .collect();
    Configuration::from_symbols(spec, &symbols).expect("ramp symbols are in range")
}

fn default_conv_n() -> usize {
    8
}
fn default_conv_k() -> usize {
    3
}
fn default_conv_nv() -> usize {
    3
}
fn default_pool() -> usize {
    20_000
}
fn default_conv_l() -> usize {
    20
}
fn default_m_grid() -> Vec<usize> {
    vec![100, 316, 1_000, 3_162, 10_000]
}
fn default_resamples() -> usize {
    50
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            n: default_conv_n(),
            k: default_conv_k(),
            n_v: default_conv_nv(),
            pool: default_pool(),
            l: default_conv_l(),
            m_grid: default_m_grid(),
            resamples: default_resamples(),
            t_file: None,
            init: default_conv_init(),
        }
    }
}

impl ConvergenceConfig {
    fn validate(&self) -> Result<(), DataError> {
        if self.m_grid.is_empty() || self.resamples == 0 || self.pool == 0 || self.l == 0 {
            return Err(DataError::InvalidArgument(
                "convergence grid, resamples, pool, and L must be nonzero".into(),
            ));
        }
        if let Some(&max_m) = self.m_grid.iter().max() {
            if max_m > self.pool {
                return Err(DataError::InvalidArgument(format!(
                    "largest sample count {max_m} exceeds the pool size {}",
                    self.pool
                )));
            }
        }
        if self.init != "ramp" && self.init != "uniform" {
            return Err(DataError::InvalidArgument(format!(
                "convergence init must be \"ramp\" or \"uniform\" (got {:?})",
                self.init
            )));
        }
        Ok(())
    }
}

/// Recovering the synchronization predicate from data generated by the
/// cyclic-permutation matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncPredictConfig {
    #[serde(default = "default_sync_n")]
    pub n: usize,
    #[serde(default = "default_conv_k")]
    pub k: usize,
    #[serde(default = "default_sync_nv")]
    pub n_v: usize,
    /// Trajectories of training data.
    #[serde(default = "default_sync_m")]
    pub m: usize,
    /// Transitions per training trajectory.
    #[serde(default = "default_sync_l")]
    pub l: usize,
    /// Horizon for the verification simulations.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Verification trajectories per estimate.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Optional sparsification threshold; when set, thresholded variants
    /// of both estimates are evaluated alongside the raw ones.
    #[serde(default)]
    pub theta: Option<f64>,
}

fn default_sync_n() -> usize {
    8
}
fn default_sync_nv() -> usize {
    2
}
fn default_sync_m() -> usize {
    1_000
}
fn default_sync_l() -> usize {
    100
}
fn default_window() -> usize {
    200
}
fn default_runs() -> usize {
    20
}

impl Default for SyncPredictConfig {
    fn default() -> Self {
        SyncPredictConfig {
            n: default_sync_n(),
            k: default_conv_k(),
            n_v: default_sync_nv(),
            m: default_sync_m(),
            l: default_sync_l(),
            window: default_window(),
            runs: default_runs(),
            theta: None,
        }
    }
}

impl SyncPredictConfig {
    fn validate(&self) -> Result<(), DataError> {
        if self.m == 0 || self.l == 0 || self.window == 0 || self.runs == 0 {
            return Err(DataError::InvalidArgument(
                "sync-predict sample counts and horizons must be nonzero".into(),
            ));
        }
        if let Some(theta) = self.theta {
            if !(0.0..=1.0).contains(&theta) {
                return Err(DataError::InvalidArgument(format!(
                    "threshold {theta} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------- lipschitz ----

/// Per-cell summary row of the lipschitz experiment.
#[derive(Debug, Clone)]
pub struct LipschitzRow {
    pub n: usize,
    pub k: usize,
    pub n_v: usize,
    pub pairs: usize,
    pub mean_ratio_p_l1: f64,
    pub mean_ratio_p_l2: f64,
    pub mean_ratio_pi_l1: f64,
    pub mean_ratio_pi_l2: f64,
}

/// Output of [`run_lipschitz`]: summary rows plus bound-violation count
/// (always zero unless the proven inequalities fail numerically).
#[derive(Debug, Clone)]
pub struct LipschitzOutput {
    pub rows: Vec<LipschitzRow>,
    pub violations: usize,
}

/// For each `(N, K)` cell, draws `pairs` i.i.d. uniform row-normalized
/// matrix pairs and averages the perturbation ratios
/// `‖ΔP‖_p/‖ΔT‖_p`, `‖Δπ‖_p/‖ΔT‖_p` for `p ∈ {1, 2}`.
pub fn run_lipschitz(
    cfg: &LipschitzConfig,
    master_seed: u64,
) -> Result<LipschitzOutput, DataError> {
    cfg.validate()?;
    let policy = RngPolicy::new(master_seed);
    let cells: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| cfg.k_list.iter().map(move |&k| (n, k)))
        .collect();

    let per_cell: Vec<Result<(LipschitzRow, usize), CoreError>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(n, k))| {
            let n_v = default_radius(n);
            let spec = ModelSpec::new(k, n, n_v)?;
            let mut sums = [0.0f64; 4];
            let mut violations = 0usize;
            for pair in 0..cfg.pairs {
                let stream = (cell_idx * cfg.pairs + pair) as u64;
                let mut rng = policy.named_stream(STREAM_EXPERIMENT, stream);
                let t1 = LocalTransitionMatrix::random_stochastic(k, &mut rng);
                let t2 = LocalTransitionMatrix::random_stochastic(k, &mut rng);
                let r = lipschitz_ratios(&spec, &t1, &t2)?;
                sums[0] += r.delta_p_l1 / r.delta_t_l1;
                sums[1] += r.delta_p_l2 / r.delta_t_l2;
                sums[2] += r.delta_pi_l1 / r.delta_t_l1;
                sums[3] += r.delta_pi_l2 / r.delta_t_l2;
                if r.delta_p_l1 > r.bound_p_l1 * (1.0 + 1e-12)
                    || r.delta_p_l2 > r.bound_p_l2 * (1.0 + 1e-12)
                    || r.delta_pi_l1 > r.bound_pi_l1 * (1.0 + 1e-12)
                {
                    violations += 1;
                }
            }
            let d = cfg.pairs as f64;
            Ok((
                LipschitzRow {
                    n,
                    k,
                    n_v,
                    pairs: cfg.pairs,
                    mean_ratio_p_l1: sums[0] / d,
                    mean_ratio_p_l2: sums[1] / d,
                    mean_ratio_pi_l1: sums[2] / d,
                    mean_ratio_pi_l2: sums[3] / d,
                },
                violations,
            ))
        })
        .collect();

    let mut rows = Vec::with_capacity(per_cell.len());
    let mut violations = 0;
    for r in per_cell {
        let (row, v) = r?;
        rows.push(row);
        violations += v;
    }
    Ok(LipschitzOutput { rows, violations })
}

/// CSV schema: `n,k,n_v,pairs,mean_ratio_p_l1,mean_ratio_p_l2,mean_ratio_pi_l1,mean_ratio_pi_l2`.
pub fn write_lipschitz_csv(path: &Path, out: &LipschitzOutput) -> Result<(), DataError> {
    let mut text = String::from(
        "n,k,n_v,pairs,mean_ratio_p_l1,mean_ratio_p_l2,mean_ratio_pi_l1,mean_ratio_pi_l2\n",
    );
    for r in &out.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.k,
            r.n_v,
            r.pairs,
            fmt_float(r.mean_ratio_p_l1),
            fmt_float(r.mean_ratio_p_l2),
            fmt_float(r.mean_ratio_pi_l1),
            fmt_float(r.mean_ratio_pi_l2),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

// -------------------------------------------------------- convergence ----

/// Quartiles of relative Frobenius error at one sample count for one
/// estimator.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub m: usize,
    /// `"multi"` or `"ensemble"`.
    pub estimator: &'static str,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Resamples `M` trajectories from a fixed master pool (with replacement),
/// fits both estimators, and records the quartiles of
/// `‖T̂ − T‖_F/‖T‖_F` over the resamples.
///
/// The multi-trajectory estimator reuses precomputed per-trajectory normal
/// systems; the ensemble estimator sees the same `M` trajectories de-linked
/// (a fresh draw of `M` snapshots per time instant), so both face the same
/// sampling budget.
pub fn run_convergence(
    cfg: &ConvergenceConfig,
    master_seed: u64,
) -> Result<Vec<ConvergenceRow>, DataError> {
    cfg.validate()?;
    let spec = ModelSpec::new(cfg.k, cfg.n, cfg.n_v)?;
    let t_true = match &cfg.t_file {
        Some(path) => LocalTransitionMatrix::from_rows_normalized(&crate::report::read_matrix_csv(
            path,
        )?)?,
        None => benchmark_t(),
    };
    if t_true.alphabet_size() != cfg.k {
        return Err(DataError::InvalidArgument(format!(
            "generating matrix is {}×{0}, config says K={}",
            t_true.alphabet_size(),
            cfg.k
        )));
    }

    let init = match cfg.init.as_str() {
        "uniform" => InitDistribution::Uniform,
        _ => InitDistribution::PointMass(ramp_configuration(&spec)),
    };
    let pool = generate_multitraj(&spec, &t_true, &init, cfg.pool, cfg.l, master_seed)?;
    let per_trajectory: Vec<NormalSystem> = pool
        .trajectories()
        .par_iter()
        .map(|traj| trajectory_system(&spec, traj))
        .collect::<Result<_, _>>()?;

    let policy = RngPolicy::new(master_seed);
    let t_norm = t_true.frobenius();
    let jobs: Vec<(usize, usize)> = (0..cfg.m_grid.len())
        .flat_map(|mi| (0..cfg.resamples).map(move |r| (mi, r)))
        .collect();

    let errors: Vec<Result<(usize, f64, f64), DataError>> = jobs
        .par_iter()
        .map(|&(mi, r)| {
            let m = cfg.m_grid[mi];
            let job = (mi * cfg.resamples + r) as u64;
            // Even stream indices select the subset; odd ones seed the
            // de-linking draw, keeping the two sources independent.
            let mut pick = policy.named_stream(STREAM_EXPERIMENT, 2 * job);
            let indices: Vec<usize> = (0..m)
                .map(|_| {
                    (pca_core::rng::next_unit(&mut pick) * cfg.pool as f64).min(cfg.pool as f64 - 1.0)
                        as usize
                })
                .collect();

            let systems: Vec<NormalSystem> =
                indices.iter().map(|&i| per_trajectory[i].clone()).collect();
            let merged = tree_reduce(systems, NormalSystem::merge).expect("m ≥ 1");
            let multi = solve_constrained(&merged)?;
            let err_multi =
                multi.estimate.matrix().sub(t_true.matrix()).frobenius() / t_norm;

            let mut seeder = policy.named_stream(STREAM_EXPERIMENT, 2 * job + 1);
            let delink_seed = pca_core::rng::RngCore::next_u64(&mut seeder);
            let subset = pool.subset(&indices)?;
            let ensemble =
                delink_to_ensemble(&subset, &uniform_counts(cfg.l + 1, m), true, delink_seed)?;
            let ens = solve_constrained(&assemble_ensemble(&ensemble)?)?;
            let err_ens = ens.estimate.matrix().sub(t_true.matrix()).frobenius() / t_norm;
            Ok((mi, err_multi, err_ens))
        })
        .collect();

    let mut multi_errs: Vec<Vec<f64>> = vec![Vec::new(); cfg.m_grid.len()];
    let mut ens_errs: Vec<Vec<f64>> = vec![Vec::new(); cfg.m_grid.len()];
    for e in errors {
        let (mi, em, ee) = e?;
        multi_errs[mi].push(em);
        ens_errs[mi].push(ee);
    }

    let mut rows = Vec::with_capacity(2 * cfg.m_grid.len());
    for (mi, &m) in cfg.m_grid.iter().enumerate() {
        for (estimator, errs) in [("multi", &mut multi_errs[mi]), ("ensemble", &mut ens_errs[mi])]
        {
            errs.sort_by(|a, b| a.total_cmp(b));
            rows.push(ConvergenceRow {
                m,
                estimator,
                q1: quantile_sorted(errs, 0.25),
                median: quantile_sorted(errs, 0.5),
                q3: quantile_sorted(errs, 0.75),
            });
        }
    }
    Ok(rows)
}

/// CSV schema: `m,estimator,q1,median,q3`.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<(), DataError> {
    let mut text = String::from("m,estimator,q1,median,q3\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.m,
            r.estimator,
            fmt_float(r.q1),
            fmt_float(r.median),
            fmt_float(r.q3),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Linear-interpolation quantile of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    cov / var
}

// -------------------------------------------------------- sync-predict ----

/// One evaluated estimate in the sync-predict experiment.
#[derive(Debug, Clone)]
pub struct SyncPredictRow {
    /// `"multi"` or `"ensemble"`.
    pub estimator: &'static str,
    pub thresholded: bool,
    /// The estimate that was evaluated.
    pub estimate: LocalTransitionMatrix,
    /// Structural prediction computed from the estimate.
    pub predicts_sync: bool,
    /// Verification trajectories simulated from the estimate.
    pub runs: usize,
    /// Fraction of runs that reached a constant configuration in-window.
    pub sync_fraction: f64,
    /// Median synchronization time among the runs that synchronized.
    pub median_t0: Option<f64>,
}

/// Generates data from the cyclic-permutation matrix, fits both
/// estimators, optionally thresholds, and verifies each candidate's
/// synchronization behaviour by simulation.
pub fn run_sync_predict(
    cfg: &SyncPredictConfig,
    master_seed: u64,
) -> Result<Vec<SyncPredictRow>, DataError> {
    cfg.validate()?;
    let spec = ModelSpec::new(cfg.k, cfg.n, cfg.n_v)?;
    let t_true = LocalTransitionMatrix::cyclic_permutation(cfg.k);
    let data =
        generate_multitraj(&spec, &t_true, &InitDistribution::Uniform, cfg.m, cfg.l, master_seed)?;

    let multi = solve_constrained(&assemble_multitraj(&data)?)?;
    let policy = RngPolicy::new(master_seed);
    let mut seeder = policy.named_stream(STREAM_EXPERIMENT, 0);
    let delink_seed = pca_core::rng::RngCore::next_u64(&mut seeder);
    let ensemble_data =
        delink_to_ensemble(&data, &uniform_counts(cfg.l + 1, cfg.m), true, delink_seed)?;
    let ensemble = solve_constrained(&assemble_ensemble(&ensemble_data)?)?;

    let mut candidates: Vec<(&'static str, bool, LocalTransitionMatrix)> = vec![
        ("multi", false, multi.estimate.clone()),
        ("ensemble", false, ensemble.estimate.clone()),
    ];
    if let Some(theta) = cfg.theta {
        candidates.push(("multi", true, threshold_estimate(&multi.estimate, theta)?));
        candidates.push(("ensemble", true, threshold_estimate(&ensemble.estimate, theta)?));
    }

    let rows = candidates
        .into_iter()
        .enumerate()
        .map(|(ci, (estimator, thresholded, estimate))| {
            let predicts = predicts_synchronization(&estimate);
            let mut t0s = Vec::new();
            for run in 0..cfg.runs {
                // Stream indices 1.. are reserved for verification runs.
                let mut rng = policy
                    .named_stream(STREAM_EXPERIMENT, 1 + (ci * cfg.runs + run) as u64);
                let x0 = InitDistribution::Uniform.sample(&spec, &mut rng);
                let traj = simulate_trajectory(&spec, &estimate, &x0, cfg.window, &mut rng);
                if let Some(t0) = detect_synchronization(&traj) {
                    t0s.push(t0 as f64);
                }
            }
            let sync_fraction = t0s.len() as f64 / cfg.runs as f64;
            t0s.sort_by(|a, b| a.total_cmp(b));
            let median_t0 =
                if t0s.is_empty() { None } else { Some(quantile_sorted(&t0s, 0.5)) };
            SyncPredictRow {
                estimator,
                thresholded,
                estimate,
                predicts_sync: predicts,
                runs: cfg.runs,
                sync_fraction,
                median_t0,
            }
        })
        .collect();
    Ok(rows)
}

/// CSV schema: `estimator,thresholded,predicts_sync,runs,sync_fraction,median_t0`
/// (`median_t0` empty when no run synchronized).
pub fn write_sync_predict_csv(path: &Path, rows: &[SyncPredictRow]) -> Result<(), DataError> {
    let mut text = String::from("estimator,thresholded,predicts_sync,runs,sync_fraction,median_t0\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.estimator,
            r.thresholded,
            r.predicts_sync,
            r.runs,
            fmt_float(r.sync_fraction),
            r.median_t0.map(fmt_float).unwrap_or_default(),
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_parse_from_minimal_toml() {
        let cfg = ExperimentConfig::from_toml("name = \"lipschitz\"").unwrap();
        assert_eq!(cfg.lipschitz.n_list, vec![2, 3, 4]);
        assert_eq!(cfg.lipschitz.pairs, 100);
        assert_eq!(cfg.master_seed, 0);
        assert!(cfg.output_dir.is_none());
    }

    #[test]
    fn config_sections_override_defaults() {
        let text = r#"
            name = "convergence"
            master_seed = 9
            [convergence]
            n = 4
            k = 2
            n_v = 1
            pool = 500
            l = 5
            m_grid = [10, 100]
            resamples = 8
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.convergence.pool, 500);
        assert_eq!(cfg.convergence.m_grid, vec![10, 100]);
    }

    #[test]
    fn config_rejects_unknown_names_and_bad_grids() {
        assert!(ExperimentConfig::from_toml("name = \"nope\"").is_err());
        let bad = r#"
            name = "convergence"
            [convergence]
            pool = 10
            m_grid = [100]
        "#;
        assert!(ExperimentConfig::from_toml(bad).is_err(), "M beyond pool");
        let unknown_field = "name = \"lipschitz\"\nbogus = 1\n";
        assert!(ExperimentConfig::from_toml(unknown_field).is_err());
    }

    #[test]
    fn thresholding_zeroes_and_renormalizes() {
        let t = LocalTransitionMatrix::from_rows(&[
            vec![0.95, 0.03, 0.02],
            vec![0.005, 0.99, 0.005],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let cut = threshold_estimate(&t, 0.05).unwrap();
        assert_eq!(cut.get(0, 1), 0.0);
        assert_eq!(cut.get(0, 2), 0.0);
        assert_eq!(cut.get(0, 0), 1.0);
        assert_eq!(cut.get(1, 1), 1.0);
        for j in 0..3 {
            let sum: f64 = (0..3).map(|c| cut.get(j, c)).sum();
            assert!((sum - 1.0).abs() < 1e-15);
        }
        // Rows untouched when all entries clear the threshold.
        assert!((cut.get(2, 2) - 0.4).abs() < 1e-15);
        assert!(threshold_estimate(&t, 2.0).is_err());
    }

    #[test]
    fn quantiles_and_slope_are_textbook() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((ls_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_runner_is_deterministic_on_a_tiny_grid() {
        let cfg = LipschitzConfig { n_list: vec![2], k_list: vec![2], pairs: 5 };
        let a = run_lipschitz(&cfg, 3).unwrap();
        let b = run_lipschitz(&cfg, 3).unwrap();
        assert_eq!(a.violations, 0);
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows[0].mean_ratio_p_l1.to_bits(), b.rows[0].mean_ratio_p_l1.to_bits());
        // N=2, K=2: the bound caps the ℓ1 ratio at N·K^{N−1} = 4.
        assert!(a.rows[0].mean_ratio_p_l1 <= 4.0 + 1e-12);
    }

    #[test]
    fn convergence_runner_improves_with_m_on_a_small_case() {
        let cfg = ConvergenceConfig {
            n: 3,
            k: 2,
            n_v: 1,
            pool: 400,
            l: 4,
            m_grid: vec![20, 400],
            resamples: 12,
            t_file: None,
            init: "ramp".to_owned(),
        };
        // K=2 needs a 2×2 generating matrix; override via explicit file is
        // exercised elsewhere — here use a direct call with the right K by
        // reusing the example matrix through a temp file.
        let dir = std::env::temp_dir().join("pca-conv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let t_path = dir.join("t.csv");
        crate::report::write_matrix_csv(&t_path, &[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let cfg = ConvergenceConfig { t_file: Some(t_path), ..cfg };
        let rows = run_convergence(&cfg, 5).unwrap();
        assert_eq!(rows.len(), 4);
        let median = |m: usize, est: &str| {
            rows.iter().find(|r| r.m == m && r.estimator == est).unwrap().median
        };
        assert!(
            median(400, "multi") < median(20, "multi"),
            "more data should shrink the multi-trajectory error"
        );
        assert!(
            median(400, "ensemble") < median(20, "ensemble"),
            "more data should shrink the ensemble error"
        );
    }

    #[test]
    fn sync_predict_runner_produces_the_expected_rows() {
        let cfg = SyncPredictConfig {
            n: 4,
            k: 3,
            n_v: 1,
            m: 300,
            l: 50,
            window: 150,
            runs: 6,
            theta: Some(0.01),
        };
        let rows = run_sync_predict(&cfg, 11).unwrap();
        assert_eq!(rows.len(), 4);
        let thresholded_multi = rows
            .iter()
            .find(|r| r.estimator == "multi" && r.thresholded)
            .expect("thresholded multi row");
        assert!(
            thresholded_multi.predicts_sync,
            "thresholding should recover the permutation's prediction"
        );
        assert!(
            thresholded_multi.sync_fraction > 0.5,
            "most verification runs should synchronize, got {}",
            thresholded_multi.sync_fraction
        );
    }
}
