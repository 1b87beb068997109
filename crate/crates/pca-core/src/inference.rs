//! Estimation of the local transition matrix `T` from data.
//!
//! All estimators are least squares on the site-update identity
//! `E[δ_{X_n(t)} | X(t−1)] = φ_{n,t−1} · T`: each observed transition
//! contributes the regressor `φ_{n,t−1}` (a `K`-vector) and the response
//! `δ_{X_n(t)}`. Summing outer products gives a `K×K` normal system
//! `A T = b` that is solved per column under nonnegativity constraints and
//! then row-normalized.
//!
//! Three data regimes share that normal-system shape and differ only in
//! how `A` and `b` are averaged: many independent trajectories, one long
//! ergodic trajectory, or per-time ensembles with no trajectory linkage
//! (where only per-time means of `φ` and per-time symbol frequencies
//! survive). Exact (infinite-sample) counterparts of each system are
//! computed from the global transition matrix for oracle testing and
//! identifiability analysis.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::{global_transition_matrix, propagate_distribution, stationary_distribution};
use crate::linalg::{self, dot, sym_eigen, sym_pinv, tree_reduce, Mat};
use crate::model::{local_empirical_into, Configuration, LocalTransitionMatrix, ModelSpec};
use crate::Error;

/// Smallest eigenvalue of the normal matrix below which the least-squares
/// problem is reported non-identifiable.
pub const IDENTIFIABILITY_THRESHOLD: f64 = 1e-10;

/// KKT residual tolerance for the nonnegative least-squares solve.
pub const NNLS_KKT_TOL: f64 = 1e-12;

/// NNLS outer-iteration cap as a multiple of the alphabet size.
pub const NNLS_MAX_ITER_FACTOR: usize = 10;

/// Absolute eigenvalue threshold for the numerical rank in Hessian
/// reports. The nonzero eigenvalues of `p^⊤p + φ̄^⊤φ̄` are at least
/// `1/K` (squared norms of probability vectors), so an absolute cut is
/// scale-appropriate.
pub const RANK_ABS_TOL: f64 = 1e-10;

/// Row sums below this before normalization mark a degenerate row.
pub const DEGENERATE_ROW_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// `M` independent trajectories of equal length, each `X(0), …, X(L)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryDataset {
    spec: ModelSpec,
    trajectories: Vec<Vec<Configuration>>,
}

impl TrajectoryDataset {
    /// Validates that every trajectory has the same length `L + 1 ≥ 2` and
    /// that every configuration matches the spec.
    pub fn new(spec: ModelSpec, trajectories: Vec<Vec<Configuration>>) -> Result<Self, Error> {
        if trajectories.is_empty() {
            return Err(Error::InvalidParameter { what: "dataset needs at least one trajectory" });
        }
        let len = trajectories[0].len();
        if len < 2 {
            return Err(Error::InvalidParameter {
                what: "trajectories need at least one transition (length ≥ 2)",
            });
        }
        for traj in &trajectories {
            if traj.len() != len {
                return Err(Error::InvalidParameter {
                    what: "all trajectories must have the same length",
                });
            }
            for x in traj {
                validate_configuration(&spec, x)?;
            }
        }
        Ok(TrajectoryDataset { spec, trajectories })
    }

    /// The model spec the data was generated under.
    #[inline]
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Number of trajectories `M`.
    #[inline]
    pub fn trajectory_count(&self) -> usize {
        self.trajectories.len()
    }

    /// Number of transitions `L` per trajectory (length − 1).
    #[inline]
    pub fn transition_count(&self) -> usize {
        self.trajectories[0].len() - 1
    }

    /// The trajectories themselves.
    #[inline]
    pub fn trajectories(&self) -> &[Vec<Configuration>] {
        &self.trajectories
    }

    /// A new dataset holding the selected trajectories (repeats allowed),
    /// in the given order — the resampling primitive for convergence
    /// studies.
    pub fn subset(&self, indices: &[usize]) -> Result<TrajectoryDataset, Error> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter { what: "subset needs at least one index" });
        }
        if indices.iter().any(|&i| i >= self.trajectories.len()) {
            return Err(Error::InvalidParameter { what: "subset index out of range" });
        }
        let trajectories = indices.iter().map(|&i| self.trajectories[i].clone()).collect();
        Ok(TrajectoryDataset { spec: self.spec, trajectories })
    }
}

fn validate_configuration(spec: &ModelSpec, x: &Configuration) -> Result<(), Error> {
    if x.len() != spec.node_count() {
        return Err(Error::InvalidParameter { what: "configuration length must equal N" });
    }
    if x.states().iter().any(|&s| s as usize >= spec.alphabet_size()) {
        return Err(Error::InvalidParameter { what: "symbol out of range [0, K)" });
    }
    Ok(())
}

/// Per-time snapshots with no trajectory linkage: `snapshots[t]` holds the
/// configurations observed at time `t` (sample counts may vary by time).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleDataset {
    spec: ModelSpec,
    snapshots: Vec<Vec<Configuration>>,
}

impl EnsembleDataset {
    /// Validates at least two time points with at least one sample each.
    pub fn new(spec: ModelSpec, snapshots: Vec<Vec<Configuration>>) -> Result<Self, Error> {
        if snapshots.len() < 2 {
            return Err(Error::InvalidParameter {
                what: "ensemble needs at least two time points",
            });
        }
        for snap in &snapshots {
            if snap.is_empty() {
                return Err(Error::InvalidParameter {
                    what: "every ensemble time point needs at least one sample",
                });
            }
            for x in snap {
                validate_configuration(&spec, x)?;
            }
        }
        Ok(EnsembleDataset { spec, snapshots })
    }

    /// Forgets the trajectory linkage of a trajectory dataset: snapshot `t`
    /// is the time-`t` state of every trajectory, in trajectory order. The
    /// samples are identical — only the pairing across times is dropped —
    /// so comparing estimators on `data` and on this view isolates the
    /// value of trajectory information.
    pub fn from_trajectories(data: &TrajectoryDataset) -> EnsembleDataset {
        let times = data.transition_count() + 1;
        let snapshots = (0..times)
            .map(|t| data.trajectories().iter().map(|traj| traj[t].clone()).collect())
            .collect();
        EnsembleDataset { spec: *data.spec(), snapshots }
    }

    /// The model spec.
    #[inline]
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Number of time points (`L + 1` for a horizon of `L` transitions).
    #[inline]
    pub fn time_count(&self) -> usize {
        self.snapshots.len()
    }

    /// Samples observed at time `t`.
    #[inline]
    pub fn snapshot(&self, t: usize) -> &[Configuration] {
        &self.snapshots[t]
    }

    /// The smallest per-time sample count `M`.
    pub fn min_sample_count(&self) -> usize {
        self.snapshots.iter().map(Vec::len).min().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Normal systems
// ---------------------------------------------------------------------------

/// Which kind of data produced a normal system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    /// Averages over `M` independent trajectories.
    MultiTrajectory,
    /// Time averages along one trajectory of an ergodic chain.
    SingleTrajectory,
    /// Per-time ensemble means without trajectory linkage.
    Ensemble,
}

/// The `K×K` least-squares normal system `A T = b`.
///
/// `a` is the (averaged) Gram matrix of the regressors `φ`, `b` collects one
/// column per target symbol `k`, `weight` counts the `(m, t, n)` or `(t, n)`
/// cells averaged over, and `regime` records the data type.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalSystem {
    /// Symmetric PSD normal matrix `A`.
    pub a: Mat,
    /// Normal vectors as columns: `b(·, k)` for each target symbol.
    pub b: Mat,
    /// Number of averaged cells (e.g. `M·L·N` for multi-trajectory data).
    pub weight: f64,
    /// Data regime the system was assembled from.
    pub regime: Regime,
}

impl NormalSystem {
    /// Weighted average of two systems (used to combine per-trajectory
    /// systems; both sides keep their meaning as averages).
    pub fn merge(mut self, other: NormalSystem) -> NormalSystem {
        debug_assert_eq!(self.a.rows(), other.a.rows());
        let total = self.weight + other.weight;
        let w1 = self.weight / total;
        let w2 = other.weight / total;
        self.a.scale(w1);
        self.b.scale(w1);
        let mut a2 = other.a;
        let mut b2 = other.b;
        a2.scale(w2);
        b2.scale(w2);
        self.a = self.a.add(&a2);
        self.b = self.b.add(&b2);
        self.weight = total;
        self
    }
}

/// The normal system of one trajectory, averaged over its `L·N` cells:
/// `a = (1/LN) Σ_{t=1}^{L} Σ_n φ_{n,t−1}^⊤ φ_{n,t−1}` and
/// `b(·,k) = (1/LN) Σ_{t,n} φ_{n,t−1}^⊤ 𝟙{X_n(t) = k}`.
pub fn trajectory_system(
    spec: &ModelSpec,
    trajectory: &[Configuration],
) -> Result<NormalSystem, Error> {
    if trajectory.len() < 2 {
        return Err(Error::InvalidParameter {
            what: "trajectories need at least one transition (length ≥ 2)",
        });
    }
    for x in trajectory {
        validate_configuration(spec, x)?;
    }
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let l = trajectory.len() - 1;

    let mut a = Mat::zeros(k, k);
    let mut b = Mat::zeros(k, k);
    let mut phi = vec![0.0f64; k];
    for t in 1..=l {
        let prev = &trajectory[t - 1];
        let curr = &trajectory[t];
        for site in 0..n {
            local_empirical_into(spec, prev, site, &mut phi);
            let target = curr.states()[site] as usize;
            for (j, &pj) in phi.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                for (j2, &pj2) in phi.iter().enumerate() {
                    a.add_to(j, j2, pj * pj2);
                }
                b.add_to(j, target, pj);
            }
        }
    }
    let scale = 1.0 / (l * n) as f64;
    a.scale(scale);
    b.scale(scale);
    Ok(NormalSystem { a, b, weight: (l * n) as f64, regime: Regime::SingleTrajectory })
}

/// Normal system from `M` independent trajectories: the average of the
/// per-trajectory systems, combined over a fixed pairwise tree so the
/// result does not depend on how producers were scheduled.
pub fn assemble_multitraj(data: &TrajectoryDataset) -> Result<NormalSystem, Error> {
    let per: Result<Vec<NormalSystem>, Error> = data
        .trajectories()
        .iter()
        .map(|traj| trajectory_system(data.spec(), traj))
        .collect();
    let mut combined =
        tree_reduce(per?, NormalSystem::merge).expect("dataset has at least one trajectory");
    combined.regime = Regime::MultiTrajectory;
    Ok(combined)
}

/// Normal system of a single long trajectory (the `M = 1` estimator for
/// ergodic chains).
pub fn assemble_singletraj(
    spec: &ModelSpec,
    trajectory: &[Configuration],
) -> Result<NormalSystem, Error> {
    trajectory_system(spec, trajectory)
}

/// Ensemble normal system from per-time snapshots:
/// `a = (1/LN) Σ_{t=1}^{L} Σ_n φ̂_{n,t−1}^⊤ φ̂_{n,t−1}` and
/// `b(·,k) = (1/LN) Σ_{t,n} φ̂_{n,t−1}^⊤ p̂_{n,t}(k)`, where `φ̂` is the
/// per-time mean of the local empirical distributions and `p̂_{n,t}(k)` the
/// per-time frequency of symbol `k` at site `n`. Only per-time statistics
/// enter — the estimator never pairs individual samples across times.
pub fn assemble_ensemble(data: &EnsembleDataset) -> Result<NormalSystem, Error> {
    let spec = data.spec();
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let l = data.time_count() - 1;

    let mut a = Mat::zeros(k, k);
    let mut b = Mat::zeros(k, k);
    let mut phi = vec![0.0f64; k];
    for t in 1..=l {
        // Per-site mean φ̂ at time t−1 and per-site frequencies p̂ at time t.
        let prev = data.snapshot(t - 1);
        let curr = data.snapshot(t);
        let mut phi_hat = Mat::zeros(n, k);
        for x in prev {
            for site in 0..n {
                local_empirical_into(spec, x, site, &mut phi);
                let row = phi_hat.row_mut(site);
                for (slot, &p) in row.iter_mut().zip(&phi) {
                    *slot += p;
                }
            }
        }
        phi_hat.scale(1.0 / prev.len() as f64);

        let mut p_hat = Mat::zeros(n, k);
        for x in curr {
            for (site, &s) in x.states().iter().enumerate() {
                p_hat.add_to(site, s as usize, 1.0);
            }
        }
        p_hat.scale(1.0 / curr.len() as f64);

        for site in 0..n {
            let ph = phi_hat.row(site);
            let fr = p_hat.row(site);
            for (j, &pj) in ph.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                for (j2, &pj2) in ph.iter().enumerate() {
                    a.add_to(j, j2, pj * pj2);
                }
                for (kk, &f) in fr.iter().enumerate() {
                    b.add_to(j, kk, pj * f);
                }
            }
        }
    }
    let scale = 1.0 / (l * n) as f64;
    a.scale(scale);
    b.scale(scale);
    Ok(NormalSystem { a, b, weight: (l * n) as f64, regime: Regime::Ensemble })
}

// ---------------------------------------------------------------------------
// Exact (infinite-sample) normal systems
// ---------------------------------------------------------------------------

/// Which estimator's population limit to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExactMode {
    /// Limit of the (multi-)trajectory system: `E[φ^⊤φ]` and `E[φ^⊤δ]`.
    Trajectory,
    /// Limit of the ensemble system: `E[φ]^⊤E[φ]` and `E[φ]^⊤p`.
    Ensemble,
}

/// Per-site marginals of a distribution over configuration codes, as an
/// `N×K` matrix.
fn site_marginals(spec: &ModelSpec, mu: &[f64]) -> Mat {
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let mut out = Mat::zeros(n, k);
    for (code, &w) in mu.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut c = code;
        for site in 0..n {
            out.add_to(site, c % k, w);
            c /= k;
        }
    }
    out
}

/// Per-site means `E_μ[φ_n]` of the local empirical distributions, as an
/// `N×K` matrix.
fn phi_means(spec: &ModelSpec, mu: &[f64]) -> Mat {
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let mut out = Mat::zeros(n, k);
    let mut phi = vec![0.0f64; k];
    for (code, &w) in mu.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let cfg = Configuration::decode(spec, code);
        for site in 0..n {
            local_empirical_into(spec, &cfg, site, &mut phi);
            let row = out.row_mut(site);
            for (slot, &p) in row.iter_mut().zip(&phi) {
                *slot += w * p;
            }
        }
    }
    out
}

/// The population (`M → ∞`) normal system for a chain started at `mu0` and
/// observed for `l` transitions.
///
/// Expectations are taken against the exactly propagated laws `μ_0, …, μ_l`
/// and, in trajectory mode, the conditional response masses are read off
/// the rows of the global matrix by direct summation (`Σ_y P(x,y)𝟙{y_n=k}`)
/// rather than through the algebraic shortcut `φ_n(x)·T` — so the identity
/// `T = A_∞^{-1} b_∞` is a genuine cross-check of the model algebra, not a
/// restatement of it.
pub fn exact_normal_system(
    spec: &ModelSpec,
    t: &LocalTransitionMatrix,
    mu0: &[f64],
    l: usize,
    mode: ExactMode,
) -> Result<NormalSystem, Error> {
    if l == 0 {
        return Err(Error::InvalidParameter { what: "horizon L must be ≥ 1" });
    }
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let p = global_transition_matrix(spec, t)?;
    let mus = propagate_distribution(&p, mu0, l)?;

    let mut a = Mat::zeros(k, k);
    let mut b = Mat::zeros(k, k);
    let mut phi = vec![0.0f64; k];
    match mode {
        ExactMode::Trajectory => {
            let s = p.state_count();
            for mu in mus.iter().take(l) {
                for x in 0..s {
                    let w = mu[x];
                    if w == 0.0 {
                        continue;
                    }
                    let cfg = Configuration::decode(spec, x);
                    // mass(site, k) = Σ_y P(x, y) 𝟙{y_site = k}, summed
                    // directly over the row of the global matrix.
                    let mut mass = Mat::zeros(n, k);
                    for (y, &pxy) in p.matrix().row(x).iter().enumerate() {
                        if pxy == 0.0 {
                            continue;
                        }
                        let mut c = y;
                        for site in 0..n {
                            mass.add_to(site, c % k, pxy);
                            c /= k;
                        }
                    }
                    for site in 0..n {
                        local_empirical_into(spec, &cfg, site, &mut phi);
                        let m_row = mass.row(site);
                        for (j, &pj) in phi.iter().enumerate() {
                            if pj == 0.0 {
                                continue;
                            }
                            for (j2, &pj2) in phi.iter().enumerate() {
                                a.add_to(j, j2, w * pj * pj2);
                            }
                            for (kk, &mk) in m_row.iter().enumerate() {
                                b.add_to(j, kk, w * pj * mk);
                            }
                        }
                    }
                }
            }
        }
        ExactMode::Ensemble => {
            for t_idx in 0..l {
                let phi_mean = phi_means(spec, &mus[t_idx]);
                let marg_next = site_marginals(spec, &mus[t_idx + 1]);
                for site in 0..n {
                    let ph = phi_mean.row(site);
                    let pn = marg_next.row(site);
                    for (j, &pj) in ph.iter().enumerate() {
                        if pj == 0.0 {
                            continue;
                        }
                        for (j2, &pj2) in ph.iter().enumerate() {
                            a.add_to(j, j2, pj * pj2);
                        }
                        for (kk, &f) in pn.iter().enumerate() {
                            b.add_to(j, kk, pj * f);
                        }
                    }
                }
            }
        }
    }
    let scale = 1.0 / (l * n) as f64;
    a.scale(scale);
    b.scale(scale);
    let regime = match mode {
        ExactMode::Trajectory => Regime::MultiTrajectory,
        ExactMode::Ensemble => Regime::Ensemble,
    };
    Ok(NormalSystem { a, b, weight: (l * n) as f64, regime })
}

// ---------------------------------------------------------------------------
// Solving and diagnostics
// ---------------------------------------------------------------------------

/// Result of the constrained least-squares solve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstrainedSolution {
    /// The row-normalized stochastic estimate.
    pub estimate: LocalTransitionMatrix,
    /// The nonnegative solution before row normalization.
    pub raw: Mat,
    /// Normal-equation residual `Σ_k ‖A^{1/2}T̂_k − A^{−1/2}b_k‖²` at the
    /// normalized estimate.
    pub residual: f64,
    /// Smallest eigenvalue of the normal matrix `A`.
    pub lambda_min: f64,
    /// Rows whose NNLS solution carried no mass and were replaced by the
    /// uniform distribution.
    pub degenerate_rows: Vec<usize>,
    /// Whether every per-column NNLS met its KKT tolerance.
    pub converged: bool,
    /// `λ_min > `[`IDENTIFIABILITY_THRESHOLD`]: false marks a degenerate
    /// system whose estimate is returned but not uniquely determined.
    pub identifiable: bool,
    /// Data regime the solved system came from.
    pub regime: Regime,
}

/// Solves the normal system under nonnegativity constraints (one NNLS per
/// target symbol) and row-normalizes the result to a stochastic matrix.
///
/// Rows with no mass after the constrained solve are replaced by the
/// uniform distribution and reported in `degenerate_rows` — the data said
/// nothing about those source symbols. Near-singular systems do not error
/// here; `lambda_min` and [`identifiability_report`] carry the warning.
pub fn solve_constrained(system: &NormalSystem) -> Result<ConstrainedSolution, Error> {
    let k = system.a.rows();
    if k < 2 || system.a.cols() != k || system.b.rows() != k || system.b.cols() != k {
        return Err(Error::InvalidParameter { what: "normal system must be K×K with K ≥ 2" });
    }
    let max_iter = NNLS_MAX_ITER_FACTOR * k;
    let mut raw = Mat::zeros(k, k);
    let mut converged = true;
    for col in 0..k {
        let bk = system.b.col(col);
        let sol = linalg::nnls(&system.a, &bk, NNLS_KKT_TOL, max_iter);
        converged &= sol.converged;
        for j in 0..k {
            raw.set(j, col, sol.x[j]);
        }
    }

    let mut degenerate_rows = Vec::new();
    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let sum: f64 = raw.row(j).iter().sum();
        if sum < DEGENERATE_ROW_TOL {
            degenerate_rows.push(j);
            rows.push(vec![1.0 / k as f64; k]);
        } else {
            rows.push(raw.row(j).iter().map(|&v| v / sum).collect());
        }
    }
    let estimate = LocalTransitionMatrix::from_rows_normalized(&rows)?;

    let (eigenvalues, _) = sym_eigen(&system.a);
    let lambda_min = eigenvalues[0];

    // Residual of the normal equations at the final estimate:
    // Σ_k (T̂_k᷆ᵀ A T̂_k − 2 T̂_kᵀ b_k + b_kᵀ A⁺ b_k), clamped at zero.
    let a_pinv = sym_pinv(&system.a, 1e-13);
    let mut residual = 0.0f64;
    for col in 0..k {
        let tk = estimate.matrix().col(col);
        let bk = system.b.col(col);
        let atk = system.a.mul_vec(&tk);
        let apb = a_pinv.mul_vec(&bk);
        residual += dot(&tk, &atk) - 2.0 * dot(&tk, &bk) + dot(&bk, &apb);
    }
    let residual = residual.max(0.0);

    Ok(ConstrainedSolution {
        estimate,
        raw,
        residual,
        lambda_min,
        degenerate_rows,
        converged,
        identifiable: lambda_min > IDENTIFIABILITY_THRESHOLD,
        regime: system.regime,
    })
}

/// Spectral identifiability diagnostics of a normal system.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentifiabilityReport {
    /// Smallest eigenvalue of `A`.
    pub lambda_min: f64,
    /// Largest eigenvalue of `A`.
    pub lambda_max: f64,
    /// `λ_max / λ_min` (infinite when singular).
    pub condition: f64,
    /// `λ_min > `[`IDENTIFIABILITY_THRESHOLD`].
    pub identifiable: bool,
    /// Regime the system came from.
    pub regime: Regime,
}

/// Eigenvalue analysis of the normal matrix: the least-squares problem has
/// a unique solution exactly when `A` is nonsingular, and `λ_min` measures
/// the margin.
pub fn identifiability_report(system: &NormalSystem) -> IdentifiabilityReport {
    let (values, _) = sym_eigen(&system.a);
    let lambda_min = values[0];
    let lambda_max = values[values.len() - 1];
    let condition =
        if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY };
    IdentifiabilityReport {
        lambda_min,
        lambda_max,
        condition,
        identifiable: lambda_min > IDENTIFIABILITY_THRESHOLD,
        regime: system.regime,
    }
}

/// Ingredients of the multi-trajectory asymptotic normality statement
/// `√M (T̂_M(·,k) − T(·,k)) → N(0, A⁻¹ Σ_k A⁻¹)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AsymptoticCovariance {
    /// The averaged normal matrix `A_M`.
    pub a: Mat,
    /// Per-target-symbol empirical covariances `Σ̂_k` of the
    /// per-trajectory residual vectors `b^m(·,k) − A^m T_ref(·,k)`.
    pub sigma: Vec<Mat>,
    /// Sandwich covariances `A⁺ Σ̂_k A⁺`.
    pub sandwich: Vec<Mat>,
}

/// Estimates the asymptotic covariance of the multi-trajectory LSE from
/// data: `Σ̂_k` is the sample covariance (over trajectories) of the
/// per-trajectory residual vectors `b^m(·,k) − A^m T_ref(·,k)`, and the
/// sandwich transforms it by the pseudo-inverse of the averaged normal
/// matrix.
///
/// The residual form is forced by the exact algebra
/// `T̂(·,k) − T(·,k) = A_M⁺ (b_M(·,k) − A_M T(·,k))`: the normal matrix
/// `A_M` fluctuates at the same `M^{-1/2}` scale as `b_M`, so centering
/// the raw `b^m` vectors instead would fold the (correlated) fluctuation
/// of `A^m T(·,k)` into `Σ̂_k` and misstate the estimator's covariance.
/// `t_ref` is the matrix the residuals are taken against — the constrained
/// estimate itself in a plug-in analysis, or the known truth in a
/// simulation study.
pub fn asymptotic_covariance_multitraj(
    data: &TrajectoryDataset,
    t_ref: &LocalTransitionMatrix,
) -> Result<AsymptoticCovariance, Error> {
    let m = data.trajectory_count();
    if m < 2 {
        return Err(Error::InvalidParameter {
            what: "covariance estimation needs at least two trajectories",
        });
    }
    let k = data.spec().alphabet_size();
    if t_ref.alphabet_size() != k {
        return Err(Error::InvalidParameter {
            what: "reference matrix alphabet does not match the data",
        });
    }

    let per: Result<Vec<NormalSystem>, Error> = data
        .trajectories()
        .iter()
        .map(|traj| trajectory_system(data.spec(), traj))
        .collect();
    let per = per?;

    let mut a = Mat::zeros(k, k);
    for sys in &per {
        a = a.add(&sys.a);
    }
    a.scale(1.0 / m as f64);

    let residuals: Vec<Mat> = per
        .iter()
        .map(|sys| {
            let mut r = sys.b.clone();
            let predicted = sys.a.matmul(t_ref.matrix());
            for i in 0..k {
                for j in 0..k {
                    r.add_to(i, j, -predicted.get(i, j));
                }
            }
            r
        })
        .collect();
    let mut r_mean = Mat::zeros(k, k);
    for r in &residuals {
        r_mean = r_mean.add(r);
    }
    r_mean.scale(1.0 / m as f64);

    let mut sigma = Vec::with_capacity(k);
    for col in 0..k {
        let mean_col = r_mean.col(col);
        let mut cov = Mat::zeros(k, k);
        for resid in &residuals {
            let rc = resid.col(col);
            for r in 0..k {
                let dr = rc[r] - mean_col[r];
                if dr == 0.0 {
                    continue;
                }
                for c in 0..k {
                    cov.add_to(r, c, dr * (rc[c] - mean_col[c]));
                }
            }
        }
        cov.scale(1.0 / (m - 1) as f64);
        sigma.push(cov);
    }

    let a_pinv = sym_pinv(&a, 1e-12);
    let sandwich =
        sigma.iter().map(|s| a_pinv.matmul(s).matmul(&a_pinv)).collect();
    Ok(AsymptoticCovariance { a, sigma, sandwich })
}

// ---------------------------------------------------------------------------
// Non-asymptotic sample-size bounds
// ---------------------------------------------------------------------------

/// Which concentration bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoundRegime {
    /// Multi-trajectory estimator.
    MultiTrajectory,
    /// Ensemble estimator with equal per-time sample counts, over `sites`
    /// sites and `transitions` time steps.
    Ensemble {
        /// Node count `N`.
        sites: usize,
        /// Horizon `L` (number of transitions).
        transitions: usize,
    },
}

/// An evaluated sample-size bound: with `M > m_required` samples the
/// estimator is within Frobenius distance `epsilon` of the truth with
/// probability at least `1 − delta`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleSizeBound {
    /// Regime the bound applies to.
    pub regime: BoundRegime,
    /// Error radius in Frobenius norm.
    pub epsilon: f64,
    /// Failure probability.
    pub delta: f64,
    /// Intermediate quantity `α = (ε/4)·λ_min`.
    pub alpha: f64,
    /// Intermediate quantity `s = (λ_min/2)·min{1, ε/(2‖T‖_F)}`.
    pub s: f64,
    /// The sample-size threshold (real-valued; round up for a count).
    pub m_required: f64,
}

/// Evaluates the non-asymptotic sample-size bound
/// `P(‖T̂ − T‖_F > ε) < δ` for the requested regime.
///
/// With `α = (ε/4)·λ_min` and `s = (λ_min/2)·min{1, ε/(2‖T‖_F)}`:
///
/// * multi-trajectory:
///   `M > max{ (24K² + 4αK)/(3α²)·ln(6K²/δ), (6 + 2s)/(3s²)·ln(6K/δ) }`,
/// * ensemble (equal per-time counts):
///   `M > (96K² + 16αK)/(3α²)·ln(12NLK/δ)`.
///
/// `lambda_min` is the smallest eigenvalue of the exact normal matrix for
/// the regime (see [`exact_normal_system`] and [`identifiability_report`]),
/// `alphabet_size` is `K`, and `frobenius_t` is `‖T‖_F` of the true (or
/// estimated) local matrix.
pub fn sample_size_bound(
    regime: BoundRegime,
    alphabet_size: usize,
    frobenius_t: f64,
    lambda_min: f64,
    epsilon: f64,
    delta: f64,
) -> Result<SampleSizeBound, Error> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidRange { what: "epsilon must lie in (0, 1)" });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidRange { what: "delta must lie in (0, 1)" });
    }
    if !(lambda_min > 0.0) {
        return Err(Error::InvalidRange {
            what: "lambda_min must be positive (the system must be identifiable)",
        });
    }
    if alphabet_size < 2 {
        return Err(Error::InvalidRange { what: "alphabet size K must be ≥ 2" });
    }
    if !(frobenius_t > 0.0) {
        return Err(Error::InvalidRange { what: "‖T‖_F must be positive" });
    }
    if let BoundRegime::Ensemble { sites, transitions } = regime {
        if sites == 0 || transitions == 0 {
            return Err(Error::InvalidRange { what: "ensemble bound needs N ≥ 1 and L ≥ 1" });
        }
    }

    let k = alphabet_size as f64;
    let alpha = epsilon / 4.0 * lambda_min;
    let s = 0.5 * lambda_min * (epsilon / (2.0 * frobenius_t)).min(1.0);

    let m_required = match regime {
        BoundRegime::MultiTrajectory => {
            let first = (24.0 * k * k + 4.0 * alpha * k) / (3.0 * alpha * alpha)
                * (6.0 * k * k / delta).ln();
            let second = (6.0 + 2.0 * s) / (3.0 * s * s) * (6.0 * k / delta).ln();
            first.max(second)
        }
        BoundRegime::Ensemble { sites, transitions } => {
            (96.0 * k * k + 16.0 * alpha * k) / (3.0 * alpha * alpha)
                * (12.0 * sites as f64 * transitions as f64 * k / delta).ln()
        }
    };

    Ok(SampleSizeBound { regime, epsilon, delta, alpha, s, m_required })
}

// ---------------------------------------------------------------------------
// Identifiability from the stationary distribution
// ---------------------------------------------------------------------------

/// Rank analysis of the stationary-data Hessian
/// `H = p^⊤p + E[φ]^⊤E[φ]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HessianReport {
    /// The `K×K` Hessian of the stationary quadratic loss.
    pub hessian: Mat,
    /// Single-site marginal `p` used.
    pub marginal: Vec<f64>,
    /// Mean local empirical distribution `E[φ]` used.
    pub phi_mean: Vec<f64>,
    /// Eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Numerical rank: eigenvalues above [`RANK_ABS_TOL`].
    pub rank: usize,
    /// Whether the rank reaches `K`, i.e. the quadratic loss has a unique
    /// minimizer.
    pub identifiable: bool,
}

/// Builds the Hessian `p^⊤p + φ̄^⊤φ̄` of the stationary quadratic loss from
/// a marginal `p` and a mean empirical distribution `φ̄`, and reports its
/// rank. The rank is at most 2 regardless of `K` — two rank-one terms —
/// which is the structural reason stationary data cannot identify `T` for
/// `K > 2`.
pub fn hessian_from_moments(marginal: &[f64], phi_mean: &[f64]) -> Result<HessianReport, Error> {
    let k = marginal.len();
    if k < 2 || phi_mean.len() != k {
        return Err(Error::InvalidParameter {
            what: "marginal and φ mean must share a length K ≥ 2",
        });
    }
    for v in marginal.iter().chain(phi_mean) {
        if *v < 0.0 {
            return Err(Error::InvalidParameter { what: "moment vectors must be ≥ 0" });
        }
    }
    for (name_sum, _) in [(marginal.iter().sum::<f64>(), "p"), (phi_mean.iter().sum::<f64>(), "φ")]
    {
        if (name_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter { what: "moment vectors must sum to 1" });
        }
    }

    let mut hessian = Mat::zeros(k, k);
    for r in 0..k {
        for c in 0..k {
            hessian.set(r, c, marginal[r] * marginal[c] + phi_mean[r] * phi_mean[c]);
        }
    }
    let (eigenvalues, _) = sym_eigen(&hessian);
    let rank = eigenvalues.iter().filter(|&&v| v > RANK_ABS_TOL).count();
    Ok(HessianReport {
        hessian,
        marginal: marginal.to_vec(),
        phi_mean: phi_mean.to_vec(),
        eigenvalues,
        rank,
        identifiable: rank == k,
    })
}

/// The Hessian of the stationary quadratic loss for the chain `(spec, T)`
/// itself: computes the stationary distribution, takes `p` as the
/// single-site marginal and `φ̄ = E_π[φ]` (site-averaged), and analyzes
/// `p^⊤p + φ̄^⊤φ̄`.
///
/// For a stationary shift-invariant chain `E_π[φ] = p` always — the mean
/// of the neighborhood empirical distribution is the common site marginal —
/// so this Hessian has rank 1 and stationary data alone can never identify
/// `T` (for `K = 2` the rank-2 escape in the general Hessian requires
/// `p ≠ E[φ]`, which stationarity rules out).
pub fn stationary_identifiability_hessian(
    spec: &ModelSpec,
    t: &LocalTransitionMatrix,
) -> Result<HessianReport, Error> {
    let p = global_transition_matrix(spec, t)?;
    let pi = stationary_distribution(p.matrix(), 1e-13, 1_000_000)?;
    let marginal = crate::dynamics::marginal_of_pi(spec, &pi.weights, 0);
    let phis = phi_means(spec, &pi.weights);
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let mut phi_mean = vec![0.0f64; k];
    for site in 0..n {
        for (slot, &v) in phi_mean.iter_mut().zip(phis.row(site)) {
            *slot += v;
        }
    }
    for v in &mut phi_mean {
        *v /= n as f64;
    }
    hessian_from_moments(&marginal, &phi_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngPolicy;

    fn spec221() -> ModelSpec {
        ModelSpec::new(2, 2, 1).unwrap()
    }

    fn cfg(spec: &ModelSpec, s: &[u16]) -> Configuration {
        Configuration::from_symbols(spec, s).unwrap()
    }

    #[test]
    fn trajectory_system_matches_hand_count() {
        // One transition (0,0) → (1,1) on the 2-cycle: both sites see
        // φ = (1, 0) and land on symbol 1.
        let spec = spec221();
        let traj = vec![cfg(&spec, &[0, 0]), cfg(&spec, &[1, 1])];
        let sys = trajectory_system(&spec, &traj).unwrap();
        assert_eq!(sys.weight, 2.0);
        assert_eq!(sys.a.get(0, 0), 1.0);
        assert_eq!(sys.a.get(0, 1), 0.0);
        assert_eq!(sys.a.get(1, 1), 0.0);
        assert_eq!(sys.b.get(0, 1), 1.0);
        assert_eq!(sys.b.get(0, 0), 0.0);
    }

    #[test]
    fn multitraj_assembly_averages_per_trajectory_systems() {
        let spec = spec221();
        let t1 = vec![cfg(&spec, &[0, 0]), cfg(&spec, &[1, 1])];
        let t2 = vec![cfg(&spec, &[0, 1]), cfg(&spec, &[1, 0])];
        let data = TrajectoryDataset::new(spec, vec![t1.clone(), t2.clone()]).unwrap();
        let combined = assemble_multitraj(&data).unwrap();
        let s1 = trajectory_system(&spec, &t1).unwrap();
        let s2 = trajectory_system(&spec, &t2).unwrap();
        assert_eq!(combined.regime, Regime::MultiTrajectory);
        assert_eq!(combined.weight, 4.0);
        for r in 0..2 {
            for c in 0..2 {
                let want = 0.5 * (s1.a.get(r, c) + s2.a.get(r, c));
                assert!((combined.a.get(r, c) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_system_satisfies_population_identity() {
        // A_∞⁻¹ b_∞ must equal T when A_∞ is nonsingular; b is assembled
        // from explicit sums over the global matrix, so this genuinely
        // cross-checks P against the update law.
        let spec = spec221();
        let t = LocalTransitionMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let mu0 = vec![0.25; 4];
        let sys = exact_normal_system(&spec, &t, &mu0, 3, ExactMode::Trajectory).unwrap();
        let report = identifiability_report(&sys);
        assert!(report.identifiable, "λ_min = {}", report.lambda_min);
        for col in 0..2 {
            let tk = linalg::sym_pinv_solve(&sys.a, &sys.b.col(col), 1e-13);
            for j in 0..2 {
                assert!(
                    (tk[j] - t.get(j, col)).abs() < 1e-10,
                    "entry ({j},{col}): {} vs {}",
                    tk[j],
                    t.get(j, col)
                );
            }
        }
    }

    #[test]
    fn exact_ensemble_system_is_rank_one_at_stationarity() {
        // Started from π, every E[φ_{n,t}] equals the common marginal, so
        // the ensemble normal matrix is an outer product of one vector.
        let spec = spec221();
        let t = LocalTransitionMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let p = global_transition_matrix(&spec, &t).unwrap();
        let pi = stationary_distribution(p.matrix(), 1e-13, 1_000_000).unwrap();
        let sys = exact_normal_system(&spec, &t, &pi.weights, 4, ExactMode::Ensemble).unwrap();
        let report = identifiability_report(&sys);
        assert!(!report.identifiable);
        assert!(report.lambda_min.abs() < 1e-12);
        assert!(report.lambda_max > 0.1);
    }

    #[test]
    fn deterministic_start_makes_singular_then_regular_systems() {
        // move-to-next from the all-zeros point mass: the first K−1 steps
        // are deterministic, so with too few transitions the regressors
        // span too few directions.
        let k = 3;
        let spec = ModelSpec::new(k, 3, 1).unwrap();
        let t = LocalTransitionMatrix::move_to_next(k);
        let mut mu0 = vec![0.0; spec.state_count().unwrap()];
        mu0[0] = 1.0;
        let short = exact_normal_system(&spec, &t, &mu0, 1, ExactMode::Trajectory).unwrap();
        assert!(!identifiability_report(&short).identifiable);
        let long = exact_normal_system(&spec, &t, &mu0, 4, ExactMode::Trajectory).unwrap();
        assert!(identifiability_report(&long).identifiable);
    }

    #[test]
    fn constrained_solve_recovers_t_from_exact_system() {
        let spec = ModelSpec::new(3, 3, 1).unwrap();
        let t = LocalTransitionMatrix::from_rows_normalized(&[
            vec![0.5, 0.2, 0.3],
            vec![0.1, 0.6, 0.3],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let s = spec.state_count().unwrap();
        let mu0 = vec![1.0 / s as f64; s];
        let sys = exact_normal_system(&spec, &t, &mu0, 5, ExactMode::Trajectory).unwrap();
        let sol = solve_constrained(&sys).unwrap();
        assert!(sol.converged);
        assert!(sol.degenerate_rows.is_empty());
        assert!(sol.residual < 1e-18, "residual {}", sol.residual);
        for j in 0..3 {
            for c in 0..3 {
                assert!((sol.estimate.get(j, c) - t.get(j, c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn all_zero_nnls_rows_become_uniform_and_are_flagged() {
        // With A = I the per-column NNLS clips b at zero; a b-row that is
        // entirely non-positive leaves its source symbol unconstrained.
        let a = Mat::identity(2);
        let b = Mat::from_rows(&[vec![0.5, 0.4], vec![-0.2, -0.1]]);
        let sys = NormalSystem { a, b, weight: 1.0, regime: Regime::MultiTrajectory };
        let sol = solve_constrained(&sys).unwrap();
        assert_eq!(sol.degenerate_rows, vec![1]);
        assert!((sol.estimate.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((sol.estimate.get(1, 1) - 0.5).abs() < 1e-15);
        // Row 0 was normalized from (0.5, 0.4).
        assert!((sol.estimate.get(0, 0) - 0.5 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn covariance_is_zero_for_deterministic_chains() {
        // A permutation T from a fixed start gives identical trajectories,
        // so the per-trajectory systems have no spread at all.
        let spec = ModelSpec::new(3, 4, 1).unwrap();
        let t = LocalTransitionMatrix::cyclic_permutation(3);
        let policy = RngPolicy::new(3);
        let x0 = Configuration::constant(&spec, 0).unwrap();
        let trajectories: Vec<Vec<Configuration>> = (0..4)
            .map(|m| {
                crate::model::simulate_trajectory(
                    &spec,
                    &t,
                    &x0,
                    6,
                    &mut policy.trajectory_stream(m),
                )
            })
            .collect();
        let data = TrajectoryDataset::new(spec, trajectories).unwrap();
        let cov = asymptotic_covariance_multitraj(&data, &t).unwrap();
        for sig in &cov.sigma {
            assert!(sig.max_abs() < 1e-15);
        }
        for sand in &cov.sandwich {
            assert!(sand.max_abs() < 1e-12);
        }
    }

    #[test]
    fn bound_formulas_match_hand_evaluation() {
        let t = LocalTransitionMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let t_frob = (0.25f64 + 0.25 + 1.0).sqrt();
        let (lambda, eps, delta) = (0.3, 0.1, 0.05);
        let bound =
            sample_size_bound(BoundRegime::MultiTrajectory, 2, t_frob, lambda, eps, delta)
                .unwrap();
        let k = 2.0f64;
        let alpha = eps / 4.0 * lambda;
        let s = 0.5 * lambda * (eps / (2.0 * t_frob)).min(1.0);
        let first = (24.0 * k * k + 4.0 * alpha * k) / (3.0 * alpha * alpha)
            * (6.0 * k * k / delta).ln();
        let second = (6.0 + 2.0 * s) / (3.0 * s * s) * (6.0 * k / delta).ln();
        let want = first.max(second);
        assert!((bound.m_required - want).abs() <= 1e-12 * want);
        assert!((bound.alpha - alpha).abs() < 1e-15);
        assert!((bound.s - s).abs() < 1e-15);
        assert!((t.frobenius() - t_frob).abs() < 1e-15);

        let ens = sample_size_bound(
            BoundRegime::Ensemble { sites: 8, transitions: 20 },
            2,
            t_frob,
            lambda,
            eps,
            delta,
        )
        .unwrap();
        let want_e = (96.0 * k * k + 16.0 * alpha * k) / (3.0 * alpha * alpha)
            * (12.0 * 8.0 * 20.0 * k / delta).ln();
        assert!((ens.m_required - want_e).abs() <= 1e-12 * want_e);

        let multi = BoundRegime::MultiTrajectory;
        assert!(sample_size_bound(multi, 2, t_frob, lambda, 0.0, delta).is_err());
        assert!(sample_size_bound(multi, 2, t_frob, lambda, eps, 1.5).is_err());
        assert!(sample_size_bound(multi, 2, t_frob, 0.0, eps, delta).is_err());
        assert!(sample_size_bound(multi, 1, t_frob, lambda, eps, delta).is_err());
    }

    #[test]
    fn bound_scales_as_inverse_epsilon_squared() {
        let t = LocalTransitionMatrix::uniform(3);
        let multi = BoundRegime::MultiTrajectory;
        let b1 =
            sample_size_bound(multi, 3, t.frobenius(), 0.2, 0.02, 0.01).unwrap();
        let b2 =
            sample_size_bound(multi, 3, t.frobenius(), 0.2, 0.01, 0.01).unwrap();
        let ratio = b2.m_required / b1.m_required;
        assert!((3.9..=4.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn hessian_rank_follows_moment_geometry() {
        // Distinct p and φ̄ span two directions; equal vectors only one.
        let two = hessian_from_moments(&[0.6, 0.4], &[0.5, 0.5]).unwrap();
        assert_eq!(two.rank, 2);
        assert!(two.identifiable); // rank == K == 2
        let one = hessian_from_moments(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(one.rank, 1);
        assert!(!one.identifiable);
        // K = 3: even distinct moments leave rank ≤ 2 < K.
        let k3 = hessian_from_moments(&[0.5, 0.3, 0.2], &[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(k3.rank, 2);
        assert!(!k3.identifiable);
    }

    #[test]
    fn stationary_hessian_is_rank_one_with_equal_moments() {
        let spec = spec221();
        let t = LocalTransitionMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let report = stationary_identifiability_hessian(&spec, &t).unwrap();
        assert_eq!(report.rank, 1);
        assert!(!report.identifiable);
        // At stationarity E[φ] coincides with the marginal (2/3, 1/3).
        for (a, b) in report.marginal.iter().zip(&report.phi_mean) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((report.marginal[0] - 2.0 / 3.0).abs() < 1e-10);
        // H = 2 p^⊤ p.
        assert!((report.hessian.get(0, 0) - 2.0 * (2.0f64 / 3.0).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn ensemble_view_of_trajectories_keeps_per_time_samples() {
        let spec = spec221();
        let t1 = vec![cfg(&spec, &[0, 0]), cfg(&spec, &[1, 1])];
        let t2 = vec![cfg(&spec, &[0, 1]), cfg(&spec, &[1, 0])];
        let data = TrajectoryDataset::new(spec, vec![t1, t2]).unwrap();
        let ens = EnsembleDataset::from_trajectories(&data);
        assert_eq!(ens.time_count(), 2);
        assert_eq!(ens.snapshot(0).len(), 2);
        assert_eq!(ens.snapshot(0)[1].states(), &[0, 1]);
        let sys = assemble_ensemble(&ens).unwrap();
        assert_eq!(sys.regime, Regime::Ensemble);
        // φ̂ at t=0 averages (1,0) and (1/2,1/2) per site.
        assert!((sys.a.get(0, 0) - 0.75 * 0.75).abs() < 1e-15);
    }
}
