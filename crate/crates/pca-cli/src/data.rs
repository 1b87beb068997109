//! Dataset synthesis: multi-trajectory generation and ensemble de-linking.
//!
//! Generation is parallel over trajectories but bit-deterministic: each
//! trajectory consumes its own counter-addressed RNG stream, so results do
//! not depend on thread scheduling.

use pca_core::inference::{EnsembleDataset, TrajectoryDataset};
use pca_core::model::simulate_trajectory;
use pca_core::rng::{next_unit, sample_categorical, RngCore, STREAM_DELINK};
use pca_core::{Configuration, LocalTransitionMatrix, ModelSpec, RngPolicy, Symbol};
use rayon::prelude::*;

/// Errors from dataset synthesis and (de)serialization.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    /// A caller-supplied argument is structurally invalid.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Sampling without replacement asked for more items than the pool has.
    #[error("requested {requested} samples without replacement from a pool of {available}")]
    CountExceedsPool { requested: usize, available: usize },
    /// Text parse failure; `line` is 1-based over the whole file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Binary parse failure at a byte offset.
    #[error("malformed binary data at byte {offset}: {message}")]
    Binary { offset: usize, message: String },
    /// The file declares a format version this build does not read.
    #[error("unrecognized format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] pca_core::Error),
}

/// Law of the initial configuration `X(0)`.
///
/// `Uniform` and `Custom` draw the `N` sites i.i.d.; the uniform law over
/// the whole configuration space factorizes this way, so no generality is
/// lost by sampling per site.
#[derive(Debug, Clone, PartialEq)]
pub enum InitDistribution {
    /// Every trajectory starts at exactly this configuration.
    PointMass(Configuration),
    /// Sites i.i.d. uniform over the alphabet.
    Uniform,
    /// Sites i.i.d. with these (normalized) weights over the alphabet.
    Custom(Vec<f64>),
}

impl InitDistribution {
    /// Checks compatibility with `spec`.
    pub fn validate(&self, spec: &ModelSpec) -> Result<(), DataError> {
        match self {
            InitDistribution::PointMass(x) => {
                if x.len() != spec.node_count() {
                    return Err(DataError::InvalidArgument(format!(
                        "initial configuration has {} sites, spec needs {}",
                        x.len(),
                        spec.node_count()
                    )));
                }
                if x.states().iter().any(|&s| s as usize >= spec.alphabet_size()) {
                    return Err(DataError::InvalidArgument(
                        "initial configuration has a symbol outside the alphabet".into(),
                    ));
                }
            }
            InitDistribution::Uniform => {}
            InitDistribution::Custom(w) => {
                if w.len() != spec.alphabet_size() {
                    return Err(DataError::InvalidArgument(format!(
                        "init weights have length {}, alphabet has {} symbols",
                        w.len(),
                        spec.alphabet_size()
                    )));
                }
                if w.iter().any(|&v| !v.is_finite() || v < 0.0) {
                    return Err(DataError::InvalidArgument(
                        "init weights must be finite and nonnegative".into(),
                    ));
                }
                if w.iter().sum::<f64>() <= 0.0 {
                    return Err(DataError::InvalidArgument(
                        "init weights must have positive sum".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Draws one initial configuration.
    pub fn sample(&self, spec: &ModelSpec, rng: &mut impl RngCore) -> Configuration {
        match self {
            InitDistribution::PointMass(x) => x.clone(),
            InitDistribution::Uniform => {
                let k = spec.alphabet_size();
                let states: Vec<Symbol> = (0..spec.node_count())
                    .map(|_| {
                        let u = next_unit(rng);
                        ((u * k as f64) as usize).min(k - 1) as Symbol
                    })
                    .collect();
                Configuration::from_symbols(spec, &states).expect("in-range by construction")
            }
            InitDistribution::Custom(w) => {
                let total: f64 = w.iter().sum();
                let normalized: Vec<f64> = w.iter().map(|v| v / total).collect();
                let states: Vec<Symbol> = (0..spec.node_count())
                    .map(|_| sample_categorical(rng, &normalized) as Symbol)
                    .collect();
                Configuration::from_symbols(spec, &states).expect("in-range by construction")
            }
        }
    }
}

/// Generates `m` independent trajectories of `l` transitions each.
///
/// Trajectory `i` is produced entirely from the stream `(seed, i)`, so the
/// output is reproducible across runs and thread counts; generation is
/// parallel over trajectories.
pub fn generate_multitraj(
    spec: &ModelSpec,
    t: &LocalTransitionMatrix,
    init: &InitDistribution,
    m: usize,
    l: usize,
    seed: u64,
) -> Result<TrajectoryDataset, DataError> {
    if t.alphabet_size() != spec.alphabet_size() {
        return Err(DataError::InvalidArgument(format!(
            "transition matrix is {}×{0} but the alphabet has {} symbols",
            t.alphabet_size(),
            spec.alphabet_size()
        )));
    }
    if m == 0 {
        return Err(DataError::InvalidArgument("need at least one trajectory".into()));
    }
    if l == 0 {
        return Err(DataError::InvalidArgument("need at least one transition (L ≥ 1)".into()));
    }
    init.validate(spec)?;

    let policy = RngPolicy::new(seed);
    let trajectories: Vec<Vec<Configuration>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = policy.trajectory_stream(i as u64);
            let x0 = init.sample(spec, &mut rng);
            simulate_trajectory(spec, t, &x0, l, &mut rng)
        })
        .collect();
    Ok(TrajectoryDataset::new(*spec, trajectories)?)
}

/// Uniform per-time counts: `m_t` at each of `time_count` instants.
pub fn uniform_counts(time_count: usize, m_t: usize) -> Vec<usize> {
    vec![m_t; time_count]
}

/// Destroys cross-time linkage: for each time `t`, draws `per_time_counts[t]`
/// trajectory indices (fresh draw per time) and keeps only those
/// configurations at time `t`.
///
/// With replacement (the default reading of independent per-time sampling)
/// any count is allowed; without replacement a count larger than the pool is
/// a [`DataError::CountExceedsPool`]. Each time index uses its own RNG
/// stream, so output is deterministic in `seed` alone.
pub fn delink_to_ensemble(
    data: &TrajectoryDataset,
    per_time_counts: &[usize],
    with_replacement: bool,
    seed: u64,
) -> Result<EnsembleDataset, DataError> {
    let times = data.transition_count() + 1;
    if per_time_counts.len() != times {
        return Err(DataError::InvalidArgument(format!(
            "got {} per-time counts for {} time instants",
            per_time_counts.len(),
            times
        )));
    }
    let m = data.trajectory_count();
    for (t, &c) in per_time_counts.iter().enumerate() {
        if c == 0 {
            return Err(DataError::InvalidArgument(format!("count at time {t} must be ≥ 1")));
        }
        if !with_replacement && c > m {
            return Err(DataError::CountExceedsPool { requested: c, available: m });
        }
    }

    let policy = RngPolicy::new(seed);
    let snapshots: Vec<Vec<Configuration>> = per_time_counts
        .iter()
        .enumerate()
        .map(|(t, &count)| {
            let mut rng = policy.named_stream(STREAM_DELINK, t as u64);
            let indices = if with_replacement {
                (0..count).map(|_| sample_index(&mut rng, m)).collect::<Vec<_>>()
            } else {
                sample_without_replacement(&mut rng, m, count)
            };
            indices.into_iter().map(|i| data.trajectories()[i][t].clone()).collect()
        })
        .collect();
    Ok(EnsembleDataset::new(*data.spec(), snapshots)?)
}

/// Uniform index in `[0, m)`.
fn sample_index(rng: &mut impl RngCore, m: usize) -> usize {
    ((next_unit(rng) * m as f64) as usize).min(m - 1)
}

/// First `count` entries of a partial Fisher–Yates shuffle of `0..m`.
fn sample_without_replacement(rng: &mut impl RngCore, m: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= m);
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..count {
        let j = i + sample_index(rng, m - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}
