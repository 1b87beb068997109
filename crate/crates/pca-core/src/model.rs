//! The PCA model: specs, configurations, the local transition matrix, and
//! the stochastic update kernel.
//!
//! Conventions: sites are `0..N`, symbols are `0..K` (the literature's
//! `1..=K` shifted down by one). A configuration `x` encodes to the integer
//! `Σ_n x_n · K^n` (base-`K`, little-endian), which enumerates `[K]^N` as
//! `0..K^N` for the exact-analysis layer.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::RngCore;

use crate::linalg::Mat;
use crate::rng::sample_categorical;
use crate::Error;

/// Symbol storage type; alphabets are capped at `u16::MAX + 1` symbols.
pub type Symbol = u16;

/// Tolerance for "rows sum to one" checks on local transition matrices.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Hard cap on `K^N` for exact enumeration (global matrices, exact normal
/// systems). Chains above the cap can still be simulated.
pub const ENUMERATION_CAP: usize = 1 << 24;

/// Alphabet size `K`, node count `N`, and neighborhood radius `n_v` of a
/// PCA on the `N`-cycle.
///
/// Site `n`'s neighborhood is `{n−n_v, …, n+n_v}` modulo `N` *as a set*:
/// wraparound duplicates are removed, so `|V_n| = min(2·n_v + 1, N)`. In
/// particular `N = 2, n_v = 1` gives two-element neighborhoods, not three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    k: usize,
    n: usize,
    n_v: usize,
}

impl ModelSpec {
    /// Validates `K ≥ 2`, `N ≥ 1`, and the symbol-storage cap.
    pub fn new(k: usize, n: usize, n_v: usize) -> Result<Self, Error> {
        if k < 2 {
            return Err(Error::InvalidParameter { what: "K must be ≥ 2" });
        }
        if k > Symbol::MAX as usize + 1 {
            return Err(Error::InvalidParameter { what: "K exceeds symbol storage (65536)" });
        }
        if n < 1 {
            return Err(Error::InvalidParameter { what: "N must be ≥ 1" });
        }
        Ok(ModelSpec { k, n, n_v })
    }

    /// Alphabet size `K`.
    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    /// Node count `N`.
    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Neighborhood radius `n_v`.
    #[inline]
    pub fn radius(&self) -> usize {
        self.n_v
    }

    /// `|V_n| = min(2·n_v + 1, N)`, the same for every site.
    #[inline]
    pub fn neighborhood_size(&self) -> usize {
        (2 * self.n_v + 1).min(self.n)
    }

    /// `K^N` when it fits both `usize` and the enumeration cap.
    pub fn state_count(&self) -> Result<usize, Error> {
        let mut count: usize = 1;
        for _ in 0..self.n {
            count = count
                .checked_mul(self.k)
                .filter(|&c| c <= ENUMERATION_CAP)
                .ok_or(Error::EnumerationTooLarge { k: self.k, n: self.n, cap: ENUMERATION_CAP })?;
        }
        Ok(count)
    }
}

/// Sorted, deduplicated neighborhood `V_n` of site `site` (0-based).
///
/// Always contains `site`; size is `min(2·n_v + 1, N)`. In the 1-based
/// convention, `(N=8, n_v=2)` gives `V_1 = {7, 8, 1, 2, 3}`, which is
/// `{6, 7, 0, 1, 2}` here.
pub fn neighborhood(spec: &ModelSpec, site: usize) -> Vec<usize> {
    debug_assert!(site < spec.n);
    if 2 * spec.n_v + 1 >= spec.n {
        return (0..spec.n).collect();
    }
    let n = spec.n as isize;
    let mut v: Vec<usize> = (-(spec.n_v as isize)..=spec.n_v as isize)
        .map(|off| ((site as isize + off).rem_euclid(n)) as usize)
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// One global state `x ∈ [K]^N`, stored as 0-based symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Configuration {
    states: Vec<Symbol>,
}

impl Configuration {
    /// Builds from 0-based symbols, validating length and range.
    pub fn from_symbols(spec: &ModelSpec, states: &[Symbol]) -> Result<Self, Error> {
        if states.len() != spec.n {
            return Err(Error::InvalidParameter { what: "configuration length must equal N" });
        }
        if states.iter().any(|&s| s as usize >= spec.k) {
            return Err(Error::InvalidParameter { what: "symbol out of range [0, K)" });
        }
        Ok(Configuration { states: states.to_vec() })
    }

    /// The constant configuration `(s, …, s)`.
    pub fn constant(spec: &ModelSpec, s: Symbol) -> Result<Self, Error> {
        if s as usize >= spec.k {
            return Err(Error::InvalidParameter { what: "symbol out of range [0, K)" });
        }
        Ok(Configuration { states: vec![s; spec.n] })
    }

    /// The 0-based symbols.
    #[inline]
    pub fn states(&self) -> &[Symbol] {
        &self.states
    }

    /// Number of sites.
    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// True for the (impossible under a valid spec) empty configuration.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// True when all sites carry the same symbol.
    pub fn is_constant(&self) -> bool {
        self.states.windows(2).all(|w| w[0] == w[1])
    }

    /// Canonical integer code `Σ_n x_n · K^n` (little-endian base `K`).
    pub fn encode(&self, spec: &ModelSpec) -> usize {
        debug_assert_eq!(self.states.len(), spec.n);
        let mut code = 0usize;
        for &s in self.states.iter().rev() {
            code = code * spec.k + s as usize;
        }
        code
    }

    /// Inverse of [`Configuration::encode`].
    pub fn decode(spec: &ModelSpec, mut code: usize) -> Self {
        let mut states = Vec::with_capacity(spec.n);
        for _ in 0..spec.n {
            states.push((code % spec.k) as Symbol);
            code /= spec.k;
        }
        debug_assert_eq!(code, 0, "code exceeds K^N");
        Configuration { states }
    }

    /// The configuration rotated one step: site `n` takes the old symbol of
    /// site `n+1 (mod N)`.
    pub fn rotate(&self) -> Self {
        let n = self.states.len();
        let states = (0..n).map(|i| self.states[(i + 1) % n]).collect();
        Configuration { states }
    }
}

/// The local empirical distribution `φ_n`: the histogram of symbols over a
/// neighborhood, normalized by the neighborhood size.
///
/// A probability row vector of length `K`; every entry produced by
/// [`local_empirical`] is an integer multiple of `1/|V_n|`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalDistribution {
    weights: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Builds from raw weights, validating nonnegativity and unit sum.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, Error> {
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter { what: "empirical weights must be ≥ 0" });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidParameter { what: "empirical weights must sum to 1" });
        }
        Ok(EmpiricalDistribution { weights })
    }

    /// The probability row vector.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `φ_n(x)`: the local empirical distribution of configuration `x` at site
/// `site`, i.e. `φ(k) = |{i ∈ V_site : x_i = k}| / |V_site|`.
///
/// # Panics
/// If `site ≥ N` or the configuration's length does not match the spec.
pub fn local_empirical(spec: &ModelSpec, x: &Configuration, site: usize) -> EmpiricalDistribution {
    assert!(site < spec.n, "site index out of range");
    assert_eq!(x.len(), spec.n, "configuration length must equal N");
    let mut weights = vec![0.0f64; spec.k];
    local_empirical_into(spec, x, site, &mut weights);
    EmpiricalDistribution { weights }
}

/// Allocation-free core of [`local_empirical`]; fills `weights` (length `K`).
#[inline]
pub(crate) fn local_empirical_into(
    spec: &ModelSpec,
    x: &Configuration,
    site: usize,
    weights: &mut [f64],
) {
    debug_assert_eq!(weights.len(), spec.k);
    weights.fill(0.0);
    let size = spec.neighborhood_size();
    let w = 1.0 / size as f64;
    if size == spec.n {
        // Full-network neighborhood: every site counts once.
        for &s in x.states() {
            weights[s as usize] += w;
        }
        return;
    }
    let n = spec.n as isize;
    for off in -(spec.n_v as isize)..=spec.n_v as isize {
        let i = (site as isize + off).rem_euclid(n) as usize;
        weights[x.states[i] as usize] += w;
    }
}

/// The `K×K` row-stochastic local transition matrix `T`.
///
/// Row `j` is the next-symbol law contributed by a neighbor currently in
/// state `j`; a site in a neighborhood with empirical distribution `φ`
/// draws its next symbol from `φ · T`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalTransitionMatrix {
    entries: Mat,
}

impl LocalTransitionMatrix {
    /// Builds from rows, validating shape, entry range `[0, 1]`, and row
    /// sums within `1e-12`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::InvalidParameter { what: "T must be at least 2×2" });
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter { what: "T must be square" });
        }
        let entries = Mat::from_rows(rows);
        Self::from_mat(entries)
    }

    /// Builds from a square [`Mat`] with the same validation.
    pub fn from_mat(entries: Mat) -> Result<Self, Error> {
        let k = entries.rows();
        if k < 2 || entries.cols() != k {
            return Err(Error::InvalidParameter { what: "T must be square, at least 2×2" });
        }
        for j in 0..k {
            let row = entries.row(j);
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidParameter { what: "T entries must lie in [0, 1]" });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidParameter { what: "T rows must sum to 1 within 1e-12" });
            }
        }
        Ok(LocalTransitionMatrix { entries })
    }

    /// Builds from nonnegative rows, normalizing each row to sum one.
    /// Accepts inputs whose printed decimals don't sum exactly to one.
    pub fn from_rows_normalized(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let mut owned: Vec<Vec<f64>> = rows.to_vec();
        for row in &mut owned {
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter { what: "T entries must be ≥ 0" });
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::InvalidParameter { what: "T rows must have positive sum" });
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Self::from_rows(&owned)
    }

    /// The uniform matrix (`T_{jk} = 1/K`).
    pub fn uniform(k: usize) -> Self {
        let row = vec![1.0 / k as f64; k];
        LocalTransitionMatrix { entries: Mat::from_rows(&vec![row; k]) }
    }

    /// The cyclic permutation `j → j+1 (mod K)`: deterministic local motion
    /// with period `K`; the canonical synchronizing matrix.
    pub fn cyclic_permutation(k: usize) -> Self {
        let mut m = Mat::zeros(k, k);
        for j in 0..k {
            m.set(j, (j + 1) % k, 1.0);
        }
        LocalTransitionMatrix { entries: m }
    }

    /// "Move to the next symbol": `j → j+1` deterministically for `j < K−1`,
    /// while the last symbol restarts uniformly. Deterministic dynamics for
    /// the first `K−1` steps from `(0,…,0)`, stochastic afterwards.
    pub fn move_to_next(k: usize) -> Self {
        let mut m = Mat::zeros(k, k);
        for j in 0..k - 1 {
            m.set(j, j + 1, 1.0);
        }
        for c in 0..k {
            m.set(k - 1, c, 1.0 / k as f64);
        }
        LocalTransitionMatrix { entries: m }
    }

    /// A random matrix with i.i.d. uniform `[0,1)` entries, row-normalized —
    /// the standard recipe for perturbation and convergence experiments.
    pub fn random_stochastic(k: usize, rng: &mut impl RngCore) -> Self {
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            let row: Vec<f64> = (0..k).map(|_| crate::rng::next_unit(rng)).collect();
            rows.push(row);
        }
        Self::from_rows_normalized(&rows).expect("uniform rows have positive sums")
    }

    /// Alphabet size `K`.
    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.entries.rows()
    }

    /// Entry `T_{jk}` (0-based).
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries.get(j, k)
    }

    /// Row `j` of `T`.
    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        self.entries.row(j)
    }

    /// The underlying matrix.
    #[inline]
    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    /// Zeroes every entry strictly below `theta` and re-normalizes rows;
    /// the standard post-processing that restores structural zeros an
    /// estimator blurred. Errors if a row loses all its mass.
    pub fn thresholded(&self, theta: f64) -> Result<Self, Error> {
        let k = self.alphabet_size();
        let mut rows = Vec::with_capacity(k);
        for j in 0..k {
            rows.push(
                self.row(j).iter().map(|&v| if v < theta { 0.0 } else { v }).collect::<Vec<f64>>(),
            );
        }
        Self::from_rows_normalized(&rows)
    }

    /// Frobenius norm of `T`.
    pub fn frobenius(&self) -> f64 {
        self.entries.frobenius()
    }
}

/// `φ · T`: the next-symbol law of a site seeing empirical distribution
/// `φ`. A probability row vector (sums to one within `1e-12`).
pub fn site_distribution(phi: &EmpiricalDistribution, t: &LocalTransitionMatrix) -> Vec<f64> {
    t.matrix().vec_mul(phi.weights())
}

/// One synchronous update: every site `n` draws its next symbol from
/// `local_empirical(x, n) · T`, independently, with all `φ` computed from
/// the pre-update configuration.
pub fn step(
    spec: &ModelSpec,
    t: &LocalTransitionMatrix,
    x: &Configuration,
    rng: &mut impl RngCore,
) -> Configuration {
    debug_assert_eq!(t.alphabet_size(), spec.k);
    let mut phi = vec![0.0f64; spec.k];
    let mut law = vec![0.0f64; spec.k];
    let mut next = Vec::with_capacity(spec.n);
    for site in 0..spec.n {
        local_empirical_into(spec, x, site, &mut phi);
        law.fill(0.0);
        for (j, &pj) in phi.iter().enumerate() {
            if pj == 0.0 {
                continue;
            }
            for (l, &tjl) in t.row(j).iter().enumerate() {
                law[l] += pj * tjl;
            }
        }
        next.push(sample_categorical(rng, &law) as Symbol);
    }
    Configuration { states: next }
}

/// Simulates `X(0), …, X(L)` from `x0`; the returned vector has length
/// `L + 1` with `X(0) = x0`.
pub fn simulate_trajectory(
    spec: &ModelSpec,
    t: &LocalTransitionMatrix,
    x0: &Configuration,
    l: usize,
    rng: &mut impl RngCore,
) -> Vec<Configuration> {
    let mut out = Vec::with_capacity(l + 1);
    out.push(x0.clone());
    for _ in 0..l {
        let next = step(spec, t, out.last().expect("nonempty"), rng);
        out.push(next);
    }
    out
}
