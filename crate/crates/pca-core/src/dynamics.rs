//! Exact finite-state analysis of the global chain.
//!
//! For `K^N` within the enumeration cap, the PCA is an ordinary Markov
//! chain on configuration codes `0..K^N`, and everything about it can be
//! computed exactly: the global transition matrix `P`, irreducibility and
//! periodicity of its support pattern, stationary distributions, total
//! variation diagnostics, and perturbation (Lipschitz) bounds relating
//! changes in the local matrix `T` to changes in `P` and its invariant
//! measure.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{l1_distance, linear_fit, BitMat, Mat};
use crate::model::{local_empirical_into, Configuration, LocalTransitionMatrix, ModelSpec};
use crate::Error;

/// Tolerance on the rebuild error when deciding whether a stochastic matrix
/// is the global kernel of *some* local transition matrix.
pub const REPRESENTABLE_TOL: f64 = 1e-8;

/// The `K^N × K^N` global transition matrix `P` of a PCA, together with the
/// spec that indexes its states.
///
/// Rows and columns are configuration codes in the canonical encoding of
/// [`Configuration::encode`]; entry `(x, y)` is
/// `P(x, y) = Π_n (φ_n(x) · T)(y_n)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalTransitionMatrix {
    spec: ModelSpec,
    matrix: Mat,
}

impl GlobalTransitionMatrix {
    /// Wraps an existing stochastic matrix as a global kernel for `spec`,
    /// validating shape and row stochasticity (entries `≥ 0`, row sums
    /// within `1e-9` of one). The matrix need not be representable by any
    /// local matrix — [`local_from_global`] decides that.
    pub fn from_matrix(spec: ModelSpec, matrix: Mat) -> Result<Self, Error> {
        let s = spec.state_count()?;
        if matrix.rows() != s || matrix.cols() != s {
            return Err(Error::InvalidParameter { what: "matrix must be K^N × K^N" });
        }
        for x in 0..s {
            let row = matrix.row(x);
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter { what: "matrix entries must be ≥ 0" });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter { what: "matrix rows must sum to 1" });
            }
        }
        Ok(GlobalTransitionMatrix { spec, matrix })
    }

    /// The model spec indexing this matrix.
    #[inline]
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// The underlying `K^N × K^N` matrix.
    #[inline]
    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    /// Number of global states `K^N`.
    #[inline]
    pub fn state_count(&self) -> usize {
        self.matrix.rows()
    }
}

/// Builds the global transition matrix `P(x, y) = Π_n (φ_n(x) · T)(y_n)`.
///
/// Work and memory are `O(K^{2N})`; the spec's enumeration cap bounds the
/// state count. Each row is assembled as the Kronecker product of the `N`
/// per-site laws, so the cost per row is `O(N K² + K^N)`.
pub fn global_transition_matrix(
    spec: &ModelSpec,
    t: &LocalTransitionMatrix,
) -> Result<GlobalTransitionMatrix, Error> {
    if t.alphabet_size() != spec.alphabet_size() {
        return Err(Error::InvalidParameter { what: "T size must match the spec's K" });
    }
    let s = spec.state_count()?;
    let k = spec.alphabet_size();
    let n = spec.node_count();

    let mut matrix = Mat::zeros(s, s);
    let mut phi = vec![0.0f64; k];
    let mut laws = Mat::zeros(n, k);
    for x in 0..s {
        let cfg = Configuration::decode(spec, x);
        for site in 0..n {
            local_empirical_into(spec, &cfg, site, &mut phi);
            let law = laws.row_mut(site);
            law.fill(0.0);
            for (j, &pj) in phi.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                for (l, &tjl) in t.row(j).iter().enumerate() {
                    law[l] += pj * tjl;
                }
            }
        }

        // Row as an iterated Kronecker product. After folding sites
        // `site..N`, `acc[idx]` is the product over those sites with `idx`
        // the little-endian code of their symbols; prepending site−1 maps
        // `idx → y_{site−1} + K·idx`, matching the global encoding.
        let mut acc = vec![1.0f64];
        for site in (0..n).rev() {
            let law = laws.row(site);
            let mut next = vec![0.0f64; acc.len() * k];
            for (old, &a) in acc.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let block = &mut next[old * k..(old + 1) * k];
                for (slot, &l) in block.iter_mut().zip(law) {
                    *slot = a * l;
                }
            }
            acc = next;
        }
        debug_assert_eq!(acc.len(), s);
        matrix.row_mut(x).copy_from_slice(&acc);
    }
    Ok(GlobalTransitionMatrix { spec: *spec, matrix })
}

/// Recovers the local matrix from a global kernel: `T_{jk} = P(j̄, k̄)^{1/N}`
/// where `j̄` is the constant configuration `(j, …, j)`.
///
/// On constant configurations every `φ_n = δ_j`, so `P(j̄, k̄) = T_{jk}^N`
/// exactly; this inverts the `T ↦ P` map on its image. The candidate is then
/// verified by rebuilding the global matrix: if the rebuild differs from the
/// input by more than [`REPRESENTABLE_TOL`] in any entry, the input is not
/// the kernel of any local matrix and [`Error::NotRepresentable`] reports
/// the violation.
pub fn local_from_global(p: &GlobalTransitionMatrix) -> Result<LocalTransitionMatrix, Error> {
    let spec = p.spec();
    let k = spec.alphabet_size();
    let n = spec.node_count();

    // Code of the constant configuration (j, …, j) is j · (1 + K + … + K^{N−1}).
    let mut diag_unit = 0usize;
    let mut power = 1usize;
    for _ in 0..n {
        diag_unit += power;
        power *= k;
    }

    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let mut row = Vec::with_capacity(k);
        for l in 0..k {
            let v = p.matrix().get(j * diag_unit, l * diag_unit);
            row.push(v.powf(1.0 / n as f64));
        }
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::NotRepresentable { max_violation: (sum - 1.0).abs() });
        }
        rows.push(row);
    }
    let candidate = LocalTransitionMatrix::from_rows_normalized(&rows)?;

    let rebuilt = global_transition_matrix(spec, &candidate)?;
    let max_violation = rebuilt.matrix().sub(p.matrix()).max_abs();
    if max_violation > REPRESENTABLE_TOL {
        return Err(Error::NotRepresentable { max_violation });
    }
    Ok(candidate)
}

/// Irreducibility and periodicity of a chain's support digraph.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodReport {
    /// Whether the support digraph is strongly connected.
    pub irreducible: bool,
    /// The gcd of cycle lengths when irreducible; reported as `1` for
    /// reducible chains (no single period is defined there).
    pub period: usize,
    /// For an irreducible chain of period `d`, the `d` cyclic classes in
    /// transition order starting with the class of state `0`; each class is
    /// sorted ascending. Empty for reducible chains.
    pub cyclic_classes: Vec<Vec<usize>>,
}

/// Forward BFS levels over a bit-pattern digraph; `usize::MAX` marks
/// unreached nodes.
fn bfs_levels(adj: &BitMat, start: usize, transpose: bool) -> Vec<usize> {
    let n = adj.size();
    let mut level = vec![usize::MAX; n];
    let mut queue = vec![start];
    level[start] = 0;
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for v in 0..n {
            let edge = if transpose { adj.get(v, u) } else { adj.get(u, v) };
            if edge && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies the support digraph of a stochastic matrix: strong
/// connectivity, the period, and the cyclic classes.
///
/// Edges are strict-positivity of entries. The period of an irreducible
/// chain is the gcd of `level(u) + 1 − level(v)` over all edges `(u, v)`
/// in a BFS forest, and the cyclic classes are the BFS levels modulo the
/// period.
pub fn period_report(m: &Mat) -> PeriodReport {
    assert_eq!(m.rows(), m.cols(), "period analysis needs a square matrix");
    let n = m.rows();
    let adj = BitMat::support_of(m);

    let forward = bfs_levels(&adj, 0, false);
    let backward = bfs_levels(&adj, 0, true);
    let irreducible = forward.iter().all(|&l| l != usize::MAX)
        && backward.iter().all(|&l| l != usize::MAX);
    if !irreducible {
        return PeriodReport { irreducible: false, period: 1, cyclic_classes: Vec::new() };
    }

    let mut d = 0usize;
    for u in 0..n {
        for v in 0..n {
            if adj.get(u, v) {
                let diff = (forward[u] as isize + 1 - forward[v] as isize).unsigned_abs();
                d = gcd(d, diff);
            }
        }
    }
    // Every state has an outgoing edge (rows are stochastic), so at least
    // one cycle exists and d ≥ 1.
    debug_assert!(d >= 1);

    let mut cyclic_classes = vec![Vec::new(); d];
    for (state, &l) in forward.iter().enumerate() {
        cyclic_classes[l % d].push(state);
    }
    PeriodReport { irreducible: true, period: d, cyclic_classes }
}

/// The synchronization criterion on the local matrix: the system provably
/// reaches a state where all sites move identically exactly when `T` is
/// irreducible with period equal to the alphabet size `K` — the cyclic
/// classes of `T` are then singletons that every site walks through in
/// lockstep. (The criterion lives on `T`, not on the global chain: the
/// global chain is reducible in this regime, with the constant
/// configurations forming the closed class the dynamics collapses onto.)
pub fn predicts_synchronization(t: &LocalTransitionMatrix) -> bool {
    let report = period_report(t.matrix());
    report.irreducible && report.period == t.alphabet_size()
}

/// Ergodicity criterion on the local matrix: `T` irreducible and aperiodic
/// makes the global chain irreducible and aperiodic too, so a unique
/// stationary distribution exists and powers of `P` converge to it from
/// every start.
pub fn is_ergodic(t: &LocalTransitionMatrix) -> bool {
    let report = period_report(t.matrix());
    report.irreducible && report.period == 1
}

/// First time from which the trajectory consists only of constant
/// configurations, scanning from the end.
///
/// Returns `Some(t)` with `t` minimal such that `X(s)` is constant for all
/// `s ≥ t` (`Some(0)` when the whole trajectory is constant), and `None`
/// when the final state is not constant (or the trajectory is empty) —
/// synchronization was not reached within the observed horizon.
pub fn detect_synchronization(trajectory: &[Configuration]) -> Option<usize> {
    if trajectory.is_empty() {
        return None;
    }
    match trajectory.iter().rposition(|x| !x.is_constant()) {
        None => Some(0),
        Some(i) if i + 1 < trajectory.len() => Some(i + 1),
        Some(_) => None,
    }
}

/// A stationary distribution produced by power iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryDistribution {
    /// The probability vector `π` over configuration codes.
    pub weights: Vec<f64>,
    /// `‖πP − π‖₁` at the returned iterate.
    pub residual: f64,
    /// Power-iteration steps used.
    pub iterations: usize,
}

/// Stationary distribution of an ergodic stochastic matrix by power
/// iteration from the uniform vector.
///
/// The ergodicity precondition is checked first on the support pattern
/// ([`Error::NotErgodic`] otherwise — a periodic chain's powers oscillate
/// and the iteration would not settle). Iteration stops when the `ℓ₁`
/// change between successive iterates drops to `tol`;
/// [`Error::NoConvergence`] reports the residual if `max_iter` is hit.
pub fn stationary_distribution(
    m: &Mat,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryDistribution, Error> {
    assert_eq!(m.rows(), m.cols(), "stationary distribution needs a square matrix");
    let report = period_report(m);
    if !report.irreducible || report.period != 1 {
        return Err(Error::NotErgodic);
    }

    let s = m.rows();
    let mut pi = vec![1.0 / s as f64; s];
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut next = m.vec_mul(&pi);
        let sum: f64 = next.iter().sum();
        for v in &mut next {
            *v /= sum;
        }
        diff = l1_distance(&next, &pi);
        pi = next;
        if diff <= tol {
            let step = m.vec_mul(&pi);
            let residual = l1_distance(&step, &pi);
            return Ok(StationaryDistribution { weights: pi, residual, iterations: iteration });
        }
    }
    Err(Error::NoConvergence { residual: diff, iterations: max_iter })
}

/// Single-site marginal `π_n(k) = Σ_x π(x) 𝟙{x_n = k}` at site `site`.
///
/// Stationary distributions of the cyclic PCA are shift-invariant, so every
/// site yields the same marginal `π̃`, which is also the stationary
/// distribution of `T` itself.
///
/// # Panics
/// If `site ≥ N` or `pi` does not have `K^N` entries.
pub fn marginal_of_pi(spec: &ModelSpec, pi: &[f64], site: usize) -> Vec<f64> {
    let k = spec.alphabet_size();
    let n = spec.node_count();
    assert!(site < n, "site index out of range");
    assert_eq!(pi.len(), spec.state_count().expect("enumerable spec"), "π has K^N entries");
    let mut out = vec![0.0f64; k];
    let divisor = k.pow(site as u32);
    for (code, &w) in pi.iter().enumerate() {
        out[(code / divisor) % k] += w;
    }
    out
}

/// Total variation distance `½‖p − q‖₁` between probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * l1_distance(p, q)
}

/// Dobrushin contraction coefficient
/// `τ(A) = ½ max_{x,x'} ‖A(x,·) − A(x',·)‖₁ ∈ [0, 1]`.
pub fn tau_coefficient(m: &Mat) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..m.rows() {
        for x2 in (x + 1)..m.rows() {
            let d = l1_distance(m.row(x), m.row(x2));
            worst = worst.max(d);
        }
    }
    0.5 * worst
}

/// The mixing exponent `ℓ₀ = min { t ≥ 1 : Mᵗ > 0 entrywise }`.
///
/// Positivity of powers is monotone for stochastic matrices, so the minimum
/// is found by squaring the boolean support pattern and binary-searching
/// between the last negative and first positive power of two. Powers are
/// searched up to `4 · dim`; a matrix with no positive power by then is
/// reported [`Error::NotPrimitive`]. (An entrywise-positive power forces
/// `τ(Mᵗ) < 1`, which is what the perturbation bound needs.)
pub fn mixing_exponent(m: &Mat) -> Result<usize, Error> {
    assert_eq!(m.rows(), m.cols(), "mixing exponent needs a square matrix");
    let cap = 4 * m.rows();
    let base = BitMat::support_of(m);
    if base.all_ones() {
        return Ok(1);
    }

    // squares[j] = support(M)^(2^j), built until a positive power appears.
    let mut squares = vec![base];
    let mut exponent = 1usize;
    while !squares.last().expect("nonempty").all_ones() {
        if exponent >= cap {
            return Err(Error::NotPrimitive { cap });
        }
        let last = squares.last().expect("nonempty");
        squares.push(last.mul(last));
        exponent *= 2;
    }

    // Positivity holds at 2^j but not 2^(j−1); binary search the gap.
    let j = squares.len() - 1;
    let mut lo = 1usize << (j - 1);
    let mut hi = 1usize << j;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if power_all_ones(&squares, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi > cap {
        return Err(Error::NotPrimitive { cap });
    }
    Ok(hi)
}

/// Whether `support^t` is entrywise positive, composing the stored squares
/// along the binary representation of `t`.
fn power_all_ones(squares: &[BitMat], mut t: usize) -> bool {
    let mut acc: Option<BitMat> = None;
    let mut j = 0usize;
    while t > 0 {
        if t & 1 == 1 {
            acc = Some(match acc {
                None => squares[j].clone(),
                Some(a) => a.mul(&squares[j]),
            });
        }
        t >>= 1;
        j += 1;
    }
    acc.map(|a| a.all_ones()).unwrap_or(false)
}

/// Dense matrix power by repeated squaring.
fn mat_power(m: &Mat, mut e: usize) -> Mat {
    assert!(e >= 1, "matrix power needs a positive exponent");
    let mut base = m.clone();
    let mut acc: Option<Mat> = None;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a.matmul(&base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = base.matmul(&base);
        }
    }
    acc.expect("exponent ≥ 1")
}

/// All norms, bounds, and certificates of the Lipschitz dependence of
/// `(P, π)` on `T`, for one pair of local matrices.
///
/// The inequalities certified (and re-checked at construction):
///
/// * `‖P₁−P₂‖₁ ≤ N K^{N−1} min{‖ΔT‖₁, K‖ΔT‖₁,₁}`  (entrywise ℓ₁),
/// * `‖P₁−P₂‖₂ ≤ N (K·C_K)^{N/2} ‖ΔT‖₂`  (Frobenius), with
///   `C_K = max_i max_j Σ_k (T⁽ⁱ⁾_{jk})² ≤ 1`,
/// * `‖π₁−π₂‖₁ ≤ (1 + (ℓ₀−1)K^N) / (1 − τ(P₁^{ℓ₀})) · ‖P₁−P₂‖₁`, where
///   `ℓ₀` is the mixing exponent of `P₁`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LipschitzRatios {
    /// `‖T₁−T₂‖₁` (entrywise).
    pub delta_t_l1: f64,
    /// `‖T₁−T₂‖₂` (Frobenius).
    pub delta_t_l2: f64,
    /// `‖T₁−T₂‖₁,₁` (max absolute row sum).
    pub delta_t_op11: f64,
    /// `‖P₁−P₂‖₁` (entrywise).
    pub delta_p_l1: f64,
    /// `‖P₁−P₂‖₂` (Frobenius).
    pub delta_p_l2: f64,
    /// `‖π₁−π₂‖₁`.
    pub delta_pi_l1: f64,
    /// `‖π₁−π₂‖₂`.
    pub delta_pi_l2: f64,
    /// Right side of the entrywise-ℓ₁ bound on `ΔP`.
    pub bound_p_l1: f64,
    /// Right side of the Frobenius bound on `ΔP`.
    pub bound_p_l2: f64,
    /// Right side of the ℓ₁ bound on `Δπ`.
    pub bound_pi_l1: f64,
    /// Mixing exponent of `P₁` used in the `Δπ` bound.
    pub ell0: usize,
    /// `τ(P₁^{ℓ₀})`, strictly below one.
    pub tau_ell0: f64,
}

/// Computes exact norms and proven bounds for the pair `(T₁, T₂)`.
///
/// Both chains must be ergodic (stationary measures are compared) and the
/// first must be primitive within the power cap. Each bound is asserted
/// against its exact left-hand side — a violation is a programming error,
/// not a data condition.
pub fn lipschitz_ratios(
    spec: &ModelSpec,
    t1: &LocalTransitionMatrix,
    t2: &LocalTransitionMatrix,
) -> Result<LipschitzRatios, Error> {
    let k = spec.alphabet_size();
    let n = spec.node_count();
    let p1 = global_transition_matrix(spec, t1)?;
    let p2 = global_transition_matrix(spec, t2)?;
    let s = p1.state_count();

    let pi1 = stationary_distribution(p1.matrix(), 1e-13, 1_000_000)?;
    let pi2 = stationary_distribution(p2.matrix(), 1e-13, 1_000_000)?;

    let dt = t1.matrix().sub(t2.matrix());
    let delta_t_l1 = dt.entrywise_l1();
    let delta_t_l2 = dt.frobenius();
    let delta_t_op11 = dt.op_norm_11();

    let dp = p1.matrix().sub(p2.matrix());
    let delta_p_l1 = dp.entrywise_l1();
    let delta_p_l2 = dp.frobenius();

    let delta_pi_l1 = l1_distance(&pi1.weights, &pi2.weights);
    let delta_pi_l2 = pi1
        .weights
        .iter()
        .zip(&pi2.weights)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    let row_sq_max = |t: &LocalTransitionMatrix| -> f64 {
        (0..k)
            .map(|j| t.row(j).iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let c_k = row_sq_max(t1).max(row_sq_max(t2));

    let nk_pow = (k as f64).powi(n as i32 - 1);
    let bound_p_l1 = n as f64 * nk_pow * delta_t_l1.min(k as f64 * delta_t_op11);
    let bound_p_l2 = n as f64 * (k as f64 * c_k).powf(n as f64 / 2.0) * delta_t_l2;

    let ell0 = mixing_exponent(p1.matrix())?;
    let p1_ell = mat_power(p1.matrix(), ell0);
    let tau_ell0 = tau_coefficient(&p1_ell);
    let bound_pi_l1 =
        (1.0 + (ell0 as f64 - 1.0) * s as f64) / (1.0 - tau_ell0) * bound_p_l1;

    // The bounds are exact mathematics; allow only floating-point slack.
    let slack = 1e-9;
    assert!(
        delta_p_l1 <= bound_p_l1 * (1.0 + slack) + 1e-12,
        "ΔP ℓ₁ bound violated: {delta_p_l1} > {bound_p_l1}"
    );
    assert!(
        delta_p_l2 <= bound_p_l2 * (1.0 + slack) + 1e-12,
        "ΔP Frobenius bound violated: {delta_p_l2} > {bound_p_l2}"
    );
    assert!(
        delta_pi_l1 <= bound_pi_l1 * (1.0 + slack) + 1e-9,
        "Δπ bound violated: {delta_pi_l1} > {bound_pi_l1}"
    );

    Ok(LipschitzRatios {
        delta_t_l1,
        delta_t_l2,
        delta_t_op11,
        delta_p_l1,
        delta_p_l2,
        delta_pi_l1,
        delta_pi_l2,
        bound_p_l1,
        bound_p_l2,
        bound_pi_l1,
        ell0,
        tau_ell0,
    })
}

/// Pushes a distribution over configuration codes through `steps`
/// applications of `P`; returns `μ₀, μ₁, …, μ_steps` (length `steps + 1`).
pub fn propagate_distribution(
    p: &GlobalTransitionMatrix,
    mu0: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>, Error> {
    let s = p.state_count();
    if mu0.len() != s {
        return Err(Error::InvalidParameter { what: "initial distribution must have length K^N" });
    }
    if mu0.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter { what: "initial distribution must be ≥ 0" });
    }
    let sum: f64 = mu0.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter { what: "initial distribution must sum to 1" });
    }

    let mut out = Vec::with_capacity(steps + 1);
    out.push(mu0.to_vec());
    for _ in 0..steps {
        let next = p.matrix().vec_mul(out.last().expect("nonempty"));
        out.push(next);
    }
    Ok(out)
}

/// Worst-case total variation decay: for each `t ≤ horizon`, the maximum
/// over all point-mass starts `x` of `TV(P^t(x, ·), π)`. Index `0` is the
/// worst TV between a point mass and `π` itself.
pub fn tv_decay(p: &GlobalTransitionMatrix, pi: &[f64], horizon: usize) -> Vec<f64> {
    let s = p.state_count();
    assert_eq!(pi.len(), s, "π must have length K^N");
    let max_tv = |q: &Mat| -> f64 {
        (0..s).map(|x| tv_distance(q.row(x), pi)).fold(0.0, f64::max)
    };

    let mut out = Vec::with_capacity(horizon + 1);
    out.push((0..s).map(|x| {
        // TV between δ_x and π without materializing the identity matrix.
        let mut d = 0.0;
        for (y, &w) in pi.iter().enumerate() {
            d += if y == x { (1.0 - w).abs() } else { w };
        }
        0.5 * d
    }).fold(0.0, f64::max));

    let mut q = p.matrix().clone();
    for _ in 1..=horizon {
        out.push(max_tv(&q));
        q = q.matmul(p.matrix());
    }
    debug_assert_eq!(out.len(), horizon + 1);
    out
}

/// Fits `v_t ≈ C ρᵗ` by least squares on `ln v_t`; returns `(C, ρ)`.
///
/// Entries that are zero (or subnormal) are skipped — they carry no
/// information about the decay rate once the sequence hits exact zero.
/// Returns `None` when fewer than two positive entries remain.
pub fn fit_geometric(values: &[f64]) -> Option<(f64, f64)> {
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (t, &v) in values.iter().enumerate() {
        if v > 1e-300 {
            ts.push(t as f64);
            logs.push(v.ln());
        }
    }
    if ts.len() < 2 {
        return None;
    }
    let (intercept, slope) = linear_fit(&ts, &logs);
    Some((intercept.exp(), slope.exp()))
}
