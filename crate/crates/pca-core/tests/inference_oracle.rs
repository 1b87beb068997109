//! Oracle tests for the inference layer: the population-limit identity,
//! singular regimes, solver behavior against closed forms, and agreement
//! between empirical assemblies and exact moments.

use pca_core::dynamics::{global_transition_matrix, is_ergodic, stationary_distribution};
use pca_core::inference::{
    assemble_ensemble, assemble_multitraj, assemble_singletraj, exact_normal_system,
    hessian_from_moments, identifiability_report, sample_size_bound, solve_constrained,
    stationary_identifiability_hessian, trajectory_system, BoundRegime, EnsembleDataset,
    ExactMode, TrajectoryDataset,
};
use pca_core::linalg::{sym_pinv_solve, Mat};
use pca_core::model::simulate_trajectory;
use pca_core::rng::next_unit;
use pca_core::{Configuration, LocalTransitionMatrix, ModelSpec, RngPolicy};

fn random_ergodic_t(k: usize, rng: &mut rand_chacha::ChaCha12Rng) -> LocalTransitionMatrix {
    // Uniform entries, row-normalized: strictly positive, hence ergodic.
    let t = LocalTransitionMatrix::random_stochastic(k, rng);
    assert!(is_ergodic(&t));
    t
}

fn max_abs_diff(t1: &LocalTransitionMatrix, t2: &LocalTransitionMatrix) -> f64 {
    let k = t1.alphabet_size();
    let mut worst = 0.0f64;
    for r in 0..k {
        for c in 0..k {
            worst = worst.max((t1.get(r, c) - t2.get(r, c)).abs());
        }
    }
    worst
}

#[test]
fn population_limit_recovers_t_on_random_ergodic_instances() {
    // The defining identity of the estimator: T = A_∞⁻¹ b_∞, checked at
    // (N, K, n_v) = (4, 3, 1), uniform start, L = 5, on random ergodic T.
    let spec = ModelSpec::new(3, 4, 1).unwrap();
    let s = spec.state_count().unwrap();
    let mu0 = vec![1.0 / s as f64; s];
    let policy = RngPolicy::new(41);
    let mut rng = policy.trajectory_stream(0);
    for _ in 0..5 {
        let t = random_ergodic_t(3, &mut rng);
        let sys = exact_normal_system(&spec, &t, &mu0, 5, ExactMode::Trajectory).unwrap();
        assert!(identifiability_report(&sys).identifiable);
        let sol = solve_constrained(&sys).unwrap();
        assert!(sol.converged);
        assert!(
            max_abs_diff(&sol.estimate, &t) < 1e-10,
            "population solve must reproduce T exactly"
        );
    }
}

#[test]
fn deterministic_prefix_controls_singularity() {
    // move-to-next from a constant start visits one-hot φ's only: with too
    // few transitions the regressors cannot span R^K. Singular for
    // L ≤ K−2; full rank for L ≥ K (the L = K−1 boundary is not asserted).
    for k in [3usize, 4] {
        let spec = ModelSpec::new(k, 3, 1).unwrap();
        let t = LocalTransitionMatrix::move_to_next(k);
        let mut mu0 = vec![0.0; spec.state_count().unwrap()];
        mu0[0] = 1.0;
        for l in 1..=(k - 2) {
            let sys = exact_normal_system(&spec, &t, &mu0, l, ExactMode::Trajectory).unwrap();
            let report = identifiability_report(&sys);
            assert!(
                report.lambda_min < 1e-12,
                "K={k}, L={l}: expected singular, λ_min={}",
                report.lambda_min
            );
        }
        for l in [k, k + 2] {
            let sys = exact_normal_system(&spec, &t, &mu0, l, ExactMode::Trajectory).unwrap();
            let report = identifiability_report(&sys);
            assert!(
                report.identifiable,
                "K={k}, L={l}: expected full rank, λ_min={}",
                report.lambda_min
            );
        }
    }
}

#[test]
fn constrained_solution_equals_unconstrained_in_the_interior() {
    let spec = ModelSpec::new(3, 3, 1).unwrap();
    let s = spec.state_count().unwrap();
    let mu0 = vec![1.0 / s as f64; s];
    let policy = RngPolicy::new(42);
    let mut rng = policy.trajectory_stream(0);
    let t = random_ergodic_t(3, &mut rng);
    let sys = exact_normal_system(&spec, &t, &mu0, 4, ExactMode::Trajectory).unwrap();

    let sol = solve_constrained(&sys).unwrap();
    for col in 0..3 {
        let unconstrained = sym_pinv_solve(&sys.a, &sys.b.col(col), 1e-13);
        assert!(unconstrained.iter().all(|&v| v >= -1e-12), "interior case expected");
        for j in 0..3 {
            assert!(
                (sol.raw.get(j, col) - unconstrained[j]).abs() < 1e-10,
                "active-set must agree with the pseudo-inverse solve when unconstrained ≥ 0"
            );
        }
    }
}

#[test]
fn identity_normal_matrix_passes_b_through() {
    // With A = I the solve returns b clipped at zero; stochastic b rows
    // come back verbatim.
    let rows = [vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.25, 0.25, 0.5]];
    let mut b = Mat::zeros(3, 3);
    for (j, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            b.set(j, k, v);
        }
    }
    let sys = pca_core::inference::NormalSystem {
        a: Mat::identity(3),
        b,
        weight: 1.0,
        regime: pca_core::inference::Regime::MultiTrajectory,
    };
    let sol = solve_constrained(&sys).unwrap();
    for (j, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            assert!((sol.estimate.get(j, k) - v).abs() < 1e-12);
        }
    }
}

#[test]
fn normal_vectors_sum_to_the_gram_row_sums() {
    // Σ_k b(·,k) = A·1 holds exactly for every assembly (both sides equal
    // the mean regressor φ̄^⊤), which is why unconstrained row sums are
    // exactly one before normalization.
    let spec = ModelSpec::new(3, 5, 1).unwrap();
    let policy = RngPolicy::new(99);
    let mut rng = policy.trajectory_stream(1000);
    let t = random_ergodic_t(3, &mut rng);
    let x0 = Configuration::constant(&spec, 1).unwrap();
    let trajectories: Vec<_> = (0..8)
        .map(|m| simulate_trajectory(&spec, &t, &x0, 6, &mut policy.trajectory_stream(m)))
        .collect();
    let data = TrajectoryDataset::new(spec, trajectories).unwrap();

    for sys in [
        assemble_multitraj(&data).unwrap(),
        assemble_singletraj(data.spec(), &data.trajectories()[0]).unwrap(),
        assemble_ensemble(&EnsembleDataset::from_trajectories(&data)).unwrap(),
    ] {
        for j in 0..3 {
            let b_sum: f64 = (0..3).map(|k| sys.b.get(j, k)).sum();
            let a_sum: f64 = (0..3).map(|c| sys.a.get(j, c)).sum();
            assert!(
                (b_sum - a_sum).abs() < 1e-13,
                "row {j}: Σ_k b = {b_sum} vs A·1 = {a_sum}"
            );
        }
    }
}

#[test]
fn deterministic_prefix_contributions_are_one_hot_outer_products() {
    // move-to-next, constant start, L = 2: the two transitions contribute
    // e_0e_0^⊤ and e_1e_1^⊤ to A, and e_0e_1^⊤, e_1e_2^⊤ to b.
    let spec = ModelSpec::new(3, 4, 1).unwrap();
    let t = LocalTransitionMatrix::move_to_next(3);
    let policy = RngPolicy::new(1);
    let x0 = Configuration::constant(&spec, 0).unwrap();
    let traj = simulate_trajectory(&spec, &t, &x0, 2, &mut policy.trajectory_stream(0));
    let sys = trajectory_system(&spec, &traj).unwrap();
    for j in 0..3 {
        for c in 0..3 {
            let want_a = if j == c && j < 2 { 0.5 } else { 0.0 };
            assert_eq!(sys.a.get(j, c), want_a);
            let want_b = if c == j + 1 && j < 2 { 0.5 } else { 0.0 };
            assert_eq!(sys.b.get(j, c), want_b);
        }
    }
}

#[test]
fn assembly_is_invariant_to_trajectory_order() {
    let spec = ModelSpec::new(2, 4, 1).unwrap();
    let policy = RngPolicy::new(7);
    let mut rng = policy.trajectory_stream(500);
    let t = random_ergodic_t(2, &mut rng);
    let trajectories: Vec<_> = (0..9)
        .map(|m| {
            let x0 = Configuration::decode(&spec, (next_unit(&mut rng) * 16.0) as usize % 16);
            simulate_trajectory(&spec, &t, &x0, 5, &mut policy.trajectory_stream(m))
        })
        .collect();
    let forward = TrajectoryDataset::new(spec, trajectories.clone()).unwrap();
    let mut reversed_trajs = trajectories;
    reversed_trajs.reverse();
    let reversed = TrajectoryDataset::new(spec, reversed_trajs).unwrap();

    let sys_f = assemble_multitraj(&forward).unwrap();
    let sys_r = assemble_multitraj(&reversed).unwrap();
    assert!(sys_f.a.sub(&sys_r.a).max_abs() < 1e-13);
    assert!(sys_f.b.sub(&sys_r.b).max_abs() < 1e-13);
}

#[test]
fn empirical_assemblies_concentrate_on_exact_moments() {
    // Multi-trajectory: per-entry 3.5σ bands from the across-trajectory
    // spread. Ensemble (identity view of the same draws): relative
    // Frobenius distance, since its entries are products of means.
    let spec = ModelSpec::new(3, 3, 1).unwrap();
    let s = spec.state_count().unwrap();
    let mu0 = vec![1.0 / s as f64; s];
    let l = 4usize;
    let m = 2000usize;
    let policy = RngPolicy::new(314);
    let mut t_rng = policy.trajectory_stream(1_000_000);
    let t = random_ergodic_t(3, &mut t_rng);

    let trajectories: Vec<_> = (0..m)
        .map(|i| {
            let mut rng = policy.trajectory_stream(i as u64);
            let x0 = Configuration::decode(&spec, (next_unit(&mut rng) * s as f64) as usize % s);
            simulate_trajectory(&spec, &t, &x0, l, &mut rng)
        })
        .collect();
    let data = TrajectoryDataset::new(spec, trajectories).unwrap();

    let exact = exact_normal_system(&spec, &t, &mu0, l, ExactMode::Trajectory).unwrap();
    let per: Vec<_> = data
        .trajectories()
        .iter()
        .map(|traj| trajectory_system(&spec, traj).unwrap())
        .collect();
    let combined = assemble_multitraj(&data).unwrap();
    for r in 0..3 {
        for c in 0..3 {
            for (pick_a, emp, exa) in [
                (true, combined.a.get(r, c), exact.a.get(r, c)),
                (false, combined.b.get(r, c), exact.b.get(r, c)),
            ] {
                let mean = emp;
                let var = per
                    .iter()
                    .map(|sys| {
                        let v = if pick_a { sys.a.get(r, c) } else { sys.b.get(r, c) };
                        (v - mean) * (v - mean)
                    })
                    .sum::<f64>()
                    / (m - 1) as f64;
                let band = 3.5 * (var / m as f64).sqrt() + 1e-12;
                assert!(
                    (emp - exa).abs() <= band,
                    "entry ({r},{c}) of {}: |{emp} − {exa}| > {band}",
                    if pick_a { "A" } else { "b" }
                );
            }
        }
    }

    let ens_emp = assemble_ensemble(&EnsembleDataset::from_trajectories(&data)).unwrap();
    let ens_exact = exact_normal_system(&spec, &t, &mu0, l, ExactMode::Ensemble).unwrap();
    let rel_a = ens_emp.a.sub(&ens_exact.a).frobenius() / ens_exact.a.frobenius();
    let rel_b = ens_emp.b.sub(&ens_exact.b).frobenius() / ens_exact.b.frobenius();
    assert!(rel_a < 0.05, "ensemble A deviates by {rel_a}");
    assert!(rel_b < 0.05, "ensemble b deviates by {rel_b}");
}

#[test]
fn time_average_of_one_long_run_approaches_the_stationary_system() {
    // A_L from a single ergodic run converges to the stationary A_∞; the
    // deviation should shrink roughly like L^{-1/2}.
    let spec = ModelSpec::new(3, 4, 1).unwrap();
    let t = LocalTransitionMatrix::from_rows_normalized(&[
        vec![0.4719, 0.0315, 0.4966],
        vec![0.1385, 0.6118, 0.2497],
        vec![0.2895, 0.4999, 0.2107],
    ])
    .unwrap();
    let p = global_transition_matrix(&spec, &t).unwrap();
    let pi = stationary_distribution(p.matrix(), 1e-13, 1_000_000).unwrap();
    let stationary = exact_normal_system(&spec, &t, &pi.weights, 1, ExactMode::Trajectory).unwrap();

    let policy = RngPolicy::new(2718);
    let mut errs = [Vec::new(), Vec::new()];
    for seed_idx in 0..5u64 {
        for (slot, l) in [(0usize, 400usize), (1, 6400)] {
            let mut rng = policy.trajectory_stream(seed_idx * 2 + slot as u64);
            let x0 = Configuration::decode(&spec, (next_unit(&mut rng) * 81.0) as usize % 81);
            let traj = simulate_trajectory(&spec, &t, &x0, l, &mut rng);
            let sys = assemble_singletraj(&spec, &traj).unwrap();
            let err = sys.a.sub(&stationary.a).frobenius() / stationary.a.frobenius();
            errs[slot].push(err);
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let short = median(&mut errs[0]);
    let long = median(&mut errs[1]);
    assert!(long < 0.08, "long-run deviation {long} too large");
    assert!(long < 0.7 * short, "16× data should clearly shrink the error: {long} vs {short}");
}

#[test]
fn ensemble_bound_dominates_multi_bound_and_both_shrink_in_epsilon_delta() {
    let (k, frob, lambda) = (3usize, 1.1f64, 0.25f64);
    let mut last_eps = f64::INFINITY;
    for eps in [0.05, 0.1, 0.2] {
        let multi =
            sample_size_bound(BoundRegime::MultiTrajectory, k, frob, lambda, eps, 0.05).unwrap();
        let ens = sample_size_bound(
            BoundRegime::Ensemble { sites: 8, transitions: 20 },
            k,
            frob,
            lambda,
            eps,
            0.05,
        )
        .unwrap();
        // 96K² ≥ 24K² term-wise and ln(12NLK/δ) ≥ ln(6K²/δ) here.
        assert!(ens.m_required >= multi.m_required);
        // Monotone nonincreasing in ε.
        assert!(multi.m_required < last_eps);
        last_eps = multi.m_required;
    }
    let mut last_delta = f64::INFINITY;
    for delta in [0.01, 0.05, 0.25] {
        let multi =
            sample_size_bound(BoundRegime::MultiTrajectory, k, frob, lambda, 0.1, delta).unwrap();
        assert!(multi.m_required < last_delta);
        last_delta = multi.m_required;
    }
    // δ close to 1: the logarithms stay positive and the bound finite.
    let edge =
        sample_size_bound(BoundRegime::MultiTrajectory, k, frob, lambda, 0.1, 0.999).unwrap();
    assert!(edge.m_required.is_finite() && edge.m_required > 0.0);
}

#[test]
fn stationary_hessians_are_rank_deficient_for_k3() {
    let spec = ModelSpec::new(3, 3, 1).unwrap();
    let policy = RngPolicy::new(5150);
    let mut rng = policy.trajectory_stream(0);
    for _ in 0..3 {
        let t = random_ergodic_t(3, &mut rng);
        let report = stationary_identifiability_hessian(&spec, &t).unwrap();
        assert!(report.rank <= 2, "two rank-one terms cannot exceed rank 2");
        assert!(!report.identifiable, "K=3 can never be identified from stationary data");
    }
}

#[test]
fn constructed_moment_pairs_hit_both_hessian_ranks() {
    // K = 2, p ≠ E[φ]: rank 2 (the only identifiable stationary case).
    let distinct = hessian_from_moments(&[0.7, 0.3], &[0.55, 0.45]).unwrap();
    assert_eq!(distinct.rank, 2);
    assert!(distinct.identifiable);
    // p = E[φ] forces rank 1 for every K.
    let collapsed = hessian_from_moments(&[0.7, 0.3], &[0.7, 0.3]).unwrap();
    assert_eq!(collapsed.rank, 1);
    assert!(!collapsed.identifiable);
}
