//! Property-based invariants: encodings, stochasticity closure, shift
//! invariance of the global matrix, and determinism of assembly order.

use proptest::prelude::*;

use pca_core::dynamics::{global_transition_matrix, local_from_global, propagate_distribution};
use pca_core::inference::{assemble_multitraj, TrajectoryDataset};
use pca_core::model::{local_empirical, simulate_trajectory, site_distribution};
use pca_core::{Configuration, LocalTransitionMatrix, ModelSpec, RngPolicy};

/// Specs small enough to enumerate quickly: K^N ≤ 81.
fn small_spec() -> impl Strategy<Value = ModelSpec> {
    (2usize..=3, 1usize..=4, 0usize..=2).prop_map(|(k, n, n_v)| ModelSpec::new(k, n, n_v).unwrap())
}

/// Row-stochastic T with strictly positive entries.
fn positive_t(k: usize) -> impl Strategy<Value = LocalTransitionMatrix> {
    proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, k), k)
        .prop_map(|rows| LocalTransitionMatrix::from_rows_normalized(&rows).unwrap())
}

proptest! {
    #[test]
    fn encode_decode_round_trip(spec in small_spec(), raw in 0usize..81) {
        let s = spec.state_count().unwrap();
        let code = raw % s;
        let x = Configuration::decode(&spec, code);
        prop_assert_eq!(x.encode(&spec), code);
        prop_assert_eq!(x.len(), spec.node_count());
    }

    #[test]
    fn local_empirical_is_a_histogram(spec in small_spec(), raw in 0usize..81, site in 0usize..4) {
        let s = spec.state_count().unwrap();
        let x = Configuration::decode(&spec, raw % s);
        let site = site % spec.node_count();
        let phi = local_empirical(&spec, &x, site);
        let sum: f64 = phi.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        let v = spec.neighborhood_size() as f64;
        for &w in phi.weights() {
            prop_assert!(w >= 0.0);
            // Every weight is an integer multiple of 1/|V|.
            let scaled = w * v;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn site_laws_and_global_rows_are_stochastic(
        spec in small_spec(),
        t in positive_t(2).boxed().prop_union(positive_t(3).boxed()),
    ) {
        prop_assume!(t.alphabet_size() == spec.alphabet_size());
        let p = global_transition_matrix(&spec, &t).unwrap();
        let s = spec.state_count().unwrap();
        for x in 0..s {
            let row = p.matrix().row(x);
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
        // Site laws are convex combinations of T's rows.
        let x = Configuration::decode(&spec, s / 2);
        for site in 0..spec.node_count() {
            let law = site_distribution(&local_empirical(&spec, &x, site), &t);
            let sum: f64 = law.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn global_matrix_is_shift_invariant(
        spec in small_spec(),
        t in positive_t(2).boxed().prop_union(positive_t(3).boxed()),
    ) {
        prop_assume!(t.alphabet_size() == spec.alphabet_size());
        let p = global_transition_matrix(&spec, &t).unwrap();
        let s = spec.state_count().unwrap();
        for x in 0..s {
            let xr = Configuration::decode(&spec, x).rotate().encode(&spec);
            for y in 0..s {
                let yr = Configuration::decode(&spec, y).rotate().encode(&spec);
                let diff = (p.matrix().get(x, y) - p.matrix().get(xr, yr)).abs();
                prop_assert!(diff < 1e-12, "P({x},{y}) ≠ P(rot, rot): {diff}");
            }
        }
    }

    #[test]
    fn round_trip_recovers_random_t(
        spec in small_spec(),
        t in positive_t(2).boxed().prop_union(positive_t(3).boxed()),
    ) {
        prop_assume!(t.alphabet_size() == spec.alphabet_size());
        let p = global_transition_matrix(&spec, &t).unwrap();
        let back = local_from_global(&p).unwrap();
        for r in 0..t.alphabet_size() {
            for c in 0..t.alphabet_size() {
                prop_assert!((back.get(r, c) - t.get(r, c)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn propagation_preserves_mass(
        spec in small_spec(),
        t in positive_t(2).boxed().prop_union(positive_t(3).boxed()),
        start in 0usize..81,
    ) {
        prop_assume!(t.alphabet_size() == spec.alphabet_size());
        let p = global_transition_matrix(&spec, &t).unwrap();
        let s = spec.state_count().unwrap();
        let mut mu0 = vec![0.0; s];
        mu0[start % s] = 1.0;
        let path = propagate_distribution(&p, &mu0, 4).unwrap();
        prop_assert_eq!(path.len(), 5);
        for mu in &path {
            let sum: f64 = mu.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(mu.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn simulation_is_deterministic_per_seed(seed in 0u64..1_000, m in 0u64..8) {
        let spec = ModelSpec::new(3, 4, 1).unwrap();
        let t = LocalTransitionMatrix::move_to_next(3);
        let x0 = Configuration::constant(&spec, 0).unwrap();
        let a = simulate_trajectory(
            &spec, &t, &x0, 12, &mut RngPolicy::new(seed).trajectory_stream(m),
        );
        let b = simulate_trajectory(
            &spec, &t, &x0, 12, &mut RngPolicy::new(seed).trajectory_stream(m),
        );
        prop_assert_eq!(a, b);
    }

    #[test]
    fn multitraj_assembly_ignores_order(perm_seed in 0u64..64) {
        let spec = ModelSpec::new(2, 3, 1).unwrap();
        let policy = RngPolicy::new(17);
        let mut t_rng = policy.trajectory_stream(999);
        let t = LocalTransitionMatrix::random_stochastic(2, &mut t_rng);
        let x0 = Configuration::constant(&spec, 0).unwrap();
        let mut trajectories: Vec<_> = (0..6)
            .map(|m| simulate_trajectory(&spec, &t, &x0, 4, &mut policy.trajectory_stream(m)))
            .collect();
        let base = assemble_multitraj(
            &TrajectoryDataset::new(spec, trajectories.clone()).unwrap(),
        )
        .unwrap();
        // A deterministic pseudo-shuffle driven by the seed.
        let n = trajectories.len();
        for i in 0..n {
            let j = ((perm_seed as usize).wrapping_mul(31).wrapping_add(i * 7)) % n;
            trajectories.swap(i, j);
        }
        let shuffled =
            assemble_multitraj(&TrajectoryDataset::new(spec, trajectories).unwrap()).unwrap();
        prop_assert!(base.a.sub(&shuffled.a).max_abs() < 1e-13);
        prop_assert!(base.b.sub(&shuffled.b).max_abs() < 1e-13);
    }
}
