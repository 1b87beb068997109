//! Probabilistic cellular automata (PCA) on cyclic graphs.
//!
//! The model: `N` sites on a cycle carry symbols from an alphabet of size
//! `K`. At every step all sites update simultaneously and independently.
//! Site `n` looks at its neighborhood `V_n` (itself plus `n_v` sites on each
//! side, with wraparound duplicates removed), forms the empirical
//! distribution `φ_n` of the symbols it sees, and draws its next symbol from
//! the row vector `φ_n · T`, where `T` is a `K×K` row-stochastic *local
//! transition matrix*. The induced chain on the `K^N` configurations has a
//! global transition matrix `P(x, y) = Π_n (φ_n(x) · T)(y_n)`.
//!
//! The crate has three layers:
//!
//! * [`model`] — the update kernel itself: neighborhoods, empirical
//!   distributions, single steps, and trajectory simulation with
//!   reproducible per-trajectory random streams.
//! * [`dynamics`] — exact finite-state analysis: the global matrix, the 1-1
//!   map between `P` and `T`, periodicity/irreducibility, synchronization
//!   and ergodicity predicates, stationary distributions, total-variation
//!   diagnostics, and Lipschitz perturbation bounds.
//! * [`inference`] — estimation of `T` from data: normal systems for
//!   multi-trajectory, single-trajectory, and ensemble regimes,
//!   nonnegative least squares with row normalization, identifiability
//!   diagnostics, asymptotic covariance, and non-asymptotic sample-size
//!   bounds.
//!
//! Sites and symbols are indexed from 0 in this API; file formats and
//! display follow the 1-based convention of the literature (symbols
//! `1..=K`), and conversions happen at the I/O boundary only.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded or wasm targets.
//!
//! # Example
//!
//! ```
//! use pca_core::{ModelSpec, LocalTransitionMatrix, RngPolicy};
//! use pca_core::model::simulate_trajectory;
//! use pca_core::dynamics::{global_transition_matrix, stationary_distribution};
//!
//! let spec = ModelSpec::new(2, 2, 1).unwrap();
//! let t = LocalTransitionMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
//!
//! // Exact analysis: the 4x4 global matrix and its stationary distribution.
//! let p = global_transition_matrix(&spec, &t).unwrap();
//! let pi = stationary_distribution(p.matrix(), 1e-13, 1_000_000).unwrap();
//! assert!((pi.weights[0] - 10.0 / 21.0).abs() < 1e-10);
//!
//! // Simulation: reproducible under the same (seed, trajectory index).
//! let policy = RngPolicy::new(7);
//! let x0 = pca_core::Configuration::from_symbols(&spec, &[0, 1]).unwrap();
//! let traj = simulate_trajectory(&spec, &t, &x0, 50, &mut policy.trajectory_stream(0));
//! assert_eq!(traj.len(), 51);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

mod error;

pub mod dynamics;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod rng;

pub use error::Error;
pub use model::{Configuration, EmpiricalDistribution, LocalTransitionMatrix, ModelSpec, Symbol};
pub use rng::RngPolicy;
