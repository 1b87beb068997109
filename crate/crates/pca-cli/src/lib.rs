//! Dataset generation, file formats, reports, experiment harness, and the
//! `pca` command-line front end.
//!
//! The numerical core lives in [`pca_core`]; this crate adds everything that
//! touches the operating system: random dataset synthesis, CSV/binary
//! serialization, JSON reports, TOML-configured experiments, and the CLI
//! that ties them together.
//!
//! External conventions (all user-facing I/O):
//! * symbols are **1-based** in files and reports (`1..=K`), while the
//!   library API stays 0-based;
//! * floats in CSV artifacts carry 17 significant digits so parsing them
//!   back is lossless;
//! * every command is deterministic given its flags — the master seed is
//!   part of the flag set, never ambient.

pub mod cli;
pub mod data;
pub mod experiments;
pub mod formats;
pub mod report;

pub use data::{delink_to_ensemble, generate_multitraj, DataError, InitDistribution};
pub use formats::{read_dataset, write_dataset, Dataset, DatasetHeader, Format, FORMAT_VERSION};
