//! JSON report types and full-precision CSV helpers.
//!
//! JSON is the machine-readable artifact of `pca analyze` / `pca infer`;
//! CSV matrices serialize row-major with 17 significant digits so a parsed
//! float is bit-identical to the written one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use pca_core::dynamics::PeriodReport;
use pca_core::inference::{ConstrainedSolution, Regime};
use pca_core::linalg::Mat;
use pca_core::ModelSpec;

use crate::data::DataError;

/// Formats a float with 17 significant digits (round-trip exact for f64).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a matrix as row-major CSV at full precision.
pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> Result<(), DataError> {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a numeric CSV matrix; `#`-prefixed and empty lines are skipped.
/// Used for `--T` inputs, so it accepts any float syntax Rust parses.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>, DataError> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = trimmed
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| DataError::Parse {
                    line: line_no,
                    message: format!("{:?} is not a float", cell.trim()),
                })
            })
            .collect::<Result<_, _>>()?;
        if let Some(first) = rows.first() as Option<&Vec<f64>> {
            if row.len() != first.len() {
                return Err(DataError::Parse {
                    line: line_no,
                    message: format!(
                        "row has {} entries, earlier rows have {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Parse { line: 1, message: "matrix file has no data rows".into() });
    }
    Ok(rows)
}

/// Model parameters as they appear in every JSON report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecReport {
    pub n: usize,
    pub k: usize,
    pub n_v: usize,
}

impl From<&ModelSpec> for SpecReport {
    fn from(spec: &ModelSpec) -> SpecReport {
        SpecReport { n: spec.node_count(), k: spec.alphabet_size(), n_v: spec.radius() }
    }
}

/// Analysis report: structural classification of the local matrix `T`,
/// the synchronization/ergodicity predicates, and (optionally) global
/// quantities.
///
/// The schema is stable: `spec`, `irreducible`, `period`, `classes`,
/// `ergodic`, `predicts_sync`, `pi`, `residual` are always present
/// (`pi`/`residual` are `null` unless stationary analysis ran). `classes`
/// lists `T`'s cyclic classes with 1-based symbols. Optional global fields
/// are omitted when not requested.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub spec: SpecReport,
    pub irreducible: bool,
    pub period: usize,
    pub classes: Vec<Vec<usize>>,
    pub ergodic: bool,
    pub predicts_sync: bool,
    pub pi: Option<Vec<f64>>,
    pub residual: Option<f64>,
    /// Per-site marginals of `pi` (each row a distribution over symbols).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<Vec<f64>>>,
    /// Dobrushin coefficient `τ(P^{ℓ0})` of the global chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Mixing exponent `ℓ0`: least power with strictly positive `P^{ℓ0}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell0: Option<usize>,
    /// Fitted geometric envelope `max-TV(t) ≈ C·ρᵗ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_rho: Option<f64>,
    /// The global matrix, row-major, when `--global` is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
}

impl AnalyzeReport {
    /// Base report from the structural analysis of `T`.
    pub fn structural(
        spec: &ModelSpec,
        period: &PeriodReport,
        ergodic: bool,
        predicts_sync: bool,
    ) -> AnalyzeReport {
        AnalyzeReport {
            spec: spec.into(),
            irreducible: period.irreducible,
            period: period.period,
            classes: period
                .cyclic_classes
                .iter()
                .map(|class| class.iter().map(|&s| s + 1).collect())
                .collect(),
            ergodic,
            predicts_sync,
            pi: None,
            residual: None,
            marginals: None,
            tau: None,
            ell0: None,
            fit_c: None,
            fit_rho: None,
            p: None,
        }
    }
}

/// Inference result: the estimate plus its identifiability evidence.
///
/// Schema: `regime`, `T_hat`, `lambda_min`, `residual`, `flags`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorReport {
    /// `"multi"`, `"single"`, or `"ensemble"`.
    pub regime: String,
    #[serde(rename = "T_hat")]
    pub t_hat: Vec<Vec<f64>>,
    pub lambda_min: f64,
    pub residual: f64,
    pub flags: EstimatorFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorFlags {
    /// `λ_min` exceeded the documented identifiability threshold.
    pub identifiable: bool,
    /// Every NNLS column solve reached its KKT tolerance.
    pub converged: bool,
    /// 1-based indices of rows that came back all-zero and were reset to
    /// uniform.
    pub degenerate_rows: Vec<usize>,
}

/// Flattens a [`ConstrainedSolution`] into its JSON form.
pub fn estimator_report(solution: &ConstrainedSolution) -> EstimatorReport {
    EstimatorReport {
        regime: regime_name(solution.regime).to_owned(),
        t_hat: mat_rows(solution.estimate.matrix()),
        lambda_min: solution.lambda_min,
        residual: solution.residual,
        flags: EstimatorFlags {
            identifiable: solution.identifiable,
            converged: solution.converged,
            degenerate_rows: solution.degenerate_rows.iter().map(|&r| r + 1).collect(),
        },
    }
}

/// External name of a data regime.
pub fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::MultiTrajectory => "multi",
        Regime::SingleTrajectory => "single",
        Regime::Ensemble => "ensemble",
    }
}

/// Copies a [`Mat`] into row vectors for serialization.
pub fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Serializes any report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| DataError::Parse {
        line: 0,
        message: format!("JSON serialization failed: {e}"),
    })?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[
            10.0 / 21.0,
            4.0 / 21.0,
            1.0 / 3.0,
            0.0,
            -9.0 / 16.0,
            1e-17,
            6.02214076e23,
        ] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} → {s} → {back}");
        }
    }

    #[test]
    fn matrix_csv_round_trips_bitwise() {
        let dir = std::env::temp_dir().join("pca-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.csv");
        let rows = vec![vec![0.5, 0.5], vec![1.0, 0.0], vec![1.0 / 3.0, 2.0 / 3.0]];
        write_matrix_csv(&path, &rows).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn matrix_csv_rejects_ragged_and_empty() {
        let dir = std::env::temp_dir().join("pca-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let ragged = dir.join("ragged.csv");
        std::fs::write(&ragged, "1.0,2.0\n3.0\n").unwrap();
        assert!(matches!(read_matrix_csv(&ragged).unwrap_err(), DataError::Parse { line: 2, .. }));
        let empty = dir.join("empty.csv");
        std::fs::write(&empty, "# only a comment\n").unwrap();
        assert!(read_matrix_csv(&empty).is_err());
    }

    #[test]
    fn analyze_report_serializes_the_stable_schema() {
        let spec = ModelSpec::new(2, 2, 1).unwrap();
        let report = AnalyzeReport::structural(
            &spec,
            &PeriodReport { irreducible: true, period: 1, cyclic_classes: vec![vec![0, 1]] },
            true,
            false,
        );
        let json = serde_json::to_value(&report).unwrap();
        for key in ["spec", "irreducible", "period", "classes", "ergodic", "predicts_sync", "pi", "residual"]
        {
            assert!(json.get(key).is_some(), "missing stable key {key}");
        }
        assert_eq!(json["classes"][0][0], 1, "classes are 1-based");
        assert!(json.get("p").is_none(), "optional fields omitted when unset");
    }
}
