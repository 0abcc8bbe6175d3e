//! The JSON run report and held-out evaluation against it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sizecover_core::cover::{CandidateMode, CoverAlgorithm, ParamPoint, ToleranceBox};
use sizecover_core::Error as CoreError;

use crate::error::Result;
use crate::io::{read_json, write_json};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverParameters {
    pub candidates: CandidateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Approximation slack of the shifting run, `(1 + 1/l)^d − 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignModelInfo {
    pub file: String,
    /// Synthesized shapes averaged in because the box was sparse.
    pub substitutes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBox {
    pub center: Vec<f64>,
    pub side_lengths: Vec<f64>,
    pub member_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_model: Option<DesignModelInfo>,
}

impl ReportBox {
    pub fn tolerance_box(&self) -> Result<ToleranceBox> {
        Ok(ToleranceBox::new(self.center.clone(), self.side_lengths.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub n_points: usize,
    pub covered: usize,
    pub coverage: f64,
}

/// Exact optimum computed alongside a heuristic run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub algorithm: CoverAlgorithm,
    pub boxes: usize,
    pub covered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: CoverAlgorithm,
    pub parameters: CoverParameters,
    pub measurements: Vec<String>,
    pub tolerances: Vec<f64>,
    pub boxes: Vec<ReportBox>,
    pub n_points: usize,
    pub train_coverage: f64,
    pub uncovered_ids: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout: Option<HoldoutResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleResult>,
    pub seed: u64,
    /// Wall-clock seconds per stage; only recorded on request since they make
    /// reports differ between runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl RunReport {
    pub fn dim(&self) -> usize {
        self.tolerances.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Fraction of `points` inside at least one report box (closed boxes).
pub fn evaluate_holdout(report: &RunReport, points: &[ParamPoint]) -> Result<HoldoutResult> {
    if points.is_empty() {
        return Err(CoreError::EmptyInput.into());
    }
    let d = report.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(CoreError::DimensionMismatch { expected: d, found: p.dim() }.into());
    }
    let boxes = report.boxes.iter().map(ReportBox::tolerance_box).collect::<Result<Vec<_>>>()?;
    let covered = points.iter().filter(|p| boxes.iter().any(|b| b.contains(&p.coords))).count();
    Ok(HoldoutResult { n_points: points.len(), covered, coverage: covered as f64 / points.len() as f64 })
}
