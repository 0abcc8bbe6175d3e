use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pca::{pca_reconstruct, ShapeBasis};
use super::MatrixData;
use crate::cover::ParamPoint;
use crate::error::{Error, Result};
use crate::linalg::min_norm_solve;
use crate::shape::{Extrapolator, ParameterizedMesh};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// `w = F·[p; 1]`.
    #[default]
    Affine,
    /// `w = F·p`, no offset column.
    Linear,
}

/// Least-squares map from measurement vectors to PCA weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FeatureMapData", try_from = "FeatureMapData")]
pub struct FeatureMap {
    matrix: DMatrix<f64>,
    mode: FeatureMode,
}

impl FeatureMap {
    /// `p × (d + 1)` in affine mode (last column is the offset), `p × d`
    /// in linear mode.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn input_dim(&self) -> usize {
        match self.mode {
            FeatureMode::Affine => self.matrix.ncols() - 1,
            FeatureMode::Linear => self.matrix.ncols(),
        }
    }

    pub fn apply(&self, point: &ParamPoint) -> Result<DVector<f64>> {
        if point.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: point.dim() });
        }
        Ok(&self.matrix * augment(point, self.mode))
    }
}

fn augment(point: &ParamPoint, mode: FeatureMode) -> DVector<f64> {
    match mode {
        FeatureMode::Affine => DVector::from_iterator(
            point.dim() + 1,
            point.coords.iter().copied().chain(std::iter::once(1.0)),
        ),
        FeatureMode::Linear => DVector::from_column_slice(&point.coords),
    }
}

/// Minimum-norm least-squares fit of `W ≈ F·[P; 1]` over all subjects.
pub fn feature_fit(points: &[ParamPoint], weights: &[DVector<f64>], mode: FeatureMode) -> Result<FeatureMap> {
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: weights.len() });
    }
    let d = points.first().ok_or(Error::EmptyInput)?.dim();
    if points.len() < d + 1 {
        return Err(Error::Underdetermined { needed: d + 1, got: points.len() });
    }
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
    }
    let p = weights[0].len();
    if let Some(w) = weights.iter().find(|w| w.len() != p) {
        return Err(Error::DimensionMismatch { expected: p, found: w.len() });
    }
    let rows: Vec<DVector<f64>> = points.iter().map(|pt| augment(pt, mode)).collect();
    let q = rows[0].len();
    let n = points.len();
    let design = DMatrix::from_fn(n, q, |r, c| rows[r][c]);
    let targets = DMatrix::from_fn(n, p, |r, c| weights[r][c]);
    let solution = min_norm_solve(&design, &targets, 1e-13);
    Ok(FeatureMap { matrix: solution.transpose(), mode })
}

/// Shape for a parameter-space point: `A·F·[p; 1] + μ`.
pub fn synthesize(basis: &ShapeBasis, fmap: &FeatureMap, point: &ParamPoint) -> Result<ParameterizedMesh> {
    let w = fmap.apply(point)?;
    Ok(pca_reconstruct(basis, &w)?.with_id(point.id))
}

/// A fitted shape space plus feature map, usable as a design-model
/// extrapolator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSynthesizer {
    pub basis: ShapeBasis,
    pub feature_map: FeatureMap,
}

impl Extrapolator for ShapeSynthesizer {
    fn synthesize(&self, points: &[ParamPoint]) -> Result<Vec<ParameterizedMesh>> {
        points.iter().map(|p| synthesize(&self.basis, &self.feature_map, p)).collect()
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct FeatureMapData {
    mode: FeatureMode,
    input_dim: usize,
    matrix: MatrixData,
}

impl From<FeatureMap> for FeatureMapData {
    fn from(f: FeatureMap) -> Self {
        Self { mode: f.mode, input_dim: f.input_dim(), matrix: MatrixData::from(&f.matrix) }
    }
}

impl TryFrom<FeatureMapData> for FeatureMap {
    type Error = Error;

    fn try_from(d: FeatureMapData) -> Result<Self> {
        let matrix = d.matrix.into_matrix()?;
        let map = Self { matrix, mode: d.mode };
        if map.matrix.ncols() == 0 && d.mode == FeatureMode::Affine || map.input_dim() != d.input_dim {
            return Err(Error::InvalidParameter("inconsistent feature map dimensions".into()));
        }
        Ok(map)
    }
}
