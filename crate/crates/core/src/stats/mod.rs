//! Shape statistics: PCA shape space, measurement-to-shape regression and a
//! Gaussian model of the measurement population.

mod feature;
mod gaussian;
mod pca;

pub use feature::{feature_fit, synthesize, FeatureMap, FeatureMode, ShapeSynthesizer};
pub use gaussian::{gaussian_fit, gaussian_sample, level_set_sample, GaussianModel};
pub use pca::{pca_fit, pca_project, pca_reconstruct, ShapeBasis};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything fitted for extrapolation, as one JSON document.
///
/// Matrices are stored as `{"rows", "cols", "data"}` with `data` in row-major
/// order. `seed` records the generator seed used for any sampling performed
/// with these models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub basis: ShapeBasis,
    pub feature_map: FeatureMap,
    pub gaussian: GaussianModel,
    pub seed: u64,
}

/// Row-major dense matrix for JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct MatrixData {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixData {
    fn from(m: &DMatrix<f64>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), data: m.transpose().as_slice().to_vec() }
    }
}

impl MatrixData {
    pub fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(Error::InvalidParameter(format!(
                "matrix {}x{} with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}
