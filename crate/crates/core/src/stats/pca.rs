use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::MatrixData;
use crate::error::{Error, Result};
use crate::linalg::left_singular;
use crate::shape::{check_topology, ParameterizedMesh, Topology};

/// Linear shape space `x = A·w + μ` over translation-free stacked vertex
/// coordinates `[x0, y0, z0, x1, ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ShapeBasisData", try_from = "ShapeBasisData")]
pub struct ShapeBasis {
    mean: DVector<f64>,
    basis: DMatrix<f64>,
    variances: Vec<f64>,
    topology: Arc<Topology>,
}

impl ShapeBasis {
    pub fn mean_shape(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `3V × p`, orthonormal columns.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Per-component variance of the training weights (divisor `n − 1`),
    /// descending.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn components(&self) -> usize {
        self.basis.ncols()
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }
}

/// Principal component analysis of a corresponded corpus.
///
/// Each mesh is translated so its centroid is at the origin, stacked into a
/// `3V` vector, and the centered data matrix is decomposed by SVD. Components
/// with numerically zero variance are dropped; of the rest the smallest
/// leading set whose cumulative variance reaches `variance_fraction` of the
/// total is kept. Each direction's largest-magnitude entry is made positive.
pub fn pca_fit(corpus: &[ParameterizedMesh], variance_fraction: f64) -> Result<ShapeBasis> {
    if corpus.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: corpus.len() });
    }
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance fraction {variance_fraction} outside (0, 1]"
        )));
    }
    check_topology(corpus)?;
    let n = corpus.len();
    let stacked: Vec<DVector<f64>> = corpus.iter().map(|m| m.centered().to_flat()).collect();
    let dim = stacked[0].len();

    let mut mean = stacked[0].clone();
    for (k, x) in stacked.iter().enumerate().skip(1) {
        mean += (x - &mean) / (k + 1) as f64;
    }
    let data = DMatrix::from_fn(dim, n, |r, c| stacked[c][r] - mean[r]);
    let (sigmas, u) = left_singular(&data, 1e-10);
    let kept = sigmas.len().min(n - 1);

    let variances: Vec<f64> = sigmas[..kept].iter().map(|s| s * s / (n - 1) as f64).collect();
    let total: f64 = variances.iter().sum();
    let mut p = 0;
    let mut cumulative = 0.0;
    while p < variances.len() && cumulative < variance_fraction * total * (1.0 - 1e-12) {
        cumulative += variances[p];
        p += 1;
    }

    let mut basis = DMatrix::zeros(dim, p);
    for j in 0..p {
        let mut col = u.column(j).into_owned();
        let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            col = -col;
        }
        basis.set_column(j, &col);
    }
    Ok(ShapeBasis {
        mean,
        basis,
        variances: variances[..p].to_vec(),
        topology: Arc::clone(corpus[0].topology()),
    })
}

/// PCA weights `Aᵀ(x − μ)` of the translation-free mesh.
pub fn pca_project(basis: &ShapeBasis, mesh: &ParameterizedMesh) -> Result<DVector<f64>> {
    let x = mesh.centered().to_flat();
    if x.len() != basis.mean.len() {
        return Err(Error::DimensionMismatch { expected: basis.mean.len(), found: x.len() });
    }
    Ok(basis.basis.tr_mul(&(x - &basis.mean)))
}

/// Mesh with vertex vector `A·w + μ` (id 0).
pub fn pca_reconstruct(basis: &ShapeBasis, weights: &DVector<f64>) -> Result<ParameterizedMesh> {
    if weights.len() != basis.components() {
        return Err(Error::DimensionMismatch { expected: basis.components(), found: weights.len() });
    }
    let flat = &basis.basis * weights + &basis.mean;
    ParameterizedMesh::from_flat(0, &flat, Arc::clone(&basis.topology))
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ShapeBasisData {
    vertex_count: usize,
    components: usize,
    faces: Vec<[usize; 3]>,
    landmarks: Vec<usize>,
    mean: Vec<f64>,
    basis: MatrixData,
    variances: Vec<f64>,
}

impl From<ShapeBasis> for ShapeBasisData {
    fn from(b: ShapeBasis) -> Self {
        Self {
            vertex_count: b.topology.vertex_count(),
            components: b.components(),
            faces: b.topology.faces().to_vec(),
            landmarks: b.topology.landmarks().to_vec(),
            mean: b.mean.as_slice().to_vec(),
            basis: MatrixData::from(&b.basis),
            variances: b.variances,
        }
    }
}

impl TryFrom<ShapeBasisData> for ShapeBasis {
    type Error = Error;

    fn try_from(d: ShapeBasisData) -> Result<Self> {
        let topology = Arc::new(Topology::new(d.vertex_count, d.faces, d.landmarks)?);
        let basis = d.basis.into_matrix()?;
        if d.mean.len() != 3 * d.vertex_count
            || basis.nrows() != d.mean.len()
            || basis.ncols() != d.components
            || d.variances.len() != d.components
        {
            return Err(Error::InvalidParameter("inconsistent shape basis dimensions".into()));
        }
        Ok(Self { mean: DVector::from_vec(d.mean), basis, variances: d.variances, topology })
    }
}
