use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::MatrixData;
use crate::cover::ParamPoint;
use crate::error::{Error, Result};

/// Multivariate normal over measurement vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "GaussianData", try_from = "GaussianData")]
pub struct GaussianModel {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianModel {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if covariance.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, found: covariance.nrows() });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Gaussian parameter".into()));
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::InvalidParameter("covariance is not symmetric".into()));
        }
        Ok(Self { mean, covariance })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// Squared Mahalanobis distance `(x − μ)ᵀ Σ⁻¹ (x − μ)`.
    pub fn mahalanobis(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        let chol = self.covariance.clone().cholesky().ok_or(Error::DegenerateEllipsoid)?;
        let diff = x - &self.mean;
        Ok(diff.dot(&chol.solve(&diff)))
    }

    /// Sum of per-point log densities.
    pub fn log_likelihood(&self, points: &[DVector<f64>]) -> Result<f64> {
        let chol = self.covariance.clone().cholesky().ok_or(Error::DegenerateEllipsoid)?;
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let d = self.dim() as f64;
        let norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det);
        points.iter().try_fold(0.0, |acc, x| {
            self.check(x)?;
            let diff = x - &self.mean;
            Ok(acc + norm - 0.5 * diff.dot(&chol.solve(&diff)))
        })
    }
}

/// Maximum-likelihood fit (divisor `n`).
pub fn gaussian_fit(points: &[ParamPoint]) -> Result<GaussianModel> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: points.len() });
    }
    let d = points[0].dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
    }
    let n = points.len() as f64;
    let mut mean = DVector::zeros(d);
    for p in points {
        mean += DVector::from_column_slice(&p.coords);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for p in points {
        let diff = DVector::from_column_slice(&p.coords) - &mean;
        cov.ger(1.0, &diff, &diff, 1.0);
    }
    cov /= n;
    GaussianModel::new(mean, cov)
}

/// `count` draws via the symmetric square root of the covariance. Allows a
/// singular (PSD) covariance.
pub fn gaussian_sample(model: &GaussianModel, count: usize, seed: u64) -> Result<Vec<ParamPoint>> {
    let eig = model.covariance.clone().symmetric_eigen();
    let scale = model.covariance.amax().max(f64::MIN_POSITIVE);
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -1e-10 * scale.max(1.0)) {
        return Err(Error::NotPsd(bad));
    }
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|i| {
            let z = DVector::from_fn(model.dim(), |_, _| StandardNormal.sample(&mut rng));
            let x = &model.mean + &root * z;
            ParamPoint::new(i as u64, x.as_slice().to_vec())
        })
        .collect())
}

/// `count` points uniformly distributed in direction on the ellipsoid
/// `(x − μ)ᵀ Σ⁻¹ (x − μ) = c²`.
pub fn level_set_sample(model: &GaussianModel, c: f64, count: usize, seed: u64) -> Result<Vec<ParamPoint>> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!("level {c} must be non-negative")));
    }
    let chol = model.covariance.clone().cholesky().ok_or(Error::DegenerateEllipsoid)?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = DVector::from_fn(model.dim(), |_, _| StandardNormal.sample(&mut rng));
        let norm = u.norm();
        if norm == 0.0 {
            continue;
        }
        let x = &model.mean + &l * u * (c / norm);
        out.push(ParamPoint::new(out.len() as u64, x.as_slice().to_vec()));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
pub(crate) struct GaussianData {
    mean: Vec<f64>,
    covariance: MatrixData,
}

impl From<GaussianModel> for GaussianData {
    fn from(g: GaussianModel) -> Self {
        Self { mean: g.mean.as_slice().to_vec(), covariance: MatrixData::from(&g.covariance) }
    }
}

impl TryFrom<GaussianData> for GaussianModel {
    type Error = Error;

    fn try_from(d: GaussianData) -> Result<Self> {
        GaussianModel::new(DVector::from_vec(d.mean), d.covariance.into_matrix()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> GaussianModel {
        GaussianModel::new(
            DVector::from_vec(vec![1.0, -2.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 1.2, 1.2, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn fit_matches_hand_computation() {
        let pts: Vec<_> = [[0.0, 0.0], [2.0, 0.0], [0.0, 4.0], [2.0, 4.0]]
            .iter()
            .enumerate()
            .map(|(i, c)| ParamPoint::new(i as u64, c.to_vec()))
            .collect();
        let g = gaussian_fit(&pts).unwrap();
        assert_eq!(g.mean().as_slice(), &[1.0, 2.0]);
        assert!((g.covariance() - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0])).amax() < 1e-15);
        assert!(gaussian_fit(&pts[..1]).is_err());
    }

    #[test]
    fn level_set_points_lie_on_ellipsoid() {
        let g = model();
        for p in level_set_sample(&g, 0.0, 3, 1).unwrap() {
            assert_eq!(p.coords, g.mean().as_slice());
        }
        for p in level_set_sample(&g, 2.5, 50, 3).unwrap() {
            let m = g.mahalanobis(&DVector::from_vec(p.coords)).unwrap();
            assert!((m.sqrt() - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let g = model();
        assert_eq!(gaussian_sample(&g, 5, 9).unwrap(), gaussian_sample(&g, 5, 9).unwrap());
        assert_ne!(gaussian_sample(&g, 5, 9).unwrap(), gaussian_sample(&g, 5, 10).unwrap());
    }

    #[test]
    fn degenerate_covariances() {
        let zero = GaussianModel::new(DVector::from_vec(vec![0.3, 0.1]), DMatrix::zeros(2, 2)).unwrap();
        for p in gaussian_sample(&zero, 4, 2).unwrap() {
            assert_eq!(p.coords, vec![0.3, 0.1]);
        }
        let singular = GaussianModel::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]))
            .unwrap();
        assert_eq!(level_set_sample(&singular, 1.0, 3, 0).unwrap_err(), Error::DegenerateEllipsoid);
        // singular PSD still samples, along the line x = y
        for p in gaussian_sample(&singular, 10, 0).unwrap() {
            assert!((p.coords[0] - p.coords[1]).abs() < 1e-9);
        }
        let indefinite =
            GaussianModel::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(matches!(gaussian_sample(&indefinite, 1, 0).unwrap_err(), Error::NotPsd(_)));
    }

    #[test]
    fn log_likelihood_standard_normal() {
        let g = GaussianModel::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        let ll = g.log_likelihood(&[DVector::from_vec(vec![0.0])]).unwrap();
        assert!((ll + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn serde_round_trip() {
        let g = model();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GaussianModel>(&json).unwrap(), g);
    }
}
