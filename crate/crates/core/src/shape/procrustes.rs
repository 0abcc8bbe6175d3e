//! Generalized Procrustes mean under rigid motions (rotation and translation,
//! no scaling: absolute size is what a design model is about).

use nalgebra::Point3;

use super::align::{fit_rigid, residual};
use super::{check_topology, ParameterizedMesh};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProcrustesOptions {
    /// Stop once no mean vertex moves more than this between iterations (m).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ProcrustesOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 100 }
    }
}

#[derive(Clone, Debug)]
pub struct ProcrustesFit {
    /// Mean shape, vertex centroid at the origin.
    pub mean: ParameterizedMesh,
    /// Inputs superimposed onto `mean`.
    pub aligned: Vec<ParameterizedMesh>,
    /// Sum of squared residuals to the current mean after each alignment pass;
    /// entry 0 is the pass against the initial mean.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Full Procrustes mean of corresponded meshes; see [`procrustes_fit`].
pub fn procrustes_mean(meshes: &[ParameterizedMesh]) -> Result<ParameterizedMesh> {
    procrustes_fit(meshes, &ProcrustesOptions::default()).map(|f| f.mean)
}

/// Alternates averaging and rigid superimposition, starting from the first
/// mesh (centered), until the mean settles or the iteration cap is hit.
pub fn procrustes_fit(meshes: &[ParameterizedMesh], options: &ProcrustesOptions) -> Result<ProcrustesFit> {
    let first = meshes.first().ok_or(Error::EmptyInput)?;
    check_topology(meshes)?;

    let start = first.centered();
    if meshes.iter().all(|m| m.vertices() == first.vertices()) {
        return Ok(ProcrustesFit {
            aligned: vec![start.clone(); meshes.len()],
            mean: start,
            objective_history: vec![0.0],
            iterations: 0,
            converged: true,
        });
    }

    let mut mean = start;
    let (mut aligned, objective) = align_all(meshes, &mean)?;
    let mut history = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let next = average(&aligned).centered();
        let shift = next
            .vertices()
            .iter()
            .zip(mean.vertices())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let (next_aligned, objective) = align_all(meshes, &next)?;
        mean = next;
        aligned = next_aligned;
        history.push(objective);
        if shift < options.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "Procrustes mean did not converge within {} iterations",
            options.max_iterations
        );
    }
    Ok(ProcrustesFit { mean, aligned, objective_history: history, iterations, converged })
}

fn align_all(meshes: &[ParameterizedMesh], mean: &ParameterizedMesh) -> Result<(Vec<ParameterizedMesh>, f64)> {
    let aligned = meshes
        .iter()
        .map(|m| Ok(fit_rigid(m.vertices(), mean.vertices())?.apply_mesh(m)))
        .collect::<Result<Vec<_>>>()?;
    let objective = aligned.iter().map(|a| residual(a, mean)).sum();
    Ok((aligned, objective))
}

/// Vertexwise running mean (exact when all inputs agree).
fn average(meshes: &[ParameterizedMesh]) -> ParameterizedMesh {
    let mut acc: Vec<Point3<f64>> = meshes[0].vertices().to_vec();
    for (k, m) in meshes.iter().enumerate().skip(1) {
        let w = 1.0 / (k + 1) as f64;
        for (a, v) in acc.iter_mut().zip(m.vertices()) {
            *a += (v - *a) * w;
        }
    }
    meshes[0].with_vertices(acc)
}
