//! Corresponded triangle meshes and the operations that move between shapes
//! and parameter-space points.
//!
//! All meshes of a corpus share one [`Topology`] (vertex count, faces and
//! landmark vertex indices), so vertex `i` of one subject corresponds to
//! vertex `i` of every other subject. Coordinates are in meters.

mod align;
mod design;
mod procrustes;

pub use align::{residual, rigid_align, Alignment, RigidTransform};
pub use design::{design_models, DesignModel, DesignOptions, Extrapolator};
pub use procrustes::{procrustes_fit, procrustes_mean, ProcrustesFit, ProcrustesOptions};

use nalgebra::{DVector, Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::cover::ParamPoint;
use crate::error::{Error, Result};

/// Connectivity and landmark indices shared by every mesh of a corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    landmarks: Vec<usize>,
}

impl Topology {
    pub fn new(vertex_count: usize, faces: Vec<[usize; 3]>, landmarks: Vec<usize>) -> Result<Self> {
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&v| v >= vertex_count)) {
            return Err(Error::InvalidMesh(format!(
                "face {f:?} references a vertex outside 0..{vertex_count}"
            )));
        }
        if let Some(&l) = landmarks.iter().find(|&&l| l >= vertex_count) {
            return Err(Error::InvalidLandmark { index: l, len: vertex_count });
        }
        Ok(Self { vertex_count, faces, landmarks })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn landmarks(&self) -> &[usize] {
        &self.landmarks
    }
}

/// A subject mesh in point-to-point correspondence with its corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterizedMesh {
    pub id: u64,
    vertices: Vec<Point3<f64>>,
    topology: Arc<Topology>,
}

impl ParameterizedMesh {
    pub fn new(id: u64, vertices: Vec<Point3<f64>>, topology: Arc<Topology>) -> Result<Self> {
        if vertices.len() != topology.vertex_count {
            return Err(Error::TopologyMismatch(format!(
                "mesh {id} has {} vertices, topology expects {}",
                vertices.len(),
                topology.vertex_count
            )));
        }
        if vertices.iter().any(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("mesh {id} has non-finite coordinates")));
        }
        Ok(Self { id, vertices, topology })
    }

    /// Builds a mesh from a flat `[x0, y0, z0, x1, ...]` vector.
    pub fn from_flat(id: u64, flat: &DVector<f64>, topology: Arc<Topology>) -> Result<Self> {
        if flat.len() != 3 * topology.vertex_count {
            return Err(Error::DimensionMismatch {
                expected: 3 * topology.vertex_count,
                found: flat.len(),
            });
        }
        let vertices = flat
            .as_slice()
            .chunks_exact(3)
            .map(|c| Point3::new(c[0], c[1], c[2]))
            .collect();
        Self::new(id, vertices, topology)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.topology.faces
    }

    pub fn landmarks(&self) -> &[usize] {
        &self.topology.landmarks
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Position of landmark number `l` (an index into the landmark list).
    pub fn landmark(&self, l: usize) -> Result<Point3<f64>> {
        let landmarks = &self.topology.landmarks;
        landmarks
            .get(l)
            .map(|&v| self.vertices[v])
            .ok_or(Error::InvalidLandmark { index: l, len: landmarks.len() })
    }

    pub fn same_topology(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.topology, &other.topology) || self.topology == other.topology
    }

    pub fn centroid(&self) -> Point3<f64> {
        centroid(&self.vertices)
    }

    /// Copy translated so that its vertex centroid is at the origin.
    pub fn centered(&self) -> Self {
        let c = self.centroid().coords;
        self.with_vertices(self.vertices.iter().map(|v| v - c).collect())
    }

    /// Same id and topology, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Self {
        debug_assert_eq!(vertices.len(), self.vertices.len());
        Self { id: self.id, vertices, topology: Arc::clone(&self.topology) }
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    pub fn to_flat(&self) -> DVector<f64> {
        DVector::from_iterator(
            3 * self.vertices.len(),
            self.vertices.iter().flat_map(|v| [v.x, v.y, v.z]),
        )
    }
}

pub(crate) fn centroid(points: &[Point3<f64>]) -> Point3<f64> {
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / points.len() as f64)
}

pub(crate) fn check_topology(meshes: &[ParameterizedMesh]) -> Result<()> {
    if let Some(first) = meshes.first() {
        if let Some(m) = meshes.iter().find(|m| !first.same_topology(m)) {
            return Err(Error::TopologyMismatch(format!(
                "mesh {} does not share the topology of mesh {}",
                m.id, first.id
            )));
        }
    }
    Ok(())
}

/// One landmark-pair distance with its product tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    /// Index into the corpus landmark list.
    pub landmark_a: usize,
    pub landmark_b: usize,
    /// Side length of the tolerance box in this dimension, meters.
    pub tolerance_m: f64,
}

/// Ordered measurements defining the parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementSpec {
    entries: Vec<Measurement>,
}

impl MeasurementSpec {
    pub fn new(entries: Vec<Measurement>) -> Result<Self> {
        let spec = Self { entries };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the intrinsic invariants; deserialization does not.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidSpec("at least one measurement is required".into()));
        }
        for m in &self.entries {
            if !(m.tolerance_m.is_finite() && m.tolerance_m > 0.0) {
                return Err(Error::InvalidTolerance(m.tolerance_m));
            }
            if m.landmark_a == m.landmark_b {
                return Err(Error::InvalidSpec(format!(
                    "measurement '{}' uses landmark {} twice",
                    m.name, m.landmark_a
                )));
            }
        }
        Ok(())
    }

    /// Checks that every landmark index exists in `topology`.
    pub fn validate_for(&self, topology: &Topology) -> Result<()> {
        self.validate()?;
        let len = topology.landmarks.len();
        for m in &self.entries {
            for index in [m.landmark_a, m.landmark_b] {
                if index >= len {
                    return Err(Error::InvalidLandmark { index, len });
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[Measurement] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn tolerances(&self) -> Vec<f64> {
        self.entries.iter().map(|m| m.tolerance_m).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|m| m.name.clone()).collect()
    }
}

/// Euclidean landmark-pair distances of `mesh`, in spec order.
pub fn measure(mesh: &ParameterizedMesh, spec: &MeasurementSpec) -> Result<ParamPoint> {
    let coords = spec
        .entries
        .iter()
        .map(|m| Ok(nalgebra::distance(&mesh.landmark(m.landmark_a)?, &mesh.landmark(m.landmark_b)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ParamPoint::new(mesh.id, coords))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// A small irregular closed mesh (octahedron with a perturbed apex).
    pub fn octahedron(id: u64) -> ParameterizedMesh {
        let vertices = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.1, 0.0),
            Point3::new(0.0, 1.2, 0.0),
            Point3::new(0.0, -0.9, 0.1),
            Point3::new(0.2, 0.0, 1.5),
            Point3::new(0.0, 0.0, -1.0),
        ];
        let faces = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        let topo = Arc::new(Topology::new(6, faces, vec![0, 1, 4, 5]).unwrap());
        ParameterizedMesh::new(id, vertices, topo).unwrap()
    }

    pub fn spec(pairs: &[(usize, usize)]) -> MeasurementSpec {
        MeasurementSpec::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| Measurement {
                    name: format!("m{i}"),
                    landmark_a: a,
                    landmark_b: b,
                    tolerance_m: 0.1,
                })
                .collect(),
        )
        .unwrap()
    }
}
