use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use super::{centroid, ParameterizedMesh};
use crate::error::{Error, Result};

/// Proper rigid motion `x ↦ R·x + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_mesh(&self, mesh: &ParameterizedMesh) -> ParameterizedMesh {
        mesh.with_vertices(mesh.vertices().iter().map(|v| self.apply(v)).collect())
    }

    /// Orthonormal with determinant +1, within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation;
        (gram - Matrix3::identity()).amax() <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

/// Result of superimposing a source mesh onto a target mesh.
#[derive(Clone, Debug)]
pub struct Alignment {
    pub transform: RigidTransform,
    pub aligned: ParameterizedMesh,
    /// Sum of squared vertex distances between `aligned` and the target.
    pub residual: f64,
}

/// Sum of squared distances between corresponding vertices.
pub fn residual(a: &ParameterizedMesh, b: &ParameterizedMesh) -> f64 {
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p - q).norm_squared())
        .sum()
}

/// Least-squares rigid superimposition of `source` onto `target`.
///
/// Both vertex sets are centered, the rotation is the closest proper
/// orthogonal matrix to the cross-covariance `H = Σ s_i t_iᵀ`
/// (`R = V diag(1, 1, sign det(V Uᵀ)) Uᵀ` for `H = U Σ Vᵀ`) and the
/// translation maps the source centroid onto the target centroid.
pub fn rigid_align(source: &ParameterizedMesh, target: &ParameterizedMesh) -> Result<Alignment> {
    if !source.same_topology(target) {
        return Err(Error::TopologyMismatch(format!(
            "cannot align mesh {} to mesh {}",
            source.id, target.id
        )));
    }
    let transform = fit_rigid(source.vertices(), target.vertices())?;
    let aligned = transform.apply_mesh(source);
    let residual = residual(&aligned, target);
    Ok(Alignment { transform, aligned, residual })
}

pub(crate) fn fit_rigid(source: &[Point3<f64>], target: &[Point3<f64>]) -> Result<RigidTransform> {
    let cs = centroid(source);
    let ct = centroid(target);
    check_spread(source, &cs)?;
    check_spread(target, &ct)?;

    let mut h = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        h += (s - cs) * (t - ct).transpose();
    }
    let rotation = polar_rotation(&h);
    let translation = ct.coords - rotation * cs.coords;
    Ok(RigidTransform { rotation, translation })
}

/// Proper orthogonal factor `R = V·Uᵀ` of `H = U·Σ·Vᵀ` maximizing
/// `tr(R·H)`, with the reflection fix on the smallest singular direction.
///
/// `V` comes from the eigenvectors of `HᵀH` and `U` from `H·V`; completing
/// both frames by a cross product makes them proper, which is exactly the
/// determinant correction.
fn polar_rotation(h: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = SymmetricEigen::new(h.transpose() * h);
    let (order, _) = sorted_desc(&eig.eigenvalues);
    let v1 = eig.eigenvectors.column(order[0]).into_owned();
    let v2 = eig.eigenvectors.column(order[1]).into_owned();
    let hv1 = h * v1;
    let sigma1 = hv1.norm();
    if sigma1 == 0.0 {
        return Matrix3::identity();
    }
    let u1 = hv1 / sigma1;
    let hv2 = h * v2;
    let mut u2 = hv2 - u1 * u1.dot(&hv2);
    if u2.norm() <= 1e-14 * sigma1 {
        let axis = Vector3::from_fn(|i, _| if i == u1.iamin() { 1.0 } else { 0.0 });
        u2 = u1.cross(&axis);
    }
    let u2 = u2.normalize();
    let v3 = v1.cross(&v2);
    let u3 = u1.cross(&u2);
    v1 * u1.transpose() + v2 * u2.transpose() + v3 * u3.transpose()
}

fn sorted_desc(values: &Vector3<f64>) -> ([usize; 3], [f64; 3]) {
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    (order, [values[order[0]], values[order[1]], values[order[2]]])
}

/// Rejects vertex sets with fewer than three non-collinear points.
fn check_spread(points: &[Point3<f64>], c: &Point3<f64>) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("{} vertices, need at least 3", points.len())));
    }
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let (_, ev) = sorted_desc(&eig.eigenvalues);
    if ev[0] <= 0.0 || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::Degenerate("vertices are collinear or coincident".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::fixtures::octahedron;
    use nalgebra::{Rotation3, Unit};
    use std::sync::Arc;

    #[test]
    fn self_alignment_is_identity() {
        let m = octahedron(0);
        let a = rigid_align(&m, &m).unwrap();
        assert!((a.transform.rotation - Matrix3::identity()).amax() < 1e-12);
        assert!(a.transform.translation.amax() < 1e-12);
        assert!(a.residual < 1e-24);
    }

    #[test]
    fn recovers_known_motion() {
        let m = octahedron(0);
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, -2.0, 0.5)), 2.1);
        let t = Vector3::new(0.5, -1.25, 3.0);
        let truth = RigidTransform { rotation: *r.matrix(), translation: t };
        let target = truth.apply_mesh(&m);
        let a = rigid_align(&m, &target).unwrap();
        assert!((a.transform.rotation - truth.rotation).amax() < 1e-9);
        assert!((a.transform.translation - t).amax() < 1e-9);
        assert!(a.residual < 1e-12);
        assert!(a.transform.is_proper(1e-9));
    }

    #[test]
    fn never_returns_a_reflection() {
        let m = octahedron(0);
        let mirrored = m.with_vertices(m.vertices().iter().map(|v| Point3::new(-v.x, v.y, v.z)).collect());
        let a = rigid_align(&m, &mirrored).unwrap();
        assert!(a.transform.is_proper(1e-9));
        assert!(a.residual <= residual(&m, &mirrored) + 1e-12);
    }

    #[test]
    fn planar_configuration_is_fine() {
        let topo = Arc::new(crate::shape::Topology::new(4, vec![[0, 1, 2]], vec![]).unwrap());
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let m = ParameterizedMesh::new(0, pts, topo).unwrap();
        let r = Rotation3::from_euler_angles(0.3, 0.2, -0.7);
        let truth = RigidTransform { rotation: *r.matrix(), translation: Vector3::new(1.0, 2.0, 3.0) };
        let a = rigid_align(&m, &truth.apply_mesh(&m)).unwrap();
        assert!((a.transform.rotation - truth.rotation).amax() < 1e-9);
    }

    #[test]
    fn collinear_is_degenerate() {
        let topo = Arc::new(crate::shape::Topology::new(3, vec![[0, 1, 2]], vec![]).unwrap());
        let pts = vec![Point3::origin(), Point3::new(1.0, 1.0, 1.0), Point3::new(2.0, 2.0, 2.0)];
        let m = ParameterizedMesh::new(0, pts, topo.clone()).unwrap();
        assert!(matches!(rigid_align(&m, &m), Err(Error::Degenerate(_))));
        let two = Arc::new(crate::shape::Topology::new(2, vec![], vec![]).unwrap());
        let m2 = ParameterizedMesh::new(0, vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)], two).unwrap();
        assert!(matches!(rigid_align(&m2, &m2), Err(Error::Degenerate(_))));
    }
}
