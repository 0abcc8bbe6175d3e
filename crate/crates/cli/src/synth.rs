//! Synthetic corpora: a template mesh deformed by a weighted sum of vertex
//! displacement fields, with Gaussian weights.
//!
//! The built-in template is an ellipsoidal head proxy whose landmark-pair
//! distances are exactly affine in the mode weights, so ground truth for
//! every measurement is known in closed form.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Point3, Vector3};
use serde::{Deserialize, Serialize};
use sizecover_core::cover::ParamPoint;
use sizecover_core::shape::{Measurement, MeasurementSpec, ParameterizedMesh, Topology};
use sizecover_core::stats::{gaussian_sample, GaussianModel};
use sizecover_core::Error as CoreError;

use crate::error::Result;
use crate::io::{create_dir, table_csv_string, write_json, write_landmarks, write_obj, write_text, CorpusManifest};

/// Which measurement space a synthetic run targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Head width, head depth, face height (d = 3).
    Head,
    /// Face width, nose bridge width (d = 2).
    Face,
}

const LONGITUDES: usize = 16;
const RINGS: usize = 7;
const RADII: [f64; 3] = [0.0775, 0.0975, 0.115];
const BRIDGE_FALLOFF: f64 = 0.02;

/// Landmark roles, as indices into the landmark list.
pub mod landmark {
    pub const RIGHT: usize = 0;
    pub const LEFT: usize = 1;
    pub const FRONT: usize = 2;
    pub const BACK: usize = 3;
    pub const BROW: usize = 4;
    pub const CHIN: usize = 5;
    pub const BRIDGE_RIGHT: usize = 6;
    pub const BRIDGE_LEFT: usize = 7;
}

fn ring_vertex(ring: usize, lon: usize) -> usize {
    1 + (ring - 1) * LONGITUDES + lon % LONGITUDES
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

/// Ellipsoid with `+y` facing forward and `+z` up. Rings are spaced
/// 22.5° in latitude, longitudes 22.5° apart starting at the front.
pub fn head_template() -> ParameterizedMesh {
    let [rx, ry, rz] = RADII;
    let mut vertices = vec![Point3::new(0.0, 0.0, -rz)];
    for ring in 1..=RINGS {
        let lat = -PI / 2.0 + ring as f64 * PI / (RINGS + 1) as f64;
        for lon in 0..LONGITUDES {
            let az = 2.0 * PI * lon as f64 / LONGITUDES as f64;
            vertices.push(Point3::new(
                snap(rx * lat.cos() * az.sin()),
                snap(ry * lat.cos() * az.cos()),
                snap(rz * lat.sin()),
            ));
        }
    }
    vertices.push(Point3::new(0.0, 0.0, rz));
    let north = vertices.len() - 1;
    let mut faces = Vec::new();
    for lon in 0..LONGITUDES {
        faces.push([0, ring_vertex(1, lon + 1), ring_vertex(1, lon)]);
        for ring in 1..RINGS {
            let (a, b) = (ring_vertex(ring, lon), ring_vertex(ring, lon + 1));
            let (c, d) = (ring_vertex(ring + 1, lon + 1), ring_vertex(ring + 1, lon));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
        faces.push([ring_vertex(RINGS, lon), ring_vertex(RINGS, lon + 1), north]);
    }
    let q = LONGITUDES / 4;
    let equator = RINGS.div_ceil(2);
    let landmarks = vec![
        ring_vertex(equator, q),
        ring_vertex(equator, 3 * q),
        ring_vertex(equator, 0),
        ring_vertex(equator, 2 * q),
        ring_vertex(equator + 2, 0),
        ring_vertex(equator - 2, 0),
        ring_vertex(equator + 1, 1),
        ring_vertex(equator + 1, LONGITUDES - 1),
    ];
    let topology = Topology::new(vertices.len(), faces, landmarks).unwrap_or_else(|e| unreachable!("{e}"));
    ParameterizedMesh::new(0, vertices, Arc::new(topology)).unwrap_or_else(|e| unreachable!("{e}"))
}

/// Five displacement fields for [`head_template`]: unit changes of head
/// width, head depth, face height and bridge width, plus a crown bulge that
/// leaves every landmark distance unchanged.
pub fn head_modes(template: &ParameterizedMesh) -> Vec<Vec<Vector3<f64>>> {
    let lm = |i| template.landmark(i).unwrap_or_else(|e| unreachable!("{e}"));
    let width = lm(landmark::RIGHT).x - lm(landmark::LEFT).x;
    let depth = lm(landmark::FRONT).y - lm(landmark::BACK).y;
    let height = lm(landmark::BROW).z - lm(landmark::CHIN).z;
    let bridge_mid = Point3::from((lm(landmark::BRIDGE_RIGHT).coords + lm(landmark::BRIDGE_LEFT).coords) / 2.0);
    let bump = |p: &Point3<f64>| {
        let r = nalgebra::distance(p, &bridge_mid);
        if r < 3.0 * BRIDGE_FALLOFF {
            (-r * r / (2.0 * BRIDGE_FALLOFF * BRIDGE_FALLOFF)).exp()
        } else {
            0.0
        }
    };
    let bridge_gain = bump(&lm(landmark::BRIDGE_RIGHT)) + bump(&lm(landmark::BRIDGE_LEFT));
    let rx = RADII[0];
    let vs = template.vertices();
    vec![
        vs.iter().map(|v| Vector3::new(v.x / width, 0.0, 0.0)).collect(),
        vs.iter().map(|v| Vector3::new(0.0, v.y / depth, 0.0)).collect(),
        vs.iter().map(|v| Vector3::new(0.0, 0.0, v.z / height)).collect(),
        vs.iter().map(|v| Vector3::new(side(v.x) * bump(v) / bridge_gain, 0.0, 0.0)).collect(),
        vs.iter().map(|v| Vector3::new(0.0, 0.0, 0.5 * (v.x / rx).powi(2))).collect(),
    ]
}

/// Zero-mean weight model for [`head_modes`], meters. Head width, depth and
/// face height are mildly correlated.
pub fn head_weight_model() -> GaussianModel {
    let sd = [0.0075, 0.0085, 0.0085, 0.0015, 0.005];
    let mut corr = DMatrix::identity(5, 5);
    for (i, j, r) in [(0, 1, 0.4), (0, 2, 0.3), (1, 2, 0.3)] {
        corr[(i, j)] = r;
        corr[(j, i)] = r;
    }
    let cov = DMatrix::from_fn(5, 5, |i, j| corr[(i, j)] * sd[i] * sd[j]);
    GaussianModel::new(DVector::zeros(5), cov).unwrap_or_else(|e| unreachable!("{e}"))
}

/// Measurement spec with the product tolerances for each kind.
pub fn spec_for(kind: SynthKind) -> MeasurementSpec {
    let m = |name: &str, a, b, t| Measurement { name: name.into(), landmark_a: a, landmark_b: b, tolerance_m: t };
    let entries = match kind {
        SynthKind::Head => vec![
            m("head_width", landmark::RIGHT, landmark::LEFT, 0.0299),
            m("head_depth", landmark::FRONT, landmark::BACK, 0.0325),
            m("face_height", landmark::BROW, landmark::CHIN, 0.0333),
        ],
        SynthKind::Face => vec![
            m("face_width", landmark::RIGHT, landmark::LEFT, 0.0267),
            m("nose_bridge_width", landmark::BRIDGE_RIGHT, landmark::BRIDGE_LEFT, 0.0019),
        ],
    };
    MeasurementSpec::new(entries).unwrap_or_else(|e| unreachable!("{e}"))
}

fn side(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `template + Σ w_j·mode_j`, with `id` attached.
pub fn deform(template: &ParameterizedMesh, modes: &[Vec<Vector3<f64>>], weights: &ParamPoint) -> Result<ParameterizedMesh> {
    check_modes(template, modes)?;
    if weights.dim() != modes.len() {
        return Err(CoreError::DimensionMismatch { expected: modes.len(), found: weights.dim() }.into());
    }
    let vertices = template
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| v + modes.iter().zip(&weights.coords).fold(Vector3::zeros(), |acc, (m, w)| acc + m[i] * *w))
        .collect();
    Ok(template.with_vertices(vertices).with_id(weights.id))
}

fn check_modes(template: &ParameterizedMesh, modes: &[Vec<Vector3<f64>>]) -> Result<()> {
    if let Some(m) = modes.iter().find(|m| m.len() != template.vertex_count()) {
        return Err(CoreError::DimensionMismatch { expected: template.vertex_count(), found: m.len() }.into());
    }
    Ok(())
}

pub fn mesh_file_name(id: u64) -> String {
    format!("subject_{id:05}.obj")
}

/// Writes one mesh per weight vector plus `landmarks.txt`, `weights.csv`
/// and `manifest.json` into `dir`.
pub fn write_corpus(
    template: &ParameterizedMesh,
    modes: &[Vec<Vector3<f64>>],
    weights: &[ParamPoint],
    dir: &Path,
) -> Result<CorpusManifest> {
    create_dir(dir)?;
    let mut mesh_paths = Vec::with_capacity(weights.len());
    for w in weights {
        let name = mesh_file_name(w.id);
        write_obj(&dir.join(&name), &deform(template, modes, w)?)?;
        mesh_paths.push(PathBuf::from(name));
    }
    write_landmarks(&dir.join("landmarks.txt"), template.landmarks())?;
    write_text(&dir.join("weights.csv"), &table_csv_string(weights, "w"))?;
    let manifest = CorpusManifest {
        mesh_paths,
        landmark_path: PathBuf::from("landmarks.txt"),
        ids: Some(weights.iter().map(|w| w.id).collect()),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// `n` meshes with weights drawn from `weight_model` (seeded), ids `0..n`.
pub fn synth_corpus(
    template: &ParameterizedMesh,
    modes: &[Vec<Vector3<f64>>],
    weight_model: &GaussianModel,
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<CorpusManifest> {
    if n == 0 {
        return Err(CoreError::EmptyInput.into());
    }
    check_modes(template, modes)?;
    if weight_model.dim() != modes.len() {
        return Err(CoreError::DimensionMismatch { expected: modes.len(), found: weight_model.dim() }.into());
    }
    let weights = gaussian_sample(weight_model, n, seed)?;
    write_corpus(template, modes, &weights, out_dir)
}

/// Paths written by [`synth_split`].
#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub train_manifest: PathBuf,
    pub test_manifest: Option<PathBuf>,
    pub spec: PathBuf,
}

/// Head-proxy corpus split into `train/` (ids `0..n`) and `test/` (ids
/// `n..n+holdout`) drawn from one weight sample, plus `spec.json` for `kind`
/// and `weight_model.json`.
pub fn synth_split(kind: SynthKind, n: usize, holdout: usize, seed: u64, out_dir: &Path) -> Result<SynthOutput> {
    if n == 0 {
        return Err(CoreError::EmptyInput.into());
    }
    create_dir(out_dir)?;
    let template = head_template();
    let modes = head_modes(&template);
    let model = head_weight_model();
    let weights = gaussian_sample(&model, n + holdout, seed)?;
    let train_dir = out_dir.join("train");
    write_corpus(&template, &modes, &weights[..n], &train_dir)?;
    let test_manifest = if holdout > 0 {
        let test_dir = out_dir.join("test");
        write_corpus(&template, &modes, &weights[n..], &test_dir)?;
        Some(test_dir.join("manifest.json"))
    } else {
        None
    };
    let spec = out_dir.join("spec.json");
    write_json(&spec, &spec_for(kind))?;
    write_json(&out_dir.join("weight_model.json"), &model)?;
    Ok(SynthOutput { train_manifest: train_dir.join("manifest.json"), test_manifest, spec })
}
