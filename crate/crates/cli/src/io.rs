//! Flat-file formats: ASCII OBJ meshes, landmark lists, measurement specs,
//! points CSV and corpus manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sizecover_core::cover::ParamPoint;
use sizecover_core::shape::{measure, MeasurementSpec, ParameterizedMesh, Topology};

use crate::error::{PipelineError, Result};

/// Vertices and triangles read from an OBJ file.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PipelineError::read(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| PipelineError::write(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| PipelineError::write(path, e))
}

/// Parses `v` and `f` records. Face corners may be `i`, `i/t`, `i/t/n` or
/// `i//n`; negative indices count from the end. Polygons are fan-triangulated.
/// Every other record is ignored.
pub fn parse_obj(text: &str, path: &Path) -> Result<ObjMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let err = |msg: String| PipelineError::parse(path, format!("line {}: {msg}", lineno + 1));
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for slot in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| err("vertex needs 3 coordinates".into()))?;
                    *slot = tok.parse().map_err(|_| err(format!("bad coordinate '{tok}'")))?;
                }
                vertices.push(Point3::from(xyz));
            }
            Some("f") => {
                let corners = tokens
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|_| err(format!("bad face index '{tok}'")))?;
                        let resolved = match i {
                            i if i > 0 => i - 1,
                            i if i < 0 => vertices.len() as i64 + i,
                            _ => -1,
                        };
                        if resolved < 0 || resolved >= vertices.len() as i64 {
                            return Err(err(format!("face index {i} out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if corners.len() < 3 {
                    return Err(err("face needs at least 3 corners".into()));
                }
                for w in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[w], corners[w + 1]]);
                }
            }
            _ => {}
        }
    }
    if vertices.is_empty() {
        return Err(PipelineError::parse(path, "no vertices"));
    }
    Ok(ObjMesh { vertices, faces })
}

pub fn read_obj(path: &Path) -> Result<ObjMesh> {
    parse_obj(&read_text(path)?, path)
}

/// OBJ text with shortest round-trip float formatting.
pub fn obj_string(mesh: &ParameterizedMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(path: &Path, mesh: &ParameterizedMesh) -> Result<()> {
    write_text(path, &obj_string(mesh))
}

/// One 0-based vertex index per line; blank lines and `#` comments skipped.
pub fn read_landmarks(path: &Path) -> Result<Vec<usize>> {
    read_text(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse().map_err(|_| PipelineError::parse(path, format!("line {}: bad vertex index '{l}'", i + 1)))
        })
        .collect()
}

pub fn write_landmarks(path: &Path, landmarks: &[usize]) -> Result<()> {
    write_text(path, &landmarks.iter().map(|l| format!("{l}\n")).collect::<String>())
}

pub fn read_spec(path: &Path) -> Result<MeasurementSpec> {
    let spec: MeasurementSpec =
        serde_json::from_str(&read_text(path)?).map_err(|e| PipelineError::parse(path, e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn write_spec(path: &Path, spec: &MeasurementSpec) -> Result<()> {
    write_json(path, spec)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::write(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| PipelineError::parse(path, e.to_string()))
}

/// Points CSV with header `id,m0,...,m{d-1}`.
pub fn read_points_csv(path: &Path) -> Result<Vec<ParamPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::read(path, e))?;
    let headers = reader.headers().map_err(|e| PipelineError::parse(path, e.to_string()))?.clone();
    if headers.get(0) != Some("id") || headers.len() < 2 {
        return Err(PipelineError::parse(path, "header must be id,m0,...,m{d-1}"));
    }
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PipelineError::parse(path, e.to_string()))?;
        let err = |msg: String| PipelineError::parse(path, format!("row {}: {msg}", row + 1));
        let id = record[0].parse().map_err(|_| err(format!("bad id '{}'", &record[0])))?;
        let coords = record
            .iter()
            .skip(1)
            .map(|f| f.parse().map_err(|_| err(format!("bad value '{f}'"))))
            .collect::<Result<Vec<f64>>>()?;
        points.push(ParamPoint::new(id, coords));
    }
    Ok(points)
}

pub fn points_csv_string(points: &[ParamPoint]) -> String {
    table_csv_string(points, "m")
}

/// CSV with header `id,{prefix}0,{prefix}1,...`.
pub fn table_csv_string(points: &[ParamPoint], prefix: &str) -> String {
    let d = points.first().map_or(0, ParamPoint::dim);
    let mut out = String::from("id");
    for j in 0..d {
        let _ = write!(out, ",{prefix}{j}");
    }
    out.push('\n');
    for p in points {
        let _ = write!(out, "{}", p.id);
        for c in &p.coords {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

pub fn write_points_csv(path: &Path, points: &[ParamPoint]) -> Result<()> {
    write_text(path, &points_csv_string(points))
}

/// Mesh files and shared landmark list of a corpus. Relative paths are
/// resolved against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub mesh_paths: Vec<PathBuf>,
    pub landmark_path: PathBuf,
    /// Subject ids; manifest order `0..n` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<u64>>,
}

impl CorpusManifest {
    pub fn read(path: &Path) -> Result<(Self, PathBuf)> {
        let manifest: Self = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, base))
    }

    pub fn ids(&self) -> Vec<u64> {
        self.ids.clone().unwrap_or_else(|| (0..self.mesh_paths.len() as u64).collect())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads every mesh of the manifest and checks they share the first mesh's
/// topology. Meshes are read in parallel and returned in manifest order.
pub fn load_corpus(manifest: &CorpusManifest, base: &Path) -> Result<Vec<ParameterizedMesh>> {
    if manifest.mesh_paths.is_empty() {
        return Err(PipelineError::Data("manifest lists no meshes".into()));
    }
    let ids = manifest.ids();
    if ids.len() != manifest.mesh_paths.len() {
        return Err(PipelineError::Data(format!(
            "manifest has {} ids for {} meshes",
            ids.len(),
            manifest.mesh_paths.len()
        )));
    }
    if let Some(dup) = duplicate(&ids) {
        return Err(PipelineError::Data(format!("manifest repeats subject id {dup}")));
    }
    let landmark_path = resolve(base, &manifest.landmark_path);
    let landmarks = read_landmarks(&landmark_path)?;
    let paths: Vec<PathBuf> = manifest.mesh_paths.iter().map(|p| resolve(base, p)).collect();
    let raw: Vec<Result<ObjMesh>> = paths.par_iter().map(|p| read_obj(p)).collect();
    let mut raw = raw.into_iter();
    let first = raw.next().unwrap_or_else(|| unreachable!())?;
    let len = first.vertices.len();
    if let Some(&index) = landmarks.iter().find(|&&l| l >= len) {
        return Err(PipelineError::Landmark { path: landmark_path, index, len });
    }
    let topology = Arc::new(Topology::new(len, first.faces.clone(), landmarks)?);
    let mut meshes = Vec::with_capacity(paths.len());
    meshes.push(ParameterizedMesh::new(ids[0], first.vertices, topology.clone())?);
    for ((obj, path), &id) in raw.zip(&paths[1..]).zip(&ids[1..]) {
        let obj = obj?;
        let mismatch = if obj.vertices.len() != len {
            Some(format!("{} vertices instead of {len}", obj.vertices.len()))
        } else if obj.faces != *topology.faces() {
            Some("face lists differ".to_string())
        } else {
            None
        };
        if let Some(message) = mismatch {
            return Err(PipelineError::Topology { path: path.clone(), message });
        }
        meshes.push(ParameterizedMesh::new(id, obj.vertices, topology.clone())?);
    }
    Ok(meshes)
}

fn duplicate(ids: &[u64]) -> Option<u64> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
}

pub fn load_corpus_file(path: &Path) -> Result<Vec<ParameterizedMesh>> {
    let (manifest, base) = CorpusManifest::read(path)?;
    load_corpus(&manifest, &base)
}

pub fn measure_all(meshes: &[ParameterizedMesh], spec: &MeasurementSpec) -> Result<Vec<ParamPoint>> {
    if let Some(m) = meshes.first() {
        spec.validate_for(m.topology())?;
    }
    Ok(meshes.iter().map(|m| measure(m, spec)).collect::<Result<_, _>>()?)
}

/// Test points from a CSV file, or measured from a manifest (`.json`) with
/// `spec`.
pub fn read_test_points(path: &Path, spec: Option<&MeasurementSpec>) -> Result<Vec<ParamPoint>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let spec = spec.ok_or_else(|| {
            PipelineError::Usage("a manifest test set needs --measurements".into())
        })?;
        measure_all(&load_corpus_file(path)?, spec)
    } else {
        read_points_csv(path)
    }
}
