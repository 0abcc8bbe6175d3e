//! The end-to-end runs behind each subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use sizecover_core::cover::{
    candidate_boxes_centered, candidate_boxes_combinatorial_capped, exact_max_coverage, exact_min_cover,
    greedy_cover_all, greedy_cover_k, shifting_cover_2d, shifting_epsilon, CandidateMode, CandidateSet,
    CoverSolution, ParamPoint, DEFAULT_COMBINATORIAL_CAP,
};
use sizecover_core::shape::{design_models, DesignOptions, Extrapolator, MeasurementSpec, ParameterizedMesh};
use sizecover_core::stats::{
    feature_fit, gaussian_fit, gaussian_sample, level_set_sample, pca_fit, pca_project, FeatureMode, ModelBundle,
    ShapeSynthesizer,
};
use sizecover_core::Error as CoreError;

use crate::error::{PipelineError, Result};
use crate::io::{
    create_dir, load_corpus, measure_all, read_points_csv, read_spec, read_test_points, write_json, write_landmarks,
    write_obj, write_points_csv, write_text, CorpusManifest,
};
use crate::report::{
    evaluate_holdout, CoverParameters, DesignModelInfo, HoldoutResult, OracleResult, ReportBox, RunReport,
};
use crate::svg::render_svg;

/// Glasses tolerances used by the face-kind synthetic runs.
pub const GLASSES_TOLERANCES: [f64; 2] = [0.0267, 0.0019];
pub const GLASSES_NOTE: &str =
    "face-width tolerance is 2.67 cm; a figure of 2.76 cm is also quoted for the same frame, 2.67 cm is used";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverMode {
    /// Cover every point (greedy).
    All,
    /// At most `k` boxes, maximizing coverage (greedy).
    K(usize),
    /// Shifting strategy with shift parameter `l` (d = 2 only).
    Shift(usize),
}

#[derive(Clone, Debug)]
pub enum CoverInput {
    /// Corpus manifest; points are measured with the spec.
    Corpus(PathBuf),
    /// Points CSV; meshes, and so design models, are unavailable.
    Points(PathBuf),
}

/// How sparse boxes and the synthesizer are handled.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub variance_fraction: f64,
    pub feature_mode: FeatureMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { variance_fraction: 0.99, feature_mode: FeatureMode::Affine }
    }
}

#[derive(Clone, Debug)]
pub struct CoverConfig {
    pub input: CoverInput,
    pub spec: Option<PathBuf>,
    /// Overrides (or, with CSV input and no spec, supplies) tolerances.
    pub tolerances: Option<Vec<f64>>,
    pub mode: CoverMode,
    /// `None` picks the default: centered, or combinatorial for shifting.
    pub candidates: Option<CandidateMode>,
    pub combinatorial_cap: u64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub test: Option<PathBuf>,
    pub with_oracle: bool,
    pub design_models: bool,
    pub extrapolate_sparse: bool,
    pub min_members: usize,
    pub center_tolerance: f64,
    pub sparse_samples: usize,
    pub model: ModelConfig,
    pub timings: bool,
    pub comment: Option<String>,
}

impl CoverConfig {
    pub fn new(input: CoverInput, mode: CoverMode, out_dir: impl Into<PathBuf>) -> Self {
        let defaults = DesignOptions::default();
        Self {
            input,
            spec: None,
            tolerances: None,
            mode,
            candidates: None,
            combinatorial_cap: DEFAULT_COMBINATORIAL_CAP,
            out_dir: out_dir.into(),
            seed: 0,
            test: None,
            with_oracle: false,
            design_models: true,
            extrapolate_sparse: false,
            min_members: defaults.min_members,
            center_tolerance: defaults.center_tolerance_fraction,
            sparse_samples: defaults.sparse_samples,
            model: ModelConfig::default(),
            timings: false,
            comment: None,
        }
    }
}

struct Stopwatch {
    enabled: bool,
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn new(enabled: bool) -> Self {
        Self { enabled, start: Instant::now(), laps: BTreeMap::new() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps.insert(format!("{name}_s"), (now - self.start).as_secs_f64());
        self.start = now;
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.laps)
    }
}

struct Inputs {
    points: Vec<ParamPoint>,
    meshes: Option<Vec<ParameterizedMesh>>,
    spec: Option<MeasurementSpec>,
    names: Vec<String>,
    tolerances: Vec<f64>,
}

fn load_inputs(cfg: &CoverConfig) -> Result<Inputs> {
    let spec = cfg.spec.as_deref().map(read_spec).transpose()?;
    let (points, meshes) = match &cfg.input {
        CoverInput::Corpus(path) => {
            let spec = spec.as_ref().ok_or_else(|| PipelineError::Usage("--corpus needs --measurements".into()))?;
            let (manifest, base) = CorpusManifest::read(path)?;
            let meshes = load_corpus(&manifest, &base)?;
            (measure_all(&meshes, spec)?, Some(meshes))
        }
        CoverInput::Points(path) => (read_points_csv(path)?, None),
    };
    let d = points.first().map_or(0, ParamPoint::dim);
    let (names, spec_tolerances) = match &spec {
        Some(s) => (s.names(), Some(s.tolerances())),
        None => ((0..d).map(|j| format!("m{j}")).collect(), None),
    };
    let tolerances = cfg
        .tolerances
        .clone()
        .or(spec_tolerances)
        .ok_or_else(|| PipelineError::Usage("tolerances need --measurements or --tolerances".into()))?;
    if let Some(found) = [tolerances.len(), names.len()].into_iter().find(|&n| n != d) {
        return Err(CoreError::DimensionMismatch { expected: d, found }.into());
    }
    Ok(Inputs { points, meshes, spec, names, tolerances })
}

fn build_candidates(points: &[ParamPoint], tolerances: &[f64], mode: CandidateMode, cap: u64) -> Result<CandidateSet> {
    Ok(match mode {
        CandidateMode::Combinatorial => candidate_boxes_combinatorial_capped(points, tolerances, cap)?,
        _ => candidate_boxes_centered(points, tolerances)?,
    })
}

/// Fits PCA and the measurement-to-weight map on a corpus.
pub fn fit_synthesizer(
    meshes: &[ParameterizedMesh],
    points: &[ParamPoint],
    model: &ModelConfig,
) -> Result<ShapeSynthesizer> {
    let basis = pca_fit(meshes, model.variance_fraction)?;
    let weights = meshes.iter().map(|m| pca_project(&basis, m)).collect::<Result<Vec<DVector<f64>>, _>>()?;
    let feature_map = feature_fit(points, &weights, model.feature_mode)?;
    Ok(ShapeSynthesizer { basis, feature_map })
}

/// Covers the measured corpus (or CSV points) and writes `report.json`,
/// `points.csv`, `design_model_<i>.obj` per box when meshes are available,
/// and `cover.svg` when d = 2.
pub fn run_cover(cfg: &CoverConfig) -> Result<RunReport> {
    let mut clock = Stopwatch::new(cfg.timings);
    let inputs = load_inputs(cfg)?;
    let d = inputs.tolerances.len();
    log::info!("{} points in {d} dimensions", inputs.points.len());
    clock.lap("load");

    let candidates = match (cfg.mode, cfg.candidates) {
        (CoverMode::Shift(_), Some(CandidateMode::Centered)) => {
            return Err(PipelineError::Usage("shifting solves blocks over combinatorial candidates only".into()));
        }
        (CoverMode::Shift(_), _) => CandidateMode::Combinatorial,
        (_, Some(CandidateMode::Custom)) => {
            return Err(PipelineError::Usage("custom candidates are not available from the command line".into()));
        }
        (_, c) => c.unwrap_or(CandidateMode::Centered),
    };
    let (solution, parameters) = match cfg.mode {
        CoverMode::All => {
            let c = build_candidates(&inputs.points, &inputs.tolerances, candidates, cfg.combinatorial_cap)?;
            (greedy_cover_all(&c)?, CoverParameters { candidates, k: None, l: None, epsilon: None })
        }
        CoverMode::K(k) => {
            let c = build_candidates(&inputs.points, &inputs.tolerances, candidates, cfg.combinatorial_cap)?;
            (greedy_cover_k(&c, k)?, CoverParameters { candidates, k: Some(k), l: None, epsilon: None })
        }
        CoverMode::Shift(l) => {
            if d != 2 {
                return Err(CoreError::ShiftDimension(d).into());
            }
            let sol = shifting_cover_2d(&inputs.points, &inputs.tolerances, l)?;
            let eps = shifting_epsilon(l, d);
            (sol, CoverParameters { candidates, k: None, l: Some(l), epsilon: Some(eps) })
        }
    };
    log::info!("{:?} selected {} boxes", solution.algorithm, solution.k());
    clock.lap("cover");

    let oracle = if cfg.with_oracle { Some(run_oracle(cfg, &inputs, candidates)?) } else { None };
    clock.lap("oracle");

    create_dir(&cfg.out_dir)?;
    let design = match (&inputs.meshes, &inputs.spec) {
        (Some(meshes), Some(spec)) if cfg.design_models && !solution.selected.is_empty() => {
            Some(write_design_models(cfg, meshes, &inputs.points, spec, &solution)?)
        }
        _ => None,
    };
    clock.lap("design");

    let boxes = solution
        .selected
        .iter()
        .zip(&solution.members)
        .enumerate()
        .map(|(i, (b, members))| ReportBox {
            center: b.center().to_vec(),
            side_lengths: b.side_lengths().to_vec(),
            member_ids: members.clone(),
            design_model: design.as_ref().map(|infos: &Vec<DesignModelInfo>| infos[i].clone()),
        })
        .collect();
    let comment = cfg.comment.clone().or_else(|| {
        (inputs.tolerances == GLASSES_TOLERANCES).then(|| GLASSES_NOTE.to_string())
    });
    let mut report = RunReport {
        algorithm: solution.algorithm,
        parameters,
        measurements: inputs.names.clone(),
        tolerances: inputs.tolerances.clone(),
        boxes,
        n_points: solution.n_points(),
        train_coverage: solution.coverage(),
        uncovered_ids: solution.uncovered_ids.clone(),
        holdout: None,
        oracle,
        seed: cfg.seed,
        timings: None,
        comment,
    };
    if let Some(test) = &cfg.test {
        let test_points = read_test_points(test, inputs.spec.as_ref())?;
        report.holdout = Some(evaluate_holdout(&report, &test_points)?);
    }
    clock.lap("evaluate");

    write_points_csv(&cfg.out_dir.join("points.csv"), &inputs.points)?;
    if d == 2 {
        write_text(&cfg.out_dir.join("cover.svg"), &render_svg(&report, &inputs.points)?)?;
    }
    clock.lap("write");
    report.timings = clock.finish();
    report.save(&cfg.out_dir.join("report.json"))?;
    Ok(report)
}

fn run_oracle(cfg: &CoverConfig, inputs: &Inputs, candidates: CandidateMode) -> Result<OracleResult> {
    let c = build_candidates(&inputs.points, &inputs.tolerances, candidates, cfg.combinatorial_cap)?;
    let sol = match cfg.mode {
        CoverMode::K(k) => exact_max_coverage(&c, k)?,
        _ => exact_min_cover(&c)?,
    };
    Ok(OracleResult { algorithm: sol.algorithm, boxes: sol.k(), covered: sol.covered_ids.len() })
}

fn write_design_models(
    cfg: &CoverConfig,
    meshes: &[ParameterizedMesh],
    points: &[ParamPoint],
    spec: &MeasurementSpec,
    solution: &CoverSolution,
) -> Result<Vec<DesignModelInfo>> {
    let synthesizer = if cfg.extrapolate_sparse { Some(fit_synthesizer(meshes, points, &cfg.model)?) } else { None };
    let options = DesignOptions {
        min_members: cfg.min_members,
        center_tolerance_fraction: cfg.center_tolerance,
        sparse_samples: cfg.sparse_samples,
        seed: cfg.seed,
        extrapolator: synthesizer.as_ref().map(|s| s as &dyn Extrapolator),
    };
    let models = design_models(meshes, solution, spec, &options).map_err(|e| match e {
        CoreError::ExtrapolationRequired(_) => PipelineError::Data(format!("{e} (pass --extrapolate-sparse)")),
        other => other.into(),
    })?;
    models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let file = format!("design_model_{i}.obj");
            write_obj(&cfg.out_dir.join(&file), &m.mesh)?;
            Ok(DesignModelInfo { file, substitutes: m.substitutes })
        })
        .collect()
}

/// Held-out coverage of a saved report on a CSV or manifest test set.
pub fn run_evaluate(report: &Path, test: &Path, spec: Option<&Path>) -> Result<HoldoutResult> {
    let report = RunReport::load(report)?;
    let spec = spec.map(read_spec).transpose()?;
    let points = read_test_points(test, spec.as_ref())?;
    evaluate_holdout(&report, &points)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    /// Draws from the fitted measurement Gaussian.
    Density { count: usize },
    /// Points on the Mahalanobis level set `c`.
    Level { c: f64, count: usize },
}

#[derive(Clone, Debug)]
pub struct ExtrapolateConfig {
    pub corpus: PathBuf,
    pub spec: PathBuf,
    pub sampling: Sampling,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub model: ModelConfig,
}

#[derive(Clone, Debug)]
pub struct ExtrapolateOutput {
    pub models: ModelBundle,
    /// Requested measurement points, ids continuing after the corpus ids.
    pub requested: Vec<ParamPoint>,
    pub meshes: Vec<ParameterizedMesh>,
    /// Measurements of `meshes`.
    pub measured: Vec<ParamPoint>,
}

/// Fits the shape and measurement models on a corpus, samples new
/// measurement points and synthesizes a mesh for each.
///
/// Writes `models.json`, `requested.csv`, `extrapolated.csv` (measured new
/// subjects), `points.csv` (corpus followed by new subjects), the new meshes
/// under `meshes/`, and `manifest.json` listing corpus and new meshes.
pub fn run_extrapolate(cfg: &ExtrapolateConfig) -> Result<ExtrapolateOutput> {
    let spec = read_spec(&cfg.spec)?;
    let (manifest, base) = CorpusManifest::read(&cfg.corpus)?;
    let corpus = load_corpus(&manifest, &base)?;
    let points = measure_all(&corpus, &spec)?;
    let synthesizer = fit_synthesizer(&corpus, &points, &cfg.model)?;
    let gaussian = gaussian_fit(&points)?;
    let samples = match cfg.sampling {
        Sampling::Density { count } => gaussian_sample(&gaussian, count, cfg.seed)?,
        Sampling::Level { c, count } => level_set_sample(&gaussian, c, count, cfg.seed)?,
    };
    let first_id = points.iter().map(|p| p.id).max().map_or(0, |m| m + 1);
    let requested: Vec<ParamPoint> =
        samples.into_iter().map(|p| ParamPoint::new(first_id + p.id, p.coords)).collect();
    let meshes = synthesizer.synthesize(&requested)?;
    let measured = measure_all(&meshes, &spec)?;

    create_dir(&cfg.out_dir)?;
    let mesh_dir = cfg.out_dir.join("meshes");
    let mut mesh_paths: Vec<PathBuf> = manifest
        .mesh_paths
        .iter()
        .map(|p| absolute(&base.join(p)))
        .collect::<Result<_>>()?;
    if !meshes.is_empty() {
        create_dir(&mesh_dir)?;
    }
    for m in &meshes {
        let name = format!("extrapolated_{:05}.obj", m.id);
        write_obj(&mesh_dir.join(&name), m)?;
        mesh_paths.push(Path::new("meshes").join(name));
    }
    write_landmarks(&cfg.out_dir.join("landmarks.txt"), corpus[0].landmarks())?;
    let ids = manifest.ids().into_iter().chain(meshes.iter().map(|m| m.id)).collect();
    let augmented = CorpusManifest { mesh_paths, landmark_path: PathBuf::from("landmarks.txt"), ids: Some(ids) };
    write_json(&cfg.out_dir.join("manifest.json"), &augmented)?;

    let models = ModelBundle {
        basis: synthesizer.basis,
        feature_map: synthesizer.feature_map,
        gaussian,
        seed: cfg.seed,
    };
    write_json(&cfg.out_dir.join("models.json"), &models)?;
    write_points_csv(&cfg.out_dir.join("requested.csv"), &requested)?;
    write_points_csv(&cfg.out_dir.join("extrapolated.csv"), &measured)?;
    let all: Vec<ParamPoint> = points.iter().chain(&measured).cloned().collect();
    write_points_csv(&cfg.out_dir.join("points.csv"), &all)?;
    Ok(ExtrapolateOutput { models, requested, meshes, measured })
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| PipelineError::read(p, e))
}
