//! Parameter-space covering with translated tolerance boxes.
//!
//! Every subject is a point in `R^d` (one coordinate per measurement) and a
//! product fits every subject whose point lies in its tolerance box. Boxes are
//! closed: a point on the boundary is covered.
//!
//! Candidate boxes come in two flavours:
//!
//! * [`candidate_boxes_centered`]: one box centered at every input point
//!   (`r = n`), the practical choice;
//! * [`candidate_boxes_combinatorial`]: per dimension every interval with an
//!   endpoint at a point coordinate, combined by Cartesian product (at most
//!   `(2n)^d` boxes). Every combinatorially distinct covered set is dominated
//!   by one of these.
//!
//! Solvers: [`greedy_cover_all`], [`greedy_cover_k`], [`shifting_cover_2d`],
//! and the exhaustive oracles [`exact_min_cover`] / [`exact_max_coverage`].

mod exact;
mod greedy;
mod shifting;

pub use exact::{exact_max_coverage, exact_max_coverage_with, exact_min_cover, exact_min_cover_with, OracleLimits};
pub use greedy::{greedy_cover_all, greedy_cover_k};
pub use shifting::{shifting_cover_2d, shifting_epsilon};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};

/// Default refusal threshold for combinatorial candidate enumeration.
pub const DEFAULT_COMBINATORIAL_CAP: u64 = 1_000_000;

/// A subject's ordered measurements as a point in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub id: u64,
    pub coords: Vec<f64>,
}

impl ParamPoint {
    pub fn new(id: u64, coords: Vec<f64>) -> Self {
        Self { id, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn translated(&self, t: &[f64]) -> Self {
        Self {
            id: self.id,
            coords: self.coords.iter().zip(t).map(|(c, t)| c + t).collect(),
        }
    }
}

/// Closed axis-aligned box `{ x : |x[i] - center[i]| <= side_lengths[i] / 2 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceBox {
    center: Vec<f64>,
    side_lengths: Vec<f64>,
}

impl ToleranceBox {
    pub fn new(center: Vec<f64>, side_lengths: Vec<f64>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if center.len() != side_lengths.len() {
            return Err(Error::DimensionMismatch {
                expected: side_lengths.len(),
                found: center.len(),
            });
        }
        validate_tolerances(&side_lengths, side_lengths.len())?;
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite box center".into()));
        }
        Ok(Self { center, side_lengths })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn side_lengths(&self) -> &[f64] {
        &self.side_lengths
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Closed membership test.
    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.center.len()
            && p.iter()
                .zip(&self.center)
                .zip(&self.side_lengths)
                .all(|((x, c), s)| (x - c).abs() <= s / 2.0)
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.side_lengths)
            .map(|(c, s)| c - s / 2.0)
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.side_lengths)
            .map(|(c, s)| c + s / 2.0)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateMode {
    Centered,
    Combinatorial,
    /// Boxes supplied by the caller.
    Custom,
}

/// A family of equally sized candidate boxes together with the point/box
/// incidence in both directions. Points are referred to by their position in
/// [`CandidateSet::points`]; ids are only used for reporting.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    points: Vec<ParamPoint>,
    tolerances: Vec<f64>,
    boxes: Vec<ToleranceBox>,
    incidence: Vec<Vec<usize>>,
    reverse: Vec<Vec<usize>>,
    mode: CandidateMode,
}

impl CandidateSet {
    /// Builds a candidate set from caller-supplied boxes. All boxes must share
    /// the same side lengths.
    pub fn from_boxes(points: &[ParamPoint], boxes: Vec<ToleranceBox>) -> Result<Self> {
        let d = validate_points(points)?;
        let first = boxes.first().ok_or(Error::EmptyInput)?;
        let tolerances = first.side_lengths().to_vec();
        for b in &boxes {
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
            }
            if b.side_lengths() != tolerances.as_slice() {
                return Err(Error::InvalidParameter(
                    "candidate boxes must share identical side lengths".into(),
                ));
            }
        }
        Ok(Self::assemble(points.to_vec(), tolerances, boxes, CandidateMode::Custom))
    }

    fn assemble(
        points: Vec<ParamPoint>,
        tolerances: Vec<f64>,
        boxes: Vec<ToleranceBox>,
        mode: CandidateMode,
    ) -> Self {
        let incidence: Vec<Vec<usize>> = boxes
            .par_iter()
            .map(|b| {
                points
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| b.contains(&p.coords))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let mut reverse = vec![Vec::new(); points.len()];
        for (b, members) in incidence.iter().enumerate() {
            for &p in members {
                reverse[p].push(b);
            }
        }
        Self { points, tolerances, boxes, incidence, reverse, mode }
    }

    pub fn points(&self) -> &[ParamPoint] {
        &self.points
    }

    pub fn tolerances(&self) -> &[f64] {
        &self.tolerances
    }

    pub fn boxes(&self) -> &[ToleranceBox] {
        &self.boxes
    }

    pub fn mode(&self) -> CandidateMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.tolerances.len()
    }

    /// Indices (into `points()`) of the points covered by box `b`.
    pub fn covered_by(&self, b: usize) -> &[usize] {
        &self.incidence[b]
    }

    /// Indices of the boxes covering point `p`.
    pub fn covering(&self, p: usize) -> &[usize] {
        &self.reverse[p]
    }

    /// Ids of the points covered by box `b`.
    pub fn covered_ids(&self, b: usize) -> Vec<u64> {
        self.incidence[b].iter().map(|&i| self.points[i].id).collect()
    }
}

/// Which solver produced a [`CoverSolution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverAlgorithm {
    GreedyAll,
    GreedyK,
    Shifting,
    OracleMin,
    OracleMaxK,
}

impl CoverAlgorithm {
    /// Algorithms whose output always covers every point.
    pub fn is_full_cover(self) -> bool {
        matches!(self, Self::GreedyAll | Self::Shifting | Self::OracleMin)
    }
}

/// Selected boxes plus the point/box membership they induce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSolution {
    pub selected: Vec<ToleranceBox>,
    /// Candidate indices of the selected boxes, when they came from a
    /// [`CandidateSet`].
    pub candidate_indices: Option<Vec<usize>>,
    /// For each selected box, the ids of all input points inside it.
    pub members: Vec<Vec<u64>>,
    pub covered_ids: Vec<u64>,
    pub uncovered_ids: Vec<u64>,
    pub algorithm: CoverAlgorithm,
}

impl CoverSolution {
    /// Recomputes membership from scratch with the closed-box test.
    pub fn from_selection(
        points: &[ParamPoint],
        selected: Vec<ToleranceBox>,
        candidate_indices: Option<Vec<usize>>,
        algorithm: CoverAlgorithm,
    ) -> Self {
        let members = selected
            .iter()
            .map(|b| {
                points
                    .iter()
                    .filter(|p| b.contains(&p.coords))
                    .map(|p| p.id)
                    .collect()
            })
            .collect();
        let (covered, uncovered): (Vec<&ParamPoint>, Vec<&ParamPoint>) = points
            .iter()
            .partition(|p| selected.iter().any(|b| b.contains(&p.coords)));
        Self {
            selected,
            candidate_indices,
            members,
            covered_ids: covered.into_iter().map(|p| p.id).collect(),
            uncovered_ids: uncovered.into_iter().map(|p| p.id).collect(),
            algorithm,
        }
    }

    pub fn k(&self) -> usize {
        self.selected.len()
    }

    pub fn n_points(&self) -> usize {
        self.covered_ids.len() + self.uncovered_ids.len()
    }

    pub fn coverage(&self) -> f64 {
        match self.n_points() {
            0 => 0.0,
            n => self.covered_ids.len() as f64 / n as f64,
        }
    }
}

/// Checks a point set and returns its dimension.
pub fn validate_points(points: &[ParamPoint]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let d = first.dim();
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut seen = HashSet::with_capacity(points.len());
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(p.id));
        }
        if !seen.insert(p.id) {
            return Err(Error::DuplicateId(p.id));
        }
    }
    Ok(d)
}

pub(crate) fn validate_tolerances(tolerances: &[f64], d: usize) -> Result<()> {
    if tolerances.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: tolerances.len() });
    }
    match tolerances.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        Some(&t) => Err(Error::InvalidTolerance(t)),
        None => Ok(()),
    }
}

/// One box centered at each input point, in input order.
pub fn candidate_boxes_centered(points: &[ParamPoint], tolerances: &[f64]) -> Result<CandidateSet> {
    let d = validate_points(points)?;
    validate_tolerances(tolerances, d)?;
    let boxes = points
        .iter()
        .map(|p| ToleranceBox { center: p.coords.clone(), side_lengths: tolerances.to_vec() })
        .collect();
    Ok(CandidateSet::assemble(
        points.to_vec(),
        tolerances.to_vec(),
        boxes,
        CandidateMode::Centered,
    ))
}

/// All boxes whose interval in every dimension has an endpoint at a point
/// coordinate, refusing when `(2n)^d` exceeds [`DEFAULT_COMBINATORIAL_CAP`].
pub fn candidate_boxes_combinatorial(
    points: &[ParamPoint],
    tolerances: &[f64],
) -> Result<CandidateSet> {
    candidate_boxes_combinatorial_capped(points, tolerances, DEFAULT_COMBINATORIAL_CAP)
}

pub fn candidate_boxes_combinatorial_capped(
    points: &[ParamPoint],
    tolerances: &[f64],
    cap: u64,
) -> Result<CandidateSet> {
    let d = validate_points(points)?;
    validate_tolerances(tolerances, d)?;
    let bound = (2 * points.len() as u64).checked_pow(d as u32);
    if bound.is_none_or(|b| b > cap) {
        return Err(Error::SizeCap(format!(
            "(2n)^d = ({})^{} combinatorial candidates exceeds cap {}",
            2 * points.len(),
            d,
            cap
        )));
    }
    let per_dim: Vec<Vec<f64>> = (0..d)
        .map(|i| interval_centers(points.iter().map(|p| p.coords[i]), tolerances[i]))
        .collect();
    let mut boxes = Vec::with_capacity(per_dim.iter().map(Vec::len).product());
    let mut odometer = vec![0usize; d];
    'outer: loop {
        let center = odometer.iter().enumerate().map(|(i, &j)| per_dim[i][j]).collect();
        boxes.push(ToleranceBox { center, side_lengths: tolerances.to_vec() });
        for i in (0..d).rev() {
            odometer[i] += 1;
            if odometer[i] < per_dim[i].len() {
                continue 'outer;
            }
            odometer[i] = 0;
        }
        break;
    }
    Ok(CandidateSet::assemble(
        points.to_vec(),
        tolerances.to_vec(),
        boxes,
        CandidateMode::Combinatorial,
    ))
}

/// Centers of the intervals `[c - s, c]` and `[c, c + s]` for every
/// coordinate `c`, deduplicated by exact equality, first occurrence kept.
fn interval_centers(coords: impl Iterator<Item = f64>, side: f64) -> Vec<f64> {
    let half = side / 2.0;
    let mut out: Vec<f64> = Vec::new();
    for c in coords {
        for center in [anchored_center(c, c - half, half), anchored_center(c, c + half, half)] {
            if !out.contains(&center) {
                out.push(center);
            }
        }
    }
    out
}

/// Rounding in `c ± s/2` can leave the anchoring coordinate a hair outside
/// the closed box; step the center towards the anchor until it is inside.
fn anchored_center(anchor: f64, mut center: f64, half: f64) -> f64 {
    while (anchor - center).abs() > half {
        center = if center < anchor { center.next_up() } else { center.next_down() };
    }
    center
}
