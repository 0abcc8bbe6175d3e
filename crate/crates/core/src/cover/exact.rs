//! Exhaustive solvers used as verification oracles and as the per-block
//! solver of the shifting strategy.
//!
//! Both oracles first reduce the candidate family: boxes covering nothing,
//! boxes whose covered set repeats an earlier box, and boxes whose covered set
//! is strictly contained in another box's are dropped. No optimum is lost by
//! this, and the surviving boxes keep their original (lowest) indices, which
//! is what tie-breaking refers to.

use std::collections::HashSet;

use super::{CandidateSet, CoverAlgorithm, CoverSolution};
use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Size limits for the exhaustive oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_points: usize,
    /// Limit on the reduced (distinct, maximal) candidate family.
    pub max_boxes: usize,
    pub max_k: usize,
    /// Search nodes before giving up.
    pub max_nodes: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_points: 15, max_boxes: 60, max_k: 4, max_nodes: 200_000_000 }
    }
}

pub(crate) struct Family {
    pub universe: usize,
    pub sets: Vec<BitSet>,
    /// Original candidate index of each reduced set.
    pub origin: Vec<usize>,
}

impl Family {
    /// Reduced family of covered sets over `universe` elements. `sets` are
    /// in candidate order.
    pub fn reduce(universe: usize, sets: impl IntoIterator<Item = BitSet>) -> Self {
        let mut seen = HashSet::new();
        let mut distinct: Vec<(usize, BitSet)> = Vec::new();
        for (i, s) in sets.into_iter().enumerate() {
            if !s.is_empty() && seen.insert(s.clone()) {
                distinct.push((i, s));
            }
        }
        let keep: Vec<bool> = distinct
            .iter()
            .map(|(_, s)| !distinct.iter().any(|(_, t)| s != t && s.is_subset(t)))
            .collect();
        let (origin, sets) = distinct
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(e, _)| e)
            .unzip();
        Self { universe, sets, origin }
    }

    pub fn from_candidates(c: &CandidateSet) -> Self {
        let n = c.points().len();
        Self::reduce(
            n,
            (0..c.len()).map(|b| BitSet::from_indices(n, c.covered_by(b).iter().copied())),
        )
    }
}

struct Search<'a> {
    sets: &'a [BitSet],
    by_point: Vec<Vec<usize>>,
    nodes: u64,
    max_nodes: u64,
}

impl<'a> Search<'a> {
    fn new(family: &'a Family, max_nodes: u64) -> Self {
        let mut by_point = vec![Vec::new(); family.universe];
        for (s, set) in family.sets.iter().enumerate() {
            for p in set.iter() {
                by_point[p].push(s);
            }
        }
        Self { sets: &family.sets, by_point, nodes: 0, max_nodes }
    }

    /// Can `uncovered` be covered by at most `budget` sets with index >= `from`?
    fn feasible(&mut self, uncovered: &BitSet, budget: usize, from: usize) -> Result<bool> {
        if uncovered.is_empty() {
            return Ok(true);
        }
        if budget == 0 {
            return Ok(false);
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::SizeCap(format!(
                "exact cover search exceeded {} nodes",
                self.max_nodes
            )));
        }
        let mut max_gain = 0;
        for s in &self.sets[from..] {
            max_gain = max_gain.max(s.intersection_count(uncovered));
        }
        if max_gain * budget < uncovered.count() {
            return Ok(false);
        }
        // branch on the most constrained point
        let mut pivot = None;
        let mut fewest = usize::MAX;
        for p in uncovered.iter() {
            let options = self.by_point[p].iter().filter(|&&s| s >= from).count();
            if options < fewest {
                fewest = options;
                pivot = Some(p);
            }
        }
        let Some(p) = pivot else { return Ok(false) };
        if fewest == 0 {
            return Ok(false);
        }
        let options: Vec<usize> = self.by_point[p].iter().copied().filter(|&s| s >= from).collect();
        for s in options {
            let mut rest = uncovered.clone();
            rest.difference_with(&self.sets[s]);
            if self.feasible(&rest, budget - 1, from)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Lexicographically smallest minimum-cardinality cover of `family`'s
/// universe, as indices into `family.sets`. `None` if no cover exists.
/// Cover sizes are tried in increasing order, stopping at `max_size`.
pub(crate) fn min_cover(family: &Family, max_size: usize, max_nodes: u64) -> Result<Option<Vec<usize>>> {
    let universe = BitSet::full(family.universe);
    let mut union = BitSet::new(family.universe);
    for s in &family.sets {
        union.union_with(s);
    }
    if union != universe {
        return Ok(None);
    }
    let mut search = Search::new(family, max_nodes);
    let Some(k) = (0..=max_size.min(family.sets.len()))
        .map(|k| search.feasible(&universe, k, 0).map(|ok| ok.then_some(k)))
        .find_map(|r| r.transpose())
        .transpose()?
    else {
        return Err(Error::SizeCap(format!("no cover with at most {max_size} boxes")));
    };
    let mut chosen = Vec::with_capacity(k);
    let mut uncovered = universe;
    let mut from = 0;
    while chosen.len() < k {
        let remaining = k - chosen.len();
        let mut next = None;
        for i in from..family.sets.len() {
            let mut rest = uncovered.clone();
            rest.difference_with(&family.sets[i]);
            if search.feasible(&rest, remaining - 1, i + 1)? {
                next = Some((i, rest));
                break;
            }
        }
        let (i, rest) = next.expect("a cover of the established minimum size exists");
        chosen.push(i);
        uncovered = rest;
        from = i + 1;
    }
    Ok(Some(chosen))
}

fn check_point_limit(c: &CandidateSet, limits: &OracleLimits) -> Result<()> {
    if c.points().len() > limits.max_points {
        return Err(Error::SizeCap(format!(
            "{} points exceeds the oracle limit of {}",
            c.points().len(),
            limits.max_points
        )));
    }
    Ok(())
}

fn check_box_limit(family: &Family, limits: &OracleLimits) -> Result<()> {
    if family.sets.len() > limits.max_boxes {
        return Err(Error::SizeCap(format!(
            "{} distinct maximal candidate boxes exceeds the oracle limit of {}",
            family.sets.len(),
            limits.max_boxes
        )));
    }
    Ok(())
}

/// Minimum-cardinality sub-collection of the candidates covering every point.
///
/// Exhaustive: cover sizes are tried in increasing order, each by a complete
/// branching search. Among minimum covers the lexicographically smallest
/// index set (over the reduced family) is returned.
pub fn exact_min_cover(candidates: &CandidateSet) -> Result<CoverSolution> {
    exact_min_cover_with(candidates, &OracleLimits::default())
}

pub fn exact_min_cover_with(candidates: &CandidateSet, limits: &OracleLimits) -> Result<CoverSolution> {
    check_point_limit(candidates, limits)?;
    let family = Family::from_candidates(candidates);
    check_box_limit(&family, limits)?;
    let picked = match min_cover(&family, family.sets.len(), limits.max_nodes)? {
        Some(p) => p,
        None => {
            let orphans = (0..candidates.points().len())
                .filter(|&p| candidates.covering(p).is_empty())
                .map(|p| candidates.points()[p].id)
                .collect();
            return Err(Error::OrphanPoints(orphans));
        }
    };
    Ok(to_solution(candidates, &family, &picked, CoverAlgorithm::OracleMin))
}

/// The `k`-subset of candidates covering the most points, by enumeration of
/// all `k`-subsets in lexicographic order (first maximum wins). When fewer
/// than `k` distinct maximal boxes exist, all of them are returned.
pub fn exact_max_coverage(candidates: &CandidateSet, k: usize) -> Result<CoverSolution> {
    exact_max_coverage_with(candidates, k, &OracleLimits::default())
}

pub fn exact_max_coverage_with(
    candidates: &CandidateSet,
    k: usize,
    limits: &OracleLimits,
) -> Result<CoverSolution> {
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    if k > limits.max_k {
        return Err(Error::SizeCap(format!("k = {k} exceeds the oracle limit of {}", limits.max_k)));
    }
    check_point_limit(candidates, limits)?;
    let family = Family::from_candidates(candidates);
    check_box_limit(&family, limits)?;
    let k = k.min(family.sets.len());
    let mut best: (usize, Vec<usize>) = (0, Vec::new());
    let mut stack = Vec::with_capacity(k);
    enumerate_subsets(&family.sets, k, 0, &BitSet::new(family.universe), &mut stack, &mut best);
    Ok(to_solution(candidates, &family, &best.1, CoverAlgorithm::OracleMaxK))
}

fn enumerate_subsets(
    sets: &[BitSet],
    k: usize,
    from: usize,
    union: &BitSet,
    stack: &mut Vec<usize>,
    best: &mut (usize, Vec<usize>),
) {
    if stack.len() == k {
        let count = union.count();
        if count > best.0 || best.1.is_empty() {
            *best = (count, stack.clone());
        }
        return;
    }
    let needed = k - stack.len();
    for i in from..=sets.len() - needed {
        let mut next = union.clone();
        next.union_with(&sets[i]);
        stack.push(i);
        enumerate_subsets(sets, k, i + 1, &next, stack, best);
        stack.pop();
    }
}

fn to_solution(
    candidates: &CandidateSet,
    family: &Family,
    picked: &[usize],
    algorithm: CoverAlgorithm,
) -> CoverSolution {
    let indices: Vec<usize> = picked.iter().map(|&i| family.origin[i]).collect();
    let boxes = indices.iter().map(|&b| candidates.boxes()[b].clone()).collect();
    CoverSolution::from_selection(candidates.points(), boxes, Some(indices), algorithm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{candidate_boxes_centered, candidate_boxes_combinatorial, ParamPoint};

    fn pts1(xs: &[f64]) -> Vec<ParamPoint> {
        xs.iter().enumerate().map(|(i, &x)| ParamPoint::new(i as u64, vec![x])).collect()
    }

    #[test]
    fn reduction_drops_duplicates_and_dominated() {
        let n = 4;
        let f = Family::reduce(
            n,
            [
                BitSet::from_indices(n, [0]),
                BitSet::from_indices(n, [0, 1]),
                BitSet::from_indices(n, [0, 1]),
                BitSet::new(n),
                BitSet::from_indices(n, [2, 3]),
            ],
        );
        assert_eq!(f.origin, vec![1, 4]);
    }

    #[test]
    fn far_points() {
        let c = candidate_boxes_centered(&pts1(&[0.0, 10.0]), &[1.0]).unwrap();
        assert_eq!(exact_min_cover(&c).unwrap().k(), 2);
    }

    #[test]
    fn boundary_inclusive_single_interval() {
        let c = candidate_boxes_combinatorial(&pts1(&[0.0, 0.5, 1.0]), &[1.0]).unwrap();
        let s = exact_min_cover(&c).unwrap();
        assert_eq!(s.k(), 1);
        assert_eq!(s.selected[0].lower(), vec![0.0]);
        assert_eq!(s.selected[0].upper(), vec![1.0]);
    }

    #[test]
    fn max_coverage_basics() {
        let c = candidate_boxes_centered(&pts1(&[0.0, 10.0, 20.0]), &[1.0]).unwrap();
        let s = exact_max_coverage(&c, 1).unwrap();
        assert!((s.coverage() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.candidate_indices, Some(vec![0]));
        let s = exact_max_coverage(&c, 3).unwrap();
        assert_eq!(s.coverage(), 1.0);
        assert_eq!(exact_max_coverage(&c, 0).unwrap_err(), Error::InvalidK(0));
        assert!(matches!(exact_max_coverage(&c, 5), Err(Error::SizeCap(_))));
    }

    #[test]
    fn caps_refuse() {
        let xs: Vec<f64> = (0..16).map(|i| i as f64 * 10.0).collect();
        let c = candidate_boxes_centered(&pts1(&xs), &[1.0]).unwrap();
        assert!(matches!(exact_min_cover(&c), Err(Error::SizeCap(_))));
        let limits = OracleLimits { max_boxes: 3, ..Default::default() };
        let c = candidate_boxes_centered(&pts1(&xs[..5]), &[1.0]).unwrap();
        assert!(matches!(exact_min_cover_with(&c, &limits), Err(Error::SizeCap(_))));
    }

    #[test]
    fn lexicographic_tie_break() {
        // {0,1} {1,2} {2,3} {0,3}: both {0,2} and {1,3} are minimum covers.
        let n = 4;
        let f = Family::reduce(
            n,
            [
                BitSet::from_indices(n, [0, 1]),
                BitSet::from_indices(n, [1, 2]),
                BitSet::from_indices(n, [2, 3]),
                BitSet::from_indices(n, [0, 3]),
            ],
        );
        assert_eq!(min_cover(&f, 4, 1_000).unwrap(), Some(vec![0, 2]));
    }
}
