use super::{CandidateSet, CoverAlgorithm, CoverSolution};
use crate::error::{Error, Result};

/// Greedy set cover: repeatedly take the box covering the most still-uncovered
/// points until every point is covered. Ties go to the lowest candidate index.
///
/// Runs in `O(d·n·r)` including the incidence computation done when the
/// candidate set was built; the selection loop itself is `O(n·r)`.
pub fn greedy_cover_all(candidates: &CandidateSet) -> Result<CoverSolution> {
    let orphans: Vec<u64> = (0..candidates.points().len())
        .filter(|&p| candidates.covering(p).is_empty())
        .map(|p| candidates.points()[p].id)
        .collect();
    if !orphans.is_empty() {
        return Err(Error::OrphanPoints(orphans));
    }
    let picked = greedy_select(candidates, usize::MAX);
    Ok(solution(candidates, picked, CoverAlgorithm::GreedyAll))
}

/// Greedy maximum coverage with a budget of `k` boxes. Stops early once every
/// point is covered or no box adds anything.
pub fn greedy_cover_k(candidates: &CandidateSet, k: usize) -> Result<CoverSolution> {
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    let picked = greedy_select(candidates, k);
    Ok(solution(candidates, picked, CoverAlgorithm::GreedyK))
}

fn greedy_select(candidates: &CandidateSet, limit: usize) -> Vec<usize> {
    let mut gain: Vec<usize> = (0..candidates.len()).map(|b| candidates.covered_by(b).len()).collect();
    let mut covered = vec![false; candidates.points().len()];
    let mut picked = Vec::new();
    while picked.len() < limit {
        let mut best = None;
        let mut best_gain = 0;
        for (b, &g) in gain.iter().enumerate() {
            if g > best_gain {
                best_gain = g;
                best = Some(b);
            }
        }
        let Some(b) = best else { break };
        picked.push(b);
        for &p in candidates.covered_by(b) {
            if !covered[p] {
                covered[p] = true;
                for &other in candidates.covering(p) {
                    gain[other] -= 1;
                }
            }
        }
    }
    picked
}

fn solution(candidates: &CandidateSet, picked: Vec<usize>, algorithm: CoverAlgorithm) -> CoverSolution {
    let boxes = picked.iter().map(|&b| candidates.boxes()[b].clone()).collect();
    CoverSolution::from_selection(candidates.points(), boxes, Some(picked), algorithm)
}
