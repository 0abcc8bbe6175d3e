//! Shifting strategy for `d = 2`.
//!
//! The plane is cut into a grid whose cell widths equal the box side lengths,
//! anchored at the componentwise minimum of the points. Blocks of `l × l`
//! cells are solved exactly and independently; the union of the block
//! optima is a feasible cover. All `l²` block offsets are tried and the
//! smallest union wins (first offset in `(x, y)` order on ties). The result
//! is within a factor `(1 + 1/l)²` of the optimum.

use std::collections::{BTreeMap, HashMap};

use super::exact::{min_cover, Family};
use super::{
    candidate_boxes_combinatorial_capped, validate_points, validate_tolerances, CoverAlgorithm,
    CoverSolution, ParamPoint, ToleranceBox,
};
use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Points allowed in a single block before the exact block solver refuses.
const MAX_BLOCK_POINTS: usize = 200;
const MAX_BLOCK_NODES: u64 = 50_000_000;

/// `ε` such that `1 + ε = (1 + 1/l)^d`.
pub fn shifting_epsilon(l: usize, d: usize) -> f64 {
    (1.0 + 1.0 / l as f64).powi(d as i32) - 1.0
}

pub fn shifting_cover_2d(points: &[ParamPoint], tolerances: &[f64], l: usize) -> Result<CoverSolution> {
    let d = validate_points(points)?;
    if d != 2 {
        return Err(Error::ShiftDimension(d));
    }
    validate_tolerances(tolerances, d)?;
    if l == 0 {
        return Err(Error::InvalidShift(l));
    }

    let origin: Vec<f64> = (0..d)
        .map(|i| points.iter().map(|p| p.coords[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let cells: Vec<[i64; 2]> = points
        .iter()
        .map(|p| {
            let cell = |i: usize| ((p.coords[i] - origin[i]) / tolerances[i]).floor() as i64;
            [cell(0), cell(1)]
        })
        .collect();

    let l_i = l as i64;
    let max_block_boxes = (l + 1) * (l + 1);
    let mut cache: HashMap<Vec<usize>, Vec<ToleranceBox>> = HashMap::new();
    let mut best: Option<Vec<ToleranceBox>> = None;
    for sx in 0..l_i {
        for sy in 0..l_i {
            let mut blocks: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
            for (i, c) in cells.iter().enumerate() {
                let key = ((c[0] - sx).div_euclid(l_i), (c[1] - sy).div_euclid(l_i));
                blocks.entry(key).or_default().push(i);
            }
            let mut union = Vec::new();
            for members in blocks.into_values() {
                if let Some(boxes) = cache.get(&members) {
                    union.extend(boxes.iter().cloned());
                    continue;
                }
                let boxes = solve_block(points, &members, tolerances, max_block_boxes)?;
                union.extend(boxes.iter().cloned());
                cache.insert(members, boxes);
            }
            if best.as_ref().is_none_or(|b| union.len() < b.len()) {
                best = Some(union);
            }
        }
    }
    let selected = best.expect("l >= 1 gives at least one shift");
    Ok(CoverSolution::from_selection(points, selected, None, CoverAlgorithm::Shifting))
}

/// Exact minimum cover of one block's points using combinatorial candidates
/// generated from those points only.
fn solve_block(
    points: &[ParamPoint],
    members: &[usize],
    tolerances: &[f64],
    max_boxes: usize,
) -> Result<Vec<ToleranceBox>> {
    if members.len() > MAX_BLOCK_POINTS {
        return Err(Error::SizeCap(format!(
            "shifting block holds {} points (limit {MAX_BLOCK_POINTS})",
            members.len()
        )));
    }
    let block: Vec<ParamPoint> = members.iter().map(|&i| points[i].clone()).collect();
    let candidates =
        candidate_boxes_combinatorial_capped(&block, tolerances, u64::MAX)?;
    let n = block.len();
    let family = Family::reduce(
        n,
        (0..candidates.len()).map(|b| BitSet::from_indices(n, candidates.covered_by(b).iter().copied())),
    );
    let picked = min_cover(&family, max_boxes, MAX_BLOCK_NODES)?
        .expect("combinatorial candidates cover their own points");
    Ok(picked
        .into_iter()
        .map(|i| candidates.boxes()[family.origin[i]].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_any_l() {
        let p = vec![ParamPoint::new(0, vec![0.3, -2.0])];
        for l in 1..5 {
            let s = shifting_cover_2d(&p, &[0.1, 0.2], l).unwrap();
            assert_eq!(s.k(), 1);
            assert_eq!(s.coverage(), 1.0);
            assert_eq!(s.algorithm, CoverAlgorithm::Shifting);
        }
    }

    #[test]
    fn epsilon_for_l2() {
        assert_eq!(shifting_epsilon(2, 2), 1.25);
        assert_eq!(shifting_epsilon(1, 2), 3.0);
    }

    #[test]
    fn rejects_other_dimensions() {
        let p = vec![ParamPoint::new(0, vec![0.0, 0.0, 0.0])];
        assert_eq!(shifting_cover_2d(&p, &[1.0; 3], 2).unwrap_err(), Error::ShiftDimension(3));
        let p = vec![ParamPoint::new(0, vec![0.0])];
        assert_eq!(shifting_cover_2d(&p, &[1.0], 2).unwrap_err(), Error::ShiftDimension(1));
        let p = vec![ParamPoint::new(0, vec![0.0, 0.0])];
        assert_eq!(shifting_cover_2d(&p, &[1.0; 2], 0).unwrap_err(), Error::InvalidShift(0));
    }

    #[test]
    fn grid_of_far_points() {
        let p: Vec<ParamPoint> = (0..9)
            .map(|i| ParamPoint::new(i, vec![(i % 3) as f64 * 5.0, (i / 3) as f64 * 5.0]))
            .collect();
        let s = shifting_cover_2d(&p, &[1.0, 1.0], 2).unwrap();
        assert_eq!(s.k(), 9);
        assert!(s.uncovered_ids.is_empty());
    }
}
