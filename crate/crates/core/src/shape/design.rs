//! Turning selected boxes back into representative shapes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{measure, procrustes_mean, MeasurementSpec, ParameterizedMesh};
use crate::cover::{CoverSolution, ParamPoint, ToleranceBox};
use crate::error::{Error, Result};

/// Synthesizes shapes for parameter-space points that have no subject behind
/// them.
pub trait Extrapolator: Sync {
    fn synthesize(&self, points: &[ParamPoint]) -> Result<Vec<ParameterizedMesh>>;
}

#[derive(Clone, Copy)]
pub struct DesignOptions<'a> {
    /// Fewer members than this triggers extrapolation.
    pub min_members: usize,
    /// Members' measurement mean must lie within this fraction of the half
    /// side length from the box center, per dimension.
    pub center_tolerance_fraction: f64,
    /// Points sampled uniformly inside a sparse box.
    pub sparse_samples: usize,
    pub seed: u64,
    pub extrapolator: Option<&'a dyn Extrapolator>,
}

impl Default for DesignOptions<'_> {
    fn default() -> Self {
        Self {
            min_members: 3,
            center_tolerance_fraction: 0.5,
            sparse_samples: 20,
            seed: 0,
            extrapolator: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DesignModel {
    /// Mesh id is the box index.
    pub mesh: ParameterizedMesh,
    pub members: usize,
    /// Number of synthesized substitutes mixed in (0 when not extrapolated).
    pub substitutes: usize,
}

/// One design model per selected box, in selection order.
///
/// A box whose members are numerous enough and centered well enough is
/// represented by the Procrustes mean of its members. Otherwise
/// `options.sparse_samples` points are drawn uniformly in the box (stream
/// `box index` of a ChaCha8 generator seeded with `options.seed`), turned
/// into shapes by the extrapolator, and averaged together with the members.
pub fn design_models(
    corpus: &[ParameterizedMesh],
    solution: &CoverSolution,
    spec: &MeasurementSpec,
    options: &DesignOptions<'_>,
) -> Result<Vec<DesignModel>> {
    if options.min_members == 0 {
        return Err(Error::InvalidParameter("min_members must be at least 1".into()));
    }
    let by_id: HashMap<u64, &ParameterizedMesh> = corpus.iter().map(|m| (m.id, m)).collect();
    solution
        .selected
        .par_iter()
        .zip(&solution.members)
        .enumerate()
        .map(|(b, (bx, ids))| {
            let members = ids
                .iter()
                .map(|id| by_id.get(id).map(|m| (*m).clone()).ok_or(Error::UnknownMember(*id)))
                .collect::<Result<Vec<_>>>()?;
            design_one(b, bx, members, spec, options)
        })
        .collect()
}

fn design_one(
    index: usize,
    bx: &ToleranceBox,
    mut members: Vec<ParameterizedMesh>,
    spec: &MeasurementSpec,
    options: &DesignOptions<'_>,
) -> Result<DesignModel> {
    let count = members.len();
    if count >= options.min_members && well_centered(&members, bx, spec, options.center_tolerance_fraction)? {
        let mesh = procrustes_mean(&members)?.with_id(index as u64);
        return Ok(DesignModel { mesh, members: count, substitutes: 0 });
    }
    let extrapolator = options.extrapolator.ok_or(Error::ExtrapolationRequired(index))?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(index as u64);
    let samples: Vec<ParamPoint> = (0..options.sparse_samples)
        .map(|i| {
            let coords = bx
                .lower()
                .iter()
                .zip(bx.side_lengths())
                .map(|(lo, s)| lo + s * rng.random::<f64>())
                .collect();
            ParamPoint::new(i as u64, coords)
        })
        .collect();
    let substitutes = extrapolator.synthesize(&samples)?;
    let added = substitutes.len();
    members.extend(substitutes);
    if members.is_empty() {
        return Err(Error::InvalidParameter(format!("box {index} has no members and no samples")));
    }
    let mesh = procrustes_mean(&members)?.with_id(index as u64);
    Ok(DesignModel { mesh, members: count, substitutes: added })
}

fn well_centered(
    members: &[ParameterizedMesh],
    bx: &ToleranceBox,
    spec: &MeasurementSpec,
    fraction: f64,
) -> Result<bool> {
    let d = spec.dim();
    let mut mean = vec![0.0; d];
    for m in members {
        for (acc, c) in mean.iter_mut().zip(measure(m, spec)?.coords) {
            *acc += c;
        }
    }
    Ok(mean
        .iter()
        .zip(bx.center())
        .zip(bx.side_lengths())
        .all(|((sum, c), s)| (sum / members.len() as f64 - c).abs() <= fraction * s / 2.0))
}
