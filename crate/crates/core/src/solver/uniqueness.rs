//! Numerical replay of the uniqueness argument for two fixed points.

use serde::Serialize;

use super::SolverError;
use crate::contraction::{probe_set, tsr_defect, ContractionReport, SelfMap};
use crate::space::PMSpace;

/// A probe where `d = 1 - F(y, z)(t)` is not bounded by `k d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessWitness {
    pub t: f64,
    pub gap: f64,
    pub scaled_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub y: usize,
    pub z: usize,
    pub k: f64,
    pub probes: Vec<f64>,
    pub witness: Option<UniquenessWitness>,
    pub distance_is_h0: bool,
    pub unique: bool,
    /// TSR re-check run when a contradiction is found.
    pub contraction_recheck: Option<ContractionReport>,
    pub contraction_violated: bool,
}

/// For fixed points `y` and `z`, the TSR inequality at `(y, z)` reads
/// `d <= k d` with `d = 1 - F(y, z)(t)`, forcing `d = 0`. Any probe with
/// `d > k d` contradicts the contraction claim, which is then re-checked.
pub fn verify_uniqueness(
    space: &PMSpace,
    f: &SelfMap,
    y: usize,
    z: usize,
    k: f64,
    t_grid: &[f64],
) -> Result<UniquenessReport, SolverError> {
    if !(k > 0.0 && k < 1.0) {
        return Err(SolverError::InvalidK(k));
    }
    f.fits(space)?;
    for p in [y, z] {
        space.check_index(p)?;
        if f.apply(p) != p {
            return Err(SolverError::NotFixed(p));
        }
    }
    if let Some(&bad) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(SolverError::InvalidProbe(bad));
    }
    let probes = probe_set(space, k, t_grid, false);
    let d = space.distance(y, z);
    let witness = probes.iter().find_map(|&t| {
        let gap = 1.0 - d.eval(t);
        let scaled_gap = k * gap;
        (gap > scaled_gap).then_some(UniquenessWitness { t, gap, scaled_gap })
    });
    let contraction_recheck = match witness {
        Some(_) => Some(tsr_defect(space, f, k, t_grid)?),
        None => None,
    };
    let contraction_violated = contraction_recheck.as_ref().is_some_and(|r| !r.holds);
    let distance_is_h0 = d.is_h0(0.0);
    Ok(UniquenessReport {
        y,
        z,
        k,
        probes,
        unique: witness.is_none() && distance_is_h0,
        witness,
        distance_is_h0,
        contraction_recheck,
        contraction_violated,
    })
}
