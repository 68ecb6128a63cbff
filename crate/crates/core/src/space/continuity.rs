//! Finite probe for (ε, δ)-continuity of a self-map at each point.
//!
//! On a finite space the δ-neighbourhood of `a` shrinks, for small enough
//! δ, to `{x : F(x, a)(t) = 1}`. Continuity at `a` for a given `(ε, t)` then
//! amounts to `F(fx, fa)(t) > 1 - ε` for every such `x`. The probe only
//! samples `(ε, t)` on grids, so it can refute continuity but never prove it.

use serde::Serialize;

use super::{PMSpace, SpaceError};
use crate::contraction::SelfMap;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityFailure {
    pub point: usize,
    pub neighbour: usize,
    pub eps: f64,
    pub t: f64,
    /// `F(fx, fa)(t)`, which is at most `1 - eps`.
    pub image_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub eps_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub failures: Vec<ContinuityFailure>,
    pub note: &'static str,
}

impl ContinuityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn discontinuous_points(&self) -> Vec<usize> {
        let mut points: Vec<usize> = self.failures.iter().map(|f| f.point).collect();
        points.dedup();
        points
    }
}

const NOTE: &str = "sampled probe: a failure refutes continuity, a pass does not establish it";

pub fn continuity_probe(
    space: &PMSpace,
    f: &SelfMap,
    eps_grid: &[f64],
    t_grid: &[f64],
) -> Result<ContinuityReport, SpaceError> {
    if f.len() != space.len() {
        return Err(SpaceError::MapSize {
            expected: space.len(),
            got: f.len(),
        });
    }
    if let Some(&bad) = eps_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(SpaceError::InvalidAlpha(bad));
    }
    if let Some(&bad) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(SpaceError::InvalidT(bad));
    }
    let mut failures = Vec::new();
    for a in 0..space.len() {
        for &t in t_grid {
            for x in (0..space.len()).filter(|&x| space.distance(x, a).eval(t) >= 1.0) {
                let image_value = space.distance(f.apply(x), f.apply(a)).eval(t);
                for &eps in eps_grid {
                    if image_value <= 1.0 - eps {
                        failures.push(ContinuityFailure {
                            point: a,
                            neighbour: x,
                            eps,
                            t,
                            image_value,
                        });
                    }
                }
            }
        }
    }
    Ok(ContinuityReport {
        eps_grid: eps_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        failures,
        note: NOTE,
    })
}
