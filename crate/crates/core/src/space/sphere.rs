//! t-open and t-closed spheres, t-limit points, t-closed sets.

use serde::Serialize;

use super::{PMSpace, SpaceError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereSpec {
    pub center: usize,
    pub radius: f64,
    pub t: f64,
    pub closed: bool,
}

impl SphereSpec {
    pub fn new(center: usize, radius: f64, t: f64, closed: bool) -> Result<SphereSpec, SpaceError> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(SpaceError::InvalidRadius(radius));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(SpaceError::InvalidT(t));
        }
        Ok(SphereSpec {
            center,
            radius,
            t,
            closed,
        })
    }

    pub fn open(center: usize, radius: f64, t: f64) -> Result<SphereSpec, SpaceError> {
        SphereSpec::new(center, radius, t, false)
    }

    pub fn closed(center: usize, radius: f64, t: f64) -> Result<SphereSpec, SpaceError> {
        SphereSpec::new(center, radius, t, true)
    }

    pub fn contains(&self, space: &PMSpace, x: usize) -> bool {
        let value = space.distance(x, self.center).eval(self.t);
        let floor = 1.0 - self.radius;
        if self.closed {
            value >= floor
        } else {
            value > floor
        }
    }
}

/// Members in index order. Open spheres use `>`, closed spheres `>=`, with no
/// slack.
pub fn sphere_members(space: &PMSpace, spec: &SphereSpec) -> Result<Vec<usize>, SpaceError> {
    space.check_index(spec.center)?;
    Ok((0..space.len())
        .filter(|&x| spec.contains(space, x))
        .collect())
}

/// `y` is a t-limit point of `subset` iff every t-open sphere around `y`
/// meets `subset`; on a finite subset that is `max_s F(y, s)(t) = 1`.
pub fn is_t_limit_point(space: &PMSpace, y: usize, subset: &[usize], t: f64) -> bool {
    subset.iter().any(|&s| space.distance(y, s).eval(t) >= 1.0)
}

/// t-limit points of `subset` that lie outside it.
pub fn t_limit_points_outside(space: &PMSpace, subset: &[usize], t: f64) -> Vec<usize> {
    (0..space.len())
        .filter(|y| !subset.contains(y))
        .filter(|&y| is_t_limit_point(space, y, subset, t))
        .collect()
}

pub fn is_t_closed(space: &PMSpace, subset: &[usize], t: f64) -> bool {
    t_limit_points_outside(space, subset, t).is_empty()
}
