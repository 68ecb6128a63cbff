//! Picard iteration constrained to a closed sphere around the start point.

use serde::Serialize;

use super::{hypothesis_gates, iterate, Gate, IterationTrace, SolverError, SolverParams};
use crate::contraction::{probe_set, ContractionReport, SelfMap};
use crate::space::{sphere_members, PMSpace, SphereSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereHypothesis {
    pub u_grid: Vec<f64>,
    pub floor: f64,
    /// First probe `u` with `F(x0, f(x0))(u) <= 1 - r`, and the value there.
    pub witness: Option<(f64, f64)>,
}

impl SphereHypothesis {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereReport {
    pub sphere: SphereSpec,
    pub members: Vec<usize>,
    pub hypothesis: SphereHypothesis,
    pub contraction: ContractionReport,
    /// Trace indices whose iterate lies outside the sphere.
    pub escapes: Vec<usize>,
    pub limit_in_sphere: Option<bool>,
    /// An escape or an outside limit: the configured claim is contradicted.
    pub counterexample: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereRun {
    pub trace: IterationTrace,
    pub sphere: SphereReport,
}

impl SphereRun {
    pub fn certified(&self) -> bool {
        self.trace.certified
    }
}

/// Iterates from `x0` inside the closed sphere `{x : F(x, x0)(t) >= 1 - r}`.
///
/// The contraction gate is evaluated on the sphere's members only. A failed
/// hypothesis is an error unless `params.force` is set, in which case the run
/// goes ahead uncertified.
#[allow(clippy::too_many_arguments)]
pub fn picard_in_sphere(
    space: &PMSpace,
    f: &SelfMap,
    x0: usize,
    r: f64,
    t: f64,
    u_grid: &[f64],
    params: &SolverParams,
) -> Result<SphereRun, SolverError> {
    params.validate()?;
    let spec = SphereSpec::closed(space.check_index(x0)?, r, t)?;
    f.fits(space)?;
    if let Some(&bad) = u_grid.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
        return Err(SolverError::InvalidProbe(bad));
    }

    let first = space.distance(x0, f.apply(x0));
    let floor = 1.0 - r;
    let u_probes = if u_grid.is_empty() {
        probe_set(space, params.k, &[], false)
    } else {
        u_grid.to_vec()
    };
    let witness = u_probes
        .iter()
        .map(|&u| (u, first.eval(u)))
        .find(|&(_, value)| value <= floor);
    let hypothesis = SphereHypothesis {
        u_grid: u_probes,
        floor,
        witness,
    };
    if let Some((u, value)) = witness {
        if !params.force {
            return Err(SolverError::SphereHypothesis { u, value, floor });
        }
    }

    let members = sphere_members(space, &spec)?;
    let contraction = params.contraction_check(Some(&members)).run(space, f)?;
    let mut gates = hypothesis_gates(space, params, &contraction)?;
    gates.push(Gate {
        name: "sphere_hypothesis",
        passed: hypothesis.holds(),
        detail: match witness {
            None => format!("F(x0, f(x0))(u) > {floor} on every probe"),
            Some((u, value)) => format!("F(x0, f(x0))({u}) = {value} <= {floor}"),
        },
    });
    let mut trace = iterate(space, f, x0, params, gates, contraction.clone());

    let escapes: Vec<usize> = trace
        .iterates
        .iter()
        .enumerate()
        .filter(|(_, x)| !members.contains(x))
        .map(|(n, _)| n)
        .collect();
    let limit_in_sphere = trace.fixed_point().map(|y| members.contains(&y));
    let counterexample =
        trace.gates_passed() && (!escapes.is_empty() || limit_in_sphere == Some(false));
    trace.certified &= escapes.is_empty() && limit_in_sphere != Some(false);
    Ok(SphereRun {
        trace,
        sphere: SphereReport {
            sphere: spec,
            members,
            hypothesis,
            contraction,
            escapes,
            limit_in_sphere,
            counterexample,
        },
    })
}
