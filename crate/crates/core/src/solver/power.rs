//! Fixed points of `f` through a contracting power `g = fᵐ`.

use serde::Serialize;

use super::{
    hypothesis_gates, iterate, ChainViolation, Gate, IterationTrace, SolverError, SolverParams,
};
use crate::contraction::{ContractionReport, SelfMap};
use crate::space::{continuity_probe, ContinuityReport, PMSpace};

/// `ε` values probed for continuity of `f`.
pub const CONTINUITY_EPS: [f64; 3] = [0.5, 0.1, 0.01];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    pub m: u32,
    pub g_contraction: ContractionReport,
    pub continuity: ContinuityReport,
    /// Violations of `F(gⁿ(f x0), gⁿ(x0))(t) >= 1 - kⁿ (1 - F(f x0, x0)(t))`.
    pub aux_violations: Vec<ChainViolation>,
    /// Whether `f(y) = y` for the point `g` converged to.
    pub fixed_by_f: Option<bool>,
    pub g_fixed_points: Vec<usize>,
    /// A certified `g` run whose limit is not fixed by `f`, or not `g`'s only
    /// fixed point.
    pub counterexample: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerRun {
    pub trace: IterationTrace,
    pub power: PowerReport,
}

impl PowerRun {
    pub fn certified(&self) -> bool {
        self.trace.certified
    }

    pub fn fixed_point(&self) -> Option<usize> {
        self.trace.fixed_point()
    }
}

/// Iterates `g = fᵐ` from `x0`, then checks that the limit is fixed by `f`.
///
/// Refuses to run when `g` fails its contraction check or `f` fails the
/// continuity probe, unless `params.force` is set.
pub fn power_picard(
    space: &PMSpace,
    f: &SelfMap,
    m: u32,
    x0: usize,
    params: &SolverParams,
) -> Result<PowerRun, SolverError> {
    params.validate()?;
    space.check_index(x0)?;
    let g = f.power(m)?;
    let g_contraction = params.contraction_check(None).run(space, &g)?;
    if !g_contraction.holds && !params.force {
        return Err(SolverError::PowerNotContractive {
            m,
            k: params.k,
            max_defect: g_contraction.max_defect,
        });
    }
    let probes = params.probes(space);
    let continuity = continuity_probe(space, f, &CONTINUITY_EPS, &probes)?;
    if let Some(fail) = continuity.failures.first() {
        if !params.force {
            return Err(SolverError::Discontinuous {
                point: fail.point,
                eps: fail.eps,
                t: fail.t,
            });
        }
    }

    let mut gates = hypothesis_gates(space, params, &g_contraction)?;
    gates.push(Gate {
        name: "continuity_probe",
        passed: continuity.passed(),
        detail: continuity.note.to_string(),
    });
    let mut trace = iterate(space, &g, x0, params, gates, g_contraction.clone());

    let k = params.k;
    let tolerance = trace.tolerance;
    let fx0 = f.apply(x0);
    let first = space.distance(fx0, x0);
    let mut aux_violations = Vec::new();
    let mut shifted = fx0;
    for (n, &base) in trace.iterates.iter().enumerate() {
        let d = space.distance(shifted, base);
        for &t in &trace.probes {
            let value = d.eval(t);
            let bound = 1.0 - k.powi(n as i32) * (1.0 - first.eval(t));
            if value < bound - tolerance {
                aux_violations.push(ChainViolation { n, t, value, bound });
            }
        }
        shifted = g.apply(shifted);
    }

    let y = trace.outcome.fixed_point();
    let fixed_by_f = y.map(|y| f.apply(y) == y);
    let g_fixed_points = g.fixed_points();
    let consistent = fixed_by_f != Some(false) && y.is_none_or(|y| g_fixed_points == [y]);
    let counterexample = trace.certified && !consistent;
    trace.certified &= aux_violations.is_empty() && consistent && fixed_by_f == Some(true);
    Ok(PowerRun {
        trace,
        power: PowerReport {
            m,
            g_contraction,
            continuity,
            aux_violations,
            fixed_by_f,
            g_fixed_points,
            counterexample,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{canonical, halving, pair};
    use super::super::{picard, SolverMode};
    use super::*;
    use crate::algebra::TriangleKind;

    #[test]
    fn square_of_halving() {
        let space = canonical(TriangleKind::Pointwise);
        let f = halving(&space);
        let run = power_picard(
            &space,
            &f,
            2,
            1,
            &SolverParams::new(SolverMode::Pointwise, 0.25),
        )
        .unwrap();
        assert_eq!(run.trace.iterates, vec![1, 3, 5, 0, 0]);
        assert_eq!(run.fixed_point(), Some(0));
        assert_eq!(run.power.fixed_by_f, Some(true));
        assert_eq!(run.power.g_fixed_points, vec![0]);
        assert!(run.power.aux_violations.is_empty());
        assert!(run.power.continuity.passed());
        assert!(run.certified());
    }

    #[test]
    fn first_power_is_plain_picard() {
        let space = canonical(TriangleKind::Pointwise);
        let f = halving(&space);
        let params = SolverParams::new(SolverMode::Pointwise, 0.5);
        let run = power_picard(&space, &f, 1, 1, &params).unwrap();
        let plain = picard(&space, &f, 1, &params).unwrap();
        assert_eq!(run.trace.iterates, plain.iterates);
        assert_eq!(run.trace.step_value, plain.step_value);
        assert_eq!(run.trace.outcome, plain.outcome);
    }

    #[test]
    fn two_cycle_is_refused() {
        let space = pair(0.5);
        let swap = SelfMap::new(&space, vec![1, 0]).unwrap();
        let params = SolverParams::new(SolverMode::Pointwise, 0.5);
        let err = power_picard(&space, &swap, 2, 0, &params).unwrap_err();
        assert!(matches!(err, SolverError::PowerNotContractive { m: 2, .. }));
        let forced = power_picard(&space, &swap, 2, 0, &params.force(true)).unwrap();
        assert_eq!(forced.fixed_point(), Some(0));
        assert_eq!(forced.power.fixed_by_f, Some(false));
        assert!(!forced.certified());
        assert!(!forced.power.counterexample);
    }

    #[test]
    fn zero_power_is_an_error() {
        let space = canonical(TriangleKind::Pointwise);
        assert!(power_picard(
            &space,
            &halving(&space),
            0,
            1,
            &SolverParams::new(SolverMode::Pointwise, 0.5)
        )
        .is_err());
    }
}
