//! Picard iteration with hypothesis gates and per-step bound chains.
//!
//! Two modes share the iteration but differ in what they certify:
//!
//! * [`SolverMode::Menger`]: sup-convolution triangle, TSR-P contraction,
//!   `k <= 1/2`; the step chain is read at `kⁿ t`.
//! * [`SolverMode::Pointwise`]: pointwise triangle, TSR contraction, any
//!   `k` in `(0, 1)`; the step chain is read at `t`.
//!
//! Both record `bound[n][t] = 1 - kⁿ (1 - F(x₁, x₀)(t))` on every probe and
//! check the Cauchy bound `F(xₙ₊ₚ, xₙ)(t) >= bound[n][t]` over the whole
//! trace. A run is certified only when every gate passes and no recorded
//! step violates either chain.

mod power;
mod sphere;
mod uniqueness;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{idempotent_dominance, AlgebraError, TriangleMode};
use crate::contraction::{
    probe_set, ContractionCheck, ContractionClass, ContractionError, ContractionReport, SelfMap,
};
use crate::ddf::Ddf;
use crate::space::{check_axioms_under, PMSpace, SpaceError};

pub use power::{power_picard, PowerReport, PowerRun, CONTINUITY_EPS};
pub use sphere::{picard_in_sphere, SphereHypothesis, SphereReport, SphereRun};
pub use uniqueness::{verify_uniqueness, UniquenessReport, UniquenessWitness};

/// Grid step for the `α ∗ α >= α` scan.
pub const IDEMPOTENCE_GRID: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("contraction constant k = {0} must lie in (0, 1)")]
    InvalidK(f64),
    #[error("stopping tolerance eps = {0} must lie in (0, 1)")]
    InvalidEps(f64),
    #[error("max_iter must be at least 1")]
    InvalidBudget,
    #[error("probe argument t = {0} must be positive and finite")]
    InvalidProbe(f64),
    #[error("sphere hypothesis fails at u = {u}: F(x0, f(x0))(u) = {value} is not above {floor}")]
    SphereHypothesis { u: f64, value: f64, floor: f64 },
    #[error(
        "f^{m} is not a TSR contraction for k = {k} (max defect {max_defect}); refusing to certify"
    )]
    PowerNotContractive { m: u32, k: f64, max_defect: f64 },
    #[error("continuity probe fails at point {point} (eps = {eps}, t = {t})")]
    Discontinuous { point: usize, eps: f64, t: f64 },
    #[error("point {0} is not fixed by the map")]
    NotFixed(usize),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverMode {
    #[serde(rename = "thm33")]
    Menger,
    #[serde(rename = "thm41")]
    Pointwise,
}

impl SolverMode {
    pub fn name(self) -> &'static str {
        match self {
            SolverMode::Menger => "thm33",
            SolverMode::Pointwise => "thm41",
        }
    }

    /// The triangle function whose axiom the mode relies on.
    pub fn triangle(self, space: &PMSpace) -> TriangleMode {
        let tnorm = space.mode().tnorm.clone();
        match self {
            SolverMode::Menger => TriangleMode::sup_convolution(tnorm),
            SolverMode::Pointwise => TriangleMode::pointwise(tnorm),
        }
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<SolverMode, String> {
        match s {
            "thm33" => Ok(SolverMode::Menger),
            "thm41" => Ok(SolverMode::Pointwise),
            other => Err(format!(
                "unknown solver mode {other:?} (expected \"thm33\" or \"thm41\")"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub mode: SolverMode,
    pub k: f64,
    pub t_grid: Vec<f64>,
    pub eps: f64,
    pub max_iter: usize,
    /// Largest power probed by the TSR-P gate in Menger mode.
    pub m_max: u32,
    /// Run past failed hypotheses instead of returning an error; the trace
    /// is then uncertified.
    pub force: bool,
}

impl SolverParams {
    pub fn new(mode: SolverMode, k: f64) -> SolverParams {
        SolverParams {
            mode,
            k,
            t_grid: Vec::new(),
            eps: 1e-9,
            max_iter: 1000,
            m_max: 4,
            force: false,
        }
    }

    pub fn grid(mut self, t_grid: &[f64]) -> SolverParams {
        self.t_grid = t_grid.to_vec();
        self
    }

    pub fn eps(mut self, eps: f64) -> SolverParams {
        self.eps = eps;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> SolverParams {
        self.max_iter = max_iter;
        self
    }

    pub fn m_max(mut self, m_max: u32) -> SolverParams {
        self.m_max = m_max;
        self
    }

    pub fn force(mut self, force: bool) -> SolverParams {
        self.force = force;
        self
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(SolverError::InvalidK(self.k));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(SolverError::InvalidEps(self.eps));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidBudget);
        }
        if let Some(&bad) = self.t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(SolverError::InvalidProbe(bad));
        }
        Ok(())
    }

    /// The contraction check this mode requires, optionally on a subset.
    pub fn contraction_check(&self, domain: Option<&[usize]>) -> ContractionCheck {
        let class = match self.mode {
            SolverMode::Menger => ContractionClass::TsrP,
            SolverMode::Pointwise => ContractionClass::Tsr,
        };
        let check = ContractionCheck::new(class, self.k)
            .grid(&self.t_grid)
            .m_max(self.m_max);
        match domain {
            Some(d) => check.on(d),
            None => check,
        }
    }

    fn probes(&self, space: &PMSpace) -> Vec<f64> {
        probe_set(space, self.k, &self.t_grid, false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Gate {
        Gate {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Hypotheses shared by every mode: verified t-norm, idempotent dominance,
/// the triangle axiom under the mode's triangle function, the contraction
/// report, and `k <= 1/2` in Menger mode.
pub fn hypothesis_gates(
    space: &PMSpace,
    params: &SolverParams,
    contraction: &ContractionReport,
) -> Result<Vec<Gate>, SolverError> {
    let tnorm = &space.mode().tnorm;
    let mut gates = vec![Gate::new(
        "tnorm_verified",
        tnorm.is_verified(),
        format!("t-norm {tnorm}"),
    )];
    let idem = idempotent_dominance(tnorm, IDEMPOTENCE_GRID)?;
    gates.push(Gate::new(
        "idempotent_dominance",
        idem.dominant,
        match idem.witness {
            None => format!("a*a >= a on grid step {IDEMPOTENCE_GRID}"),
            Some(a) => format!("a*a < a at a = {a} (shortfall {})", idem.shortfall),
        },
    ));
    let triangle = params.mode.triangle(space);
    let axioms = check_axioms_under(space, &triangle);
    gates.push(Gate::new(
        "space_axioms",
        axioms.passed(),
        match axioms.violations.first() {
            None => format!("{triangle}: {} triples checked", axioms.triples_checked),
            Some(v) => format!(
                "{triangle}: fails on ({}, {}, {}) at t = {}",
                v.p, v.q, v.r, v.t
            ),
        },
    ));
    gates.push(Gate::new(
        "contraction",
        contraction.holds,
        format!(
            "{} with k = {}: max defect {}",
            contraction.class, contraction.k, contraction.max_defect
        ),
    ));
    if params.mode == SolverMode::Menger {
        gates.push(Gate::new(
            "k_at_most_half",
            params.k <= 0.5,
            format!("k = {}", params.k),
        ));
    }
    Ok(gates)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// `exact` when `f(point) = point` was observed; otherwise the residual
    /// dropped below `eps` first.
    Converged {
        point: usize,
        exact: bool,
        steps: usize,
    },
    /// `iterates[start]` recurs after `period` steps without a fixpoint.
    Cycle {
        start: usize,
        period: usize,
    },
    BudgetExhausted,
}

impl Outcome {
    pub fn fixed_point(&self) -> Option<usize> {
        match self {
            Outcome::Converged { point, .. } => Some(*point),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainViolation {
    pub n: usize,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyViolation {
    pub n: usize,
    pub p: usize,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationTrace {
    pub mode: SolverMode,
    pub k: f64,
    pub probes: Vec<f64>,
    pub iterates: Vec<usize>,
    /// `distance(xₙ₊₁, xₙ)`.
    pub step_distance: Vec<Ddf>,
    /// `1 - kⁿ (1 - F(x₁, x₀)(t))` per step and probe.
    pub bound_value: Vec<Vec<f64>>,
    /// The step distance read where the mode's chain reads it.
    pub step_value: Vec<Vec<f64>>,
    /// `1 - min_t F(xₙ₊₁, xₙ)(t)` over the probes.
    pub residual: Vec<f64>,
    pub outcome: Outcome,
    pub gates: Vec<Gate>,
    pub contraction: ContractionReport,
    pub chain_violations: Vec<ChainViolation>,
    pub cauchy_violations: Vec<CauchyViolation>,
    pub tolerance: f64,
    /// `Some` after an exact fixpoint: whether `distance(f(y), y)` is `H0`.
    pub fixed_point_verified: Option<bool>,
    pub certified: bool,
}

impl IterationTrace {
    pub fn fixed_point(&self) -> Option<usize> {
        self.outcome.fixed_point()
    }

    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    /// Smallest bound over the probes at step `n`.
    pub fn min_bound(&self, n: usize) -> f64 {
        self.bound_value[n]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_step_value(&self, n: usize) -> f64 {
        self.step_value[n]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn certify(&mut self) {
        self.certified = self.gates_passed()
            && self.chain_violations.is_empty()
            && self.cauchy_violations.is_empty()
            && self.fixed_point_verified != Some(false);
    }
}

/// Runs `xₙ₊₁ = f(xₙ)` from `x0` under the mode's gates.
pub fn picard(
    space: &PMSpace,
    f: &SelfMap,
    x0: usize,
    params: &SolverParams,
) -> Result<IterationTrace, SolverError> {
    params.validate()?;
    space.check_index(x0)?;
    let contraction = params.contraction_check(None).run(space, f)?;
    let gates = hypothesis_gates(space, params, &contraction)?;
    Ok(iterate(space, f, x0, params, gates, contraction))
}

/// Picard runs from every point, in parallel, in index order.
pub fn picard_from_all(
    space: &PMSpace,
    f: &SelfMap,
    params: &SolverParams,
) -> Result<Vec<IterationTrace>, SolverError> {
    params.validate()?;
    let contraction = params.contraction_check(None).run(space, f)?;
    let gates = hypothesis_gates(space, params, &contraction)?;
    Ok((0..space.len())
        .into_par_iter()
        .map(|x0| iterate(space, f, x0, params, gates.clone(), contraction.clone()))
        .collect())
}

pub(crate) fn iterate(
    space: &PMSpace,
    f: &SelfMap,
    x0: usize,
    params: &SolverParams,
    gates: Vec<Gate>,
    contraction: ContractionReport,
) -> IterationTrace {
    let probes = params.probes(space);
    let mut iterates = vec![x0];
    let mut visited = HashMap::from([(x0, 0usize)]);
    let mut step_distance = Vec::new();
    let mut residual = Vec::new();
    let mut n = 0;
    let outcome = loop {
        if n == params.max_iter {
            break Outcome::BudgetExhausted;
        }
        let current = iterates[n];
        let next = f.apply(current);
        iterates.push(next);
        let step = space.distance(next, current).clone();
        residual.push(1.0 - probes.iter().map(|&t| step.eval(t)).fold(1.0, f64::min));
        step_distance.push(step);
        if next == current {
            break Outcome::Converged {
                point: next,
                exact: true,
                steps: n,
            };
        }
        if let Some(&start) = visited.get(&next) {
            break Outcome::Cycle {
                start,
                period: n + 1 - start,
            };
        }
        if residual[n] <= params.eps {
            break Outcome::Converged {
                point: next,
                exact: false,
                steps: n + 1,
            };
        }
        visited.insert(next, n + 1);
        n += 1;
    };

    let k = params.k;
    let first = space.distance(iterates[1], iterates[0]);
    let bound_at = |n: usize, t: f64| 1.0 - k.powi(n as i32) * (1.0 - first.eval(t));
    let bound_value: Vec<Vec<f64>> = (0..step_distance.len())
        .map(|n| probes.iter().map(|&t| bound_at(n, t)).collect())
        .collect();
    let step_value: Vec<Vec<f64>> = step_distance
        .iter()
        .enumerate()
        .map(|(n, step)| {
            probes
                .iter()
                .map(|&t| match params.mode {
                    SolverMode::Menger => step.eval(k.powi(n as i32) * t),
                    SolverMode::Pointwise => step.eval(t),
                })
                .collect()
        })
        .collect();

    let tolerance = space.default_tolerance();
    let mut chain_violations = Vec::new();
    for (n, (values, bounds)) in step_value.iter().zip(&bound_value).enumerate() {
        for ((&t, &value), &bound) in probes.iter().zip(values).zip(bounds) {
            if value < bound - tolerance {
                chain_violations.push(ChainViolation { n, t, value, bound });
            }
        }
    }
    let mut cauchy_violations = Vec::new();
    for n in 0..iterates.len() {
        for p in 1..iterates.len() - n {
            let d = space.distance(iterates[n + p], iterates[n]);
            for &t in &probes {
                let value = d.eval(t);
                let bound = bound_at(n, t);
                if value < bound - tolerance {
                    cauchy_violations.push(CauchyViolation {
                        n,
                        p,
                        t,
                        value,
                        bound,
                    });
                }
            }
        }
    }

    let fixed_point_verified = match outcome {
        Outcome::Converged {
            point, exact: true, ..
        } => Some(space.distance(f.apply(point), point).is_h0(0.0)),
        _ => None,
    };
    let mut trace = IterationTrace {
        mode: params.mode,
        k,
        probes,
        iterates,
        step_distance,
        bound_value,
        step_value,
        residual,
        outcome,
        gates,
        contraction,
        chain_violations,
        cauchy_violations,
        tolerance,
        fixed_point_verified,
        certified: false,
    };
    trace.certify();
    trace
}
