//! Finite-prefix diagnostics for convergence, the Cauchy property and joint
//! limits of distances. None of these prove anything about an infinite
//! sequence; they report what the listed terms show.

use serde::Serialize;

use super::{PMSpace, SpaceError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceDiagnostics {
    pub sequence: Vec<usize>,
    pub target: Option<usize>,
    pub alpha: f64,
    pub t: f64,
}

impl SequenceDiagnostics {
    pub fn new(
        sequence: Vec<usize>,
        target: Option<usize>,
        alpha: f64,
        t: f64,
    ) -> SequenceDiagnostics {
        SequenceDiagnostics {
            sequence,
            target,
            alpha,
            t,
        }
    }
}

fn check_alpha_t(alpha: f64, t: f64) -> Result<(), SpaceError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SpaceError::InvalidAlpha(alpha));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(SpaceError::InvalidT(t));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub t: f64,
    /// Least `m` with `F(x_n, x)(t) > 1 - alpha` for every listed `n >= m`.
    pub m_index: Option<usize>,
    /// Last listed index where the bound fails.
    pub last_failure: Option<usize>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.m_index.is_some()
    }
}

pub fn check_convergence(
    space: &PMSpace,
    diag: &SequenceDiagnostics,
) -> Result<ConvergenceReport, SpaceError> {
    check_alpha_t(diag.alpha, diag.t)?;
    let target = space.check_index(diag.target.ok_or(SpaceError::MissingTarget)?)?;
    for &x in &diag.sequence {
        space.check_index(x)?;
    }
    let floor = 1.0 - diag.alpha;
    let last_failure = diag
        .sequence
        .iter()
        .rposition(|&x| space.distance(x, target).eval(diag.t) <= floor);
    let m_index = match last_failure {
        None => Some(0),
        Some(n) if n + 1 < diag.sequence.len() => Some(n + 1),
        Some(_) => None,
    };
    Ok(ConvergenceReport {
        alpha: diag.alpha,
        t: diag.t,
        m_index,
        last_failure,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyReport {
    pub alpha: f64,
    pub t: f64,
    pub p_max: usize,
    /// Least `m` such that every listed pair `(n, n + p)` with `n >= m` and
    /// `p <= p_max` satisfies the bound.
    pub m_index: Option<usize>,
    /// The failing pair `(n, p)` with the largest `n`.
    pub witness: Option<(usize, usize)>,
}

pub fn check_cauchy_prefix(
    space: &PMSpace,
    sequence: &[usize],
    alpha: f64,
    t: f64,
    p_max: usize,
) -> Result<CauchyReport, SpaceError> {
    check_alpha_t(alpha, t)?;
    if p_max == 0 {
        return Err(SpaceError::InvalidWindow);
    }
    for &x in sequence {
        space.check_index(x)?;
    }
    let floor = 1.0 - alpha;
    let len = sequence.len();
    let mut witness = None;
    for n in (0..len).rev() {
        let failing = (1..=p_max)
            .take_while(|p| n + p < len)
            .find(|p| space.distance(sequence[n + p], sequence[n]).eval(t) <= floor);
        if let Some(p) = failing {
            witness = Some((n, p));
            break;
        }
    }
    let m_index = match witness {
        None => Some(0),
        // The pair (m, m + 1) must still be listed for the verdict to mean anything.
        Some((n, _)) if n + 2 < len => Some(n + 1),
        Some(_) => None,
    };
    Ok(CauchyReport {
        alpha,
        t,
        p_max,
        m_index,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointLimitReport {
    pub t: f64,
    pub eps: f64,
    pub limit_value: f64,
    /// `|F(x_n, y_n)(t) - F(x, y)(t)|` for each listed `n`.
    pub deviations: Vec<f64>,
    /// Larger of the two convergence indices at the probed alpha.
    pub convergence_index: Option<usize>,
    /// Least `n0` with every deviation from `n0` on at most `eps`.
    pub settled_from: Option<usize>,
    /// Every deviation past the convergence index is at most `eps`.
    pub holds: bool,
}

/// Checks `F(x_n, y_n)(t) → F(x, y)(t)` on the listed terms.
#[allow(clippy::too_many_arguments)]
pub fn check_joint_limit(
    space: &PMSpace,
    xs: &[usize],
    ys: &[usize],
    x: usize,
    y: usize,
    alpha: f64,
    t: f64,
    eps: f64,
) -> Result<JointLimitReport, SpaceError> {
    if eps.is_nan() || eps < 0.0 {
        return Err(SpaceError::InvalidTolerance(eps));
    }
    let cx = check_convergence(
        space,
        &SequenceDiagnostics::new(xs.to_vec(), Some(x), alpha, t),
    )?;
    let cy = check_convergence(
        space,
        &SequenceDiagnostics::new(ys.to_vec(), Some(y), alpha, t),
    )?;
    let convergence_index = match (cx.m_index, cy.m_index) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    let limit_value = space.distance(x, y).eval(t);
    let deviations: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&a, &b)| (space.distance(a, b).eval(t) - limit_value).abs())
        .collect();
    let settled_from = match deviations.iter().rposition(|&d| d > eps) {
        None => Some(0),
        Some(n) if n + 1 < deviations.len() => Some(n + 1),
        Some(_) => None,
    };
    let holds = convergence_index.is_some_and(|m| deviations.iter().skip(m).all(|&d| d <= eps));
    Ok(JointLimitReport {
        t,
        eps,
        limit_value,
        deviations,
        convergence_index,
        settled_from,
        holds,
    })
}
