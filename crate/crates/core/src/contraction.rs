//! Contraction classes for self-maps of a finite PM space.
//!
//! Each class is decided through a defect functional whose maximum over all
//! ordered pairs and probe arguments is non-positive exactly when the class
//! condition holds on the probes:
//!
//! | class | defect at `(x, y, t)` |
//! |-------|-----------------------|
//! | TSR   | `(1 - F(fx, fy)(kt)) - k (1 - F(x, y)(t))` |
//! | TSR-P | the TSR defect at `s = kᵐ t` for `m = 0..=m_max` |
//! | B     | `F(x, y)(t) - F(fx, fy)(kt)` |
//! | H     | `(1 - kt) - F(fx, fy)(kt)`, only where `F(x, y)(t) > 1 - t` |
//!
//! The probe set always contains every positive threshold of the space, the
//! same thresholds divided by `k`, the midpoints between consecutive entries
//! and one point on either side. Between consecutive probes both sides of
//! the TSR and B inequalities are constant, so those checks are decisive on
//! step functions. The H trigger compares against the continuous `1 - t`;
//! for H the probes are samples and per-probe outcomes are reported.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ddf::Ddf;
use crate::space::PMSpace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContractionError {
    #[error("contraction constant k = {0} must lie in (0, 1)")]
    InvalidK(f64),
    #[error("map table has {got} entries but the space has {expected} points")]
    NotTotal { expected: usize, got: usize },
    #[error("map sends point {from} to {to}, which is not in the space")]
    NotClosed { from: usize, to: usize },
    #[error("probe argument t = {0} must be positive and finite")]
    InvalidProbe(f64),
    #[error("TSR-P checks need m_max >= 1")]
    InvalidPowerRange,
    #[error("map power must be at least 1")]
    InvalidPower,
    #[error("search tolerance {0} must be positive")]
    InvalidSearchTolerance(f64),
    #[error("unknown contraction class {0:?} (expected \"tsr\", \"tsr_p\", \"b\" or \"h\")")]
    UnknownClass(String),
    #[error("domain point {0} is not in the space")]
    DomainOutOfRange(usize),
}

/// A total map of a space's point set into itself, stored as an index table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SelfMap {
    image: Vec<usize>,
}

impl SelfMap {
    pub fn new(space: &PMSpace, image: Vec<usize>) -> Result<SelfMap, ContractionError> {
        if image.len() != space.len() {
            return Err(ContractionError::NotTotal {
                expected: space.len(),
                got: image.len(),
            });
        }
        if let Some((from, &to)) = image.iter().enumerate().find(|(_, &to)| to >= space.len()) {
            return Err(ContractionError::NotClosed { from, to });
        }
        Ok(SelfMap { image })
    }

    pub fn from_fn<F>(space: &PMSpace, f: F) -> Result<SelfMap, ContractionError>
    where
        F: Fn(usize) -> usize,
    {
        SelfMap::new(space, (0..space.len()).map(f).collect())
    }

    pub fn identity(space: &PMSpace) -> SelfMap {
        SelfMap {
            image: (0..space.len()).collect(),
        }
    }

    pub fn constant(space: &PMSpace, point: usize) -> Result<SelfMap, ContractionError> {
        SelfMap::new(space, vec![point; space.len()])
    }

    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// `x ↦ self(other(x))`.
    pub fn after(&self, other: &SelfMap) -> SelfMap {
        SelfMap {
            image: other.image.iter().map(|&x| self.image[x]).collect(),
        }
    }

    /// The `m`-fold iterate `fᵐ`.
    pub fn power(&self, m: u32) -> Result<SelfMap, ContractionError> {
        if m == 0 {
            return Err(ContractionError::InvalidPower);
        }
        let mut out = self.clone();
        for _ in 1..m {
            out = self.after(&out);
        }
        Ok(out)
    }

    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.image[x] == x).collect()
    }

    pub(crate) fn fits(&self, space: &PMSpace) -> Result<(), ContractionError> {
        if self.len() != space.len() {
            return Err(ContractionError::NotTotal {
                expected: space.len(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContractionClass {
    #[serde(rename = "tsr")]
    Tsr,
    #[serde(rename = "tsr_p")]
    TsrP,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "h")]
    H,
}

impl ContractionClass {
    pub fn name(self) -> &'static str {
        match self {
            ContractionClass::Tsr => "tsr",
            ContractionClass::TsrP => "tsr_p",
            ContractionClass::B => "b",
            ContractionClass::H => "h",
        }
    }
}

impl fmt::Display for ContractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContractionClass {
    type Err = ContractionError;

    fn from_str(s: &str) -> Result<ContractionClass, ContractionError> {
        match s.to_ascii_lowercase().as_str() {
            "tsr" => Ok(ContractionClass::Tsr),
            "tsr_p" | "tsrp" => Ok(ContractionClass::TsrP),
            "b" => Ok(ContractionClass::B),
            "h" => Ok(ContractionClass::H),
            _ => Err(ContractionError::UnknownClass(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectWitness {
    pub x: usize,
    pub y: usize,
    pub t: f64,
    pub m: Option<u32>,
    pub defect: f64,
}

/// Largest defect over all pairs at one probe. `defect` is `None` when no
/// pair triggers the H condition at this probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeDefect {
    pub t: f64,
    pub m: Option<u32>,
    pub defect: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub class: ContractionClass,
    pub k: f64,
    pub max_defect: f64,
    pub witness: Option<DefectWitness>,
    pub holds: bool,
    pub tolerance: f64,
    pub m_max: Option<u32>,
    pub pairs: usize,
    pub probes: Vec<f64>,
    pub profile: Vec<ProbeDefect>,
}

impl ContractionReport {
    /// Largest defect recorded at probe `t` (over all `m` for TSR-P).
    pub fn defect_at(&self, t: f64) -> Option<f64> {
        self.profile
            .iter()
            .filter(|p| p.t == t)
            .filter_map(|p| p.defect)
            .reduce(f64::max)
    }
}

/// One contraction check: class, constant and probe configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCheck {
    pub class: ContractionClass,
    pub k: f64,
    pub t_grid: Vec<f64>,
    pub m_max: u32,
    pub tolerance: Option<f64>,
    pub domain: Option<Vec<usize>>,
}

impl ContractionCheck {
    pub fn new(class: ContractionClass, k: f64) -> ContractionCheck {
        ContractionCheck {
            class,
            k,
            t_grid: Vec::new(),
            m_max: 4,
            tolerance: None,
            domain: None,
        }
    }

    pub fn grid(mut self, t_grid: &[f64]) -> ContractionCheck {
        self.t_grid = t_grid.to_vec();
        self
    }

    pub fn m_max(mut self, m_max: u32) -> ContractionCheck {
        self.m_max = m_max;
        self
    }

    pub fn tolerance(mut self, tolerance: f64) -> ContractionCheck {
        self.tolerance = Some(tolerance);
        self
    }

    /// Restricts the pairs to `domain × domain`; images may leave the domain.
    pub fn on(mut self, domain: &[usize]) -> ContractionCheck {
        self.domain = Some(domain.to_vec());
        self
    }

    pub fn with_k(&self, k: f64) -> ContractionCheck {
        ContractionCheck { k, ..self.clone() }
    }

    fn validate(&self, space: &PMSpace, f: &SelfMap) -> Result<(), ContractionError> {
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(ContractionError::InvalidK(self.k));
        }
        if let Some(&bad) = self.t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(ContractionError::InvalidProbe(bad));
        }
        if self.class == ContractionClass::TsrP && self.m_max == 0 {
            return Err(ContractionError::InvalidPowerRange);
        }
        if let Some(domain) = &self.domain {
            if let Some(&bad) = domain.iter().find(|&&x| x >= space.len()) {
                return Err(ContractionError::DomainOutOfRange(bad));
            }
        }
        f.fits(space)
    }

    pub fn run(&self, space: &PMSpace, f: &SelfMap) -> Result<ContractionReport, ContractionError> {
        self.validate(space, f)?;
        let probes = probe_set(
            space,
            self.k,
            &self.t_grid,
            self.class == ContractionClass::H,
        );
        Ok(self.evaluate(space, f, probes))
    }

    /// Evaluates the defect on exactly the given probes, with no augmentation.
    fn evaluate(&self, space: &PMSpace, f: &SelfMap, probes: Vec<f64>) -> ContractionReport {
        let points: Vec<usize> = match &self.domain {
            Some(d) => d.clone(),
            None => (0..space.len()).collect(),
        };
        let pairs: Vec<(usize, usize)> = points
            .iter()
            .flat_map(|&x| points.iter().map(move |&y| (x, y)))
            .collect();
        let powers: Vec<Option<u32>> = match self.class {
            ContractionClass::TsrP => (0..=self.m_max).map(Some).collect(),
            _ => vec![None],
        };
        let schedule: Vec<(Option<u32>, f64)> = powers
            .iter()
            .flat_map(|&m| probes.iter().map(move |&t| (m, t)))
            .collect();

        let per_probe: Vec<(ProbeDefect, Option<DefectWitness>)> = schedule
            .par_iter()
            .map(|&(m, t)| {
                let mut best: Option<DefectWitness> = None;
                for &(x, y) in &pairs {
                    let near = space.distance(x, y);
                    let far = space.distance(f.apply(x), f.apply(y));
                    if let Some(defect) = self.defect(near, far, t, m) {
                        if best.as_ref().is_none_or(|b| defect > b.defect) {
                            best = Some(DefectWitness { x, y, t, m, defect });
                        }
                    }
                }
                let defect = best.as_ref().map(|b| b.defect);
                (ProbeDefect { t, m, defect }, best)
            })
            .collect();

        let mut witness: Option<DefectWitness> = None;
        let mut profile = Vec::with_capacity(per_probe.len());
        for (entry, best) in per_probe {
            if let Some(b) = best {
                if witness.as_ref().is_none_or(|w| b.defect > w.defect) {
                    witness = Some(b);
                }
            }
            profile.push(entry);
        }
        let max_defect = witness.as_ref().map_or(0.0, |w| w.defect);
        let tolerance = self.tolerance.unwrap_or_else(|| space.default_tolerance());
        ContractionReport {
            class: self.class,
            k: self.k,
            max_defect,
            witness,
            holds: max_defect <= tolerance,
            tolerance,
            m_max: (self.class == ContractionClass::TsrP).then_some(self.m_max),
            pairs: pairs.len(),
            probes,
            profile,
        }
    }

    fn defect(&self, near: &Ddf, far: &Ddf, t: f64, m: Option<u32>) -> Option<f64> {
        let k = self.k;
        match self.class {
            ContractionClass::Tsr => Some((1.0 - far.eval(k * t)) - k * (1.0 - near.eval(t))),
            ContractionClass::TsrP => {
                let s = k.powi(m.unwrap_or(0) as i32) * t;
                Some((1.0 - far.eval(k * s)) - k * (1.0 - near.eval(s)))
            }
            ContractionClass::B => Some(near.eval(t) - far.eval(k * t)),
            ContractionClass::H => {
                (near.eval(t) > 1.0 - t).then(|| (1.0 - k * t) - far.eval(k * t))
            }
        }
    }

    /// Least `k` for which the check holds, searched by a sweep over
    /// `k = i/64` followed by bisection.
    pub fn estimate_min_k(
        &self,
        space: &PMSpace,
        f: &SelfMap,
        tol: f64,
    ) -> Result<MinKEstimate, ContractionError> {
        search_min_k(tol, |k| Ok(self.with_k(k).run(space, f)?.holds))
    }

    /// Per-probe reading of the TSR quantifier: for each grid `t`
    /// separately, the least `k` with the TSR inequality holding at that `t`.
    pub fn per_t_min_k(
        &self,
        space: &PMSpace,
        f: &SelfMap,
        tol: f64,
    ) -> Result<Vec<PerProbeConstant>, ContractionError> {
        let base = ContractionCheck {
            class: ContractionClass::Tsr,
            ..self.clone()
        };
        base.with_k(0.5).validate(space, f)?;
        base.t_grid
            .iter()
            .map(|&t| {
                let estimate = search_min_k(tol, |k| {
                    Ok(base.with_k(k).evaluate(space, f, vec![t]).holds)
                })?;
                Ok(PerProbeConstant { t, estimate })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerProbeConstant {
    pub t: f64,
    pub estimate: MinKEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MinKEstimate {
    /// Least certified constant, within the search tolerance.
    Found { k: f64 },
    /// Fails for every probed `k < 1`.
    NotFound,
    /// The holds/fails profile over the sweep is not monotone, so bisection
    /// would be meaningless. The sweep is returned as `(k, holds)` pairs.
    NonMonotone { profile: Vec<(f64, bool)> },
}

impl MinKEstimate {
    pub fn k(&self) -> Option<f64> {
        match self {
            MinKEstimate::Found { k } => Some(*k),
            _ => None,
        }
    }
}

const SWEEP: u32 = 64;

fn search_min_k<P>(tol: f64, holds: P) -> Result<MinKEstimate, ContractionError>
where
    P: Fn(f64) -> Result<bool, ContractionError>,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(ContractionError::InvalidSearchTolerance(tol));
    }
    let profile: Vec<(f64, bool)> = (1..SWEEP)
        .map(|i| {
            let k = f64::from(i) / f64::from(SWEEP);
            holds(k).map(|h| (k, h))
        })
        .collect::<Result<_, _>>()?;
    let Some(first) = profile.iter().position(|p| p.1) else {
        return Ok(MinKEstimate::NotFound);
    };
    if profile[first..].iter().any(|p| !p.1) {
        return Ok(MinKEstimate::NonMonotone { profile });
    }
    if first == 0 {
        return Ok(MinKEstimate::Found { k: profile[0].0 });
    }
    let (mut lo, mut hi) = (profile[first - 1].0, profile[first].0);
    while hi - lo > tol {
        let mid = lo + (hi - lo) / 2.0;
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MinKEstimate::Found { k: hi })
}

/// Thresholds, thresholds over `k`, midpoints, one probe below and one above,
/// plus the caller's grid. With `trigger_points` the H trigger boundaries
/// `1 - v` (and over `k`) are added.
pub(crate) fn probe_set(space: &PMSpace, k: f64, user: &[f64], trigger_points: bool) -> Vec<f64> {
    let mut base: Vec<f64> = Vec::new();
    for a in space.all_thresholds() {
        base.push(a);
        base.push(a / k);
    }
    if trigger_points {
        for v in space.all_values() {
            base.push(1.0 - v);
            base.push((1.0 - v) / k);
        }
    }
    base.retain(|&t| t > 0.0 && t.is_finite());
    base.sort_by(f64::total_cmp);
    base.dedup();

    let mut probes = base.clone();
    match (base.first(), base.last()) {
        (Some(&lo), Some(&hi)) => {
            probes.push(lo / 2.0);
            probes.push(hi * 2.0);
            probes.extend(base.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
        }
        _ => probes.push(1.0),
    }
    probes.extend_from_slice(user);
    probes.retain(|&t| t > 0.0 && t.is_finite());
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    probes
}

pub fn tsr_defect(
    space: &PMSpace,
    f: &SelfMap,
    k: f64,
    t_grid: &[f64],
) -> Result<ContractionReport, ContractionError> {
    ContractionCheck::new(ContractionClass::Tsr, k)
        .grid(t_grid)
        .run(space, f)
}

pub fn tsr_p_defect(
    space: &PMSpace,
    f: &SelfMap,
    k: f64,
    t_grid: &[f64],
    m_max: u32,
) -> Result<ContractionReport, ContractionError> {
    ContractionCheck::new(ContractionClass::TsrP, k)
        .grid(t_grid)
        .m_max(m_max)
        .run(space, f)
}

pub fn b_contraction_check(
    space: &PMSpace,
    f: &SelfMap,
    k: f64,
    t_grid: &[f64],
) -> Result<ContractionReport, ContractionError> {
    ContractionCheck::new(ContractionClass::B, k)
        .grid(t_grid)
        .run(space, f)
}

pub fn h_contraction_check(
    space: &PMSpace,
    f: &SelfMap,
    k: f64,
    t_grid: &[f64],
) -> Result<ContractionReport, ContractionError> {
    ContractionCheck::new(ContractionClass::H, k)
        .grid(t_grid)
        .run(space, f)
}

pub fn estimate_min_k(
    space: &PMSpace,
    f: &SelfMap,
    class: ContractionClass,
    t_grid: &[f64],
    tol: f64,
) -> Result<MinKEstimate, ContractionError> {
    ContractionCheck::new(class, 0.5)
        .grid(t_grid)
        .estimate_min_k(space, f, tol)
}
