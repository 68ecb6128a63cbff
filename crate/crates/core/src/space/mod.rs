//! Finite probabilistic metric spaces.
//!
//! A [`PMSpace`] is a finite labelled point set, a symmetric table of
//! distance functions with `H_0` on the diagonal, and the triangle function
//! the space is claimed to satisfy. Identity and symmetry are enforced at
//! construction; the triangle inequality is checked by [`check_axioms`].

mod continuity;
mod sequence;
mod sphere;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{TNorm, TriangleKind, TriangleMode};
use crate::ddf::{merged_thresholds, Ddf, DdfError};

pub use continuity::{continuity_probe, ContinuityFailure, ContinuityReport};
pub use sequence::{
    check_cauchy_prefix, check_convergence, check_joint_limit, CauchyReport, ConvergenceReport,
    JointLimitReport, SequenceDiagnostics,
};
pub use sphere::{
    is_t_closed, is_t_limit_point, sphere_members, t_limit_points_outside, SphereSpec,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("a space needs at least one point")]
    Empty,
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("point index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("no distance given between {0:?} and {1:?}")]
    MissingEntry(String, String),
    #[error("distance between {0:?} and {1:?} given twice with different values")]
    Asymmetric(String, String),
    #[error("distance from {0:?} to itself is not H0")]
    DiagonalNotH0(String),
    #[error("distinct points {0:?} and {1:?} are at distance H0")]
    DistinctAtH0(String, String),
    #[error("table must be {expected}x{expected}")]
    TableShape { expected: usize },
    #[error("table entry ({0:?}, {1:?}) = {2} is invalid")]
    TableEntry(String, String, f64),
    #[error("table is not symmetric at ({0:?}, {1:?})")]
    TableAsymmetric(String, String),
    #[error(
        "ultrametric inequality fails on ({a:?}, {b:?}, {c:?}): beta(a,c) = {ac} > max({ab}, {bc})"
    )]
    NotUltrametric {
        a: String,
        b: String,
        c: String,
        ab: f64,
        bc: f64,
        ac: f64,
    },
    #[error("triangle inequality fails on ({a:?}, {b:?}, {c:?}): d(a,c) = {ac} > {ab} + {bc}")]
    NotMetric {
        a: String,
        b: String,
        c: String,
        ab: f64,
        bc: f64,
        ac: f64,
    },
    #[error("shape must vanish at 0 and be a valid distance function: {0}")]
    InvalidShape(String),
    #[error("sphere radius {0} must lie in (0, 1)")]
    InvalidRadius(f64),
    #[error("probe argument t = {0} must be positive and finite")]
    InvalidT(f64),
    #[error("alpha = {0} must lie in (0, 1)")]
    InvalidAlpha(f64),
    #[error("tolerance {0} must be non-negative")]
    InvalidTolerance(f64),
    #[error("window p_max must be at least 1")]
    InvalidWindow,
    #[error("sequence diagnostics need a target point")]
    MissingTarget,
    #[error("map covers {got} points but the space has {expected}")]
    MapSize { expected: usize, got: usize },
    #[error(transparent)]
    Ddf(#[from] DdfError),
}

/// How a space came to be. Sampled shapes carry rounding in their
/// thresholds, so defect checks on them use a small slack by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpaceOrigin {
    #[serde(rename = "explicit")]
    Explicit,
    #[serde(rename = "ultrametric_plateau")]
    UltrametricPlateau,
    #[serde(rename = "simple")]
    Simple,
}

/// Completeness cannot be checked on a truncation of an infinite space.
/// Finite spaces are complete; whether the space they stand for is complete
/// is an assumption recorded with every run.
pub const COMPLETENESS_NOTE: &str =
    "finite point set (complete); completeness of any infinite space it truncates is assumed, not verified";

#[derive(Clone, Debug, PartialEq)]
pub struct PMSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    distance: Vec<Ddf>,
    mode: TriangleMode,
    origin: SpaceOrigin,
}

/// One supplied table entry; the mirror entry is filled in automatically.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceEntry {
    pub from: usize,
    pub to: usize,
    pub ddf: Ddf,
}

impl DistanceEntry {
    pub fn new(from: usize, to: usize, ddf: Ddf) -> DistanceEntry {
        DistanceEntry { from, to, ddf }
    }
}

fn index_labels(labels: &[String]) -> Result<HashMap<String, usize>, SpaceError> {
    if labels.is_empty() {
        return Err(SpaceError::Empty);
    }
    let mut index = HashMap::with_capacity(labels.len());
    for (i, label) in labels.iter().enumerate() {
        if index.insert(label.clone(), i).is_some() {
            return Err(SpaceError::DuplicateLabel(label.clone()));
        }
    }
    Ok(index)
}

impl PMSpace {
    /// Builds a space from explicit entries.
    ///
    /// Every unordered pair of distinct points needs an entry (either
    /// orientation). Diagonal entries may be omitted; if given they must be
    /// `H_0`. Axiom (iii) is not checked here.
    pub fn build(
        labels: Vec<String>,
        entries: Vec<DistanceEntry>,
        mode: TriangleMode,
    ) -> Result<PMSpace, SpaceError> {
        let index = index_labels(&labels)?;
        let n = labels.len();
        let mut table: Vec<Option<Ddf>> = vec![None; n * n];
        for entry in entries {
            let (i, j) = (entry.from, entry.to);
            if i >= n {
                return Err(SpaceError::IndexOutOfRange(i));
            }
            if j >= n {
                return Err(SpaceError::IndexOutOfRange(j));
            }
            if i == j {
                if entry.ddf != Ddf::h0() {
                    return Err(SpaceError::DiagonalNotH0(labels[i].clone()));
                }
                continue;
            }
            if entry.ddf == Ddf::h0() {
                return Err(SpaceError::DistinctAtH0(
                    labels[i].clone(),
                    labels[j].clone(),
                ));
            }
            for (a, b) in [(i, j), (j, i)] {
                match &table[a * n + b] {
                    Some(existing) if *existing != entry.ddf => {
                        return Err(SpaceError::Asymmetric(labels[i].clone(), labels[j].clone()))
                    }
                    _ => table[a * n + b] = Some(entry.ddf.clone()),
                }
            }
        }
        let mut distance = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    distance.push(Ddf::h0());
                    continue;
                }
                match table[i * n + j].take() {
                    Some(d) => distance.push(d),
                    None => {
                        return Err(SpaceError::MissingEntry(
                            labels[i].clone(),
                            labels[j].clone(),
                        ))
                    }
                }
            }
        }
        Ok(PMSpace {
            labels,
            index,
            distance,
            mode,
            origin: SpaceOrigin::Explicit,
        })
    }

    /// Plateau space over an ultrametric: `F(p, q) = plateau(β(p, q))`.
    pub fn ultrametric_plateau(
        labels: Vec<String>,
        beta: &[Vec<f64>],
        tnorm: TNorm,
        kind: TriangleKind,
    ) -> Result<PMSpace, SpaceError> {
        let n = labels.len();
        check_square(&labels, beta, |v| (0.0..=1.0).contains(&v))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (ab, bc, ac) = (beta[a][b], beta[b][c], beta[a][c]);
                    if ac > ab.max(bc) {
                        return Err(SpaceError::NotUltrametric {
                            a: labels[a].clone(),
                            b: labels[b].clone(),
                            c: labels[c].clone(),
                            ab,
                            bc,
                            ac,
                        });
                    }
                }
            }
        }
        let mut entries = Vec::new();
        for (i, row) in beta.iter().enumerate() {
            for (j, &b) in row.iter().enumerate().skip(i + 1) {
                entries.push(DistanceEntry::new(i, j, Ddf::plateau(b)?));
            }
        }
        let mut space = PMSpace::build(labels, entries, TriangleMode::new(kind, tnorm))?;
        space.origin = SpaceOrigin::UltrametricPlateau;
        Ok(space)
    }

    /// Simple space `F(p, q)(t) = G(t / d(p, q))` over a metric `d`.
    pub fn simple(
        labels: Vec<String>,
        metric: &[Vec<f64>],
        shape: &Ddf,
        tnorm: TNorm,
        kind: TriangleKind,
    ) -> Result<PMSpace, SpaceError> {
        let n = labels.len();
        check_square(&labels, metric, |v| v >= 0.0 && v.is_finite())?;
        if shape.eval(0.0) != 0.0 || shape.is_h0(0.0) {
            return Err(SpaceError::InvalidShape(shape.to_string()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (ab, bc, ac) = (metric[a][b], metric[b][c], metric[a][c]);
                    if ac > ab + bc {
                        return Err(SpaceError::NotMetric {
                            a: labels[a].clone(),
                            b: labels[b].clone(),
                            c: labels[c].clone(),
                            ab,
                            bc,
                            ac,
                        });
                    }
                }
            }
        }
        let mut entries = Vec::new();
        for (i, row) in metric.iter().enumerate() {
            for (j, &d) in row.iter().enumerate().skip(i + 1) {
                entries.push(DistanceEntry::new(i, j, shape.stretch(d)?));
            }
        }
        let mut space = PMSpace::build(labels, entries, TriangleMode::new(kind, tnorm))?;
        space.origin = SpaceOrigin::Simple;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, SpaceError> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| SpaceError::UnknownPoint(label.to_string()))
    }

    pub fn check_index(&self, i: usize) -> Result<usize, SpaceError> {
        if i < self.len() {
            Ok(i)
        } else {
            Err(SpaceError::IndexOutOfRange(i))
        }
    }

    pub fn distance(&self, p: usize, q: usize) -> &Ddf {
        &self.distance[p * self.len() + q]
    }

    pub fn mode(&self) -> &TriangleMode {
        &self.mode
    }

    pub fn origin(&self) -> SpaceOrigin {
        self.origin
    }

    /// Default slack for defect checks: none on exact inputs.
    pub fn default_tolerance(&self) -> f64 {
        match self.origin {
            SpaceOrigin::Simple => 1e-12,
            _ => 0.0,
        }
    }

    /// Same distances, different triangle function.
    pub fn with_mode(&self, mode: TriangleMode) -> PMSpace {
        PMSpace {
            mode,
            ..self.clone()
        }
    }

    /// Every threshold of every distance function, sorted and deduplicated.
    pub fn all_thresholds(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.distance.iter().flat_map(|d| d.thresholds()).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Every distinct value taken by a distance function.
    pub fn all_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.distance.iter().flat_map(|d| d.values()).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

fn check_square<P>(labels: &[String], table: &[Vec<f64>], valid: P) -> Result<(), SpaceError>
where
    P: Fn(f64) -> bool,
{
    let n = labels.len();
    if n == 0 {
        return Err(SpaceError::Empty);
    }
    if table.len() != n || table.iter().any(|row| row.len() != n) {
        return Err(SpaceError::TableShape { expected: n });
    }
    for i in 0..n {
        for j in 0..n {
            let v = table[i][j];
            if !valid(v) || (i == j && v != 0.0) {
                return Err(SpaceError::TableEntry(
                    labels[i].clone(),
                    labels[j].clone(),
                    v,
                ));
            }
            if table[j][i] != v {
                return Err(SpaceError::TableAsymmetric(
                    labels[i].clone(),
                    labels[j].clone(),
                ));
            }
        }
    }
    Ok(())
}

/// A triple `(p, q, r)` with `F(p, r)(t) < τ(F(p, q), F(q, r))(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleFailure {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceAxiomReport {
    pub mode: String,
    pub points: usize,
    pub triples_checked: usize,
    pub violations: Vec<TriangleFailure>,
}

impl SpaceAxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks axiom (iii) under the space's own triangle function.
pub fn check_axioms(space: &PMSpace) -> SpaceAxiomReport {
    check_axioms_under(space, space.mode())
}

/// Checks `F(p, r) >= τ(F(p, q), F(q, r))` for every ordered triple, exactly,
/// with `τ` given by `mode` instead of the space's own triangle function.
pub fn check_axioms_under(space: &PMSpace, mode: &TriangleMode) -> SpaceAxiomReport {
    let n = space.len();
    let violations: Vec<TriangleFailure> = (0..n)
        .into_par_iter()
        .flat_map_iter(|p| {
            let mut found = Vec::new();
            for q in 0..n {
                for r in 0..n {
                    let lhs = space.distance(p, r);
                    let rhs = mode.apply(space.distance(p, q), space.distance(q, r));
                    if let Some(a) = lhs.first_shortfall(&rhs, 0.0) {
                        let t = witness_above(a, &merged_thresholds(lhs, &rhs));
                        found.push(TriangleFailure {
                            p,
                            q,
                            r,
                            t,
                            lhs: lhs.eval(t),
                            rhs: rhs.eval(t),
                        });
                    }
                }
            }
            found
        })
        .collect();
    SpaceAxiomReport {
        mode: mode.to_string(),
        points: n,
        triples_checked: n * n * n,
        violations,
    }
}

/// A concrete argument inside the interval just above threshold `a`.
fn witness_above(a: f64, thresholds: &[f64]) -> f64 {
    match thresholds.iter().find(|&&b| b > a) {
        Some(&b) => a + (b - a) / 2.0,
        None => a + 1.0,
    }
}
