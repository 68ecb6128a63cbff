//! Triangular norms and the two triangle functions built from them.
//!
//! The sup-convolution `τ*` turns a PM space into a Menger space; the
//! pointwise `τ⋄` combines two distance functions argument by argument. Both
//! are computed exactly on step functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ddf::{merged_thresholds, Ddf};

/// Slack used by the grid axiom checks; float products and sums on the grid
/// are not associative to the last bit.
pub const GRID_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("t-norm argument {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("unknown t-norm {0:?} (expected \"min\", \"product\" or \"lukasiewicz\")")]
    UnknownTNorm(String),
    #[error("unknown triangle function {0:?} (expected \"tau_star\" or \"tau_pointwise\")")]
    UnknownTriangle(String),
    #[error("grid step {0} must lie in (0, 1)")]
    InvalidGridStep(f64),
    #[error("table t-norm needs {expected} values on a {resolution}-interval grid, got {actual}")]
    TableShape {
        resolution: usize,
        expected: usize,
        actual: usize,
    },
    #[error("table t-norm entry {0} lies outside [0, 1]")]
    TableValue(f64),
    #[error("triangle axiom check needs at least one sample")]
    NoSamples,
}

/// A t-norm given by its values on a uniform grid over `[0, 1]²`, read
/// between grid points by bilinear interpolation.
///
/// Tables start out unverified; [`TableNorm::verify`] runs the grid axiom
/// check and flips the flag only if no violation is found.
#[derive(Clone, Debug, PartialEq)]
pub struct TableNorm {
    resolution: usize,
    values: Vec<f64>,
    verified: bool,
}

impl TableNorm {
    /// `values` is row-major over `(resolution + 1)²` grid points, row index
    /// being the first argument.
    pub fn new(resolution: usize, values: Vec<f64>) -> Result<TableNorm, AlgebraError> {
        let expected = (resolution + 1) * (resolution + 1);
        if resolution == 0 || values.len() != expected {
            return Err(AlgebraError::TableShape {
                resolution,
                expected,
                actual: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(AlgebraError::TableValue(bad));
        }
        Ok(TableNorm {
            resolution,
            values,
            verified: false,
        })
    }

    /// Tabulates `op` on the grid. Results are clamped into `[0, 1]`.
    pub fn from_fn<F>(resolution: usize, op: F) -> Result<TableNorm, AlgebraError>
    where
        F: Fn(f64, f64) -> f64,
    {
        let n = resolution as f64;
        let mut values = Vec::with_capacity((resolution + 1) * (resolution + 1));
        for i in 0..=resolution {
            for j in 0..=resolution {
                values.push(op(i as f64 / n, j as f64 / n).clamp(0.0, 1.0));
            }
        }
        TableNorm::new(resolution, values)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    /// Runs the grid axiom check and returns the verified table, or the
    /// report listing what failed.
    pub fn verify(mut self, grid_step: f64) -> Result<TableNorm, TNormAxiomReport> {
        let report = check_tnorm_axioms(&TNorm::Table(self.clone()), grid_step)
            .map_err(|_| TNormAxiomReport::invalid_step(grid_step))?;
        if report.passed() {
            self.verified = true;
            Ok(self)
        } else {
            Err(report)
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.resolution + 1) + j]
    }

    fn interpolate(&self, a: f64, b: f64) -> f64 {
        let n = self.resolution as f64;
        let (x, y) = (a * n, b * n);
        let i = (x.floor() as usize).min(self.resolution - 1);
        let j = (y.floor() as usize).min(self.resolution - 1);
        let (fx, fy) = (x - i as f64, y - j as f64);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        let v = v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy;
        v.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TNorm {
    Minimum,
    Product,
    Lukasiewicz,
    Table(TableNorm),
}

impl TNorm {
    pub fn name(&self) -> &'static str {
        match self {
            TNorm::Minimum => "min",
            TNorm::Product => "product",
            TNorm::Lukasiewicz => "lukasiewicz",
            TNorm::Table(_) => "table",
        }
    }

    /// Checked application; both arguments must be probabilities.
    pub fn apply(&self, a: f64, b: f64) -> Result<f64, AlgebraError> {
        for x in [a, b] {
            if !(0.0..=1.0).contains(&x) {
                return Err(AlgebraError::OutOfRange(x));
            }
        }
        Ok(self.combine(a, b))
    }

    /// Unchecked application for values already known to be in `[0, 1]`.
    pub fn combine(&self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Minimum => a.min(b),
            TNorm::Product => a * b,
            TNorm::Lukasiewicz => (a + b - 1.0).max(0.0),
            TNorm::Table(table) => table.interpolate(a, b),
        }
    }

    /// Built-ins are known t-norms; tables only after a passing check.
    pub fn is_verified(&self) -> bool {
        match self {
            TNorm::Table(table) => table.verified,
            _ => true,
        }
    }
}

impl fmt::Display for TNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TNorm {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<TNorm, AlgebraError> {
        match s {
            "min" | "minimum" => Ok(TNorm::Minimum),
            "product" | "prod" => Ok(TNorm::Product),
            "lukasiewicz" => Ok(TNorm::Lukasiewicz),
            other => Err(AlgebraError::UnknownTNorm(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TNormAxiom {
    #[serde(rename = "commutativity")]
    Commutativity,
    #[serde(rename = "associativity")]
    Associativity,
    #[serde(rename = "monotonicity")]
    Monotonicity,
    #[serde(rename = "identity")]
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TNormViolation {
    pub axiom: TNormAxiom,
    pub x: f64,
    pub y: f64,
    /// Unused by the two-argument axioms.
    pub z: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a grid scan. The scan covers the listed grid only; it is
/// evidence, not a proof.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TNormAxiomReport {
    pub tnorm: String,
    pub grid_step: f64,
    pub grid_points: usize,
    pub tolerance: f64,
    pub violations: Vec<TNormViolation>,
}

impl TNormAxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.grid_points > 0
    }

    fn invalid_step(grid_step: f64) -> TNormAxiomReport {
        TNormAxiomReport {
            tnorm: "table".into(),
            grid_step,
            grid_points: 0,
            tolerance: GRID_TOLERANCE,
            violations: Vec::new(),
        }
    }
}

/// `0, step, 2·step, …` below 1, then exactly 1.
pub fn unit_grid(grid_step: f64) -> Result<Vec<f64>, AlgebraError> {
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(AlgebraError::InvalidGridStep(grid_step));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let x = f64::from(i) * grid_step;
        if x >= 1.0 - GRID_TOLERANCE {
            break;
        }
        grid.push(x);
        i += 1;
    }
    grid.push(1.0);
    Ok(grid)
}

/// Scans the four t-norm axioms over every grid pair and triple.
pub fn check_tnorm_axioms(t: &TNorm, grid_step: f64) -> Result<TNormAxiomReport, AlgebraError> {
    let grid = unit_grid(grid_step)?;
    let tol = GRID_TOLERANCE;
    let mut violations = Vec::new();
    let mut push = |axiom, x, y, z, lhs: f64, rhs: f64| {
        violations.push(TNormViolation {
            axiom,
            x,
            y,
            z,
            lhs,
            rhs,
        })
    };

    for &x in &grid {
        let lhs = t.combine(x, 1.0);
        if (lhs - x).abs() > tol {
            push(TNormAxiom::Identity, x, 1.0, 0.0, lhs, x);
        }
        for &y in &grid {
            let xy = t.combine(x, y);
            let yx = t.combine(y, x);
            if (xy - yx).abs() > tol {
                push(TNormAxiom::Commutativity, x, y, 0.0, xy, yx);
            }
            for &z in &grid {
                if y < z {
                    let xz = t.combine(x, z);
                    if xy > xz + tol {
                        push(TNormAxiom::Monotonicity, x, y, z, xy, xz);
                    }
                }
                let left = t.combine(x, t.combine(y, z));
                let right = t.combine(xy, z);
                if (left - right).abs() > tol {
                    push(TNormAxiom::Associativity, x, y, z, left, right);
                }
            }
        }
    }

    Ok(TNormAxiomReport {
        tnorm: t.name().to_string(),
        grid_step,
        grid_points: grid.len(),
        tolerance: tol,
        violations,
    })
}

/// Grid scan of `α ∗ α >= α`, the diagonal hypothesis shared by every
/// fixed-point theorem in this crate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdempotenceReport {
    pub tnorm: String,
    pub grid_step: f64,
    pub dominant: bool,
    /// Grid point with the largest shortfall `α - α ∗ α`, when there is one.
    pub witness: Option<f64>,
    pub shortfall: f64,
}

pub fn idempotent_dominance(t: &TNorm, grid_step: f64) -> Result<IdempotenceReport, AlgebraError> {
    let grid = unit_grid(grid_step)?;
    let mut witness = None;
    let mut worst = 0.0;
    for &alpha in &grid {
        let shortfall = alpha - t.combine(alpha, alpha);
        if shortfall > worst {
            worst = shortfall;
            witness = Some(alpha);
        }
    }
    Ok(IdempotenceReport {
        tnorm: t.name().to_string(),
        grid_step,
        dominant: witness.is_none(),
        witness,
        shortfall: worst,
    })
}

pub fn is_idempotent_dominant(t: &TNorm, grid_step: f64) -> Result<bool, AlgebraError> {
    Ok(idempotent_dominance(t, grid_step)?.dominant)
}

/// Exact sup-convolution
/// `τ*(F, G)(t) = sup { F(t₁) ∗ G(t₂) : t₁ + t₂ = t, t₁, t₂ >= 0 }`.
///
/// With monotone `∗` the supremum at `t` is the largest `vᵢ ∗ wⱼ` over
/// breakpoint pairs with `aᵢ + bⱼ < t`, so the result is the canonical step
/// function over all pairwise threshold sums.
pub fn tau_star(t: &TNorm, f: &Ddf, g: &Ddf) -> Ddf {
    let mut steps = Vec::with_capacity(f.breakpoints().len() * g.breakpoints().len());
    for &(a, v) in f.breakpoints() {
        for &(b, w) in g.breakpoints() {
            steps.push((a + b, t.combine(v, w)));
        }
    }
    Ddf::canonical(steps)
}

/// Pointwise `τ⋄(F, G)(t) = F(t) ⋄ G(t)`.
pub fn tau_pointwise(t: &TNorm, f: &Ddf, g: &Ddf) -> Ddf {
    let steps = merged_thresholds(f, g)
        .into_iter()
        .map(|a| (a, t.combine(f.right_limit(a), g.right_limit(a))))
        .collect();
    Ddf::canonical(steps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriangleKind {
    #[serde(rename = "tau_star")]
    SupConvolution,
    #[serde(rename = "tau_pointwise")]
    Pointwise,
}

impl TriangleKind {
    pub fn name(self) -> &'static str {
        match self {
            TriangleKind::SupConvolution => "tau_star",
            TriangleKind::Pointwise => "tau_pointwise",
        }
    }
}

impl FromStr for TriangleKind {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<TriangleKind, AlgebraError> {
        match s {
            "tau_star" => Ok(TriangleKind::SupConvolution),
            "tau_pointwise" => Ok(TriangleKind::Pointwise),
            other => Err(AlgebraError::UnknownTriangle(other.to_string())),
        }
    }
}

/// The triangle function a space carries.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMode {
    pub kind: TriangleKind,
    pub tnorm: TNorm,
}

impl TriangleMode {
    pub fn new(kind: TriangleKind, tnorm: TNorm) -> TriangleMode {
        TriangleMode { kind, tnorm }
    }

    pub fn sup_convolution(tnorm: TNorm) -> TriangleMode {
        TriangleMode::new(TriangleKind::SupConvolution, tnorm)
    }

    pub fn pointwise(tnorm: TNorm) -> TriangleMode {
        TriangleMode::new(TriangleKind::Pointwise, tnorm)
    }

    pub fn apply(&self, f: &Ddf, g: &Ddf) -> Ddf {
        match self.kind {
            TriangleKind::SupConvolution => tau_star(&self.tnorm, f, g),
            TriangleKind::Pointwise => tau_pointwise(&self.tnorm, f, g),
        }
    }
}

impl fmt::Display for TriangleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind.name(), self.tnorm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TriangleAxiom {
    #[serde(rename = "commutativity")]
    Commutativity,
    #[serde(rename = "associativity")]
    Associativity,
    #[serde(rename = "monotonicity")]
    Monotonicity,
    #[serde(rename = "identity")]
    Identity,
}

/// `operands` index into the sample list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub axiom: TriangleAxiom,
    pub operands: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleAxiomReport {
    pub mode: String,
    pub samples: usize,
    pub violations: Vec<TriangleViolation>,
}

impl TriangleAxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact check of the triangle-function axioms over all sample pairs and
/// triples. Monotonicity is tested on every pair of samples ordered by
/// [`Ddf::geq`].
pub fn check_triangle_axioms(
    mode: &TriangleMode,
    samples: &[Ddf],
) -> Result<TriangleAxiomReport, AlgebraError> {
    if samples.is_empty() {
        return Err(AlgebraError::NoSamples);
    }
    let n = samples.len();
    let h0 = Ddf::h0();
    let mut violations = Vec::new();
    let combined: Vec<Vec<Ddf>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| mode.apply(&samples[i], &samples[j]))
                .collect()
        })
        .collect();

    for i in 0..n {
        if mode.apply(&samples[i], &h0) != samples[i] || mode.apply(&h0, &samples[i]) != samples[i]
        {
            violations.push(TriangleViolation {
                axiom: TriangleAxiom::Identity,
                operands: vec![i],
            });
        }
        for j in 0..n {
            if combined[i][j] != combined[j][i] {
                violations.push(TriangleViolation {
                    axiom: TriangleAxiom::Commutativity,
                    operands: vec![i, j],
                });
            }
            for l in 0..n {
                if samples[j].geq(&samples[l]) && !combined[i][j].geq(&combined[i][l]) {
                    violations.push(TriangleViolation {
                        axiom: TriangleAxiom::Monotonicity,
                        operands: vec![i, j, l],
                    });
                }
                let left = mode.apply(&samples[i], &combined[j][l]);
                let right = mode.apply(&combined[i][j], &samples[l]);
                if left != right {
                    violations.push(TriangleViolation {
                        axiom: TriangleAxiom::Associativity,
                        operands: vec![i, j, l],
                    });
                }
            }
        }
    }

    Ok(TriangleAxiomReport {
        mode: mode.to_string(),
        samples: n,
        violations,
    })
}
