//! Distance distribution functions.
//!
//! A [`Ddf`] is a left-continuous, non-decreasing step function on the
//! extended non-negative reals. It is stored as a list of breakpoints
//! `(threshold, value)` with the reading
//!
//! ```text
//! F(t) = max { value_i : threshold_i < t } ∪ { 0 },    F(+inf) = 1
//! ```
//!
//! so `F(t) = 0` for every `t <= 0` and left-continuity holds by construction.
//! Breakpoints are kept in canonical form (strictly increasing thresholds and
//! strictly increasing values), which makes structural equality coincide with
//! functional equality.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DdfError {
    #[error("threshold {0} is negative or NaN")]
    InvalidThreshold(f64),
    #[error("value {0} lies outside [0, 1]")]
    InvalidValue(f64),
    #[error("argument scale {0} must be positive and finite")]
    InvalidScale(f64),
}

/// A distance distribution function, i.e. a member of Δ⁺ restricted to
/// step functions with finitely many jumps.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Ddf {
    steps: Vec<(f64, f64)>,
}

impl Ddf {
    /// Builds a function from arbitrary `(threshold, value)` pairs.
    ///
    /// Pairs may come in any order; the result takes the running maximum,
    /// so a pair whose value is dominated by an earlier threshold is dropped.
    /// A threshold of `+inf` contributes nothing below infinity and is
    /// discarded.
    pub fn from_steps<I>(steps: I) -> Result<Ddf, DdfError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut raw = Vec::new();
        for (threshold, value) in steps {
            if threshold.is_nan() || threshold < 0.0 {
                return Err(DdfError::InvalidThreshold(threshold));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(DdfError::InvalidValue(value));
            }
            raw.push((threshold, value));
        }
        Ok(Ddf::canonical(raw))
    }

    /// Canonicalizes pairs already known to be in range.
    pub(crate) fn canonical(mut raw: Vec<(f64, f64)>) -> Ddf {
        raw.retain(|&(a, v)| a.is_finite() && v > 0.0);
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut steps: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, v) in raw {
            // -0.0 + 0.0 == +0.0
            let a = a + 0.0;
            let best = steps.last().map_or(0.0, |s| s.1);
            if v <= best {
                continue;
            }
            match steps.last_mut() {
                Some(last) if last.0 == a => last.1 = v,
                _ => steps.push((a, v)),
            }
        }
        Ddf { steps }
    }

    /// The Dirac function `H_a`: 0 up to and including `a`, 1 beyond.
    /// `dirac(+inf)` is 0 at every finite argument.
    pub fn dirac(a: f64) -> Result<Ddf, DdfError> {
        if a.is_nan() || a < 0.0 {
            return Err(DdfError::InvalidThreshold(a));
        }
        Ddf::from_steps([(a, 1.0)])
    }

    /// `H_0`, the distance function of a point to itself.
    pub fn h0() -> Ddf {
        Ddf {
            steps: vec![(0.0, 1.0)],
        }
    }

    /// Constant `1 - beta` on `(0, inf)`.
    pub fn plateau(beta: f64) -> Result<Ddf, DdfError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(DdfError::InvalidValue(beta));
        }
        Ddf::from_steps([(0.0, 1.0 - beta)])
    }

    /// Lower step approximation of a non-decreasing shape: the result takes
    /// the value `shape(u)` for every argument strictly above grid point `u`.
    pub fn sample<S>(shape: S, grid: &[f64]) -> Result<Ddf, DdfError>
    where
        S: Fn(f64) -> f64,
    {
        Ddf::from_steps(grid.iter().map(|&u| (u, shape(u))))
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.1)
    }

    /// Left-continuous evaluation. Negative arguments give 0, `+inf` gives 1.
    pub fn eval(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 1.0;
        }
        let idx = self.steps.partition_point(|s| s.0 < t);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].1
        }
    }

    /// The right limit `F(t+)`, i.e. the value taken on the open interval
    /// just above `t`.
    pub fn right_limit(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 1.0;
        }
        let idx = self.steps.partition_point(|s| s.0 <= t);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].1
        }
    }

    /// `inf_{t > 0} F(t)`; attained for step functions.
    pub fn inf_positive(&self) -> f64 {
        self.right_limit(0.0)
    }

    /// `F(t) >= G(t)` for every `t`.
    pub fn geq(&self, other: &Ddf) -> bool {
        self.geq_within(other, 0.0)
    }

    /// `F(t) >= G(t) - tol` for every `t`.
    ///
    /// Both functions are constant on every interval between consecutive
    /// thresholds of the merged set, so comparing right limits at the merged
    /// thresholds decides the question.
    pub fn geq_within(&self, other: &Ddf, tol: f64) -> bool {
        self.first_shortfall(other, tol).is_none()
    }

    /// First merged threshold `a` at which `F(a+) < G(a+) - tol`.
    pub fn first_shortfall(&self, other: &Ddf, tol: f64) -> Option<f64> {
        merged_thresholds(self, other)
            .into_iter()
            .find(|&a| self.right_limit(a) < other.right_limit(a) - tol)
    }

    /// Whether `F(t) >= 1 - tol` for all `t > 0`.
    pub fn is_h0(&self, tol: f64) -> bool {
        self.inf_positive() >= 1.0 - tol
    }

    /// `t ↦ F(t / scale)`, used to realize `G(t / d(x, y))`.
    pub fn stretch(&self, scale: f64) -> Result<Ddf, DdfError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(DdfError::InvalidScale(scale));
        }
        Ok(Ddf::canonical(
            self.steps.iter().map(|&(a, v)| (a * scale, v)).collect(),
        ))
    }
}

/// Sorted union of both threshold sets.
pub(crate) fn merged_thresholds(f: &Ddf, g: &Ddf) -> Vec<f64> {
    let mut out: Vec<f64> = f.thresholds().chain(g.thresholds()).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

impl fmt::Display for Ddf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (a, v)) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({a}, {v})")?;
        }
        f.write_str("]")
    }
}

impl Serialize for Ddf {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.steps.len()))?;
        for &(a, v) in &self.steps {
            seq.serialize_element(&(a, v))?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Number(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for Ddf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Ddf, D::Error> {
        let raw: Vec<(ThresholdRepr, f64)> = Vec::deserialize(deserializer)?;
        let mut steps = Vec::with_capacity(raw.len());
        for (threshold, value) in raw {
            let threshold = match threshold {
                ThresholdRepr::Number(a) => a,
                ThresholdRepr::Text(s) if s == "inf" => f64::INFINITY,
                ThresholdRepr::Text(s) => {
                    return Err(de::Error::custom(format!(
                        "threshold must be a number or \"inf\", got {s:?}"
                    )))
                }
            };
            steps.push((threshold, value));
        }
        Ddf::from_steps(steps).map_err(de::Error::custom)
    }
}
