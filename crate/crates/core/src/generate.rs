//! Random plateau-ultrametric spaces, contractive maps on them, and
//! mutations that break the ultrametric inequality.
//!
//! Heights are multiples of 1/64 below 0.9, so every distance value is
//! exact in `f64`.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{TNorm, TriangleKind, TriangleMode};
use crate::contraction::{ContractionError, SelfMap};
use crate::ddf::Ddf;
use crate::space::{DistanceEntry, PMSpace, SpaceError};

const HEIGHT_DENOMINATOR: f64 = 64.0;
/// Largest numerator: 57/64 < 0.9.
const MAX_HEIGHT_NUMERATOR: usize = 57;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An ultrametric `β` with a designated root point.
#[derive(Clone, Debug, PartialEq)]
pub struct Ultrametric {
    pub labels: Vec<String>,
    pub beta: Vec<Vec<f64>>,
    pub root: usize,
}

/// A random dendrogram on `size` points: clusters are merged pairwise at
/// strictly increasing heights. `size` is capped at 58 so the heights stay
/// distinct.
pub fn random_ultrametric<R: Rng>(size: usize, rng: &mut R) -> Ultrametric {
    let size = size.clamp(1, MAX_HEIGHT_NUMERATOR + 1);
    let mut heights: Vec<usize> = index::sample(rng, MAX_HEIGHT_NUMERATOR, size - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    heights.sort_unstable();

    let mut beta = vec![vec![0.0; size]; size];
    let mut clusters: Vec<Vec<usize>> = (0..size).map(|x| vec![x]).collect();
    for h in heights {
        let height = h as f64 / HEIGHT_DENOMINATOR;
        let i = rng.gen_range(0..clusters.len());
        let a = clusters.swap_remove(i);
        let j = rng.gen_range(0..clusters.len());
        for &x in &a {
            for &y in &clusters[j] {
                beta[x][y] = height;
                beta[y][x] = height;
            }
        }
        clusters[j].extend(a);
    }
    Ultrametric {
        labels: (0..size).map(|i| format!("p{i}")).collect(),
        beta,
        root: rng.gen_range(0..size),
    }
}

impl Ultrametric {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `β(x, root)`.
    pub fn level(&self, x: usize) -> f64 {
        self.beta[x][self.root]
    }

    pub fn plateau_space(&self, tnorm: TNorm, kind: TriangleKind) -> Result<PMSpace, SpaceError> {
        PMSpace::ultrametric_plateau(self.labels.clone(), &self.beta, tnorm, kind)
    }

    /// `f(x) = φ(level(x))` with `level(φ(L)) <= k L`.
    ///
    /// Points on a common level share an image, and points on different
    /// levels are at distance equal to the larger level, so
    /// `β(fx, fy) <= k β(x, y)` for every pair.
    pub fn contractive_map<R: Rng>(
        &self,
        space: &PMSpace,
        k: f64,
        rng: &mut R,
    ) -> Result<SelfMap, ContractionError> {
        if !(k > 0.0 && k < 1.0) {
            return Err(ContractionError::InvalidK(k));
        }
        let mut levels: Vec<f64> = (0..self.len()).map(|x| self.level(x)).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let targets: Vec<(f64, usize)> = levels
            .iter()
            .map(|&l| {
                let candidates: Vec<usize> = (0..self.len())
                    .filter(|&y| self.level(y) <= k * l)
                    .collect();
                (l, *candidates.choose(rng).unwrap_or(&self.root))
            })
            .collect();
        SelfMap::from_fn(space, |x| {
            let l = self.level(x);
            targets
                .iter()
                .find(|(level, _)| *level == l)
                .map_or(self.root, |t| t.1)
        })
    }

    /// Raises `β(a, c)` strictly above `max(β(a, b), β(b, c))` for a random
    /// triple of distinct points. `None` below three points.
    pub fn mutate<R: Rng>(&self, rng: &mut R) -> Option<Mutation> {
        if self.len() < 3 {
            return None;
        }
        let picked = index::sample(rng, self.len(), 3).into_vec();
        let (a, b, c) = (picked[0], picked[1], picked[2]);
        let ceiling = self.beta[a][b].max(self.beta[b][c]);
        let raised = ceiling + (1.0 - ceiling) / 2.0;
        let mut beta = self.beta.clone();
        beta[a][c] = raised;
        beta[c][a] = raised;
        Some(Mutation {
            triple: (a, b, c),
            old: self.beta[a][c],
            new: raised,
            beta,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mutation {
    pub triple: (usize, usize, usize),
    pub old: f64,
    pub new: f64,
    pub beta: Vec<Vec<f64>>,
}

/// A plateau space from any symmetric `β` table, with no ultrametric check.
pub fn explicit_plateau_space(
    labels: Vec<String>,
    beta: &[Vec<f64>],
    mode: TriangleMode,
) -> Result<PMSpace, SpaceError> {
    let n = labels.len();
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for (i, row) in beta.iter().enumerate() {
        for (j, &b) in row.iter().enumerate().skip(i + 1) {
            entries.push(DistanceEntry::new(i, j, Ddf::plateau(b)?));
        }
    }
    PMSpace::build(labels, entries, mode)
}
