//! Run configuration files.
//!
//! ```json
//! {
//!   "space": {
//!     "points": ["0", "1"],
//!     "mode": {"triangle": "tau_pointwise", "tnorm": "min"},
//!     "ultrametric_plateau": {"beta": [[0, 1], [1, 0]]}
//!   },
//!   "map": {"type": "table", "pairs": [["0", "0"], ["1", "0"]]},
//!   "check": {"class": "tsr", "k": 0.5},
//!   "solve": {"mode": "thm41", "x0": "1", "k": 0.5},
//!   "output": {"format": "json", "path": "trace.json"}
//! }
//! ```
//!
//! The space takes exactly one of `distance`, `ultrametric_plateau`,
//! `simple` or `random_ultrametric`. Points are referenced by label or by
//! index.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use pmfix_core::algebra::{
    check_tnorm_axioms, AlgebraError, TNorm, TNormAxiomReport, TableNorm, TriangleKind,
    TriangleMode,
};
use pmfix_core::contraction::{ContractionClass, ContractionError, SelfMap};
use pmfix_core::ddf::Ddf;
use pmfix_core::generate::{random_ultrametric, seeded, Ultrametric};
use pmfix_core::solver::SolverMode;
use pmfix_core::space::{DistanceEntry, PMSpace, SpaceError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub map: Option<MapConfig>,
    pub check: Option<CheckConfig>,
    pub solve: Option<SolveConfig>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default)]
    pub points: Vec<String>,
    pub mode: ModeConfig,
    pub distance: Option<Vec<(PointRef, PointRef, Ddf)>>,
    pub ultrametric_plateau: Option<PlateauConfig>,
    pub simple: Option<SimpleConfig>,
    pub random_ultrametric: Option<RandomConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub triangle: TriangleKind,
    pub tnorm: TNormConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TNormConfig {
    Named(String),
    Table { table: TableConfig },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub resolution: usize,
    pub values: Vec<f64>,
    #[serde(default = "default_table_grid")]
    pub grid_step: f64,
}

fn default_table_grid() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub beta: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleConfig {
    pub metric: Vec<Vec<f64>>,
    pub shape: Ddf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    Table {
        pairs: Vec<(PointRef, PointRef)>,
    },
    /// Contracts toward the root of a `random_ultrametric` space.
    RandomContractive {
        k: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Value(f64),
    Search(SearchKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKeyword {
    Search,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub class: ContractionClass,
    pub k: KSpec,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    pub tolerance: Option<f64>,
    /// Also report the least `k` for each grid `t` separately.
    #[serde(default)]
    pub per_t: bool,
    #[serde(default = "default_search_tolerance")]
    pub search_tolerance: f64,
}

fn default_m_max() -> u32 {
    4
}

fn default_search_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Thm33,
    Thm41,
    Sphere,
    Power,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub mode: SolveMode,
    pub x0: PointRef,
    pub k: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    pub sphere: Option<SphereConfig>,
    pub m: Option<u32>,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    /// Base theorem for `sphere` and `power`; defaults to the one matching
    /// the space's triangle function.
    pub theorem: Option<SolverMode>,
}

fn default_eps() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub r: f64,
    pub t: f64,
    #[serde(default)]
    pub u_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
}

/// A parsed config with its space built.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub space: PMSpace,
    pub ultrametric: Option<Ultrametric>,
    /// Grid check of a table t-norm, run at load time.
    pub table_check: Option<TNormAxiomReport>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn load(path: &Path, seed: Option<u64>) -> Result<Loaded, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_config(RunConfig::parse(&text)?, seed)
}

/// Builds the space and validates every point reference. `seed` overrides
/// the seeds of random generators.
pub fn from_config(mut config: RunConfig, seed: Option<u64>) -> Result<Loaded, ConfigError> {
    if let Some(seed) = seed {
        if let Some(random) = config.space.random_ultrametric.as_mut() {
            random.seed = seed;
        }
        if let Some(MapConfig::RandomContractive { seed: s, .. }) = config.map.as_mut() {
            *s = seed;
        }
    }
    let (tnorm, table_check) = build_tnorm(&config.space.mode.tnorm)?;
    let kind = config.space.mode.triangle;
    let (space, ultrametric) = build_space(&config.space, tnorm, kind)?;
    let loaded = Loaded {
        config,
        space,
        ultrametric,
        table_check,
    };
    loaded.validate()?;
    Ok(loaded)
}

fn build_tnorm(spec: &TNormConfig) -> Result<(TNorm, Option<TNormAxiomReport>), ConfigError> {
    match spec {
        TNormConfig::Named(name) => Ok((name.parse()?, None)),
        TNormConfig::Table { table } => {
            let norm = TableNorm::new(table.resolution, table.values.clone())?;
            let report = check_tnorm_axioms(&TNorm::Table(norm.clone()), table.grid_step)?;
            let norm = match norm.clone().verify(table.grid_step) {
                Ok(verified) => verified,
                Err(_) => norm,
            };
            Ok((TNorm::Table(norm), Some(report)))
        }
    }
}

fn build_space(
    spec: &SpaceConfig,
    tnorm: TNorm,
    kind: TriangleKind,
) -> Result<(PMSpace, Option<Ultrametric>), ConfigError> {
    let given = [
        spec.distance.is_some(),
        spec.ultrametric_plateau.is_some(),
        spec.simple.is_some(),
        spec.random_ultrametric.is_some(),
    ];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(invalid(
            "space needs exactly one of distance, ultrametric_plateau, simple, random_ultrametric",
        ));
    }
    let labels = spec.points.clone();
    if let Some(random) = &spec.random_ultrametric {
        if random.size == 0 || random.size > 58 {
            return Err(invalid("random_ultrametric size must be in 1..=58"));
        }
        let mut u = random_ultrametric(random.size, &mut seeded(random.seed));
        if !labels.is_empty() {
            if labels.len() != random.size {
                return Err(invalid("points must match random_ultrametric size"));
            }
            u.labels = labels;
        }
        let space = u.plateau_space(tnorm, kind)?;
        return Ok((space, Some(u)));
    }
    if let Some(plateau) = &spec.ultrametric_plateau {
        return Ok((
            PMSpace::ultrametric_plateau(labels, &plateau.beta, tnorm, kind)?,
            None,
        ));
    }
    if let Some(simple) = &spec.simple {
        return Ok((
            PMSpace::simple(labels, &simple.metric, &simple.shape, tnorm, kind)?,
            None,
        ));
    }
    let entries = spec.distance.as_deref().unwrap_or_default();
    let lookup = |p: &PointRef| resolve_in(&labels, p);
    let entries = entries
        .iter()
        .map(|(p, q, ddf)| Ok(DistanceEntry::new(lookup(p)?, lookup(q)?, ddf.clone())))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Ok((
        PMSpace::build(labels, entries, TriangleMode::new(kind, tnorm))?,
        None,
    ))
}

fn resolve_in(labels: &[String], p: &PointRef) -> Result<usize, ConfigError> {
    match p {
        PointRef::Index(i) if *i < labels.len() => Ok(*i),
        PointRef::Index(i) => Err(SpaceError::IndexOutOfRange(*i).into()),
        PointRef::Label(l) => labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| SpaceError::UnknownPoint(l.clone()).into()),
    }
}

impl Loaded {
    pub fn point(&self, p: &PointRef) -> Result<usize, ConfigError> {
        resolve_in(self.space.labels(), p)
    }

    pub fn map(&self) -> Result<SelfMap, ConfigError> {
        match &self.config.map {
            None => Err(invalid("this command needs a map section")),
            Some(MapConfig::Table { pairs }) => {
                let n = self.space.len();
                let mut image: Vec<Option<usize>> = vec![None; n];
                for (from, to) in pairs {
                    let (a, b) = (self.point(from)?, self.point(to)?);
                    if image[a].replace(b).is_some_and(|prev| prev != b) {
                        return Err(invalid(format!(
                            "map sends {:?} to two different points",
                            self.space.label(a)
                        )));
                    }
                }
                let image = image
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        x.ok_or_else(|| {
                            invalid(format!("map has no image for {:?}", self.space.label(i)))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SelfMap::new(&self.space, image)?)
            }
            Some(MapConfig::RandomContractive { k, seed }) => {
                let u = self.ultrametric.as_ref().ok_or_else(|| {
                    invalid("random_contractive maps need a random_ultrametric space")
                })?;
                Ok(u.contractive_map(&self.space, *k, &mut seeded(*seed))?)
            }
        }
    }

    pub fn check(&self) -> Result<&CheckConfig, ConfigError> {
        self.config
            .check
            .as_ref()
            .ok_or_else(|| invalid("this command needs a check section"))
    }

    pub fn solve(&self) -> Result<&SolveConfig, ConfigError> {
        self.config
            .solve
            .as_ref()
            .ok_or_else(|| invalid("this command needs a solve section"))
    }

    /// The theorem a solve section runs under.
    pub fn solver_mode(&self, solve: &SolveConfig) -> SolverMode {
        match solve.mode {
            SolveMode::Thm33 => SolverMode::Menger,
            SolveMode::Thm41 => SolverMode::Pointwise,
            SolveMode::Sphere | SolveMode::Power => {
                solve.theorem.unwrap_or(match self.space.mode().kind {
                    TriangleKind::SupConvolution => SolverMode::Menger,
                    TriangleKind::Pointwise => SolverMode::Pointwise,
                })
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.config.map.is_some() {
            self.map()?;
        }
        if let Some(check) = &self.config.check {
            if check.m_max == 0 {
                return Err(invalid("check.m_max must be at least 1"));
            }
        }
        if let Some(solve) = &self.config.solve {
            self.point(&solve.x0)?;
            match solve.mode {
                SolveMode::Sphere if solve.sphere.is_none() => {
                    return Err(invalid("sphere mode needs a sphere section"));
                }
                SolveMode::Power if solve.m.is_none() => {
                    return Err(invalid("power mode needs m"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
