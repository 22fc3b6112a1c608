//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! route = "discrete"          # direct | discrete | params | joint
//!
//! [grid]
//! m1 = -1
//! m2 = 2
//! n = 4
//! # eps = 0.00390625         # default 2^-(n+4)
//!
//! [corpus]
//! side = 16
//! layout = "row"              # row | image
//! train = 8
//! heldout = 4
//! [corpus.noise]
//! kind = "monotone-map"       # monotone-map | gaussian | salt-pepper | tiny-squares
//! shift = 0.1
//!
//! [transform]
//! filter = "haar"             # identity | haar | db4 | lattice | file
//! levels = 1
//! ```
//!
//! Omitted tables take the defaults of their structs below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steplearn::datagen::{split_seed, Layout, MonotoneMap, NoiseKind, NoiseSpec, SceneSpec};
use steplearn::ista::AlphaRule;
use steplearn::learn::{DirectConfig, DiscreteConfig, SearchConfig};
use steplearn::mra::{check_qmf, lattice_filter, FilterSearchSpace, ScalingFilter};
use steplearn::paramlearn::LambdaConfig;
use steplearn::shrink::WeightedTerm;
use steplearn::{GridSpec, MultiPenalty};

use crate::error::CliError;
use crate::formats::{read_filter_file, TransformSpec};

/// Seed streams split from the master seed.
pub mod streams {
    pub const TRAIN_SCENES: u64 = 0;
    pub const TRAIN_NOISE: u64 = 1;
    pub const HELDOUT_SCENES: u64 = 2;
    pub const HELDOUT_NOISE: u64 = 3;
    pub const LEARN: u64 = 4;
    pub const PATH: u64 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RouteName {
    Direct,
    #[default]
    Discrete,
    Params,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub route: RouteName,
    pub out: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub corpus: Option<CorpusConfig>,
    #[serde(default)]
    pub transform: TransformConfig,
    pub penalty: Option<PenaltyConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub path: Option<PathConfig>,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m1: i64,
    pub m2: i64,
    pub n: u32,
    pub eps: Option<f64>,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, CliError> {
        let g = match self.eps {
            Some(e) => GridSpec::new(self.m1, self.m2, self.n, e),
            None => GridSpec::with_default_eps(self.m1, self.m2, self.n),
        };
        g.map_err(|e| CliError::Validation(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutName {
    #[default]
    Row,
    Image,
}

impl From<LayoutName> for Layout {
    fn from(l: LayoutName) -> Self {
        match l {
            LayoutName::Row => Layout::Row,
            LayoutName::Image => Layout::Image,
        }
    }
}

fn default_squares() -> usize {
    2
}
fn default_level_min() -> f64 {
    0.2
}
fn default_level_max() -> f64 {
    0.9
}
fn default_level_steps() -> Option<u32> {
    Some(255)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub side: usize,
    #[serde(default)]
    pub layout: LayoutName,
    #[serde(default = "default_squares")]
    pub squares: usize,
    pub size_min: Option<usize>,
    pub size_max: Option<usize>,
    #[serde(default = "default_level_min")]
    pub level_min: f64,
    #[serde(default = "default_level_max")]
    pub level_max: f64,
    #[serde(default)]
    pub background: f64,
    /// Quantization of square levels; `0` disables it.
    #[serde(default = "default_level_steps")]
    pub level_steps: Option<u32>,
    pub train: usize,
    #[serde(default)]
    pub heldout: usize,
    pub noise: NoiseConfig,
}

impl CorpusConfig {
    pub fn scene_spec(&self, seed: u64) -> SceneSpec {
        SceneSpec {
            side: self.side,
            squares: self.squares,
            size_range: (
                self.size_min.unwrap_or((self.side / 8).max(1)),
                self.size_max.unwrap_or((self.side / 4).max(1)),
            ),
            level_range: (self.level_min, self.level_max),
            background: self.background,
            level_steps: self.level_steps.filter(|&s| s > 0),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseConfig {
    TinySquares {
        count_min: usize,
        count_max: usize,
        #[serde(default)]
        level_min: f64,
        #[serde(default = "one")]
        level_max: f64,
    },
    Gaussian {
        sigma: f64,
    },
    SaltPepper {
        rate: f64,
    },
    /// `cubic` gives `x + a x^3`; `scale` gives `scale x + shift`; otherwise `x + shift`.
    MonotoneMap {
        shift: Option<f64>,
        scale: Option<f64>,
        cubic: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl NoiseConfig {
    pub fn spec(&self, seed: u64) -> NoiseSpec {
        let kind = match *self {
            NoiseConfig::TinySquares {
                count_min,
                count_max,
                level_min,
                level_max,
            } => NoiseKind::TinySquares {
                count: (count_min, count_max),
                level_range: (level_min, level_max),
            },
            NoiseConfig::Gaussian { sigma } => NoiseKind::Gaussian { sigma },
            NoiseConfig::SaltPepper { rate } => NoiseKind::SaltPepper { rate },
            NoiseConfig::MonotoneMap { shift, scale, cubic } => NoiseKind::MonotoneMap(match (cubic, scale) {
                (Some(a), _) => MonotoneMap::Cubic(a),
                (None, Some(s)) => MonotoneMap::Affine {
                    scale: s,
                    shift: shift.unwrap_or(0.0),
                },
                (None, None) => MonotoneMap::Shift(shift.unwrap_or(0.0)),
            }),
        };
        NoiseSpec { kind, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FilterName {
    #[default]
    Identity,
    Haar,
    Db4,
    Lattice,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default)]
    pub filter: FilterName,
    /// Lattice angle for `filter = "lattice"`.
    pub theta: Option<f64>,
    /// Filter file for `filter = "file"`.
    pub filter_file: Option<PathBuf>,
    #[serde(default)]
    pub levels: usize,
    pub search: Option<SearchSpaceConfig>,
}

fn default_qmf_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpaceConfig {
    /// Number of equally spaced lattice angles.
    pub lattice: Option<usize>,
    /// Named filters (`haar`, `db4`) or filter files.
    #[serde(default)]
    pub filters: Vec<String>,
    #[serde(default = "default_qmf_tol")]
    pub qmf_tol: f64,
}

impl TransformConfig {
    /// `None` for the identity transform.
    pub fn spec(&self, base: &Path) -> Result<Option<TransformSpec>, CliError> {
        let filter = match self.filter {
            FilterName::Identity => {
                if self.levels != 0 {
                    return Err(CliError::Validation("identity transform takes levels = 0".into()));
                }
                return Ok(None);
            }
            FilterName::Haar => ScalingFilter::haar(),
            FilterName::Db4 => ScalingFilter::db4(),
            FilterName::Lattice => lattice_filter(
                self.theta
                    .ok_or_else(|| CliError::Validation("filter = \"lattice\" needs theta".into()))?,
            ),
            FilterName::File => {
                let p = self
                    .filter_file
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("filter = \"file\" needs filter_file".into()))?;
                read_filter_file(&base.join(p))?
            }
        };
        let report = check_qmf(&filter, 1e-10);
        if !report.ok() {
            return Err(CliError::Validation(format!(
                "filter fails the orthonormality check: {:?}",
                report.violated
            )));
        }
        Ok(Some(TransformSpec {
            filter,
            levels: self.levels,
        }))
    }

    pub fn search_space(&self, base: &Path) -> Result<(FilterSearchSpace, f64), CliError> {
        let s = self
            .search
            .as_ref()
            .ok_or_else(|| CliError::Validation("route joint needs a [transform.search] table".into()))?;
        let mut filters = Vec::new();
        if let Some(count) = s.lattice {
            filters.extend(FilterSearchSpace::lattice_uniform(count).filters());
        }
        for name in &s.filters {
            filters.push(match name.as_str() {
                "haar" => ScalingFilter::haar(),
                "db4" => ScalingFilter::db4(),
                path => read_filter_file(&base.join(path))?,
            });
        }
        if filters.is_empty() {
            return Err(CliError::Validation("filter search space is empty".into()));
        }
        Ok((FilterSearchSpace::Explicit(filters), s.qmf_tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    /// One summed term with unit weights per exponent; the weights `lambda` are learned.
    pub exponents: Vec<f64>,
}

impl PenaltyConfig {
    pub fn penalty(&self, dim: usize) -> Result<MultiPenalty, CliError> {
        let terms = self
            .exponents
            .iter()
            .map(|&p| WeightedTerm {
                lambda: 0.0,
                weights: vec![1.0; dim],
                p,
            })
            .collect();
        MultiPenalty::new(terms, None).map_err(|e| CliError::Validation(format!("penalty: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// `0` disables pruning.
    pub prune_k: usize,
    pub max_checks: usize,
    pub refine: bool,
    pub restarts: usize,
    pub iters_per_round: usize,
    pub lambda_max_iters: usize,
    pub ista_max_iters: usize,
    pub ista_step_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        let direct = DirectConfig::default();
        Self {
            prune_k: search.prune_k.unwrap_or(0),
            max_checks: search.max_checks,
            refine: true,
            restarts: direct.restarts,
            iters_per_round: direct.iters_per_round,
            lambda_max_iters: LambdaConfig::default().max_iters,
            ista_max_iters: 100_000,
            ista_step_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn discrete(&self) -> DiscreteConfig {
        DiscreteConfig {
            search: SearchConfig {
                prune_k: (self.prune_k > 0).then_some(self.prune_k),
                max_checks: self.max_checks,
                ..SearchConfig::default()
            },
            refine: self.refine,
            ..DiscreteConfig::default()
        }
    }

    pub fn direct(&self, seed: u64) -> DirectConfig {
        DirectConfig {
            restarts: self.restarts,
            iters_per_round: self.iters_per_round,
            seed: split_seed(seed, streams::LEARN),
            ..DirectConfig::default()
        }
    }

    pub fn lambda(&self) -> LambdaConfig {
        LambdaConfig {
            max_iters: self.lambda_max_iters,
            ..LambdaConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    #[default]
    Identity,
    Diagonal,
}

/// Forward operator acting on transform coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default)]
    pub kind: OperatorKind,
    /// Diagonal entries; a single value is broadcast.
    #[serde(default)]
    pub k: Vec<f64>,
}

impl OperatorConfig {
    pub fn diagonal(&self, dim: usize) -> Result<Vec<f64>, CliError> {
        match self.k.len() {
            1 => Ok(vec![self.k[0]; dim]),
            n if n == dim => Ok(self.k.clone()),
            n => Err(CliError::Validation(format!("{n} diagonal entries for {dim} coefficients"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    pub dim: usize,
    /// Diagonal entries are spaced evenly in `[k_min, k_max]`.
    pub k_min: f64,
    pub k_max: f64,
    pub eps: Vec<f64>,
    /// `alpha = eps^alpha_exponent`.
    pub alpha_exponent: f64,
    pub p: f64,
    pub weight: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            k_min: 0.5,
            k_max: 0.9,
            eps: vec![1e-1, 1e-2, 1e-3],
            alpha_exponent: 1.0,
            p: 1.5,
            weight: 0.1,
        }
    }
}

impl PathConfig {
    pub fn rule(&self) -> Result<AlphaRule, CliError> {
        AlphaRule::power(self.alpha_exponent).map_err(|e| CliError::Validation(format!("path: {e}")))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        if self.dim <= 1 {
            return vec![self.k_max; self.dim];
        }
        (0..self.dim)
            .map(|i| self.k_min + (self.k_max - self.k_min) * i as f64 / (self.dim - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Learn a uniform `p = 2` penalty weight on the training corpus and report it.
    pub baseline: bool,
    /// Resolution levels for the objective-vs-`n` table.
    pub sweep_levels: Vec<u32>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            baseline: true,
            sweep_levels: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Cross-field checks that need no data.
    pub fn validate(&self, base: &Path) -> Result<(), CliError> {
        if let Some(g) = &self.grid {
            g.spec()?;
        }
        if let Some(c) = &self.corpus {
            c.scene_spec(0)
                .validate()
                .map_err(|e| CliError::Validation(format!("corpus: {e}")))?;
            c.noise
                .spec(0)
                .validate()
                .map_err(|e| CliError::Validation(format!("noise: {e}")))?;
            if c.train == 0 {
                return Err(CliError::Validation("corpus: train must be at least 1".into()));
            }
            let len = match c.layout {
                LayoutName::Row => c.side,
                LayoutName::Image => c.side * c.side,
            };
            if self.transform.levels > 0 && len % (1usize << self.transform.levels.min(63)) != 0 {
                return Err(CliError::Validation(format!(
                    "signals of length {len} do not support {} transform levels",
                    self.transform.levels
                )));
            }
        }
        self.transform.spec(base)?;
        if let Some(p) = &self.penalty {
            p.penalty(1)?;
        }
        if let Some(p) = &self.path {
            p.rule()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Validation("config has no [grid] table".into()))?
            .spec()
    }

    pub fn corpus(&self) -> Result<&CorpusConfig, CliError> {
        self.corpus
            .as_ref()
            .ok_or_else(|| CliError::Validation("config has no [corpus] table".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::parse(
            r#"
            seed = 3
            [grid]
            m1 = 0
            m2 = 2
            n = 3
            [corpus]
            side = 16
            train = 4
            [corpus.noise]
            kind = "gaussian"
            sigma = 0.05
            "#,
        )
        .unwrap();
        cfg.validate(Path::new(".")).unwrap();
        assert_eq!(cfg.route, RouteName::Discrete);
        assert_eq!(cfg.grid().unwrap().bins(), 16);
        assert_eq!(cfg.corpus().unwrap().scene_spec(0).size_range, (2, 4));
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(ExperimentConfig::parse("sed = 3").is_err());
        let cfg = ExperimentConfig::parse("[grid]\nm1 = 2\nm2 = 1\nn = 0").unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
        let cfg = ExperimentConfig::parse("[path]\nalpha_exponent = 2.0").unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
        let cfg = ExperimentConfig::parse("[transform]\nfilter = \"lattice\"\nlevels = 1").unwrap();
        assert!(cfg.validate(Path::new(".")).is_err());
    }
}
