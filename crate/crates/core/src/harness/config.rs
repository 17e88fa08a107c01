//! Experiment configuration files.
//!
//! A configuration is a TOML document. Top-level keys must precede the
//! `[tower]` table:
//!
//! ```toml
//! levels = [3, 4, 5]            # quotient levels m
//! bundle = "neighbor-product"   # built-in vertex bundle or path to a bundle file
//! jump_rate = "constant"        # built-in edge bundle or path to a bundle file
//! rate_c = 1.0                  # parameter of the built-in rates
//! # time_scale = [16.0, 64.0, 256.0]   # t_m per level; default (diam X_m)^2
//! horizon = 1.0                 # T
//! eps = [0.5]
//! i = [1]
//! delta = 0.1
//! a = [0.25, 0.5, 1.0]          # tilts for spectral checks and the Chebyshev bound
//! replicas = 1000               # or one value per level
//! seed = 1
//! density = 0.5                 # Bernoulli density of stationary starts
//! block_l = 1                   # L: excluded distance in two-blocks, ball radius in the Følner report
//! samples = 1000                # random configurations / functions for sampled checks
//! plots = false                 # also write SVG line plots
//! # output_dir = "out"
//!
//! [tower]
//! family = "integer-lattice"    # or "heisenberg"
//! dim = 1
//! base = 2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundle::{builtin_edge_bundle, builtin_vertex_bundle, parse_bundle, BundleFile, EdgeBundle, JumpRate, VertexBundle, EDGE_BUNDLE_NAMES, VERTEX_BUNDLE_NAMES};
use crate::dynamics::TimeScale;
use crate::error::{Error, Result};
use crate::group::{Elem, GroupFamily, TowerSpec};
use crate::tower::{build_tower, QuotientGraph, TowerLimits};

/// Replica count, either shared by all levels or given per level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Replicas {
    Uniform(u64),
    PerLevel(Vec<u64>),
}

/// The `[tower]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerConfig {
    #[serde(flatten)]
    pub family: GroupFamily,
    /// Optional explicit generating set (closed under inverses is not required;
    /// inverses are added).
    #[serde(default)]
    pub generators: Option<Vec<Elem>>,
}

fn default_bundle() -> String {
    "neighbor-product".into()
}
fn default_rate() -> String {
    "constant".into()
}
fn one() -> f64 {
    1.0
}
fn default_eps() -> Vec<f64> {
    vec![0.5]
}
fn default_i() -> Vec<u32> {
    vec![1]
}
fn default_delta() -> f64 {
    0.1
}
fn default_a() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_replicas() -> Replicas {
    Replicas::Uniform(1000)
}
fn half() -> f64 {
    0.5
}
fn default_block() -> u32 {
    1
}
fn default_samples() -> u64 {
    1000
}
fn default_max_vertices() -> usize {
    TowerLimits::default().max_vertices
}
fn default_spectral_sites() -> usize {
    12
}
fn default_exact_sites() -> usize {
    8
}

/// A parsed experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub levels: Vec<u32>,
    #[serde(default = "default_bundle")]
    pub bundle: String,
    #[serde(default = "default_rate")]
    pub jump_rate: String,
    #[serde(default = "one")]
    pub rate_c: f64,
    #[serde(default)]
    pub time_scale: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_i")]
    pub i: Vec<u32>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_a")]
    pub a: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: Replicas,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "half")]
    pub density: f64,
    #[serde(default = "default_block")]
    pub block_l: u32,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub plots: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Largest quotient (vertices) that may be built.
    #[serde(default = "default_max_vertices")]
    pub max_vertices: usize,
    /// Largest quotient (sites) for eigenvalue and Feynman–Kac computations.
    #[serde(default = "default_spectral_sites")]
    pub spectral_max_sites: usize,
    /// Largest quotient (sites) for the exact path-space probability.
    #[serde(default = "default_exact_sites")]
    pub exact_max_sites: usize,
    pub tower: TowerConfig,
    /// Directory of the configuration file, for resolving bundle paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parse(msg));
        if self.levels.is_empty() {
            return bad("levels must not be empty".into());
        }
        if self.levels.contains(&0) {
            return bad("levels start at 1".into());
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return bad("levels must be distinct".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.eps.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return bad("eps values must be positive".into());
        }
        if self.i.contains(&0) {
            return bad("i values start at 1".into());
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad(format!("density {} outside [0, 1]", self.density));
        }
        if !self.delta.is_finite() {
            return bad("delta must be finite".into());
        }
        match &self.replicas {
            Replicas::Uniform(0) => return bad("replicas must be at least 1".into()),
            Replicas::PerLevel(v) if v.len() != self.levels.len() => {
                return bad(format!("{} replica counts for {} levels", v.len(), self.levels.len()))
            }
            Replicas::PerLevel(v) if v.contains(&0) => return bad("replicas must be at least 1".into()),
            _ => {}
        }
        if let Some(ts) = &self.time_scale {
            if ts.len() != self.levels.len() {
                return bad(format!("{} time scale values for {} levels", ts.len(), self.levels.len()));
            }
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        Ok(())
    }

    pub fn replicas_at(&self, level: u32) -> u64 {
        match &self.replicas {
            Replicas::Uniform(r) => *r,
            Replicas::PerLevel(v) => {
                let k = self.levels.iter().position(|l| *l == level).expect("configured level");
                v[k]
            }
        }
    }

    fn resolve(&self, name: &str) -> PathBuf {
        let p = PathBuf::from(name);
        if p.is_absolute() {
            p
        } else {
            self.base_dir.join(p)
        }
    }

    /// Build everything a run needs, validating the bundle, the jump rate and
    /// the time schedule before any simulation starts.
    pub fn prepare(&self) -> Result<Experiment> {
        let spec = match &self.tower.generators {
            Some(g) => TowerSpec::with_generators(self.tower.family, g.clone())?,
            None => TowerSpec::new(self.tower.family)?,
        };
        let limits = TowerLimits {
            max_vertices: self.max_vertices,
        };
        let top = *self.levels.iter().max().expect("levels validated");
        // building the full chain checks every covering map
        let tower = build_tower(&spec, top, limits)?;
        let graphs: Vec<QuotientGraph> = self.levels.iter().map(|&m| tower[m as usize - 1].clone()).collect();
        let time_scale = match &self.time_scale {
            Some(v) => TimeScale::custom(&graphs, v.clone())?,
            None => TimeScale::diffusive(&graphs)?,
        };
        let bundle = if VERTEX_BUNDLE_NAMES.contains(&self.bundle.as_str()) {
            builtin_vertex_bundle(&self.bundle, &spec)?
        } else {
            match self.read_bundle(&self.bundle, &spec)? {
                BundleFile::Vertex(b) => b,
                BundleFile::Edge(_) => return Err(Error::Parse(format!("{} is an edge bundle", self.bundle))),
            }
        };
        let edge: EdgeBundle = if EDGE_BUNDLE_NAMES.contains(&self.jump_rate.as_str()) {
            builtin_edge_bundle(&self.jump_rate, &spec, self.rate_c)?
        } else {
            match self.read_bundle(&self.jump_rate, &spec)? {
                BundleFile::Edge(b) => b,
                BundleFile::Vertex(_) => return Err(Error::Parse(format!("{} is a vertex bundle", self.jump_rate))),
            }
        };
        let rate = JumpRate::new(edge)?;
        for g in &graphs {
            rate.check_on(g)?;
        }
        Ok(Experiment {
            config: self.clone(),
            spec,
            graphs,
            time_scale,
            bundle,
            rate,
        })
    }

    fn read_bundle(&self, name: &str, spec: &TowerSpec) -> Result<BundleFile> {
        let path = self.resolve(name);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::Parse(format!("{name:?} is neither a built-in bundle nor a readable file ({e})"))
        })?;
        parse_bundle(&text, spec)
    }
}

/// A validated configuration with its tower, schedule, bundle and rate.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: TowerSpec,
    /// One quotient per configured level, in configuration order.
    pub graphs: Vec<QuotientGraph>,
    pub time_scale: TimeScale,
    pub bundle: VertexBundle,
    pub rate: JumpRate,
}

impl Experiment {
    pub fn t_m(&self, level: u32) -> f64 {
        self.time_scale.get(level).expect("configured level")
    }

    /// A seed for one row of a report, derived from the run seed.
    pub fn row_seed(&self, row: u64) -> u64 {
        let mut z = self.config.seed ^ row.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}
