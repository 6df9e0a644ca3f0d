//! Sweep configuration files (TOML).
//!
//! ```toml
//! dataset = "square"            # or a list; "point_cloud" needs `points`
//! variant = "fnnsom"            # "fnnsom" or "nnsom"
//! map_sides = [10, 20]
//! init = "ric"                  # or ["ric", "sic"]
//! iterations = 3000
//! factor = 10
//! repeats = 20
//! seed = 1
//!
//! [grid]
//! param = "c_q"                 # "l_zeta" for nnsom
//! lo = 0.01
//! hi = 1.0
//! count = 19
//!
//! [output]
//! results = "results.csv"
//! traces = "traces.json"
//! ```

use std::path::{Path, PathBuf};

use fnnsom::harness::{geometric_grid, SweepGrid, DEFAULT_RECORD_EVERY, DEFAULT_REPEATS, DEFAULT_SAMPLES_FACTOR};
use fnnsom::map::DEFAULT_EMA_DECAY;
use fnnsom::metrics::DEFAULT_TANGLE_FACTOR;
use fnnsom::{Dataset, DatasetKind, InitMode, RatePolicy};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    fn items(&self) -> Vec<&str> {
        match self {
            OneOrMany::One(s) => vec![s.as_str()],
            OneOrMany::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub results: Option<PathBuf>,
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub dataset: OneOrMany,
    pub points: Option<PathBuf>,
    pub variant: String,
    pub map_sides: Vec<usize>,
    pub grid: GridSpec,
    #[serde(default = "default_init")]
    pub init: OneOrMany,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_factor")]
    pub factor: u64,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default = "default_ema_decay")]
    pub ema_decay: f64,
    #[serde(default = "default_tangle_factor")]
    pub tangle_factor: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_init() -> OneOrMany {
    OneOrMany::One("ric".into())
}
fn default_iterations() -> u64 {
    3000
}
fn default_factor() -> u64 {
    DEFAULT_SAMPLES_FACTOR
}
fn default_repeats() -> u32 {
    DEFAULT_REPEATS
}
fn default_record_every() -> u64 {
    DEFAULT_RECORD_EVERY
}
fn default_ema_decay() -> f64 {
    DEFAULT_EMA_DECAY
}
fn default_tangle_factor() -> f64 {
    DEFAULT_TANGLE_FACTOR
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
    }

    /// Expands the config into a sweep grid. Relative point-cloud paths are
    /// resolved against `base_dir`.
    pub fn grid(&self, base_dir: &Path) -> Result<SweepGrid, CliError> {
        let bad = |m: String| CliError::Config(m);
        let mut datasets = Vec::new();
        for name in self.dataset.items() {
            let kind: DatasetKind = name
                .parse()
                .map_err(|_| bad(format!("dataset: unknown dataset '{name}'")))?;
            let ds = if kind == DatasetKind::FilePointCloud {
                let points = self
                    .points
                    .as_ref()
                    .ok_or_else(|| bad("dataset: 'point_cloud' needs a `points` file".into()))?;
                Dataset::from_file(base_dir.join(points))?
            } else {
                Dataset::synthetic(kind).map_err(|e| bad(e.to_string()))?
            };
            datasets.push(ds);
        }
        let mut init_modes = Vec::new();
        for name in self.init.items() {
            init_modes.push(
                name.parse::<InitMode>()
                    .map_err(|_| bad(format!("init: unknown mode '{name}'")))?,
            );
        }
        let expected = match self.variant.as_str() {
            "fnnsom" => "c_q",
            "nnsom" => "l_zeta",
            other => return Err(bad(format!("variant: '{other}' cannot be swept (use fnnsom or nnsom)"))),
        };
        if self.grid.param != expected {
            return Err(bad(format!(
                "grid.param: variant {} sweeps '{expected}', not '{}'",
                self.variant, self.grid.param
            )));
        }
        let values =
            geometric_grid(self.grid.lo, self.grid.hi, self.grid.count).map_err(|e| bad(format!("grid: {e}")))?;
        let policies = values
            .into_iter()
            .map(|v| {
                if expected == "c_q" {
                    RatePolicy::fnnsom(v)
                } else {
                    RatePolicy::nnsom(v)
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("grid: {e}")))?;
        if self.map_sides.is_empty() || self.map_sides.iter().any(|&s| s < 2) {
            return Err(bad("map_sides: need at least one side of 2 or more".into()));
        }
        if self.repeats == 0 {
            return Err(bad("repeats: must be at least 1".into()));
        }
        if !(self.tangle_factor > 0.0) {
            return Err(bad("tangle_factor: must be positive".into()));
        }
        Ok(SweepGrid {
            datasets,
            map_sides: self.map_sides.clone(),
            policies,
            init_modes,
            iterations: self.iterations,
            samples_per_iteration_factor: self.factor,
            record_every: self.record_every,
            ema_decay: self.ema_decay,
            repeats: self.repeats,
            base_seed: self.seed,
        })
    }
}
