//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use gsign_core::estimators::{EstimatorConfig, EstimatorKind};
use gsign_core::noise::{NoiseModel, DEFAULT_MOMENT_DRAWS, DEFAULT_P_S};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_ITERS: usize = 2400;
pub const DEFAULT_NEIGHBORS: usize = 8;
pub const DEFAULT_BURN_IN: usize = 50;
pub const DEFAULT_DUMP_COUNT: usize = 100_000;
pub const MAX_WINDOW: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SteadyState,
    StepSizeSweep,
    TimeVarying,
    NoiseDump,
    Theory,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SteadyState => "steady_state",
            ExperimentKind::StepSizeSweep => "step_size_sweep",
            ExperimentKind::TimeVarying => "time_varying",
            ExperimentKind::NoiseDump => "noise_dump",
            ExperimentKind::Theory => "theory",
        }
    }
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Random geometric sensor graph; `seed` defaults to the master seed.
    Sensor { n: usize, seed: Option<u64> },
    /// Unweighted k-nearest-neighbor graph over a coordinate file.
    Knn { coords: PathBuf, k: usize },
    EdgeList { path: PathBuf, nodes: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub step_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl EstimatorSpec {
    pub fn to_config(&self) -> EstimatorConfig {
        EstimatorConfig { kind: self.kind, step_size: self.step_size, p: self.p }
    }

    /// Column name used in output files.
    pub fn label(&self) -> String {
        match (self.kind, self.p) {
            (EstimatorKind::Glmp, Some(p)) => format!("glmp_p{p}"),
            (kind, _) => kind.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_sweep_kind")]
    pub estimator: EstimatorKind,
    pub step_sizes: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

fn default_sweep_kind() -> EstimatorKind {
    EstimatorKind::Gsign
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_synth_n")]
    pub n: usize,
    #[serde(default = "default_synth_t")]
    pub t: usize,
    /// Defaults to the master seed.
    pub seed: Option<u64>,
}

fn default_synth_n() -> usize {
    205
}

fn default_synth_t() -> usize {
    95
}

/// Time-varying input: either station files or the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub readings: Option<PathBuf>,
    pub coords: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    #[serde(default)]
    pub tracked_node: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_neighbors() -> usize {
    DEFAULT_NEIGHBORS
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    #[serde(default = "default_p_s")]
    pub p_s: f64,
    #[serde(default = "default_moment_draws")]
    pub draws: usize,
}

impl Default for MomentSpec {
    fn default() -> Self {
        Self { p_s: DEFAULT_P_S, draws: DEFAULT_MOMENT_DRAWS }
    }
}

fn default_p_s() -> f64 {
    DEFAULT_P_S
}

fn default_moment_draws() -> usize {
    DEFAULT_MOMENT_DRAWS
}

/// A fully resolved experiment description. Relative paths are resolved
/// against the directory of the config file by [`load_config`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_iters")]
    pub iters: usize,
    /// Convergence window; defaults to `min(iters / 5, 500)`.
    pub window: Option<usize>,
    #[serde(default = "default_outdir")]
    pub outdir: PathBuf,
    /// Worker threads; unset means one per core.
    pub threads: Option<usize>,
    pub graph: Option<GraphSpec>,
    pub bandwidth: Option<usize>,
    pub samples: Option<usize>,
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    pub sweep: Option<SweepSpec>,
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub moment: MomentSpec,
    /// Number of draws written by `noise_dump`.
    #[serde(default = "default_dump_count")]
    pub dump_count: usize,
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

fn default_iters() -> usize {
    DEFAULT_ITERS
}

fn default_outdir() -> PathBuf {
    PathBuf::from("results")
}

fn default_dump_count() -> usize {
    DEFAULT_DUMP_COUNT
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
            HarnessError::ConfigParse { line, msg: e.message().to_string() }
        })
    }

    /// Convergence window actually used.
    pub fn resolved_window(&self) -> usize {
        self.window.unwrap_or_else(|| (self.iters / 5).clamp(1, MAX_WINDOW))
    }

    /// Node count implied by the graph source, when it can be known without
    /// reading files.
    fn known_nodes(&self) -> Option<usize> {
        match (&self.graph, &self.dataset) {
            (Some(GraphSpec::Sensor { n, .. }), _) => Some(*n),
            (Some(GraphSpec::EdgeList { nodes: Some(n), .. }), _) => Some(*n),
            (None, Some(DatasetSpec { synthetic: Some(s), readings: None, .. })) => Some(s.n),
            _ => None,
        }
    }

    /// Every invariant violation, in a stable order. Empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        use ExperimentKind::*;
        if self.runs == 0 {
            v.push("runs must be at least 1".to_string());
        }
        if self.iters == 0 {
            v.push("iters must be at least 1".to_string());
        }
        if let Some(w) = self.window {
            if w == 0 || w >= self.iters {
                v.push(format!("window = {w} must lie in 1..iters ({})", self.iters));
            }
        }
        if self.threads == Some(0) {
            v.push("threads must be at least 1 when set".to_string());
        }
        let needs_noise = matches!(self.kind, SteadyState | StepSizeSweep | TimeVarying | NoiseDump | Theory);
        match &self.noise {
            None if needs_noise => v.push("noise model is required".to_string()),
            Some(n) => {
                if let Err(e) = n.validate() {
                    v.push(format!("noise: {e}"));
                }
            }
            None => {}
        }
        if !(self.moment.p_s > 0.0 && self.moment.p_s < 1.0) {
            v.push(format!("moment.p_s = {} must lie in (0, 1)", self.moment.p_s));
        }
        if self.moment.draws == 0 {
            v.push("moment.draws must be at least 1".to_string());
        }
        if self.kind == NoiseDump {
            if self.dump_count == 0 {
                v.push("dump_count must be at least 1".to_string());
            }
            return v;
        }

        // graph and band
        match self.kind {
            TimeVarying => {
                if self.graph.is_some() {
                    v.push("time_varying builds its graph from the dataset; remove [graph]".to_string());
                }
                match &self.dataset {
                    None => v.push("time_varying needs a [dataset] section".to_string()),
                    Some(d) => {
                        let files = d.readings.is_some() || d.coords.is_some();
                        if files && d.synthetic.is_some() {
                            v.push("dataset: give either readings/coords files or [dataset.synthetic], not both".to_string());
                        }
                        if !files && d.synthetic.is_none() {
                            v.push("dataset: needs readings and coords files or [dataset.synthetic]".to_string());
                        }
                        if files && (d.readings.is_none() || d.coords.is_none()) {
                            v.push("dataset: readings and coords must be given together".to_string());
                        }
                        if let Some(s) = &d.synthetic {
                            if s.n < 2 {
                                v.push(format!("dataset.synthetic.n = {} must be at least 2", s.n));
                            }
                            if s.t < 2 {
                                v.push(format!("dataset.synthetic.t = {} must be at least 2", s.t));
                            }
                        }
                        if d.neighbors == 0 {
                            v.push("dataset.neighbors must be at least 1".to_string());
                        }
                        if let Some(n) = self.known_nodes() {
                            if d.tracked_node >= n {
                                v.push(format!("dataset.tracked_node = {} outside 0..{n}", d.tracked_node));
                            }
                            if d.neighbors >= n {
                                v.push(format!("dataset.neighbors = {} must be below the node count {n}", d.neighbors));
                            }
                        }
                    }
                }
            }
            _ => {
                if self.dataset.is_some() {
                    v.push(format!("[dataset] only applies to time_varying, not {}", self.kind.name()));
                }
                match &self.graph {
                    None => v.push("graph source is required".to_string()),
                    Some(GraphSpec::Sensor { n, .. }) if *n < 2 => v.push(format!("graph.n = {n} must be at least 2")),
                    Some(GraphSpec::Knn { k, .. }) if *k == 0 => v.push("graph.k must be at least 1".to_string()),
                    _ => {}
                }
            }
        }
        match (self.bandwidth, self.samples) {
            (Some(f), Some(s)) => {
                if f == 0 {
                    v.push("bandwidth must be at least 1".to_string());
                }
                if s < f {
                    v.push(format!("samples = {s} must be at least bandwidth = {f}"));
                }
                if let Some(n) = self.known_nodes() {
                    if s > n {
                        v.push(format!("samples = {s} exceeds the node count {n}"));
                    }
                }
            }
            (f, s) => {
                if f.is_none() {
                    v.push("bandwidth is required".to_string());
                }
                if s.is_none() {
                    v.push("samples is required".to_string());
                }
            }
        }

        // estimators
        if self.kind == StepSizeSweep {
            if !self.estimators.is_empty() {
                v.push("step_size_sweep takes its estimator from [sweep]; remove [[estimators]]".to_string());
            }
            match &self.sweep {
                None => v.push("step_size_sweep needs a [sweep] section".to_string()),
                Some(s) => {
                    if s.step_sizes.is_empty() {
                        v.push("sweep.step_sizes must not be empty".to_string());
                    }
                    for (i, &mu) in s.step_sizes.iter().enumerate() {
                        let cfg = EstimatorConfig { kind: s.estimator, step_size: mu, p: s.p };
                        if let Err(e) = cfg.validate() {
                            v.push(format!("sweep.step_sizes[{i}]: {e}"));
                        }
                    }
                    if s.step_sizes.is_empty() {
                        let cfg = EstimatorConfig { kind: s.estimator, step_size: 1.0, p: s.p };
                        if let Err(e) = cfg.validate() {
                            v.push(format!("sweep: {e}"));
                        }
                    }
                }
            }
        } else {
            if self.sweep.is_some() {
                v.push(format!("[sweep] only applies to step_size_sweep, not {}", self.kind.name()));
            }
            if self.estimators.is_empty() {
                v.push("estimator list is empty".to_string());
            }
            for (i, e) in self.estimators.iter().enumerate() {
                if let Err(err) = e.to_config().validate() {
                    v.push(format!("estimators[{i}]: {err}"));
                }
            }
            let mut labels: Vec<String> = self.estimators.iter().map(EstimatorSpec::label).collect();
            labels.sort();
            if labels.windows(2).any(|w| w[0] == w[1]) {
                v.push("estimators: each kind (and GLMP exponent) may appear once".to_string());
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Invalid(v))
        }
    }

    /// Makes relative input paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.graph {
            Some(GraphSpec::Knn { coords, .. }) => fix(coords),
            Some(GraphSpec::EdgeList { path, .. }) => fix(path),
            _ => {}
        }
        if let Some(d) = &mut self.dataset {
            if let Some(p) = &mut d.readings {
                fix(p);
            }
            if let Some(p) = &mut d.coords {
                fix(p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads, parses and validates a config file. Relative input paths are taken
/// relative to the file's directory; `outdir` is left as written.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    cfg.validate()?;
    Ok(cfg)
}
