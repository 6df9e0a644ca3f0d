//! Trial execution and parameter sweeps.
//!
//! A trial trains one map from scratch for a fixed number of iterations; an
//! iteration is `factor * n` samples for a map of `n` units. Sweeps expand a
//! grid of cells times repeats into trials, each with its own derived seed,
//! and run them on a bounded worker pool. Results always come back in plan
//! order, so output is identical for any degree of parallelism.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{HarnessError, SomError};
use crate::lattice::LatticeGraph;
use crate::map::{init_weights, InitMode, MapState, DEFAULT_EMA_DECAY};
use crate::metrics::{count_edge_crossings, map_alfa, map_quantization, MapAlfaTrace};
use crate::rate::RatePolicy;

/// Samples per unit per iteration.
pub const DEFAULT_SAMPLES_FACTOR: u64 = 10;
pub const DEFAULT_RECORD_EVERY: u64 = 50;
pub const DEFAULT_REPEATS: u32 = 20;

// sub-stream tags mixed into a trial seed
const INIT_STREAM: u64 = 0x696e_6974;
const DATA_STREAM: u64 = 0x6461_7461;
const PROBE_STREAM: u64 = 0x7072_6f62;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of repeat `repeat` of grid cell `cell` in a sweep seeded with `base`.
pub fn derive_seed(base: u64, cell: u64, repeat: u64) -> u64 {
    mix64(mix64(mix64(base) ^ cell) ^ repeat.rotate_left(32))
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

/// `count` values from `lo` to `hi` with a constant ratio.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, SomError> {
    if !(lo > 0.0) || !lo.is_finite() {
        return Err(SomError::InvalidInput(format!(
            "geometric grid needs a positive lower end, got {lo}"
        )));
    }
    if !(hi > lo) || !hi.is_finite() {
        return Err(SomError::InvalidInput(format!("grid upper end {hi} must exceed {lo}")));
    }
    if count < 2 {
        return Err(SomError::InvalidInput(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|k| match k {
            0 => lo,
            k if k == count - 1 => hi,
            k => lo * (ratio * k as f64).exp(),
        })
        .collect())
}

/// One experiment cell instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub dataset: Dataset,
    /// The lattice is `map_side × map_side`.
    pub map_side: usize,
    pub policy: RatePolicy,
    pub init_mode: InitMode,
    pub iterations: u64,
    pub samples_per_iteration_factor: u64,
    pub seed: u64,
    pub repeat: u32,
    /// A_t is recorded every this many iterations.
    pub record_every: u64,
    pub ema_decay: f64,
}

impl TrialConfig {
    pub fn new(dataset: Dataset, map_side: usize, policy: RatePolicy, init_mode: InitMode) -> Self {
        Self {
            dataset,
            map_side,
            policy,
            init_mode,
            iterations: 3000,
            samples_per_iteration_factor: DEFAULT_SAMPLES_FACTOR,
            seed: 0,
            repeat: 0,
            record_every: DEFAULT_RECORD_EVERY,
            ema_decay: DEFAULT_EMA_DECAY,
        }
    }

    pub fn with_iterations(mut self, iterations: u64) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn unit_count(&self) -> usize {
        self.map_side * self.map_side
    }

    pub fn total_samples(&self) -> u64 {
        self.iterations * self.samples_per_iteration_factor * self.unit_count() as u64
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if self.samples_per_iteration_factor < 1 {
            return bad("samples-per-iteration factor must be at least 1".into());
        }
        if self.map_side < 2 {
            return bad(format!("map side must be at least 2, got {}", self.map_side));
        }
        if self.record_every < 1 {
            return bad("record_every must be at least 1".into());
        }
        self.policy.validate()?;
        Ok(())
    }

    /// Flat description used in result files.
    pub fn echo(&self) -> ConfigEcho {
        let (param_name, param_value) = self.policy.param();
        ConfigEcho {
            dataset: self.dataset.kind().as_str().to_string(),
            map_side: self.map_side,
            variant: self.policy.variant_name().to_string(),
            param_name: param_name.to_string(),
            param_value,
            init_mode: self.init_mode.as_str().to_string(),
            iterations: self.iterations,
            samples_per_iteration_factor: self.samples_per_iteration_factor,
            seed: self.seed,
            repeat: self.repeat,
            record_every: self.record_every,
            ema_decay: self.ema_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub map_side: usize,
    pub variant: String,
    pub param_name: String,
    pub param_value: f64,
    pub init_mode: String,
    pub iterations: u64,
    pub samples_per_iteration_factor: u64,
    pub seed: u64,
    pub repeat: u32,
    pub record_every: u64,
    pub ema_decay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub config: TrialConfig,
    pub alfa_trace: MapAlfaTrace,
    /// A_t after the last iteration.
    pub final_alfa: f64,
    pub final_quantization: f64,
    pub final_weights: Vec<f64>,
    pub dim: usize,
    /// Only computed for 2D sample spaces.
    pub edge_crossings: Option<u64>,
    pub wall_time_seconds: f64,
    pub samples_processed: u64,
}

impl TrialResult {
    pub fn is_crossed(&self) -> Option<bool> {
        self.edge_crossings.map(|c| c > 0)
    }

    /// Equality on everything except timing.
    pub fn same_outcome(&self, other: &TrialResult) -> bool {
        self.config == other.config
            && self.alfa_trace == other.alfa_trace
            && self.final_alfa.to_bits() == other.final_alfa.to_bits()
            && self.final_quantization.to_bits() == other.final_quantization.to_bits()
            && self.final_weights.len() == other.final_weights.len()
            && self
                .final_weights
                .iter()
                .zip(&other.final_weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.edge_crossings == other.edge_crossings
            && self.samples_processed == other.samples_processed
    }
}

/// Topographic error of a map measured on `samples` probe samples without
/// training it: the fraction whose second-best unit is not a lattice neighbor
/// of the best.
pub fn probe_alfa(
    state: &MapState,
    graph: &LatticeGraph,
    dataset: &Dataset,
    seed: u64,
    samples: u64,
) -> Result<f64, SomError> {
    let mut stream = dataset.stream(seed);
    let mut buf = vec![0.0; dataset.dim()];
    let mut defects = 0u64;
    for _ in 0..samples {
        stream.next_into(&mut buf)?;
        let (b, s) = state.find_bmu(&buf)?;
        if !graph.are_neighbors(b, s) {
            defects += 1;
        }
    }
    Ok(defects as f64 / samples.max(1) as f64)
}

/// Builds the initial map for a trial.
pub fn initial_state(config: &TrialConfig) -> Result<(LatticeGraph, MapState), HarnessError> {
    let graph = LatticeGraph::square(config.map_side)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, INIT_STREAM));
    let weights = init_weights(
        config.init_mode,
        graph.unit_count(),
        &config.dataset.bounding_box(),
        &mut init_rng,
    )?;
    let mut state = MapState::new(weights, config.dataset.dim(), config.ema_decay)?;
    state.enable_grid_index(&config.dataset.bounding_box());
    Ok((graph, state))
}

/// Trains one map per `config`.
///
/// The trace holds A_t after `t` completed iterations for every multiple `t`
/// of `record_every` up to `iterations`, starting with `t = 0`. Before any
/// training the per-unit estimates are empty, so the `t = 0` entry is the
/// topographic error of the initial weights on one iteration's worth of
/// independent probe samples.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult, HarnessError> {
    config.validate()?;
    let (graph, mut state) = initial_state(config)?;
    let n = graph.unit_count() as u64;
    let per_iteration = config.samples_per_iteration_factor * n;

    let mut trace = MapAlfaTrace::new();
    let a0 = probe_alfa(
        &state,
        &graph,
        &config.dataset,
        sub_seed(config.seed, PROBE_STREAM),
        per_iteration,
    )?;
    trace.push(0, a0)?;

    let mut stream = config.dataset.stream(sub_seed(config.seed, DATA_STREAM));
    let mut buf = vec![0.0; config.dataset.dim()];
    let mut processed = 0u64;
    let start = Instant::now();
    let mut mean_weights = vec![0.0; state.weights().len()];
    let last = config.iterations - 1;
    for it in 0..config.iterations {
        for _ in 0..per_iteration {
            stream.next_into(&mut buf)?;
            state.apply_sample(&config.policy, &graph, &buf, it)?;
            if it == last {
                for (m, w) in mean_weights.iter_mut().zip(state.weights()) {
                    *m += w;
                }
            }
        }
        processed += per_iteration;
        let done = it + 1;
        if done % config.record_every == 0 {
            trace.push(done, map_alfa(&state)?)?;
        }
    }
    let wall_time_seconds = start.elapsed().as_secs_f64();

    for m in mean_weights.iter_mut() {
        *m /= per_iteration as f64;
    }
    let edge_crossings = if state.dim() == 2 {
        let settled = MapState::new(mean_weights.clone(), 2, config.ema_decay)?;
        Some(count_edge_crossings(&settled, &graph)?)
    } else {
        None
    };
    Ok(TrialResult {
        config: config.clone(),
        alfa_trace: trace,
        final_alfa: map_alfa(&state)?,
        final_quantization: map_quantization(&state)?,
        dim: state.dim(),
        final_weights: state.weights().to_vec(),
        edge_crossings,
        wall_time_seconds,
        samples_processed: processed,
    })
}

/// Grid cells (each a template config whose seed and repeat are ignored) and a
/// repeat count.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub cells: Vec<TrialConfig>,
    pub repeats: u32,
    pub base_seed: u64,
}

impl SweepPlan {
    pub fn new(cells: Vec<TrialConfig>, repeats: u32, base_seed: u64) -> Self {
        Self {
            cells,
            repeats,
            base_seed,
        }
    }

    pub fn trial_count(&self) -> usize {
        self.cells.len() * self.repeats as usize
    }

    /// Every `(cell, repeat)` trial, cell-major, with derived seeds.
    pub fn trials(&self) -> Vec<TrialConfig> {
        let mut out = Vec::with_capacity(self.trial_count());
        for (ci, cell) in self.cells.iter().enumerate() {
            for r in 0..self.repeats {
                let mut t = cell.clone();
                t.seed = derive_seed(self.base_seed, ci as u64, r as u64);
                t.repeat = r;
                out.push(t);
            }
        }
        out
    }
}

/// Axes of a full-factorial sweep.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub datasets: Vec<Dataset>,
    pub map_sides: Vec<usize>,
    /// One policy per grid point of the swept parameter.
    pub policies: Vec<RatePolicy>,
    pub init_modes: Vec<InitMode>,
    pub iterations: u64,
    pub samples_per_iteration_factor: u64,
    pub record_every: u64,
    pub ema_decay: f64,
    pub repeats: u32,
    pub base_seed: u64,
}

impl SweepGrid {
    /// Expands dataset × side × init × policy into a plan, in that nesting order.
    pub fn plan(&self) -> SweepPlan {
        let mut cells = Vec::new();
        for ds in &self.datasets {
            for &side in &self.map_sides {
                for &init in &self.init_modes {
                    for &policy in &self.policies {
                        let mut c = TrialConfig::new(ds.clone(), side, policy, init);
                        c.iterations = self.iterations;
                        c.samples_per_iteration_factor = self.samples_per_iteration_factor;
                        c.record_every = self.record_every;
                        c.ema_decay = self.ema_decay;
                        cells.push(c);
                    }
                }
            }
        }
        SweepPlan::new(cells, self.repeats, self.base_seed)
    }
}

#[derive(Debug)]
pub struct TrialFailure {
    pub index: usize,
    pub config: TrialConfig,
    pub error: HarnessError,
}

#[derive(Debug, Default)]
pub struct SweepReport {
    /// Successful trials in plan order.
    pub results: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
}

fn collect(trials: Vec<TrialConfig>, outcomes: Vec<Result<TrialResult, HarnessError>>) -> SweepReport {
    let mut report = SweepReport::default();
    for (index, (config, outcome)) in trials.into_iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(r) => report.results.push(r),
            Err(error) => report.failures.push(TrialFailure { index, config, error }),
        }
    }
    report
}

/// Runs every trial of `plan` on the calling thread.
pub fn run_sweep_sequential(plan: &SweepPlan) -> SweepReport {
    let trials = plan.trials();
    let outcomes = trials.iter().map(run_trial).collect();
    collect(trials, outcomes)
}

/// Runs every trial of `plan` on a pool of `parallelism` workers.
#[cfg(feature = "parallel")]
pub fn run_sweep_parallel(plan: &SweepPlan, parallelism: usize) -> Result<SweepReport, HarnessError> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let trials = plan.trials();
    let outcomes = pool.install(|| trials.par_iter().map(run_trial).collect());
    Ok(collect(trials, outcomes))
}

/// Runs a sweep with up to `parallelism` concurrent trials. Without the
/// `parallel` feature trials always run sequentially.
pub fn run_sweep(plan: &SweepPlan, parallelism: usize) -> Result<SweepReport, HarnessError> {
    if plan.cells.is_empty() || plan.repeats == 0 {
        return Err(HarnessError::InvalidConfig("sweep plan is empty".into()));
    }
    if parallelism < 1 {
        return Err(HarnessError::InvalidConfig("parallelism must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    if parallelism > 1 {
        return run_sweep_parallel(plan, parallelism);
    }
    Ok(run_sweep_sequential(plan))
}

/// One CSV row per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub map_side: usize,
    pub variant: String,
    pub param_name: String,
    pub param_value: f64,
    pub init_mode: String,
    pub seed: u64,
    pub repeat: u32,
    #[serde(rename = "final_A")]
    pub final_alfa: f64,
    pub final_quantization: f64,
    pub edge_crossings: Option<u64>,
    pub wall_time_seconds: f64,
    pub samples_processed: u64,
}

impl From<&TrialResult> for ResultRow {
    fn from(r: &TrialResult) -> Self {
        let (param_name, param_value) = r.config.policy.param();
        ResultRow {
            dataset: r.config.dataset.kind().as_str().to_string(),
            map_side: r.config.map_side,
            variant: r.config.policy.variant_name().to_string(),
            param_name: param_name.to_string(),
            param_value,
            init_mode: r.config.init_mode.as_str().to_string(),
            seed: r.config.seed,
            repeat: r.config.repeat,
            final_alfa: r.final_alfa,
            final_quantization: r.final_quantization,
            edge_crossings: r.edge_crossings,
            wall_time_seconds: r.wall_time_seconds,
            samples_processed: r.samples_processed,
        }
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "dataset",
    "map_side",
    "variant",
    "param_name",
    "param_value",
    "init_mode",
    "seed",
    "repeat",
    "final_A",
    "final_quantization",
    "edge_crossings",
    "wall_time_seconds",
    "samples_processed",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes rows as CSV with a header, even when `rows` is empty.
pub fn write_rows(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn persist_results(results: &[TrialResult], path: &Path) -> Result<(), HarnessError> {
    let rows: Vec<ResultRow> = results.iter().map(ResultRow::from).collect();
    write_rows(&rows, path)
}

/// Reads a results CSV, checking the header against [`CSV_HEADER`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(HarnessError::InvalidConfig(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

/// Trace file entry: echoed config, A_t trace and the final weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub config: ConfigEcho,
    pub trace: Vec<(u64, f64)>,
    pub dim: usize,
    pub final_weights: Vec<f64>,
}

impl From<&TrialResult> for TraceRecord {
    fn from(r: &TrialResult) -> Self {
        TraceRecord {
            config: r.config.echo(),
            trace: r.alfa_trace.values().to_vec(),
            dim: r.dim,
            final_weights: r.final_weights.clone(),
        }
    }
}

pub fn persist_traces(results: &[TrialResult], path: &Path) -> Result<(), HarnessError> {
    let records: Vec<TraceRecord> = results.iter().map(TraceRecord::from).collect();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    serde_json::to_writer(std::io::BufWriter::new(file), &records)?;
    Ok(())
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_examples() {
        let g = geometric_grid(0.01, 1.0, 3).unwrap();
        assert_eq!(g[0], 0.01);
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert_eq!(g[2], 1.0);

        let d = geometric_grid(0.5, 0.5 * 512.0, 10).unwrap();
        for (k, v) in d.iter().enumerate() {
            let expect = 0.5 * 2f64.powi(k as i32);
            assert!((v - expect).abs() <= 1e-12 * expect, "{k}: {v}");
        }

        assert!(geometric_grid(1.0, 1.0, 3).is_err());
        assert!(geometric_grid(0.0, 1.0, 3).is_err());
        assert!(geometric_grid(0.1, 1.0, 1).is_err());
    }

    #[test]
    fn grid_has_constant_ratio() {
        let g = geometric_grid(0.01, 1.0, 19).unwrap();
        let r0 = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        assert!(g.iter().any(|&c| (c - 0.15).abs() < 0.03));
    }

    fn tiny(iterations: u64) -> TrialConfig {
        let mut c = TrialConfig::new(Dataset::Square, 4, RatePolicy::fnnsom(0.15).unwrap(), InitMode::Ric)
            .with_iterations(iterations);
        c.record_every = 3;
        c
    }

    #[test]
    fn trial_accounting() {
        let r = run_trial(&tiny(10).with_seed(5)).unwrap();
        assert_eq!(r.samples_processed, 10 * 10 * 16);
        assert_eq!(r.alfa_trace.len(), 10 / 3 + 1);
        let iters: Vec<u64> = r.alfa_trace.values().iter().map(|p| p.0).collect();
        assert_eq!(iters, vec![0, 3, 6, 9]);
        assert!(r.edge_crossings.is_some());
        assert_eq!(r.final_weights.len(), 32);
    }

    #[test]
    fn trial_rejects_zero_iterations() {
        assert!(matches!(run_trial(&tiny(0)), Err(HarnessError::InvalidConfig(_))));
        let mut c = tiny(5);
        c.map_side = 1;
        assert!(run_trial(&c).is_err());
    }

    #[test]
    fn trial_is_deterministic_and_seed_sensitive() {
        let a = run_trial(&tiny(5).with_seed(9)).unwrap();
        let b = run_trial(&tiny(5).with_seed(9)).unwrap();
        let c = run_trial(&tiny(5).with_seed(10)).unwrap();
        assert!(a.same_outcome(&b));
        assert_ne!(a.final_weights, c.final_weights);
    }

    #[test]
    fn three_d_trials_skip_crossings() {
        let mut c = tiny(2);
        c.dataset = Dataset::SphericalShell;
        let r = run_trial(&c).unwrap();
        assert_eq!(r.edge_crossings, None);
        assert_eq!(r.dim, 3);
    }

    #[test]
    fn plan_seeds_are_distinct() {
        let cells = vec![tiny(1), tiny(1)];
        let plan = SweepPlan::new(cells, 3, 77);
        let trials = plan.trials();
        assert_eq!(trials.len(), 6);
        let mut seeds: Vec<u64> = trials.iter().map(|t| t.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 6);
    }

    #[test]
    fn empty_plan_is_rejected() {
        let plan = SweepPlan::new(vec![], 3, 1);
        assert!(run_sweep(&plan, 1).is_err());
        let plan = SweepPlan::new(vec![tiny(1)], 1, 1);
        assert!(run_sweep(&plan, 0).is_err());
    }

    #[test]
    fn failing_trials_are_reported_not_fatal() {
        let mut bad = tiny(1);
        bad.map_side = 1;
        let plan = SweepPlan::new(vec![tiny(1), bad, tiny(1)], 1, 3);
        let report = run_sweep(&plan, 1).unwrap();
        assert_eq!(report.results.len(), 2);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].index, 1);
    }
}
