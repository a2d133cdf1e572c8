//! Monte Carlo experiment drivers.
//!
//! Run `r` of every estimator draws its noise from the stream
//! `derive_seed(master, [RUN, r])`, so estimators see the same noise
//! realizations and results do not depend on how runs are spread over
//! threads. Per-run results are reduced in run order.

use std::collections::BTreeSet;
use gsign_core::analysis::{
    detect_convergence, mad, msd, step_size_bound, theoretical_msd, ConvergenceSummary, MetricsTrace, RunMetrics,
    StabilityContext,
};
use gsign_core::estimators::{run_with, EstimatorConfig, EstimatorKind, RunSpec, SignalSource, SteadySignal};
use gsign_core::graph::{build_laplacian, knn_geographic_graph, random_sensor_graph, Graph};
use gsign_core::io::{parse_coords_csv, parse_edge_list};
use gsign_core::noise::{flom_inverse_moment, NoiseModel, Sampler};
use gsign_core::rng::{self, derive_seed, tag};
use gsign_core::spectral::{
    eigendecompose, greedy_sampling, low_pass, make_bandlimit, BandlimitOperator, SamplingSet, SpectralBasis,
};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DatasetSpec, EstimatorSpec, ExperimentConfig, ExperimentKind, GraphSpec};
use crate::dataset::{ingest_station_dataset, synthetic_dataset, TimeVaryingSignal};
use crate::error::HarnessError;

/// Stream tag of per-run noise seeds.
pub const RUN_TAG: u64 = 0x52554E;
/// A tracked-node deviation above this multiple of the node's dynamic range
/// counts as an excursion.
pub const EXCURSION_FACTOR: f64 = 10.0;

pub fn run_seed(master: u64, run: usize) -> u64 {
    derive_seed(master, &[RUN_TAG, run as u64])
}

/// Graph, spectral basis, bandlimit operator and sampling set.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub graph: Graph,
    pub basis: SpectralBasis,
    pub band: BandlimitOperator,
    pub sampling: SamplingSet,
}

impl Workspace {
    pub fn new(graph: Graph, bandwidth: usize, samples: usize) -> Result<Self, HarnessError> {
        let basis = eigendecompose(&build_laplacian(&graph)?)?;
        let n = graph.n_nodes();
        if bandwidth > n || samples > n {
            return Err(HarnessError::Invalid(vec![format!(
                "bandwidth = {bandwidth} and samples = {samples} must not exceed the node count {n}"
            )]));
        }
        let band = make_bandlimit(&basis, &low_pass(bandwidth))?;
        let sampling = greedy_sampling(band.u_f(), samples)?;
        Ok(Self { graph, basis, band, sampling })
    }
}

pub fn build_graph(cfg: &ExperimentConfig) -> Result<Graph, HarnessError> {
    match cfg.graph.as_ref() {
        Some(GraphSpec::Sensor { n, seed }) => Ok(random_sensor_graph(*n, seed.unwrap_or(cfg.seed))?),
        Some(GraphSpec::Knn { coords, k }) => {
            let text = std::fs::read_to_string(coords).map_err(|e| HarnessError::io(coords, e))?;
            Ok(knn_geographic_graph(&parse_coords_csv(&text)?, *k)?)
        }
        Some(GraphSpec::EdgeList { path, nodes }) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            Ok(parse_edge_list(&text, *nodes)?)
        }
        None => Err(HarnessError::Invalid(vec!["graph source is required".into()])),
    }
}

fn noise_of(cfg: &ExperimentConfig) -> Result<NoiseModel, HarnessError> {
    cfg.noise.ok_or_else(|| HarnessError::Invalid(vec!["noise model is required".into()]))
}

fn band_sizes(cfg: &ExperimentConfig) -> Result<(usize, usize), HarnessError> {
    match (cfg.bandwidth, cfg.samples) {
        (Some(f), Some(s)) => Ok((f, s)),
        _ => Err(HarnessError::Invalid(vec!["bandwidth and samples are required".into()])),
    }
}

/// Fixed bandlimited target `x0 = U_F s` with `s` standard normal.
pub fn steady_signal(band: &BandlimitOperator, master: u64) -> Vec<f64> {
    let mut rng = rng::stream(master, &[tag::SIGNAL]);
    let s: Vec<f64> = (0..band.bandwidth()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let u = band.u_f();
    (0..band.n()).map(|i| (0..s.len()).map(|k| u[(i, k)] * s[k]).sum()).collect()
}

/// The inverse fractional moment `r` standing in for `R = r I`.
pub fn inverse_moment(cfg: &ExperimentConfig, noise: &NoiseModel) -> Result<f64, HarnessError> {
    Ok(flom_inverse_moment(noise, cfg.moment.p_s, cfg.moment.draws, derive_seed(cfg.seed, &[tag::MOMENT]))?)
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Invalid(vec![format!("thread pool: {e}")]))
}

/// Per-run output of [`run_ensemble`].
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub metrics: RunMetrics,
    /// Estimate at the tracked node after each iteration.
    pub tracked: Option<Vec<f64>>,
}

fn single_run<S: SignalSource + ?Sized>(
    spec: &RunSpec<'_>,
    source: &S,
    tracked: Option<usize>,
) -> Result<RunRecord, gsign_core::Error> {
    let n_iters = spec.n_iters;
    let mut m = RunMetrics { msd: Vec::with_capacity(n_iters), mad: Vec::with_capacity(n_iters), ..Default::default() };
    let mut track = tracked.map(|_| Vec::with_capacity(n_iters));
    let outcome = run_with(spec, source, |_, x, truth| {
        m.msd.push(msd(x, truth).expect("lengths checked by run_with"));
        m.mad.push(mad(x, truth).expect("lengths checked by run_with"));
        if let (Some(t), Some(i)) = (track.as_mut(), tracked) {
            t.push(x[i]);
        }
    })?;
    m.diverged_at = outcome.diverged_at;
    m.step_nanos = outcome.step_nanos;
    Ok(RunRecord { metrics: m, tracked: track })
}

/// Runs every estimator in `cfgs` for `runs` Monte Carlo runs and returns
/// the records indexed `[estimator][run]`.
///
/// Each worker task takes one run index and steps all estimators through it
/// in turn, so slow phases of a shared machine land on every estimator's
/// timing alike.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble<S: SignalSource + Sync + ?Sized>(
    pool: &rayon::ThreadPool,
    cfgs: &[EstimatorConfig],
    ws: &Workspace,
    noise: &Sampler,
    source: &S,
    n_iters: usize,
    runs: usize,
    master: u64,
    tracked: Option<usize>,
) -> Result<Vec<Vec<RunRecord>>, HarnessError> {
    let by_run = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|r| {
                cfgs.iter()
                    .map(|cfg| {
                        let spec = RunSpec {
                            cfg,
                            sampling: &ws.sampling,
                            band: &ws.band,
                            noise,
                            n_iters,
                            seed: run_seed(master, r),
                        };
                        single_run(&spec, source, tracked)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, gsign_core::Error>>()
    })?;
    let mut out: Vec<Vec<RunRecord>> = cfgs.iter().map(|_| Vec::with_capacity(runs)).collect();
    for per_run in by_run {
        for (e, rec) in per_run.into_iter().enumerate() {
            out[e].push(rec);
        }
    }
    Ok(out)
}

fn window_mean(v: &[f64], window: usize) -> f64 {
    let w = window.min(v.len()).max(1);
    v[v.len() - w..].iter().sum::<f64>() / w as f64
}

/// A run counts as converged when it did not diverge and its final-window
/// mean MSD lies within this factor of the ensemble steady value.
pub const RUN_STEADY_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorOutcome {
    pub label: String,
    pub config: EstimatorConfig,
    #[serde(skip)]
    pub trace: MetricsTrace,
    #[serde(skip)]
    pub runs: Vec<RunRecord>,
    pub convergence: Option<ConvergenceSummary>,
    pub divergence_count: usize,
    pub diverged_runs: Vec<usize>,
    pub runs_converged: usize,
    /// Per-run mean MSD over the final window.
    pub run_final_msd: Vec<f64>,
    /// Per-run largest MSD over the second half of the iterations.
    pub run_peak_msd_late: Vec<f64>,
    pub theoretical_msd: Option<f64>,
    pub step_size_bound: Option<f64>,
    #[serde(skip)]
    pub median_step_us: f64,
    #[serde(skip)]
    pub mean_step_us: f64,
}

impl EstimatorOutcome {
    fn build(
        label: String,
        config: EstimatorConfig,
        runs: Vec<RunRecord>,
        n_iters: usize,
        window: usize,
        theory: Option<f64>,
        bound: Option<f64>,
    ) -> Result<Self, HarnessError> {
        let metrics: Vec<RunMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
        let trace = MetricsTrace::average(&metrics, n_iters)?;
        let convergence = if window < n_iters {
            Some(detect_convergence(&trace.msd, window, trace.any_diverged())?)
        } else {
            None
        };
        let steady = convergence.map(|c| c.steady_value);
        let mut runs_converged = 0;
        let mut run_final_msd = Vec::with_capacity(runs.len());
        let mut run_peak_msd_late = Vec::with_capacity(runs.len());
        for r in &metrics {
            let fin = window_mean(&r.msd, window);
            run_final_msd.push(fin);
            run_peak_msd_late.push(r.msd[n_iters / 2..].iter().cloned().fold(0.0, |a: f64, b| if b.is_nan() || b > a { b } else { a }));
            let near = steady.is_some_and(|s| fin.is_finite() && fin <= RUN_STEADY_FACTOR * s && fin >= s / RUN_STEADY_FACTOR);
            if r.diverged_at.is_none() && near {
                runs_converged += 1;
            }
        }
        let diverged_runs = metrics.iter().enumerate().filter(|(_, m)| m.diverged_at.is_some()).map(|(i, _)| i).collect();
        Ok(Self {
            label,
            config,
            divergence_count: trace.divergence_count(),
            diverged_runs,
            runs_converged,
            run_final_msd,
            run_peak_msd_late,
            theoretical_msd: theory,
            step_size_bound: bound,
            median_step_us: trace.timing.median_nanos / 1e3,
            mean_step_us: trace.timing.mean_nanos() / 1e3,
            convergence,
            trace,
            runs,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateResult {
    pub config: ExperimentConfig,
    pub n_nodes: usize,
    pub sampling_set: Vec<usize>,
    pub inverse_moment: f64,
    pub step_size_bound: Option<f64>,
    pub initial_msd: f64,
    pub estimators: Vec<EstimatorOutcome>,
    pub skipped: Vec<String>,
    pub warnings: Vec<String>,
}

/// Theory line and stability bound for G-Sign at `mu`, with a warning when
/// `mu` is not admissible.
fn gsign_theory(ctx: &StabilityContext, mu: f64, warnings: &mut Vec<String>) -> (Option<f64>, Option<f64>) {
    match step_size_bound(ctx) {
        Ok(bound) => {
            if mu >= bound {
                warnings.push(format!("gsign step size {mu} is at or above the stability bound {bound}"));
                (None, Some(bound))
            } else {
                match theoretical_msd(ctx, mu) {
                    Ok(t) => (Some(t), Some(bound)),
                    Err(e) => {
                        warnings.push(format!("theoretical MSD at step size {mu}: {e}"));
                        (None, Some(bound))
                    }
                }
            }
        }
        Err(e) => {
            warnings.push(format!("stability bound: {e}"));
            (None, None)
        }
    }
}

pub fn run_steady_state(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<SteadyStateResult, HarnessError> {
    let noise = noise_of(cfg)?;
    let (f, s) = band_sizes(cfg)?;
    let ws = Workspace::new(build_graph(cfg)?, f, s)?;
    let x0 = steady_signal(&ws.band, cfg.seed);
    let r = inverse_moment(cfg, &noise)?;
    let ctx = StabilityContext::new(&ws.band, &ws.sampling, r)?;
    let sampler = noise.sampler()?;
    let window = cfg.resolved_window();
    let source = SteadySignal(x0.clone());
    let mut warnings = Vec::new();
    let mut skipped = Vec::new();
    let mut estimators = Vec::new();
    let bound = step_size_bound(&ctx).ok();
    let mut active = Vec::new();
    for spec in &cfg.estimators {
        if spec.kind == EstimatorKind::Glmp && noise.is_cauchy() {
            skipped.push(format!("{}: the p-th power update has no admissible exponent under Cauchy noise", spec.label()));
        } else {
            active.push(spec);
        }
    }
    let cfgs: Vec<EstimatorConfig> = active.iter().map(|s| s.to_config()).collect();
    let records = run_ensemble(pool, &cfgs, &ws, &sampler, &source, cfg.iters, cfg.runs, cfg.seed, None)?;
    for ((spec, ecfg), runs) in active.iter().zip(cfgs).zip(records) {
        let (theory, b) = if spec.kind == EstimatorKind::Gsign {
            gsign_theory(&ctx, spec.step_size, &mut warnings)
        } else {
            (None, None)
        };
        estimators.push(EstimatorOutcome::build(spec.label(), ecfg, runs, cfg.iters, window, theory, b)?);
    }
    Ok(SteadyStateResult {
        config: cfg.clone(),
        n_nodes: ws.graph.n_nodes(),
        sampling_set: ws.sampling.nodes().to_vec(),
        inverse_moment: r,
        step_size_bound: bound,
        initial_msd: msd(&vec![0.0; x0.len()], &x0)?,
        estimators,
        skipped,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub n_nodes: usize,
    pub sampling_set: Vec<usize>,
    pub inverse_moment: f64,
    pub step_size_bound: Option<f64>,
    /// Step sizes actually run, in the order given, duplicates removed.
    pub step_sizes: Vec<f64>,
    pub points: Vec<EstimatorOutcome>,
    pub warnings: Vec<String>,
}

pub fn run_step_size_sweep(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<SweepResult, HarnessError> {
    let noise = noise_of(cfg)?;
    let (f, s) = band_sizes(cfg)?;
    let sweep = cfg.sweep.as_ref().ok_or_else(|| HarnessError::Invalid(vec!["[sweep] is required".into()]))?;
    let ws = Workspace::new(build_graph(cfg)?, f, s)?;
    let x0 = steady_signal(&ws.band, cfg.seed);
    let r = inverse_moment(cfg, &noise)?;
    let ctx = StabilityContext::new(&ws.band, &ws.sampling, r)?;
    let sampler = noise.sampler()?;
    let source = SteadySignal(x0);
    let window = cfg.resolved_window();
    let mut warnings = Vec::new();

    let mut seen = BTreeSet::new();
    let mut step_sizes = Vec::new();
    for &mu in &sweep.step_sizes {
        if seen.insert(mu.to_bits()) {
            step_sizes.push(mu);
        } else {
            warnings.push(format!("duplicate step size {mu} dropped"));
        }
    }
    let cfgs: Vec<EstimatorConfig> =
        step_sizes.iter().map(|&mu| EstimatorConfig { kind: sweep.estimator, step_size: mu, p: sweep.p }).collect();
    let records = run_ensemble(pool, &cfgs, &ws, &sampler, &source, cfg.iters, cfg.runs, cfg.seed, None)?;
    let mut points = Vec::new();
    for (ecfg, runs) in cfgs.into_iter().zip(records) {
        let mu = ecfg.step_size;
        let (theory, b) = if sweep.estimator == EstimatorKind::Gsign {
            gsign_theory(&ctx, mu, &mut warnings)
        } else {
            (None, None)
        };
        let label = format!("mu_{}", crate::output::fmt_f64(mu));
        points.push(EstimatorOutcome::build(label, ecfg, runs, cfg.iters, window, theory, b)?);
    }
    Ok(SweepResult {
        config: cfg.clone(),
        n_nodes: ws.graph.n_nodes(),
        sampling_set: ws.sampling.nodes().to_vec(),
        inverse_moment: r,
        step_size_bound: step_size_bound(&ctx).ok(),
        step_sizes,
        points,
        warnings,
    })
}

/// Loads or generates the time-varying signal and its graph.
pub fn load_dataset(cfg: &ExperimentConfig, d: &DatasetSpec) -> Result<(TimeVaryingSignal, Graph), HarnessError> {
    match (&d.synthetic, &d.readings, &d.coords) {
        (Some(s), _, _) => {
            let data = synthetic_dataset(s.n, s.t, d.neighbors, s.seed.unwrap_or(cfg.seed))?;
            Ok((data.signal, data.graph))
        }
        (None, Some(r), Some(c)) => {
            let (signal, coords) = ingest_station_dataset(r, c)?;
            let graph = knn_geographic_graph(&coords, d.neighbors)?;
            Ok((signal, graph))
        }
        _ => Err(HarnessError::Invalid(vec!["dataset needs readings and coords or a synthetic section".into()])),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingOutcome {
    pub label: String,
    pub config: EstimatorConfig,
    #[serde(skip)]
    pub trace: MetricsTrace,
    /// Estimate at the tracked node in run 0.
    #[serde(skip)]
    pub tracked: Vec<f64>,
    pub divergence_count: usize,
    /// `mu * max_i sum_j |B_ij|`, the largest possible G-Sign increment.
    pub increment_bound: f64,
    /// Per run, the largest tracked-node deviation after burn-in.
    pub run_max_deviation: Vec<f64>,
    /// Runs with at least one tracked-node deviation above
    /// `EXCURSION_FACTOR` times the node's dynamic range.
    pub runs_with_excursion: usize,
    #[serde(skip)]
    pub median_step_us: f64,
    #[serde(skip)]
    pub mean_step_us: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeVaryingResult {
    pub config: ExperimentConfig,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub sampling_set: Vec<usize>,
    pub tracked_node: usize,
    pub burn_in: usize,
    pub dynamic_range: f64,
    #[serde(skip)]
    pub truth: Vec<f64>,
    pub estimators: Vec<TrackingOutcome>,
}

pub fn run_time_varying(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<TimeVaryingResult, HarnessError> {
    let noise = noise_of(cfg)?;
    let (f, s) = band_sizes(cfg)?;
    let d = cfg.dataset.as_ref().ok_or_else(|| HarnessError::Invalid(vec!["[dataset] is required".into()]))?;
    let (signal, graph) = load_dataset(cfg, d)?;
    if signal.n_nodes() != graph.n_nodes() {
        return Err(HarnessError::Dataset(format!("{} stations but {} graph nodes", signal.n_nodes(), graph.n_nodes())));
    }
    if d.tracked_node >= signal.n_nodes() {
        return Err(HarnessError::Invalid(vec![format!("dataset.tracked_node = {} outside 0..{}", d.tracked_node, signal.n_nodes())]));
    }
    if signal.n_steps() < 2 {
        return Err(HarnessError::Dataset("time-varying signal needs at least two time steps".into()));
    }
    let ws = Workspace::new(graph, f, s)?;
    let sampler = noise.sampler()?;
    let n_steps = signal.n_steps();
    let node = d.tracked_node;
    let truth = signal.station(node);
    let range = signal.dynamic_range(node);
    let c_b = ws.band.max_row_abs_sum();

    let cfgs: Vec<EstimatorConfig> = cfg.estimators.iter().map(EstimatorSpec::to_config).collect();
    let records = run_ensemble(pool, &cfgs, &ws, &sampler, &signal, n_steps, cfg.runs, cfg.seed, Some(node))?;
    let mut estimators = Vec::new();
    for ((spec, ecfg), runs) in cfg.estimators.iter().zip(cfgs).zip(records) {
        let metrics: Vec<RunMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
        let trace = MetricsTrace::average(&metrics, n_steps)?;
        let mut run_max_deviation = Vec::with_capacity(runs.len());
        let mut runs_with_excursion = 0;
        for rec in &runs {
            let est = rec.tracked.as_ref().expect("tracked node requested");
            let dev: Vec<f64> = est.iter().zip(&truth).map(|(e, t)| (e - t).abs()).collect();
            let late = dev.iter().skip(d.burn_in).cloned().fold(0.0, |a: f64, b| if b.is_nan() || b > a { b } else { a });
            run_max_deviation.push(late);
            if dev.iter().any(|&v| !(v <= EXCURSION_FACTOR * range)) {
                runs_with_excursion += 1;
            }
        }
        estimators.push(TrackingOutcome {
            label: spec.label(),
            config: ecfg,
            divergence_count: trace.divergence_count(),
            increment_bound: spec.step_size * c_b,
            run_max_deviation,
            runs_with_excursion,
            median_step_us: trace.timing.median_nanos / 1e3,
            mean_step_us: trace.timing.mean_nanos() / 1e3,
            tracked: runs[0].tracked.clone().expect("tracked node requested"),
            trace,
        });
    }
    Ok(TimeVaryingResult {
        config: cfg.clone(),
        n_nodes: ws.graph.n_nodes(),
        n_steps,
        sampling_set: ws.sampling.nodes().to_vec(),
        tracked_node: node,
        burn_in: d.burn_in,
        dynamic_range: range,
        truth,
        estimators,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryPoint {
    pub estimator: String,
    pub step_size: f64,
    pub theoretical_msd: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryResult {
    pub config: ExperimentConfig,
    pub inverse_moment: f64,
    pub step_size_bound: Option<f64>,
    pub points: Vec<TheoryPoint>,
    pub warnings: Vec<String>,
}

/// Stability bound and steady-state MSD prediction for every G-Sign entry.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<TheoryResult, HarnessError> {
    let noise = noise_of(cfg)?;
    let (f, s) = band_sizes(cfg)?;
    let ws = Workspace::new(build_graph(cfg)?, f, s)?;
    let r = inverse_moment(cfg, &noise)?;
    let ctx = StabilityContext::new(&ws.band, &ws.sampling, r)?;
    let mut warnings = Vec::new();
    let mut points = Vec::new();
    let specs: Vec<EstimatorSpec> = match &cfg.sweep {
        Some(sw) => sw.step_sizes.iter().map(|&mu| EstimatorSpec { kind: sw.estimator, step_size: mu, p: sw.p }).collect(),
        None => cfg.estimators.clone(),
    };
    for spec in specs {
        if spec.kind != EstimatorKind::Gsign {
            warnings.push(format!("no steady-state prediction for {}", spec.label()));
            continue;
        }
        let (t, _) = gsign_theory(&ctx, spec.step_size, &mut warnings);
        points.push(TheoryPoint { estimator: spec.label(), step_size: spec.step_size, theoretical_msd: t });
    }
    Ok(TheoryResult { config: cfg.clone(), inverse_moment: r, step_size_bound: step_size_bound(&ctx).ok(), points, warnings })
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseDumpResult {
    pub config: ExperimentConfig,
    pub seed: u64,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

pub fn run_noise_dump(cfg: &ExperimentConfig) -> Result<NoiseDumpResult, HarnessError> {
    let noise = noise_of(cfg)?;
    let seed = derive_seed(cfg.seed, &[tag::NOISE]);
    let samples = noise.sample(cfg.dump_count, seed)?;
    Ok(NoiseDumpResult { config: cfg.clone(), seed, samples })
}

/// Outcome of any experiment kind.
#[derive(Debug, Clone)]
pub enum Results {
    SteadyState(SteadyStateResult),
    Sweep(SweepResult),
    TimeVarying(TimeVaryingResult),
    Theory(TheoryResult),
    NoiseDump(NoiseDumpResult),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Results, HarnessError> {
    cfg.validate()?;
    let pool = thread_pool(cfg.threads)?;
    Ok(match cfg.kind {
        ExperimentKind::SteadyState => Results::SteadyState(run_steady_state(cfg, &pool)?),
        ExperimentKind::StepSizeSweep => Results::Sweep(run_step_size_sweep(cfg, &pool)?),
        ExperimentKind::TimeVarying => Results::TimeVarying(run_time_varying(cfg, &pool)?),
        ExperimentKind::Theory => Results::Theory(run_theory(cfg)?),
        ExperimentKind::NoiseDump => Results::NoiseDump(run_noise_dump(cfg)?),
    })
}

/// Runs an experiment and writes its result files into `cfg.outdir`.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<Results, HarnessError> {
    let results = run_experiment(cfg)?;
    crate::emit::emit_results(&results, &cfg.outdir)?;
    Ok(results)
}
