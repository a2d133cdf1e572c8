//! One-step update rules for graph LMS, graph LMP and graph sign-error
//! estimation of a bandlimited signal from partial noisy observations.
//!
//! With `e = y[k] - x[k]` restricted to the sampled nodes `S`:
//!
//! ```text
//! GLMS   x[k+1] = x[k] + mu B D_S e
//! GLMP   x[k+1] = x[k] + mu B D_S (|e|^(p-1) o sign(e))
//! G-Sign x[k+1] = x[k] + mu B sign(D_S e)
//! ```
//!
//! `sign(0) = 0`. The G-Sign increment has infinity norm at most
//! `mu * max_i sum_j |B_ij|` whatever the noise amplitude.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::Sampler;
use crate::rng::{self, tag};
use crate::spectral::{BandlimitOperator, SamplingSet};

/// Estimates larger than this multiple of the signal's infinity norm are
/// treated as divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Glms,
    Glmp,
    Gsign,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Glms => "glms",
            EstimatorKind::Glmp => "glmp",
            EstimatorKind::Gsign => "gsign",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub step_size: f64,
    /// Exponent of the p-th power update; GLMP only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl EstimatorConfig {
    pub fn glms(step_size: f64) -> Self {
        Self { kind: EstimatorKind::Glms, step_size, p: None }
    }

    pub fn glmp(step_size: f64, p: f64) -> Self {
        Self { kind: EstimatorKind::Glmp, step_size, p: Some(p) }
    }

    pub fn gsign(step_size: f64) -> Self {
        Self { kind: EstimatorKind::Gsign, step_size, p: None }
    }

    /// Checks `mu > 0` and, for GLMP, `1 < p < 2`.
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidEstimator(format!("step size {} must be positive", self.step_size)));
        }
        match (self.kind, self.p) {
            (EstimatorKind::Glmp, Some(p)) if p > 1.0 && p < 2.0 => Ok(()),
            (EstimatorKind::Glmp, Some(p)) => {
                Err(Error::InvalidEstimator(format!("glmp exponent p = {p} must lie in (1, 2)")))
            }
            (EstimatorKind::Glmp, None) => Err(Error::InvalidEstimator("glmp needs an exponent p".into())),
            (_, Some(_)) => Err(Error::InvalidEstimator(format!("{} takes no exponent p", self.kind.name()))),
            (_, None) => Ok(()),
        }
    }

    // The closed interval admits the p -> 1 and p -> 2 degenerate forms.
    fn exponent(&self) -> Result<f64> {
        match self.p {
            Some(p) if (1.0..=2.0).contains(&p) => Ok(p),
            Some(p) => Err(Error::InvalidEstimator(format!("glmp exponent p = {p} outside [1, 2]"))),
            None => Err(Error::InvalidEstimator("glmp needs an exponent p".into())),
        }
    }
}

/// Current estimate and the number of updates applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub estimate: Vec<f64>,
    pub iteration: usize,
}

impl EstimatorState {
    /// The all-zero estimate, which lies in every bandlimited subspace.
    pub fn zeros(n: usize) -> Self {
        Self { estimate: vec![0.0; n], iteration: 0 }
    }
}

/// `y = D_S (x + w)`: zero at every unobserved node.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
}

impl Observation {
    pub fn new(sampling: &SamplingSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != sampling.n() {
            return Err(Error::DimensionMismatch { expected: sampling.n(), got: values.len() });
        }
        if let Some(i) = (0..values.len()).find(|&i| !sampling.contains(i) && values[i] != 0.0) {
            return Err(Error::UnsampledObservation(i));
        }
        Ok(Self { values })
    }

    pub fn observe(sampling: &SamplingSet, signal: &[f64], noise: &[f64]) -> Result<Self> {
        if signal.len() != sampling.n() || noise.len() != sampling.n() {
            return Err(Error::DimensionMismatch { expected: sampling.n(), got: signal.len().min(noise.len()) });
        }
        let values = signal
            .iter()
            .zip(noise)
            .zip(sampling.mask())
            .map(|((x, w), &m)| if m { x + w } else { 0.0 })
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Allocation-free in-place update kernel shared by the step functions and
/// the Monte Carlo runner.
///
/// `B` is exactly symmetric, so its contiguous columns serve as rows.
#[derive(Debug, Clone)]
pub struct Updater<'a> {
    kind: EstimatorKind,
    step: f64,
    p: f64,
    b: &'a DMatrix<f64>,
    sampled: &'a [usize],
    mask: &'a [bool],
    work: Vec<f64>,
}

impl<'a> Updater<'a> {
    pub fn new(cfg: &EstimatorConfig, sampling: &'a SamplingSet, band: &'a BandlimitOperator) -> Result<Self> {
        if !(cfg.step_size.is_finite() && cfg.step_size > 0.0) {
            return Err(Error::InvalidEstimator(format!("step size {} must be positive", cfg.step_size)));
        }
        if sampling.n() != band.n() {
            return Err(Error::DimensionMismatch { expected: band.n(), got: sampling.n() });
        }
        let p = match cfg.kind {
            EstimatorKind::Glmp => cfg.exponent()?,
            _ => 2.0,
        };
        Ok(Self {
            kind: cfg.kind,
            step: cfg.step_size,
            p,
            b: band.projector(),
            sampled: sampling.nodes(),
            mask: sampling.mask(),
            work: vec![0.0; band.n()],
        })
    }

    pub fn n(&self) -> usize {
        self.work.len()
    }

    /// Applies one update to `x` given the observation `y`.
    #[inline]
    pub fn step(&mut self, x: &mut [f64], y: &[f64]) {
        let n = self.work.len();
        debug_assert!(x.len() == n && y.len() == n);
        let b = self.b.as_slice();
        match self.kind {
            EstimatorKind::Glms => {
                for i in 0..n {
                    self.work[i] = if self.mask[i] { y[i] - x[i] } else { 0.0 };
                }
                dense_update(b, &self.work, self.step, x);
            }
            EstimatorKind::Glmp => {
                let q = self.p - 1.0;
                for i in 0..n {
                    let e = if self.mask[i] { y[i] - x[i] } else { 0.0 };
                    self.work[i] = sign(e) * e.abs().powf(q);
                }
                dense_update(b, &self.work, self.step, x);
            }
            EstimatorKind::Gsign => {
                // B sign(D_S e): only the sampled columns of B, added or
                // subtracted, never multiplied.
                let acc = &mut self.work;
                acc.fill(0.0);
                for &j in self.sampled {
                    let e = y[j] - x[j];
                    let col = &b[j * n..(j + 1) * n];
                    if e > 0.0 {
                        acc.iter_mut().zip(col).for_each(|(a, c)| *a += c);
                    } else if e < 0.0 {
                        acc.iter_mut().zip(col).for_each(|(a, c)| *a -= c);
                    }
                }
                for (xi, a) in x.iter_mut().zip(acc.iter()) {
                    *xi += self.step * a;
                }
            }
        }
    }
}

/// `x += mu * B v` as a full dense product.
#[inline]
fn dense_update(b: &[f64], v: &[f64], mu: f64, x: &mut [f64]) {
    let n = v.len();
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += mu * dot4(&b[i * n..(i + 1) * n], v);
    }
}

/// Dot product with four independent accumulators.
#[inline]
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn checked_step(
    kind: EstimatorKind,
    state: &EstimatorState,
    obs: &Observation,
    sampling: &SamplingSet,
    band: &BandlimitOperator,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    if cfg.kind != kind {
        return Err(Error::InvalidEstimator(format!("{} step called with a {} config", kind.name(), cfg.kind.name())));
    }
    let n = band.n();
    for len in [state.estimate.len(), obs.values.len(), sampling.n()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut up = Updater::new(cfg, sampling, band)?;
    let mut next = state.estimate.clone();
    up.step(&mut next, &obs.values);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { iteration: state.iteration });
    }
    Ok(EstimatorState { estimate: next, iteration: state.iteration + 1 })
}

pub fn glms_step(
    state: &EstimatorState,
    obs: &Observation,
    sampling: &SamplingSet,
    band: &BandlimitOperator,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    checked_step(EstimatorKind::Glms, state, obs, sampling, band, cfg)
}

pub fn glmp_step(
    state: &EstimatorState,
    obs: &Observation,
    sampling: &SamplingSet,
    band: &BandlimitOperator,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    checked_step(EstimatorKind::Glmp, state, obs, sampling, band, cfg)
}

pub fn gsign_step(
    state: &EstimatorState,
    obs: &Observation,
    sampling: &SamplingSet,
    band: &BandlimitOperator,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    checked_step(EstimatorKind::Gsign, state, obs, sampling, band, cfg)
}

/// Dispatches on `cfg.kind`.
pub fn step(
    state: &EstimatorState,
    obs: &Observation,
    sampling: &SamplingSet,
    band: &BandlimitOperator,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    checked_step(cfg.kind, state, obs, sampling, band, cfg)
}

/// A ground-truth signal indexed by iteration.
pub trait SignalSource {
    fn n(&self) -> usize;
    /// Signal at iteration `k`.
    fn at(&self, k: usize) -> &[f64];
    /// Largest absolute value the signal takes.
    fn peak(&self) -> f64;
}

/// A fixed signal `x0`.
#[derive(Debug, Clone)]
pub struct SteadySignal(pub Vec<f64>);

impl SignalSource for SteadySignal {
    fn n(&self) -> usize {
        self.0.len()
    }

    fn at(&self, _k: usize) -> &[f64] {
        &self.0
    }

    fn peak(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Everything a single estimation run needs besides the signal.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec<'a> {
    pub cfg: &'a EstimatorConfig,
    pub sampling: &'a SamplingSet,
    pub band: &'a BandlimitOperator,
    pub noise: &'a Sampler,
    pub n_iters: usize,
    /// Seed of this run's noise stream.
    pub seed: u64,
}

/// Summary of a run produced by [`run_with`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    /// First iteration at which the estimate became nonfinite or exceeded
    /// `DIVERGENCE_FACTOR` times the signal peak.
    pub diverged_at: Option<usize>,
    /// Wall time of each update in nanoseconds (estimator arithmetic only).
    pub step_nanos: Vec<u64>,
}

/// Runs `n_iters` updates from the zero estimate, calling
/// `observe(k, estimate_after_step_k, truth_k)` after each one.
///
/// The noise vector `w[k]` is drawn for all nodes from the stream
/// `seed -> NOISE`; only the update itself is timed. The run keeps going after
/// divergence so blow-ups show up in the recorded metrics.
pub fn run_with<S, F>(spec: &RunSpec<'_>, source: &S, mut observe: F) -> Result<RunOutcome>
where
    S: SignalSource + ?Sized,
    F: FnMut(usize, &[f64], &[f64]),
{
    if spec.n_iters == 0 {
        return Err(Error::NoIterations);
    }
    let n = spec.band.n();
    if source.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: source.n() });
    }
    let mut up = Updater::new(spec.cfg, spec.sampling, spec.band)?;
    let mut rng = rng::stream(spec.seed, &[tag::NOISE]);
    // An all-zero truth would make any nonzero estimate divergent.
    let limit = DIVERGENCE_FACTOR * source.peak().max(1.0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut outcome = RunOutcome { diverged_at: None, step_nanos: Vec::with_capacity(spec.n_iters) };
    for k in 0..spec.n_iters {
        let truth = source.at(k);
        spec.noise.fill(&mut rng, &mut w);
        for i in 0..n {
            y[i] = if spec.sampling.contains(i) { truth[i] + w[i] } else { 0.0 };
        }
        let t0 = Instant::now();
        up.step(&mut x, &y);
        outcome.step_nanos.push(t0.elapsed().as_nanos() as u64);
        if outcome.diverged_at.is_none() && x.iter().any(|v| !v.is_finite() || v.abs() > limit) {
            outcome.diverged_at = Some(k);
        }
        observe(k, &x, truth);
    }
    Ok(outcome)
}

/// Recorded estimates of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `estimates[k]` is the estimate after processing observation `k`.
    pub estimates: Vec<Vec<f64>>,
    pub diverged_at: Option<usize>,
}

/// Runs an estimator and keeps every intermediate estimate.
pub fn run_estimation<S: SignalSource + ?Sized>(spec: &RunSpec<'_>, source: &S) -> Result<Trajectory> {
    let mut estimates = Vec::with_capacity(spec.n_iters);
    let outcome = run_with(spec, source, |_, x, _| estimates.push(x.to_vec()))?;
    Ok(Trajectory { estimates, diverged_at: outcome.diverged_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian, random_sensor_graph};
    use crate::noise::NoiseModel;
    use crate::spectral::{eigendecompose, greedy_sampling, low_pass, make_bandlimit};

    fn setup(n: usize, f: usize, m: usize) -> (BandlimitOperator, SamplingSet) {
        let basis = eigendecompose(&build_laplacian(&random_sensor_graph(n, 21).unwrap()).unwrap()).unwrap();
        let band = make_bandlimit(&basis, &low_pass(f)).unwrap();
        let s = greedy_sampling(band.u_f(), m).unwrap();
        (band, s)
    }

    fn identity_band(n: usize) -> BandlimitOperator {
        let basis = eigendecompose(&build_laplacian(&random_sensor_graph(n, 1).unwrap()).unwrap()).unwrap();
        make_bandlimit(&basis, &low_pass(n)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::gsign(0.1).validate().is_ok());
        assert!(EstimatorConfig::gsign(0.0).validate().is_err());
        assert!(EstimatorConfig::glmp(0.1, 1.5).validate().is_ok());
        assert!(EstimatorConfig::glmp(0.1, 2.0).validate().is_err());
        assert!(EstimatorConfig::glmp(0.1, 1.0).validate().is_err());
        assert!(EstimatorConfig { kind: EstimatorKind::Glmp, step_size: 0.1, p: None }.validate().is_err());
        assert!(EstimatorConfig { kind: EstimatorKind::Glms, step_size: 0.1, p: Some(1.5) }.validate().is_err());
    }

    #[test]
    fn zero_error_leaves_estimate() {
        let (band, s) = setup(10, 3, 5);
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let obs = Observation::new(&s, s.apply(&x)).unwrap();
        let state = EstimatorState { estimate: x.clone(), iteration: 4 };
        for cfg in [EstimatorConfig::glms(0.3), EstimatorConfig::glmp(0.3, 1.5), EstimatorConfig::gsign(0.3)] {
            let next = step(&state, &obs, &s, &band, &cfg).unwrap();
            assert_eq!(next.estimate, x);
            assert_eq!(next.iteration, 5);
        }
    }

    #[test]
    fn glms_identity_unit_step_copies_observation() {
        let band = identity_band(4);
        let s = SamplingSet::full(4);
        let y = vec![1.0, -2.0, 0.5, 3.0];
        let obs = Observation::new(&s, y.clone()).unwrap();
        let next = glms_step(&EstimatorState::zeros(4), &obs, &s, &band, &EstimatorConfig::glms(1.0)).unwrap();
        for (a, b) in next.estimate.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gsign_discards_magnitude() {
        let band = identity_band(2);
        let s = SamplingSet::full(2);
        let obs = Observation::new(&s, vec![7.0, -0.3]).unwrap();
        let next = gsign_step(&EstimatorState::zeros(2), &obs, &s, &band, &EstimatorConfig::gsign(0.5)).unwrap();
        assert!((next.estimate[0] - 0.5).abs() < 1e-12);
        assert!((next.estimate[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn step_kind_must_match() {
        let band = identity_band(2);
        let s = SamplingSet::full(2);
        let obs = Observation::new(&s, vec![1.0, 1.0]).unwrap();
        let err = glms_step(&EstimatorState::zeros(2), &obs, &s, &band, &EstimatorConfig::gsign(0.5));
        assert!(matches!(err, Err(Error::InvalidEstimator(_))));
    }

    #[test]
    fn dimension_checks() {
        let (band, s) = setup(8, 2, 3);
        assert!(Observation::new(&s, vec![0.0; 7]).is_err());
        let obs = Observation::new(&s, vec![0.0; 8]).unwrap();
        let bad = EstimatorState::zeros(5);
        assert!(matches!(
            gsign_step(&bad, &obs, &s, &band, &EstimatorConfig::gsign(0.1)),
            Err(Error::DimensionMismatch { .. })
        ));
        let unsampled = (0..8).find(|&i| !s.contains(i)).unwrap();
        let mut v = vec![0.0; 8];
        v[unsampled] = 1.0;
        assert_eq!(Observation::new(&s, v), Err(Error::UnsampledObservation(unsampled)));
    }

    #[test]
    fn glms_overflow_is_divergence() {
        let band = identity_band(2);
        let s = SamplingSet::full(2);
        let obs = Observation::new(&s, vec![f64::MAX, 0.0]).unwrap();
        let state = EstimatorState { estimate: vec![-f64::MAX, 0.0], iteration: 7 };
        assert_eq!(
            glms_step(&state, &obs, &s, &band, &EstimatorConfig::glms(1.0)),
            Err(Error::Diverged { iteration: 7 })
        );
    }

    #[test]
    fn single_iteration_run_matches_step() {
        let (band, s) = setup(12, 3, 6);
        let x0 = band.apply(&(0..12).map(|i| (i as f64).sin()).collect::<Vec<_>>()).unwrap();
        let noise = NoiseModel::Laplace { loc: 0.0, scale: 0.5 }.sampler().unwrap();
        for cfg in [EstimatorConfig::glms(0.4), EstimatorConfig::glmp(0.4, 1.3), EstimatorConfig::gsign(0.05)] {
            let spec = RunSpec { cfg: &cfg, sampling: &s, band: &band, noise: &noise, n_iters: 1, seed: 17 };
            let traj = run_estimation(&spec, &SteadySignal(x0.clone())).unwrap();
            let mut rng = rng::stream(17, &[tag::NOISE]);
            let mut w = vec![0.0; 12];
            noise.fill(&mut rng, &mut w);
            let obs = Observation::observe(&s, &x0, &w).unwrap();
            let next = step(&EstimatorState::zeros(12), &obs, &s, &band, &cfg).unwrap();
            assert_eq!(traj.estimates, vec![next.estimate]);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let (band, s) = setup(12, 3, 6);
        let x0 = band.apply(&[1.0; 12]).unwrap();
        let noise = NoiseModel::Cauchy { loc: 0.0, scale: 0.1 }.sampler().unwrap();
        let cfg = EstimatorConfig::glms(0.5);
        let spec = RunSpec { cfg: &cfg, sampling: &s, band: &band, noise: &noise, n_iters: 50, seed: 3 };
        let a = run_estimation(&spec, &SteadySignal(x0.clone())).unwrap();
        let b = run_estimation(&spec, &SteadySignal(x0)).unwrap();
        assert_eq!(a, b);
        assert!(run_estimation(&RunSpec { n_iters: 0, ..spec }, &SteadySignal(vec![0.0; 12])).is_err());
    }
}
