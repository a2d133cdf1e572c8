//! Error metrics, the step-size stability bound and the steady-state MSD
//! prediction for the sign-error estimator.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, SymmetricEigen};
use crate::spectral::{BandlimitOperator, SamplingSet};

/// Below this smallest eigenvalue `U_F^T D_S U_F` is treated as singular.
pub const GRAM_SINGULAR_TOL: f64 = 1e-10;
/// Relative residual at which the steady-state solve stops.
pub const CG_TOLERANCE: f64 = 1e-13;

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: a.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Ok(())
}

/// Mean squared deviation `(1/N) ||xhat - x0||^2`.
pub fn msd(xhat: &[f64], x0: &[f64]) -> Result<f64> {
    check_len(xhat, x0)?;
    let s: f64 = xhat.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / x0.len() as f64)
}

/// Mean absolute deviation `(1/N) sum |xhat_i - x0_i|`.
pub fn mad(xhat: &[f64], x0: &[f64]) -> Result<f64> {
    check_len(xhat, x0)?;
    let s: f64 = xhat.iter().zip(x0).map(|(a, b)| (a - b).abs()).sum();
    Ok(s / x0.len() as f64)
}

/// Everything the stability analysis needs: the sampled Gram matrix
/// `G = U_F^T D_S U_F` and the scalar `r` standing in for `R = r I`.
///
/// Noise is taken i.i.d. across nodes, so the noise covariance is the identity.
#[derive(Debug, Clone)]
pub struct StabilityContext {
    u_f: DMatrix<f64>,
    sampling: SamplingSet,
    r: f64,
    g: DMatrix<f64>,
    g_eig: SymmetricEigen,
}

impl StabilityContext {
    pub fn new(band: &BandlimitOperator, sampling: &SamplingSet, r: f64) -> Result<Self> {
        Self::from_parts(band.u_f().clone(), sampling.clone(), r)
    }

    pub fn from_parts(u_f: DMatrix<f64>, sampling: SamplingSet, r: f64) -> Result<Self> {
        if u_f.nrows() != sampling.n() {
            return Err(Error::DimensionMismatch { expected: sampling.n(), got: u_f.nrows() });
        }
        if u_f.ncols() == 0 {
            return Err(Error::InvalidSampleCount { m: sampling.len(), min: 1, max: sampling.n() });
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::NonFiniteMoment);
        }
        let mut g = sampling.gram(&u_f);
        g = (&g + g.transpose()) * 0.5;
        let g_eig = symmetric_eigen(&g)?;
        Ok(Self { u_f, sampling, r, g, g_eig })
    }

    pub fn u_f(&self) -> &DMatrix<f64> {
        &self.u_f
    }

    pub fn sampling(&self) -> &SamplingSet {
        &self.sampling
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn bandwidth(&self) -> usize {
        self.u_f.ncols()
    }

    /// `G = U_F^T D_S U_F`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Eigenvalues of `G`, ascending.
    pub fn gram_eigenvalues(&self) -> &[f64] {
        &self.g_eig.values
    }

    /// `Phi_1 = I - mu r G`.
    pub fn phi1(&self, mu: f64) -> DMatrix<f64> {
        let f = self.bandwidth();
        DMatrix::identity(f, f) - &self.g * (mu * self.r)
    }

    /// `Phi = Phi_1^T Phi_1`.
    pub fn phi(&self, mu: f64) -> DMatrix<f64> {
        let p = self.phi1(mu);
        p.transpose() * &p
    }

    /// Spectral radius of `Phi_1`. `Phi_1` shares eigenvectors with `G`.
    pub fn phi1_spectral_radius(&self, mu: f64) -> f64 {
        self.g_eig
            .values
            .iter()
            .map(|g| (1.0 - mu * self.r * g).abs())
            .fold(0.0, f64::max)
    }

    /// Largest eigenvalue of `U_F^T D_S R U_F = r G`.
    pub fn lambda_max(&self) -> f64 {
        self.r * self.g_eig.values.last().copied().unwrap_or(0.0)
    }
}

/// Upper end of the admissible step-size interval, `2 / lambda_max(r G)`.
pub fn step_size_bound(ctx: &StabilityContext) -> Result<f64> {
    let gmin = ctx.g_eig.values[0];
    if gmin <= GRAM_SINGULAR_TOL {
        return Err(Error::InadmissibleSampling(gmin));
    }
    Ok(2.0 / ctx.lambda_max())
}

fn check_step(ctx: &StabilityContext, mu: f64) -> Result<()> {
    let bound = step_size_bound(ctx)?;
    if !(mu > 0.0 && mu.is_finite()) || ctx.phi1_spectral_radius(mu) >= 1.0 - 1e-15 {
        return Err(Error::UnstableStepSize { step: mu, bound });
    }
    Ok(())
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Steady-state MSD predicted by `mu^2 vec(G)^T (I - Q)^{-1} vec(I)` with
/// `Q = Phi_1^T (x) Phi_1`.
///
/// The `|F|^2` system is never formed. Because `Phi_1` is symmetric,
/// `(I - Q) vec(V) = vec(V - Phi_1 V Phi_1)`, which is symmetric positive
/// definite for an admissible step, so conjugate gradients on `|F| x |F|`
/// matrices solves it.
pub fn theoretical_msd(ctx: &StabilityContext, mu: f64) -> Result<f64> {
    check_step(ctx, mu)?;
    let f = ctx.bandwidth();
    let p = ctx.phi1(mu);
    let apply = |v: &DMatrix<f64>| v - &p * v * &p;

    let b = DMatrix::<f64>::identity(f, f);
    let bnorm = b.norm();
    let mut v = DMatrix::<f64>::zeros(f, f);
    let mut res = b.clone();
    let mut dir = res.clone();
    let mut rr = frob_dot(&res, &res);
    let max_iter = 10 * f * f + 100;
    let mut it = 0;
    while rr.sqrt() > CG_TOLERANCE * bnorm {
        if it == max_iter {
            return Err(Error::UnstableStepSize { step: mu, bound: step_size_bound(ctx)? });
        }
        it += 1;
        let ad = apply(&dir);
        let alpha = rr / frob_dot(&dir, &ad);
        v += &dir * alpha;
        res -= &ad * alpha;
        let rr_next = frob_dot(&res, &res);
        dir = &res + &dir * (rr_next / rr);
        rr = rr_next;
    }
    Ok(mu * mu * frob_dot(&ctx.g, &v))
}

/// Same quantity through the eigenvalues `g_i` of `G`:
/// `mu^2 sum g_i / (1 - (1 - mu r g_i)^2)`.
pub fn theoretical_msd_modal(ctx: &StabilityContext, mu: f64) -> Result<f64> {
    check_step(ctx, mu)?;
    Ok(ctx
        .g_eig
        .values
        .iter()
        .map(|&g| {
            let phi = 1.0 - mu * ctx.r * g;
            mu * mu * g / (1.0 - phi * phi)
        })
        .sum())
}

/// Wall-clock statistics for estimator steps, in nanoseconds per step.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimingStats {
    pub steps: usize,
    pub total_nanos: u128,
    pub median_nanos: f64,
}

impl TimingStats {
    pub fn from_samples(nanos: &[u64]) -> Self {
        if nanos.is_empty() {
            return Self::default();
        }
        let mut v = nanos.to_vec();
        v.sort_unstable();
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] as f64 } else { 0.5 * (v[m / 2 - 1] as f64 + v[m / 2] as f64) };
        Self { steps: m, total_nanos: v.iter().map(|&x| x as u128).sum(), median_nanos: median }
    }

    pub fn mean_nanos(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_nanos as f64 / self.steps as f64
        }
    }
}

/// Per-iteration metrics averaged over runs.
#[derive(Debug, Clone, Default)]
pub struct MetricsTrace {
    pub msd: Vec<f64>,
    pub mad: Vec<f64>,
    /// Iteration at which each run diverged, in run order.
    pub diverged: Vec<Option<usize>>,
    pub timing: TimingStats,
}

impl MetricsTrace {
    pub fn n_iters(&self) -> usize {
        self.msd.len()
    }

    pub fn n_runs(&self) -> usize {
        self.diverged.len()
    }

    pub fn divergence_count(&self) -> usize {
        self.diverged.iter().filter(|d| d.is_some()).count()
    }

    pub fn any_diverged(&self) -> bool {
        self.diverged.iter().any(Option::is_some)
    }
}

/// One run's contribution to a [`MetricsTrace`].
#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    pub msd: Vec<f64>,
    pub mad: Vec<f64>,
    pub diverged_at: Option<usize>,
    pub step_nanos: Vec<u64>,
}

impl MetricsTrace {
    /// Averages runs in the order given. Runs that diverged early carry their
    /// last recorded value (infinite once diverged) forward.
    pub fn average(runs: &[RunMetrics], n_iters: usize) -> Result<Self> {
        if n_iters == 0 {
            return Err(Error::NoIterations);
        }
        let mut msd = vec![0.0; n_iters];
        let mut mad = vec![0.0; n_iters];
        let mut nanos = Vec::new();
        for run in runs {
            if run.msd.len() != n_iters || run.mad.len() != n_iters {
                return Err(Error::DimensionMismatch { expected: n_iters, got: run.msd.len().min(run.mad.len()) });
            }
            for k in 0..n_iters {
                msd[k] += run.msd[k];
                mad[k] += run.mad[k];
            }
            nanos.extend_from_slice(&run.step_nanos);
        }
        let scale = 1.0 / runs.len().max(1) as f64;
        for k in 0..n_iters {
            msd[k] *= scale;
            mad[k] *= scale;
        }
        Ok(Self {
            msd,
            mad,
            diverged: runs.iter().map(|r| r.diverged_at).collect(),
            timing: TimingStats::from_samples(&nanos),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub converged: bool,
    pub steady_value: f64,
    pub iterations_to_converge: Option<usize>,
}

/// A final-window trend within this fraction of the larger of the window
/// mean and the transient excursion counts as flat regardless of noise.
pub const PLATEAU_TOLERANCE: f64 = 0.01;
/// Trends within this many standard errors of zero count as flat.
pub const TREND_SIGMAS: f64 = 3.0;

/// Integrated autocorrelation time of `r` by Geyer's initial positive
/// sequence: autocorrelations are summed in adjacent pairs until a pair sum
/// turns nonpositive.
fn autocorrelation_time(r: &[f64]) -> f64 {
    let n = r.len();
    let acov = |k: usize| r[..n - k].iter().zip(&r[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = acov(0);
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut m = 0;
    while m + 1 < n / 2 {
        let pair = (acov(m) + acov(m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 2;
    }
    tau.max(1.0)
}

/// Plateau test over the final `window` entries of `trace`.
///
/// The least-squares trend of the window, scaled to the window length, must
/// be within `PLATEAU_TOLERANCE` of `max(|steady|, trace[0] - steady)` or
/// within `TREND_SIGMAS` standard errors of zero. The first scale covers
/// traces without a transient, the second lets a long noisy plateau after a
/// large initial decay count as flat. The standard error accounts for serial
/// correlation through the integrated autocorrelation time of the detrended
/// window. `iterations_to_converge` is the first index from which the trace
/// stays at or below 1.5x the steady value.
pub fn detect_convergence(trace: &[f64], window: usize, diverged: bool) -> Result<ConvergenceSummary> {
    let n = trace.len();
    if window == 0 || window >= n {
        return Err(Error::InvalidWindow { window, len: n });
    }
    let tail = &trace[n - window..];
    let w = window as f64;
    let steady = tail.iter().sum::<f64>() / w;
    if !steady.is_finite() || tail.iter().any(|v| !v.is_finite()) {
        return Ok(ConvergenceSummary { converged: false, steady_value: steady, iterations_to_converge: None });
    }

    let xbar = (w - 1.0) / 2.0;
    let sxx: f64 = (0..window).map(|t| (t as f64 - xbar).powi(2)).sum();
    let slope = if sxx > 0.0 {
        tail.iter().enumerate().map(|(t, y)| (t as f64 - xbar) * (y - steady)).sum::<f64>() / sxx
    } else {
        0.0
    };
    let drift = (slope * w).abs();

    let se_drift = if window >= 3 && sxx > 0.0 {
        let resid: Vec<f64> = tail.iter().enumerate().map(|(t, y)| y - steady - slope * (t as f64 - xbar)).collect();
        let var = resid.iter().map(|v| v * v).sum::<f64>() / (w - 2.0);
        w * (var * autocorrelation_time(&resid) / sxx).sqrt()
    } else {
        0.0
    };

    let scale = steady.abs().max(trace[0] - steady);
    let flat = drift <= PLATEAU_TOLERANCE * scale || drift <= TREND_SIGMAS * se_drift;
    let converged = flat && !diverged;
    let iterations_to_converge = if converged {
        let limit = 1.5 * steady;
        Some(trace.iter().rposition(|&v| !(v <= limit)).map_or(0, |k| k + 1))
    } else {
        None
    };
    Ok(ConvergenceSummary { converged, steady_value: steady, iterations_to_converge })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        assert_eq!(msd(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(msd(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 12.5);
        assert_eq!(mad(&[3.0, -4.0], &[0.0, 0.0]).unwrap(), 3.5);
        assert!(matches!(msd(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(mad(&[1.0, 2.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    fn identity_context(n: usize, r: f64) -> StabilityContext {
        let u_f = DMatrix::identity(n, n);
        StabilityContext::from_parts(u_f, SamplingSet::full(n), r).unwrap()
    }

    #[test]
    fn bound_for_identity() {
        assert!((step_size_bound(&identity_context(4, 1.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((step_size_bound(&identity_context(4, 4.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_gram_rejected() {
        let u_f = DMatrix::identity(3, 3);
        let s = SamplingSet::new(3, [0, 1]).unwrap();
        let ctx = StabilityContext::from_parts(u_f, s, 1.0).unwrap();
        assert!(matches!(step_size_bound(&ctx), Err(Error::InadmissibleSampling(_))));
    }

    #[test]
    fn scalar_case() {
        let u_f = DMatrix::from_column_slice(2, 1, &[0.6, 0.8]);
        let s = SamplingSet::new(2, [1]).unwrap();
        let r = 3.0;
        let ctx = StabilityContext::from_parts(u_f, s, r).unwrap();
        let g = 0.64;
        let mu = 0.5;
        let want = mu * mu * g / (1.0 - (1.0 - mu * r * g).powi(2));
        assert!((theoretical_msd(&ctx, mu).unwrap() - want).abs() < 1e-13 * want);
        assert!((theoretical_msd_modal(&ctx, mu).unwrap() - want).abs() < 1e-13 * want);
    }

    #[test]
    fn over_bound_rejected() {
        let ctx = identity_context(3, 1.0);
        assert!(matches!(theoretical_msd(&ctx, 2.0), Err(Error::UnstableStepSize { .. })));
        assert!(matches!(theoretical_msd(&ctx, -0.1), Err(Error::UnstableStepSize { .. })));
        assert!(ctx.phi1_spectral_radius(2.2) >= 1.0);
    }

    #[test]
    fn constant_trace() {
        let c = detect_convergence(&[2.0; 50], 10, false).unwrap();
        assert!(c.converged);
        assert_eq!(c.steady_value, 2.0);
        assert_eq!(c.iterations_to_converge, Some(0));
    }

    #[test]
    fn growing_traces() {
        let lin: Vec<f64> = (0..400).map(|k| 1.0 + k as f64).collect();
        assert!(!detect_convergence(&lin, 100, false).unwrap().converged);
        let exp: Vec<f64> = (0..400).map(|k| (k as f64 / 40.0).exp()).collect();
        assert!(!detect_convergence(&exp, 100, false).unwrap().converged);
        let slow: Vec<f64> = (0..400).map(|k| 1.0 + 1e-3 * k as f64).collect();
        assert!(!detect_convergence(&slow, 200, false).unwrap().converged);
    }

    #[test]
    fn divergence_flag_wins() {
        assert!(!detect_convergence(&[1.0; 20], 5, true).unwrap().converged);
    }

    #[test]
    fn decay_to_plateau() {
        let c = 0.3;
        let trace: Vec<f64> = (0..2000).map(|k| c + 5.0 * (-(k as f64) / 100.0).exp()).collect();
        let s = detect_convergence(&trace, 500, false).unwrap();
        assert!(s.converged);
        assert!((s.steady_value - c).abs() < 0.02 * c);
        let k = s.iterations_to_converge.unwrap();
        // 5 e^{-k/100} <= 0.15
        assert!((345..=352).contains(&k), "{k}");
    }

    /// `level(k) + ar(k)` with `ar` an AR(1) process of coefficient `phi`.
    fn noisy(level: impl Fn(usize) -> f64, phi: f64, sd: f64, n: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let innov = Normal::new(0.0, sd * (1.0 - phi * phi).sqrt()).unwrap();
        let mut a = 0.0;
        (0..n)
            .map(|k| {
                a = phi * a + innov.sample(&mut rng);
                level(k) + a
            })
            .collect()
    }

    #[test]
    fn correlated_noise_plateau() {
        let mut hits = 0;
        for seed in 0..50 {
            let t = noisy(|_| 1.0, 0.9, 0.1, 2400, seed);
            hits += detect_convergence(&t, 480, false).unwrap().converged as usize;
        }
        assert!(hits >= 48, "{hits}");
    }

    #[test]
    fn correlated_noise_on_decay() {
        for seed in 0..20 {
            let t = noisy(|k| 1.0 + 3.0 * (-(k as f64) / 800.0).exp(), 0.95, 0.01, 2400, seed);
            assert!(!detect_convergence(&t, 480, false).unwrap().converged);
        }
    }

    #[test]
    fn bad_window() {
        assert!(matches!(detect_convergence(&[1.0; 5], 5, false), Err(Error::InvalidWindow { .. })));
        assert!(matches!(detect_convergence(&[1.0; 5], 0, false), Err(Error::InvalidWindow { .. })));
    }

    #[test]
    fn averaging() {
        let a = RunMetrics { msd: vec![1.0, 2.0], mad: vec![1.0, 1.0], diverged_at: None, step_nanos: vec![3, 1] };
        let b = RunMetrics { msd: vec![3.0, 4.0], mad: vec![0.0, 1.0], diverged_at: Some(1), step_nanos: vec![2] };
        let t = MetricsTrace::average(&[a, b], 2).unwrap();
        assert_eq!(t.msd, vec![2.0, 3.0]);
        assert_eq!(t.mad, vec![0.5, 1.0]);
        assert_eq!(t.divergence_count(), 1);
        assert_eq!(t.timing.median_nanos, 2.0);
        assert_eq!(t.timing.total_nanos, 6);
    }
}
