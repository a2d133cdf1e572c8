//! Impulsive noise models and the fractional inverse moment `E|w|^-p`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Fractional order used to approximate the `R` matrix of the stability
/// analysis.
pub const DEFAULT_P_S: f64 = 0.99;
pub const DEFAULT_MOMENT_DRAWS: usize = 1_000_000;

/// Zero-location (unless stated) symmetric noise laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Symmetric alpha-stable with characteristic function
    /// `exp(-gamma |t|^alpha)`.
    #[serde(rename = "sas")]
    Stable { alpha: f64, gamma: f64 },
    Cauchy {
        #[serde(default)]
        loc: f64,
        scale: f64,
    },
    /// Standard (unit scale) Student's t.
    StudentT { nu: f64 },
    Laplace {
        #[serde(default)]
        loc: f64,
        scale: f64,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNoise(msg));
        match *self {
            NoiseModel::Stable { alpha, gamma } => {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return bad(format!("alpha = {alpha} must lie in (0, 2]"));
                }
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return bad(format!("gamma = {gamma} must be positive"));
                }
            }
            NoiseModel::Cauchy { loc, scale } | NoiseModel::Laplace { loc, scale } => {
                if !loc.is_finite() {
                    return bad(format!("location {loc} must be finite"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return bad(format!("scale = {scale} must be positive"));
                }
            }
            NoiseModel::StudentT { nu } => {
                if !(nu > 0.0 && nu.is_finite()) {
                    return bad(format!("nu = {nu} must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Short name used in output files.
    pub fn label(&self) -> &'static str {
        match self {
            NoiseModel::Stable { .. } => "sas",
            NoiseModel::Cauchy { .. } => "cauchy",
            NoiseModel::StudentT { .. } => "student_t",
            NoiseModel::Laplace { .. } => "laplace",
        }
    }

    /// True for laws with `alpha = 1` tails, under which the p-th power
    /// update has no admissible exponent.
    pub fn is_cauchy(&self) -> bool {
        match *self {
            NoiseModel::Cauchy { .. } => true,
            NoiseModel::Stable { alpha, .. } => alpha == 1.0,
            NoiseModel::StudentT { nu } => nu == 1.0,
            NoiseModel::Laplace { .. } => false,
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let chi = match *self {
            NoiseModel::StudentT { nu } => {
                Some(ChiSquared::new(nu).map_err(|e| Error::InvalidNoise(e.to_string()))?)
            }
            _ => None,
        };
        Ok(Sampler { model: *self, chi })
    }

    /// `n` i.i.d. draws from a stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidNoise("sample length must be at least 1".into()));
        }
        let sampler = self.sampler()?;
        let mut rng = rng::stream(seed, &[tag::NOISE]);
        let mut out = vec![0.0; n];
        sampler.fill(&mut rng, &mut out);
        Ok(out)
    }
}

/// A validated model ready to draw from.
#[derive(Debug, Clone)]
pub struct Sampler {
    model: NoiseModel,
    chi: Option<ChiSquared<f64>>,
}

impl Sampler {
    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.model {
            NoiseModel::Stable { alpha, gamma } => gamma.powf(1.0 / alpha) * standard_stable(alpha, rng),
            NoiseModel::Cauchy { loc, scale } => {
                let u: f64 = Open01.sample(rng);
                loc + scale * (PI * (u - 0.5)).tan()
            }
            NoiseModel::StudentT { nu } => {
                let z: f64 = StandardNormal.sample(rng);
                let chi = self.chi.as_ref().expect("built with nu").sample(rng);
                z / (chi / nu).sqrt()
            }
            NoiseModel::Laplace { loc, scale } => {
                let u: f64 = Open01.sample(rng);
                let u = u - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out {
            *x = self.draw(rng);
        }
    }
}

/// Chambers-Mallows-Stuck draw with characteristic function
/// `exp(-|t|^alpha)`.
#[inline]
fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Fraction of the draws (those closest to zero) whose contribution to
/// `E|w|^-p` is replaced by a fitted local density.
const BALL_FRACTION: f64 = 0.1;
/// Below this many in-ball draws the plain sample mean is used.
const BALL_MIN_COUNT: usize = 64;

/// Monte Carlo estimate of `E|w|^-p` for `p` in (0, 1).
pub fn flom_inverse_moment(model: &NoiseModel, p_s: f64, n_mc: usize, seed: u64) -> Result<f64> {
    if n_mc == 0 {
        return Err(Error::InvalidNoise("draw count must be at least 1".into()));
    }
    let sampler = model.sampler()?;
    let mut rng = rng::stream(seed, &[tag::MOMENT]);
    let mut draws = vec![0.0; n_mc];
    sampler.fill(&mut rng, &mut draws);
    inverse_moment_from_samples(&draws, p_s)
}

/// Estimates `E|w|^-p` from i.i.d. draws.
///
/// The plain sample mean of `|w|^-p` has infinite variance for `p >= 1/2`
/// and is dominated by the few draws nearest zero. Draws with `|w|` below the
/// `BALL_FRACTION` quantile `eps` are instead summarized by a quadratic
/// density `h(t) = c0 + c1 t + c2 t^2` on `[0, eps)` matched to their first
/// three empirical moments, and `int_0^eps t^-p h(t) dt` is added in closed
/// form. Draws at or above `eps` enter through the sample mean as usual.
pub fn inverse_moment_from_samples(draws: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidNoise(format!("fractional order {p} must lie in (0, 1)")));
    }
    if draws.is_empty() {
        return Err(Error::InvalidNoise("no draws".into()));
    }
    let n = draws.len() as f64;
    let mut abs: Vec<f64> = draws.iter().map(|x| x.abs()).collect();
    let k = (BALL_FRACTION * n) as usize;

    let plain = |abs: &[f64]| abs.iter().map(|a| a.powf(-p)).sum::<f64>() / n;
    let estimate = if k < BALL_MIN_COUNT {
        plain(&abs)
    } else {
        let eps = *abs.select_nth_unstable_by(k, f64::total_cmp).1;
        if eps == 0.0 {
            return Err(Error::NonFiniteMoment);
        }
        let mut moments = [0.0f64; 3];
        let mut outside = 0.0;
        let mut inside = 0usize;
        for &a in &abs {
            if a < eps {
                inside += 1;
                let t = a / eps;
                moments[0] += 1.0;
                moments[1] += t;
                moments[2] += t * t;
            } else {
                outside += a.powf(-p);
            }
        }
        if inside == 0 {
            plain(&abs)
        } else {
            // Work on the unit interval: t = a / eps, g(t) = eps * h(eps t).
            // int_0^1 t^j g(t) dt = m_j / n fixes g = c0 + c1 t + c2 t^2 via the
            // 3x3 Hilbert system; the ball contributes eps^-p int_0^1 t^-p g(t) dt.
            let m = moments.map(|v| v / n);
            let c = solve_hilbert3(m);
            let ball = eps.powf(-p) * (c[0] / (1.0 - p) + c[1] / (2.0 - p) + c[2] / (3.0 - p));
            outside / n + ball
        }
    };
    if estimate.is_finite() {
        Ok(estimate)
    } else {
        Err(Error::NonFiniteMoment)
    }
}

/// Solves `H c = m` for the 3x3 Hilbert matrix `H_ij = 1 / (i + j + 1)`.
fn solve_hilbert3(m: [f64; 3]) -> [f64; 3] {
    // exact inverse of the 3x3 Hilbert matrix
    const INV: [[f64; 3]; 3] = [[9.0, -36.0, 30.0], [-36.0, 192.0, -180.0], [30.0, -180.0, 180.0]];
    let mut c = [0.0; 3];
    for (i, row) in INV.iter().enumerate() {
        c[i] = row[0] * m[0] + row[1] * m[1] + row[2] * m[2];
    }
    c
}
