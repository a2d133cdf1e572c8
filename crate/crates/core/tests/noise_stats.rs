use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use gsign_core::noise::{flom_inverse_moment, inverse_moment_from_samples, NoiseModel, DEFAULT_P_S};
use statrs::distribution::{Cauchy, Continuous, ContinuousCDF, Laplace, StudentsT};
use statrs::function::gamma::gamma;

const DRAWS: usize = 1_000_000;

fn sorted(model: NoiseModel, seed: u64) -> Vec<f64> {
    let mut v = model.sample(DRAWS, seed).unwrap();
    v.sort_by(f64::total_cmp);
    v
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[(lo + 1).min(sorted.len() - 1)] - sorted[lo])
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gaussian_stable_variance() {
    let v = NoiseModel::Stable { alpha: 2.0, gamma: 0.1 }.sample(DRAWS, 1).unwrap();
    assert!(rel(variance(&v), 0.2) < 0.02, "{}", variance(&v));
}

#[test]
fn cauchy_median_and_iqr() {
    let s = sorted(NoiseModel::Cauchy { loc: 0.0, scale: 0.1 }, 2);
    assert!(quantile(&s, 0.5).abs() < 0.002);
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    assert!(rel(iqr, 0.2) < 0.02, "{iqr}");
}

#[test]
fn laplace_variance() {
    let v = NoiseModel::Laplace { loc: 0.0, scale: SQRT_2 }.sample(DRAWS, 3).unwrap();
    assert!(rel(variance(&v), 4.0) < 0.02, "{}", variance(&v));
}

#[test]
fn stable_alpha_one_is_cauchy() {
    let gamma = 0.1;
    let s = sorted(NoiseModel::Stable { alpha: 1.0, gamma }, 4);
    let reference = Cauchy::new(0.0, gamma).unwrap();
    for p in [0.1, 0.25, 0.75, 0.9] {
        let got = quantile(&s, p);
        let want = reference.inverse_cdf(p);
        assert!(rel(got, want) < 0.02, "p = {p}: {got} vs {want}");
    }
}

#[test]
fn laplace_and_student_quantiles() {
    let s = sorted(NoiseModel::Laplace { loc: 0.0, scale: SQRT_2 }, 5);
    let lap = Laplace::new(0.0, SQRT_2).unwrap();
    let s_t = sorted(NoiseModel::StudentT { nu: 2.0 }, 6);
    let t = StudentsT::new(0.0, 1.0, 2.0).unwrap();
    for p in [0.05, 0.1, 0.25, 0.75, 0.9, 0.95] {
        assert!(rel(quantile(&s, p), lap.inverse_cdf(p)) < 0.02);
        assert!(rel(quantile(&s_t, p), t.inverse_cdf(p)) < 0.02);
    }
}

#[test]
fn near_cauchy_stable_quantiles_scale() {
    // gamma^(1/alpha) is a pure scale factor
    let a = sorted(NoiseModel::Stable { alpha: 1.06, gamma: 0.1 }, 7);
    let b = sorted(NoiseModel::Stable { alpha: 1.06, gamma: 1.0 }, 7);
    let c = 0.1f64.powf(1.0 / 1.06);
    for p in [0.1, 0.25, 0.75, 0.9] {
        assert!(rel(quantile(&a, p), c * quantile(&b, p)) < 1e-9);
    }
}

fn models() -> Vec<NoiseModel> {
    vec![
        NoiseModel::Stable { alpha: 1.06, gamma: 0.1 },
        NoiseModel::Stable { alpha: 1.5, gamma: 1.0 },
        NoiseModel::Cauchy { loc: 0.0, scale: 0.1 },
        NoiseModel::StudentT { nu: 2.0 },
        NoiseModel::Laplace { loc: 0.0, scale: SQRT_2 },
    ]
}

#[test]
fn sign_symmetry() {
    for (k, m) in models().into_iter().enumerate() {
        let v = m.sample(DRAWS, 100 + k as u64).unwrap();
        let mean_sign = v.iter().map(|x| x.signum()).sum::<f64>() / v.len() as f64;
        assert!(mean_sign.abs() < 0.005, "{m:?}: {mean_sign}");
    }
}

#[test]
fn determinism() {
    for m in models() {
        assert_eq!(m.sample(1000, 9).unwrap(), m.sample(1000, 9).unwrap());
        assert_ne!(m.sample(1000, 9).unwrap(), m.sample(1000, 10).unwrap());
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    // split into panels so narrow peaks are not skipped by the first estimate
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, 1e-12, 40)
        })
        .sum()
}

/// `E|w|^{-p}` for a symmetric density by quadrature. On `[0, 1]` the
/// substitution `t = u^{1/(1-p)}` removes the singularity, on `[1, inf)` the
/// substitution `t = 1/v` folds the tail onto `(0, 1]`.
fn quadrature_inverse_moment<D: Fn(f64) -> f64>(pdf: D, p: f64) -> f64 {
    let k = 1.0 / (1.0 - p);
    let inner = integrate(|u: f64| k * pdf(u.powf(k)), 0.0, 1.0);
    let outer = integrate(|v: f64| if v == 0.0 { 0.0 } else { v.powf(p - 2.0) * pdf(1.0 / v) }, 0.0, 1.0);
    2.0 * (inner + outer)
}

fn stable_closed_form(alpha: f64, gamma_: f64, p: f64) -> f64 {
    // E|X|^q for q = -p, unit-scale stable with char. function exp(-|t|^alpha)
    let q = -p;
    let sigma = gamma_.powf(1.0 / alpha);
    sigma.powf(q) * 2f64.powf(q) * gamma((1.0 + q) / 2.0) * gamma(1.0 - q / alpha)
        / (PI.sqrt() * gamma(1.0 - q / 2.0))
}

#[test]
fn quadrature_oracle_agrees_with_closed_forms() {
    let p = DEFAULT_P_S;
    let lap = Laplace::new(0.0, SQRT_2).unwrap();
    let want = SQRT_2.powf(-p) * gamma(1.0 - p);
    assert!(rel(quadrature_inverse_moment(|t| lap.pdf(t), p), want) < 1e-6);

    let c = Cauchy::new(0.0, 0.1).unwrap();
    let want = 0.1f64.powf(-p) / (p * FRAC_PI_2).cos();
    assert!(rel(quadrature_inverse_moment(|t| c.pdf(t), p), want) < 1e-6);

    // the stable formula reduces to both special cases
    assert!(rel(stable_closed_form(1.0, 0.1, p), want) < 1e-9);
    let gauss = stable_closed_form(2.0, 0.5, p);
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    assert!(rel(quadrature_inverse_moment(|t| normal.pdf(t), p), gauss) < 1e-6);
}

const FLOM_DRAWS: usize = 10_000_000;

#[test]
fn flom_matches_quadrature() {
    let p = DEFAULT_P_S;
    let lap = Laplace::new(0.0, SQRT_2).unwrap();
    let cau = Cauchy::new(0.0, 0.1).unwrap();
    let t2 = StudentsT::new(0.0, 1.0, 2.0).unwrap();
    let cases: Vec<(NoiseModel, f64)> = vec![
        (NoiseModel::Laplace { loc: 0.0, scale: SQRT_2 }, quadrature_inverse_moment(|t| lap.pdf(t), p)),
        (NoiseModel::Cauchy { loc: 0.0, scale: 0.1 }, quadrature_inverse_moment(|t| cau.pdf(t), p)),
        (NoiseModel::StudentT { nu: 2.0 }, quadrature_inverse_moment(|t| t2.pdf(t), p)),
        (NoiseModel::Stable { alpha: 1.06, gamma: 0.1 }, stable_closed_form(1.06, 0.1, p)),
    ];
    for (model, want) in cases {
        let got = flom_inverse_moment(&model, p, FLOM_DRAWS, 42).unwrap();
        assert!(rel(got, want) < 0.01, "{model:?}: {got} vs {want}");
    }
}

#[test]
fn flom_default_draws_close() {
    // looser check at the default budget
    let want = SQRT_2.powf(-DEFAULT_P_S) * gamma(1.0 - DEFAULT_P_S);
    for seed in 0..3 {
        let got = flom_inverse_moment(&NoiseModel::Laplace { loc: 0.0, scale: SQRT_2 }, DEFAULT_P_S, DRAWS, seed).unwrap();
        assert!(rel(got, want) < 0.04, "{got} vs {want}");
    }
}

#[test]
fn flom_decreasing_in_scale() {
    for mk in [
        (|s: f64| NoiseModel::Laplace { loc: 0.0, scale: s }) as fn(f64) -> NoiseModel,
        |s: f64| NoiseModel::Cauchy { loc: 0.0, scale: s },
    ] {
        let vals: Vec<f64> = [0.05, 0.1, 0.5, 1.0, 2.0, 8.0]
            .iter()
            .map(|&s| flom_inverse_moment(&mk(s), DEFAULT_P_S, 200_000, 11).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[0] > w[1]), "{vals:?}");
    }
}

#[test]
fn constant_magnitude_moment() {
    let draws: Vec<f64> = (0..5000).map(|k| if k % 2 == 0 { 3.0 } else { -3.0 }).collect();
    let got = inverse_moment_from_samples(&draws, 0.99).unwrap();
    assert!(rel(got, 3f64.powf(-0.99)) < 1e-12);
}
