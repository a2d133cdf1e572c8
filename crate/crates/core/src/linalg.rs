//! Dense symmetric eigensolver (cyclic Jacobi) and small helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sweep cap for [`symmetric_eigen`].
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm at which [`symmetric_eigen`] stops, relative
/// to the Frobenius norm of the input.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending and eigenvectors
/// stored as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition.
///
/// Each sweep annihilates every off-diagonal pair once; the accumulated
/// rotations form the eigenvectors. Eigenvalues come back sorted ascending and
/// each eigenvector is sign-normalized so that its largest-magnitude entry
/// (lowest index on ties) is positive.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    // row-major working copies
    let mut a: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.norm();
    let threshold = JACOBI_TOLERANCE * if scale > 0.0 { scale } else { 1.0 };

    let mut converged = off_diagonal_norm(&a, n) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&a, n) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps, off_norm: off_diagonal_norm(&a, n) });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for k in 0..n {
            if v[k * n + src].abs() > v[pivot * n + src].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, col)] = sign * v[k * n + src];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Smallest eigenvalue of `A + v v^T`, given the eigendecomposition of the
/// symmetric matrix `A` (`values` ascending, `vectors` orthonormal).
///
/// Solves the secular equation `1 + sum z_j^2 / (d_j - x) = 0` with
/// `z = W^T v` by bisection on the interval fixed by eigenvalue interlacing.
pub fn rank_one_update_min_eigenvalue(eig: &SymmetricEigen, v: &[f64]) -> f64 {
    let d = &eig.values;
    let n = d.len();
    let w = &eig.vectors;
    let z: Vec<f64> = (0..n).map(|j| (0..n).map(|k| w[(k, j)] * v[k]).sum()).collect();
    let vnorm2: f64 = v.iter().map(|x| x * x).sum();
    let cut = 1e-28 * vnorm2.max(f64::MIN_POSITIVE);

    let active: Vec<usize> = (0..n).filter(|&j| z[j] * z[j] > cut).collect();
    let mut best = f64::INFINITY;
    if let Some(j) = (0..n).find(|j| !active.contains(j)) {
        best = d[j];
    }
    let Some(&first) = active.first() else {
        return best;
    };
    let znorm2: f64 = active.iter().map(|&j| z[j] * z[j]).sum();
    let mut lo = d[first];
    let mut hi = d[first] + znorm2;
    if let Some(&second) = active.get(1) {
        hi = hi.min(d[second]);
    }
    let secular = |x: f64| 1.0 + active.iter().map(|&j| z[j] * z[j] / (d[j] - x)).sum::<f64>();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.min(0.5 * (lo + hi))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}
