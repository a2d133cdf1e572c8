//! Graph Fourier basis, bandlimiting projector and sampling sets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;
use crate::linalg::{self, SymmetricEigen};

/// Eigenvectors `U` (columns) and ascending eigenvalues of a Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    u: DMatrix<f64>,
    lambdas: Vec<f64>,
}

impl SpectralBasis {
    /// Assembles a basis from stored parts, checking shape, ordering and
    /// orthonormality (`U^T U = I` within 1e-9 Frobenius).
    pub fn from_parts(u: DMatrix<f64>, lambdas: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.nrows().max(u.ncols()) });
        }
        if lambdas.windows(2).any(|w| !(w[0] <= w[1])) || lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Cache("eigenvalues are not sorted ascending".into()));
        }
        let err = (u.transpose() * &u - DMatrix::identity(n, n)).norm();
        if !(err <= 1e-9) {
            return Err(Error::Cache(format!("basis is not orthonormal (error {err:e})")));
        }
        Ok(Self { u, lambdas })
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }
}

pub fn eigendecompose(l: &LaplacianMatrix) -> Result<SpectralBasis> {
    let SymmetricEigen { values, vectors } = linalg::symmetric_eigen(l.matrix())?;
    Ok(SpectralBasis { u: vectors, lambdas: values })
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Graph Fourier transform `s = U^T x`.
pub fn gft(basis: &SpectralBasis, x: &[f64]) -> Result<Vec<f64>> {
    check_len(basis.n(), x.len())?;
    Ok(basis.u.column_iter().map(|col| linalg::dot(col.as_slice(), x)).collect())
}

/// Inverse transform `x = U s`.
pub fn igft(basis: &SpectralBasis, s: &[f64]) -> Result<Vec<f64>> {
    check_len(basis.n(), s.len())?;
    Ok((&basis.u * linalg::to_dvector(s)).as_slice().to_vec())
}

/// Projector onto the span of the eigenvectors indexed by a frequency set.
#[derive(Debug, Clone)]
pub struct BandlimitOperator {
    freq_set: Vec<usize>,
    u_f: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl BandlimitOperator {
    pub fn freq_set(&self) -> &[usize] {
        &self.freq_set
    }

    /// `U_F`: the selected eigenvector columns, `n x |F|`.
    pub fn u_f(&self) -> &DMatrix<f64> {
        &self.u_f
    }

    /// `B = U_F U_F^T`.
    pub fn projector(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn bandwidth(&self) -> usize {
        self.freq_set.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), x.len())?;
        Ok((&self.b * linalg::to_dvector(x)).as_slice().to_vec())
    }

    /// Largest absolute row sum of `B` (its infinity norm).
    pub fn max_row_abs_sum(&self) -> f64 {
        self.b.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Builds `B` for frequency indices `freq` (deduplicated and sorted).
pub fn make_bandlimit(basis: &SpectralBasis, freq: &[usize]) -> Result<BandlimitOperator> {
    let n = basis.n();
    let mut freq_set = freq.to_vec();
    freq_set.sort_unstable();
    freq_set.dedup();
    if let Some(&bad) = freq_set.iter().find(|&&f| f >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let u_f = basis.u.select_columns(&freq_set);
    let b = &u_f * u_f.transpose();
    // exact symmetry lets columns double as rows in the estimator kernels
    let b = (&b + b.transpose()) * 0.5;
    Ok(BandlimitOperator { freq_set, u_f, b })
}

/// The `k` lowest graph frequencies.
pub fn low_pass(k: usize) -> Vec<usize> {
    (0..k).collect()
}

/// A set of observed nodes; `D_S` is the diagonal 0/1 selector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingSet {
    nodes: Vec<usize>,
    mask: Vec<bool>,
}

impl SamplingSet {
    pub fn new(n: usize, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; n];
        for i in nodes {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            mask[i] = true;
        }
        let nodes = (0..n).filter(|&i| mask[i]).collect();
        Ok(Self { nodes, mask })
    }

    pub fn full(n: usize) -> Self {
        Self { nodes: (0..n).collect(), mask: vec![true; n] }
    }

    /// Observed node indices, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn selector(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| if i == j && self.mask[i] { 1.0 } else { 0.0 })
    }

    /// `D_S x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect()
    }

    /// `U_F^T D_S U_F`.
    pub fn gram(&self, u_f: &DMatrix<f64>) -> DMatrix<f64> {
        let rows = u_f.select_rows(&self.nodes);
        rows.transpose() * rows
    }
}

/// Greedy sampling-set selection for signals bandlimited to `span(U_F)`.
///
/// Grows `S` one node at a time. While `|S| < |F|` the node maximizing the
/// product of singular values of the restricted rows `U_F[S, :]` is added,
/// which is the node whose row has the largest residual after projecting out
/// the rows already chosen. Once `|S| >= |F|` the node maximizing
/// `sigma_min(U_F[S, :])` is added. Ties go to the lower node index.
pub fn greedy_sampling(u_f: &DMatrix<f64>, m: usize) -> Result<SamplingSet> {
    let n = u_f.nrows();
    let f = u_f.ncols();
    if f == 0 || m < f || m > n {
        return Err(Error::InvalidSampleCount { m, min: f.max(1), max: n });
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| u_f.row(i).iter().copied().collect()).collect();
    let mut chosen = vec![false; n];
    let mut order = Vec::with_capacity(m);

    // Phase 1: volume growth through Gram-Schmidt residuals.
    let mut residual = rows.clone();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(f);
    for _ in 0..f {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !chosen[i]) {
            let score = linalg::dot(&residual[i], &residual[i]);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (pick, score) = best.expect("candidates remain while |S| < |F| <= n");
        if !(score > 1e-20) {
            return Err(Error::Unrecoverable(m));
        }
        chosen[pick] = true;
        order.push(pick);
        // re-orthogonalize the pick against earlier directions
        let mut q = residual[pick].clone();
        for prev in &basis {
            let c = linalg::dot(&q, prev);
            for (x, p) in q.iter_mut().zip(prev) {
                *x -= c * p;
            }
        }
        let norm = linalg::dot(&q, &q).sqrt();
        if !(norm > 1e-10) {
            return Err(Error::Unrecoverable(m));
        }
        q.iter_mut().for_each(|x| *x /= norm);
        for (i, r) in residual.iter_mut().enumerate() {
            if chosen[i] {
                continue;
            }
            let c = linalg::dot(r, &q);
            for (x, qk) in r.iter_mut().zip(&q) {
                *x -= c * qk;
            }
        }
        basis.push(q);
    }

    // Phase 2: maximize the smallest singular value.
    let mut gram = DMatrix::<f64>::zeros(f, f);
    for &i in &order {
        let r = &rows[i];
        for a in 0..f {
            for b in 0..f {
                gram[(a, b)] += r[a] * r[b];
            }
        }
    }
    let mut eig = linalg::symmetric_eigen(&gram)?;
    if !(eig.values[0] > 1e-12) {
        return Err(Error::Unrecoverable(m));
    }
    while order.len() < m {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !chosen[i]) {
            let score = linalg::rank_one_update_min_eigenvalue(&eig, &rows[i]);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("m <= n leaves a candidate");
        chosen[pick] = true;
        order.push(pick);
        let r = &rows[pick];
        for a in 0..f {
            for b in 0..f {
                gram[(a, b)] += r[a] * r[b];
            }
        }
        if order.len() < m {
            eig = linalg::symmetric_eigen(&gram)?;
        }
    }
    SamplingSet::new(n, order)
}

/// `sigma_min(U_F[S, :])`, or 0 when `|S| < |F|`.
pub fn sampled_sigma_min(u_f: &DMatrix<f64>, s: &SamplingSet) -> Result<f64> {
    if s.len() < u_f.ncols() {
        return Ok(0.0);
    }
    let eig = linalg::symmetric_eigen(&s.gram(u_f))?;
    Ok(eig.values[0].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian, random_sensor_graph};

    fn basis(n: usize, seed: u64) -> SpectralBasis {
        eigendecompose(&build_laplacian(&random_sensor_graph(n, seed).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn gft_of_eigenvector_is_unit_vector() {
        let b = basis(12, 1);
        for i in [0, 5, 11] {
            let s = gft(&b, b.u().column(i).as_slice()).unwrap();
            for (k, v) in s.iter().enumerate() {
                assert!((v - if k == i { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
            let x = igft(&b, &s).unwrap();
            assert!(x.iter().zip(b.u().column(i).iter()).all(|(a, c)| (a - c).abs() < 1e-9));
        }
        assert_eq!(gft(&b, &[0.0; 12]).unwrap(), vec![0.0; 12]);
    }

    #[test]
    fn dimension_errors() {
        let b = basis(5, 2);
        assert!(matches!(gft(&b, &[1.0; 4]), Err(Error::DimensionMismatch { expected: 5, got: 4 })));
        assert!(matches!(igft(&b, &[1.0; 6]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(make_bandlimit(&b, &[0, 5]), Err(Error::IndexOutOfRange { index: 5, len: 5 })));
    }

    #[test]
    fn bandlimit_extremes() {
        let b = basis(6, 3);
        let all = make_bandlimit(&b, &low_pass(6)).unwrap();
        assert!((all.projector() - DMatrix::identity(6, 6)).norm() < 1e-10);
        let none = make_bandlimit(&b, &[]).unwrap();
        assert_eq!(none.projector(), &DMatrix::zeros(6, 6));
    }

    #[test]
    fn projector_kills_out_of_band() {
        let b = basis(5, 4);
        let op = make_bandlimit(&b, &[0, 2]).unwrap();
        for j in [1, 3, 4] {
            let y = op.apply(b.u().column(j).as_slice()).unwrap();
            assert!(y.iter().all(|v| v.abs() < 1e-9));
        }
        let y = op.apply(b.u().column(2).as_slice()).unwrap();
        assert!(y.iter().zip(b.u().column(2).iter()).all(|(a, c)| (a - c).abs() < 1e-9));
    }

    #[test]
    fn sampling_set_selector() {
        let s = SamplingSet::new(4, [3, 1, 3]).unwrap();
        assert_eq!(s.nodes(), &[1, 3]);
        let d = s.selector();
        assert_eq!(&d * &d, d);
        assert_eq!(d.transpose(), d);
        assert_eq!(s.apply(&[1.0, 2.0, 3.0, 4.0]), vec![0.0, 2.0, 0.0, 4.0]);
        assert!(SamplingSet::new(2, [2]).is_err());
    }

    #[test]
    fn greedy_full_set() {
        let b = basis(7, 5);
        let op = make_bandlimit(&b, &low_pass(3)).unwrap();
        let s = greedy_sampling(op.u_f(), 7).unwrap();
        assert_eq!(s.nodes(), &[0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn greedy_singleton_picks_largest_entry() {
        let b = basis(9, 6);
        let op = make_bandlimit(&b, &[3]).unwrap();
        let s = greedy_sampling(op.u_f(), 1).unwrap();
        let col = op.u_f().column(0);
        let best = (0..9).fold(0, |acc, i| if col[i].abs() > col[acc].abs() { i } else { acc });
        assert_eq!(s.nodes(), &[best]);
    }

    #[test]
    fn greedy_rejects_bad_m() {
        let b = basis(6, 7);
        let op = make_bandlimit(&b, &low_pass(3)).unwrap();
        assert!(matches!(greedy_sampling(op.u_f(), 2), Err(Error::InvalidSampleCount { .. })));
        assert!(matches!(greedy_sampling(op.u_f(), 7), Err(Error::InvalidSampleCount { .. })));
    }

    #[test]
    fn greedy_unrecoverable() {
        // Two frequencies supported on the same single node cannot be told apart.
        let u_f = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(greedy_sampling(&u_f, 2), Err(Error::Unrecoverable(2)));
    }
}
