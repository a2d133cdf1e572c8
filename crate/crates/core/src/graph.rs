//! Undirected graphs and their combinatorial Laplacian.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Neighbor count used by [`random_sensor_graph`].
pub const SENSOR_NEIGHBORS: usize = 6;
/// Placement attempts before [`random_sensor_graph`] gives up on connectivity.
pub const SENSOR_MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// An undirected graph with nonnegative edge weights.
///
/// Each undirected edge is stored once with `i < j`; it stands for both
/// `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
    coords: Option<Vec<[f64; 2]>>,
}

impl Graph {
    /// Builds a graph from an edge list in either orientation.
    ///
    /// `(i, j, w)` and `(j, i, w)` are the same edge; listing both is fine as
    /// long as the weights agree.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = Edge>, coords: Option<Vec<[f64; 2]>>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for Edge { i, j, weight } in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::NodeOutOfRange { i, j, n: n_nodes });
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight { i, j, weight });
            }
            let key = (i.min(j), i.max(j));
            if let Some(&prev) = merged.get(&key) {
                if prev != weight {
                    return Err(Error::ConflictingEdge { i: key.0, j: key.1 });
                }
            }
            merged.insert(key, weight);
        }
        if let Some(c) = &coords {
            if c.len() != n_nodes {
                return Err(Error::CoordinateCount { expected: n_nodes, got: c.len() });
            }
            if let Some(bad) = c.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(Error::NonFiniteCoordinate(bad));
            }
        }
        let edges = merged.into_iter().map(|((i, j), weight)| Edge { i, j, weight }).collect();
        Ok(Self { n_nodes, edges, coords })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Undirected edges, each once with `i < j`, sorted by `(i, j)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n_nodes;
        let mut a = DMatrix::zeros(n, n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.weight;
            a[(e.j, e.i)] = e.weight;
        }
        a
    }

    /// Weighted degree of every node (sum of incident edge weights).
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes];
        for e in &self.edges {
            d[e.i] += e.weight;
            d[e.j] += e.weight;
        }
        d
    }

    /// Connected components as a node -> component label map (labels are
    /// assigned in order of each component's smallest node).
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n_nodes);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        let mut label = vec![usize::MAX; self.n_nodes];
        let mut root_label = BTreeMap::new();
        for v in 0..self.n_nodes {
            let r = uf.find(v);
            let next = root_label.len();
            label[v] = *root_label.entry(r).or_insert(next);
        }
        label
    }

    pub fn n_components(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() == 1
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// The combinatorial Laplacian `L = D - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

impl LaplacianMatrix {
    /// Wraps an arbitrary symmetric matrix. Used when a Laplacian is read
    /// back from disk or built by hand in tests.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let asym = max_asymmetry(&m);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Largest absolute row sum, which must be ~0 for a Laplacian.
    pub fn max_row_sum(&self) -> f64 {
        self.0.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        max_asymmetry(&self.0)
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn build_laplacian(g: &Graph) -> Result<LaplacianMatrix> {
    if g.n_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut l = -g.adjacency();
    for (i, d) in g.degrees().into_iter().enumerate() {
        l[(i, i)] = d;
    }
    Ok(LaplacianMatrix(l))
}

fn check_coords(coords: &[[f64; 2]]) -> Result<()> {
    match coords.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        Some(bad) => Err(Error::NonFiniteCoordinate(bad)),
        None => Ok(()),
    }
}

/// Directed k-NN lists: `out[i]` holds the `k` nearest nodes to `i` with
/// their distances, nearest first. Ties go to the lower node index.
fn knn_lists(coords: &[[f64; 2]], k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = coords.len();
    let mut out = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, p) in coords.iter().enumerate() {
        cand.clear();
        for (j, q) in coords.iter().enumerate() {
            if j != i {
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                cand.push((d2, j));
            }
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.push(cand[..k].iter().map(|&(d2, j)| (j, d2.sqrt())).collect());
    }
    out
}

/// Unweighted k-nearest-neighbor graph, symmetrized by union.
///
/// Coincident points are resolved by the lower-index tie break, so duplicate
/// coordinates are accepted.
pub fn knn_geographic_graph(coords: &[[f64; 2]], k: usize) -> Result<Graph> {
    let n = coords.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidNeighborCount { k, n });
    }
    check_coords(coords)?;
    let edges = knn_lists(coords, k)
        .into_iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.into_iter().map(move |(j, _)| Edge { i, j, weight: 1.0 }));
    Graph::new(n, edges, Some(coords.to_vec()))
}

/// Random geometric sensor graph on the unit square.
///
/// Nodes are placed uniformly, each is joined to its [`SENSOR_NEIGHBORS`]
/// nearest neighbors (union-symmetrized) with Gaussian kernel weights
/// `exp(-d^2 / (2 sigma^2))`, `sigma` being the mean k-NN distance. Placement
/// is redrawn until the graph is connected.
pub fn random_sensor_graph(n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidNeighborCount { k: SENSOR_NEIGHBORS, n });
    }
    let k = SENSOR_NEIGHBORS.min(n - 1);
    for attempt in 0..SENSOR_MAX_ATTEMPTS {
        let mut rng = rng::stream(seed, &[tag::SENSOR_PLACEMENT, attempt as u64]);
        let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let lists = knn_lists(&coords, k);
        let sigma = lists.iter().flatten().map(|&(_, d)| d).sum::<f64>() / (n * k) as f64;
        if !(sigma > 0.0) {
            continue;
        }
        let edges = lists.into_iter().enumerate().flat_map(|(i, nbrs)| {
            nbrs.into_iter().map(move |(j, d)| Edge { i, j, weight: (-d * d / (2.0 * sigma * sigma)).exp() })
        });
        // Distances are symmetric, so both orientations carry bit-identical weights.
        let g = Graph::new(n, edges, Some(coords))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Disconnected(SENSOR_MAX_ATTEMPTS))
}
