//! Sensor network topologies and consensus weight matrices.
//!
//! Graphs are static and undirected. Random geometric graphs drop `m` nodes
//! uniformly on the unit square and connect every pair closer than a radius
//! (strictly: a pair at exactly the radius is not connected).
//!
//! Randomness comes from [`ChaCha8Rng`], a portable counter-based generator,
//! so a seed reproduces the same graph on every platform.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spectral::{self, SpectralSummary};
use crate::{Error, Matrix, Result};

/// Tolerance on row sums of a constructed weight matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance used by [`validate_consensus_matrix`].
pub const VALIDATION_TOL: f64 = 1e-10;

/// Odd constant used to derive successive resampling seeds.
const RESAMPLE_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
const MAX_RESAMPLES: u32 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    positions: Vec<[f64; 2]>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from node positions and an edge list.
    ///
    /// Edges are normalized to `(min, max)`, sorted and deduplicated.
    /// Self-loops and out-of-range endpoints are rejected.
    pub fn new(positions: Vec<[f64; 2]>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let m = positions.len();
        let mut list = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::out_of_range("edges", format!("self-loop at node {a}")));
            }
            if a >= m || b >= m {
                return Err(Error::out_of_range(
                    "edges",
                    format!("edge ({a}, {b}) references a node outside 0..{m}"),
                ));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        list.dedup();

        let mut neighbors = vec![Vec::new(); m];
        for &(a, b) in &list {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Self {
            positions,
            edges: list,
            neighbors,
        })
    }

    /// Path `0 – 1 – … – (m−1)` laid out along the horizontal midline.
    pub fn path(m: usize) -> Self {
        let edges = (1..m).map(|i| (i - 1, i));
        Self::new(line_positions(m), edges).expect("path edges are valid")
    }

    /// Complete graph on `m` nodes.
    pub fn complete(m: usize) -> Self {
        let edges = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j)));
        Self::new(line_positions(m), edges).expect("complete edges are valid")
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let m = self.node_count();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::out_of_range("perm", "not a permutation of the node set"));
        }
        let mut positions = vec![[0.0; 2]; m];
        for (i, &p) in perm.iter().enumerate() {
            positions[p] = self.positions[i];
        }
        Self::new(positions, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GraphJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)?;
        if raw.positions.len() != raw.m {
            return Err(Error::Format {
                what: "graph JSON",
                detail: format!("m = {} but {} positions given", raw.m, raw.positions.len()),
            });
        }
        Self::new(raw.positions, raw.edges.into_iter().map(|[a, b]| (a, b)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn line_positions(m: usize) -> Vec<[f64; 2]> {
    (0..m).map(|i| [(i as f64 + 0.5) / m as f64, 0.5]).collect()
}

/// On-disk form: `{"m": int, "positions": [[x,y],...], "edges": [[i,j],...]}`.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    m: usize,
    positions: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
}

impl From<&Graph> for GraphJson {
    fn from(g: &Graph) -> Self {
        Self {
            m: g.node_count(),
            positions: g.positions.clone(),
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// `√(ln m / m)`, the radius that makes an RGG connected with high probability.
pub fn connectivity_radius(m: usize) -> f64 {
    let m = m as f64;
    (m.ln() / m).sqrt()
}

/// Random geometric graph on the unit square.
///
/// Node `i` takes the `2i`-th and `2i+1`-th uniform draws of a
/// `ChaCha8Rng` seeded with `seed` as its `x` and `y` coordinates.
pub fn generate_rgg(m: usize, radius: f64, seed: u64) -> Result<Graph> {
    if m < 2 {
        return Err(Error::out_of_range("m", format!("need at least 2 nodes, got {m}")));
    }
    if !(0.0..=std::f64::consts::SQRT_2).contains(&radius) {
        return Err(Error::out_of_range(
            "radius",
            format!("{radius} is outside [0, √2]"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<[f64; 2]> = (0..m)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let mut edges = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            if distance(positions[i], positions[j]) < radius {
                edges.push((i, j));
            }
        }
    }
    Graph::new(positions, edges)
}

pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Draws RGGs until one is connected.
///
/// Attempt `k` uses seed `seed + k · 0x9E3779B97F4A7C15` (wrapping).
/// Returns the graph and the number of rejected draws.
pub fn connected_rgg(m: usize, radius: f64, seed: u64) -> Result<(Graph, u32)> {
    for attempt in 0..MAX_RESAMPLES {
        let s = seed.wrapping_add(u64::from(attempt).wrapping_mul(RESAMPLE_STRIDE));
        let g = generate_rgg(m, radius, s)?;
        if is_connected(&g) {
            return Ok((g, attempt));
        }
    }
    Err(Error::out_of_range(
        "radius",
        format!("no connected graph with m = {m}, radius = {radius} after {MAX_RESAMPLES} draws"),
    ))
}

/// Breadth-first reachability from node 0.
pub fn is_connected(g: &Graph) -> bool {
    let m = g.node_count();
    if m == 0 {
        return false;
    }
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for &j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    reached == m
}

/// Symmetric doubly stochastic weight matrix with its spectrum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: Matrix,
    summary: SpectralSummary,
}

impl WeightMatrix {
    /// Checks symmetry, unit row sums and `λ₂ < 1`, then caches the spectrum.
    pub fn new(w: Matrix) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::DimensionMismatch {
                expected: w.rows(),
                actual: w.cols(),
            });
        }
        for (i, s) in w.row_sums().iter().enumerate() {
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidWeights(format!("row {i} sums to {s}")));
            }
        }
        let summary = spectral::spectral_summary(&w)?;
        if summary.lambda2 >= 1.0 - VALIDATION_TOL {
            return Err(Error::InvalidWeights(format!(
                "λ₂ = {} is not below 1; the graph is disconnected or the weights do not mix",
                summary.lambda2
            )));
        }
        Ok(Self { w, summary })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn node_count(&self) -> usize {
        self.w.rows()
    }

    pub fn summary(&self) -> &SpectralSummary {
        &self.summary
    }

    pub fn lambda2(&self) -> f64 {
        self.summary.lambda2
    }

    pub fn lambda_min(&self) -> f64 {
        self.summary.lambda_min
    }
}

fn require_connected(g: &Graph) -> Result<()> {
    if is_connected(g) {
        Ok(())
    } else {
        Err(Error::InvalidWeights("graph is not connected".into()))
    }
}

/// Metropolis weights: `1/(1 + max(d_i, d_j))` on edges, the remainder on the diagonal.
pub fn metropolis_weights(g: &Graph) -> Result<WeightMatrix> {
    require_connected(g)?;
    let m = g.node_count();
    let mut w = Matrix::zeros(m, m);
    for &(i, j) in g.edges() {
        let v = 1.0 / (1 + g.degree(i).max(g.degree(j))) as f64;
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..m {
        let off: f64 = g.neighbors(i).iter().map(|&k| w[(i, k)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    WeightMatrix::new(w)
}

/// The largest-step default for Laplacian weights, `0.99 / d_max`.
pub fn default_laplacian_step(g: &Graph) -> f64 {
    0.99 / g.max_degree().max(1) as f64
}

/// Laplacian weights `W = I − a L`, valid for `0 < a < 1/d_max`.
pub fn laplacian_weights(g: &Graph, a: f64) -> Result<WeightMatrix> {
    let d_max = g.max_degree();
    if !(a > 0.0 && a * (d_max as f64) < 1.0) {
        return Err(Error::out_of_range(
            "a",
            format!("{a} must satisfy 0 < a < 1/d_max = 1/{d_max}"),
        ));
    }
    require_connected(g)?;
    let m = g.node_count();
    let mut w = Matrix::zeros(m, m);
    for &(i, j) in g.edges() {
        w[(i, j)] = a;
        w[(j, i)] = a;
    }
    for i in 0..m {
        w[(i, i)] = 1.0 - a * g.degree(i) as f64;
    }
    WeightMatrix::new(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub symmetric: bool,
    pub row_stochastic: bool,
    pub column_stochastic: bool,
    pub spectral_gap: bool,
    /// `ρ(W − 11ᵀ/m)` as computed for the spectral-gap check.
    pub lambda2: f64,
}

impl ValidationReport {
    pub fn is_consensus_matrix(&self) -> bool {
        self.row_stochastic && self.column_stochastic && self.spectral_gap
    }
}

/// Checks the three average-consensus conditions plus symmetry, within
/// [`VALIDATION_TOL`]. Never fails; a non-square input reports all false.
pub fn validate_consensus_matrix(w: &Matrix) -> ValidationReport {
    if !w.is_square() || w.rows() == 0 {
        return ValidationReport {
            symmetric: false,
            row_stochastic: false,
            column_stochastic: false,
            spectral_gap: false,
            lambda2: f64::NAN,
        };
    }
    let unit = |sums: Vec<f64>| sums.iter().all(|s| (s - 1.0).abs() <= VALIDATION_TOL);
    let (gap, _, _) = w.max_asymmetry();
    let symmetric = gap <= VALIDATION_TOL;
    let deflated = w.sub(&Matrix::averaging(w.rows()));
    let lambda2 = if gap <= spectral::SYMMETRY_TOL {
        spectral::symmetric_eigenvalues(&deflated)
            .map(|e| e.iter().map(|l| l.abs()).fold(0.0, f64::max))
            .unwrap_or(f64::NAN)
    } else {
        spectral::spectral_radius_general(&deflated)
    };
    ValidationReport {
        symmetric,
        row_stochastic: unit(w.row_sums()),
        column_stochastic: unit(w.col_sums()),
        spectral_gap: lambda2 < 1.0 - VALIDATION_TOL,
        lambda2,
    }
}
