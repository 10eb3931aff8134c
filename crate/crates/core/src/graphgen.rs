//! Kernel matrix, block matrix, conditional edge probabilities and
//! adjacency sampling.

use faer::Mat;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{community_vector, LatentPositions, ModelParams, Purpose, Seed};

/// Dense symmetric Gaussian-kernel matrix `P_ij = exp(-gamma |X_i - X_j|^2)`
/// with zero diagonal.
#[derive(Debug, Clone)]
pub struct KernelMatrix(Mat<f64>);

impl KernelMatrix {
    pub fn matrix(&self) -> &Mat<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// `kappa * P`.
    pub fn scaled(&self, kappa: f64) -> Mat<f64> {
        Mat::from_fn(self.n(), self.n(), |i, j| kappa * self.0[(i, j)])
    }
}

pub fn kernel_matrix(latents: &LatentPositions, gamma: f64) -> KernelMatrix {
    let n = latents.len();
    let mut p = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (-gamma * latents.squared_distance(i, j)).exp();
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    KernelMatrix(p)
}

/// The rank-two block matrix `P0`: `p1` inside a community, `p2` across.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatrix {
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
}

pub fn block_matrix(params: &ModelParams) -> BlockMatrix {
    BlockMatrix {
        n: params.n,
        p1: params.p1,
        p2: params.p2,
    }
}

impl BlockMatrix {
    fn same_block(&self, i: usize, j: usize) -> bool {
        (i < self.n / 2) == (j < self.n / 2)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.same_block(i, j) {
            self.p1
        } else {
            self.p2
        }
    }

    /// Dense `P0`, diagonal included (`P0 = lambda1 v1 v1' + lambda2 sigma sigma'`).
    pub fn materialize(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    /// `(lambda1, lambda2) = (N (p1 + p2) / 2, N (p1 - p2) / 2)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let n = self.n as f64;
        (n * (self.p1 + self.p2) / 2.0, n * (self.p1 - self.p2) / 2.0)
    }

    /// `P0 x` in O(N) using the two block sums.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let h = self.n / 2;
        let first: f64 = x[..h].iter().sum();
        let second: f64 = x[h..].iter().sum();
        (0..self.n)
            .map(|i| {
                if i < h {
                    self.p1 * first + self.p2 * second
                } else {
                    self.p2 * first + self.p1 * second
                }
            })
            .collect()
    }
}

/// Entries that leave [0, 1] by more than this signal a validation bypass.
const CLAMP_TOLERANCE: f64 = 1e-12;

/// Conditional edge probabilities `Q = kappa P + P0` with zero diagonal.
pub fn conditional_mean(params: &ModelParams, kernel: &KernelMatrix) -> Result<Mat<f64>> {
    if kernel.n() != params.n {
        return Err(Error::InvalidParams(format!(
            "kernel has {} rows but N = {}",
            kernel.n(),
            params.n
        )));
    }
    let block = block_matrix(params);
    let p = kernel.matrix();
    let n = params.n;
    let mut q = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let raw = params.kappa * p[(i, j)] + block.entry(i, j);
            if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&raw) {
                return Err(Error::ProbabilityRange {
                    row: i,
                    col: j,
                    value: raw,
                });
            }
            let v = raw.clamp(0.0, 1.0);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    Ok(q)
}

/// Marginal probability of an edge once latents are integrated out:
/// `(p1 + p2) / 2 + kappa / (1 + 4 gamma)`.
pub fn marginal_edge_probability(params: &ModelParams) -> f64 {
    (params.p1 + params.p2) / 2.0 + params.kappa / (1.0 + 4.0 * params.gamma)
}

/// Symmetric 0/1 matrix with zero diagonal, stored one bit per entry.
#[derive(Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for AdjacencyMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdjacencyMatrix")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        Self {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    /// Sets the symmetric pair `(i, j)`, `(j, i)`. Loops are ignored.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i == j {
            return;
        }
        for (r, c) in [(i, j), (j, i)] {
            let word = &mut self.bits[r * self.words_per_row + c / 64];
            if present {
                *word |= 1 << (c % 64);
            } else {
                *word &= !(1 << (c % 64));
            }
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        let row = &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row];
        row.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Fraction of the `N (N - 1) / 2` vertex pairs that are edges.
    pub fn edge_density(&self) -> f64 {
        let pairs = self.n * (self.n - 1) / 2;
        self.edge_count() as f64 / pairs as f64
    }

    pub fn isolated_vertices(&self) -> usize {
        (0..self.n).filter(|&i| self.degree(i) == 0).count()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(
            self.n,
            self.n,
            |i, j| if self.get(i, j) { 1.0 } else { 0.0 },
        )
    }
}

/// Draws each upper-triangle entry as an independent Bernoulli(`Q_ij`) from
/// the edge stream of `seed`, row by row.
pub fn sample_adjacency(q: &Mat<f64>, seed: Seed) -> Result<AdjacencyMatrix> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::InvalidParams(
            "edge probability matrix must be square".into(),
        ));
    }
    let mut rng = seed.rng(Purpose::Edges);
    let mut a = AdjacencyMatrix::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = q[(i, j)];
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityRange {
                    row: i,
                    col: j,
                    value: p,
                });
            }
            if rng.random::<f64>() < p {
                a.set_edge(i, j, true);
            }
        }
    }
    Ok(a)
}

/// Everything one trial of the generative model produces.
#[derive(Debug, Clone)]
pub struct ModelSample {
    pub latents: LatentPositions,
    pub kernel: KernelMatrix,
    pub conditional_mean: Mat<f64>,
    pub adjacency: AdjacencyMatrix,
}

/// Latents, kernel, conditional mean and adjacency for one seeded trial.
pub fn sample_model(params: &ModelParams, seed: Seed) -> Result<ModelSample> {
    let latents = crate::model::sample_latents(params, seed);
    let kernel = kernel_matrix(&latents, params.gamma);
    let conditional_mean = conditional_mean(params, &kernel)?;
    let adjacency = sample_adjacency(&conditional_mean, seed)?;
    Ok(ModelSample {
        latents,
        kernel,
        conditional_mean,
        adjacency,
    })
}

/// Community labels never reach the estimators; this helper exists for
/// metrics and tests.
pub fn sigma(n: usize) -> Result<Vec<f64>> {
    Ok(community_vector(n)?.into_vec())
}
