//! Exact expected trace moments of the kernel matrix.
//!
//! Expanding `E Tr P^l` over closed walks `i_1 ... i_l i_1` groups the walks
//! by which positions carry equal vertex labels. Positions adjacent on the
//! cycle can never coincide (`P_ii = 0`), so every admissible pattern is a
//! set partition of the cycle positions without adjacent positions in a
//! block. Collapsing each block gives a loopless multigraph `G` on `k`
//! vertices, the labels contribute the falling factorial `N (N-1) ... (N-k+1)`,
//! and Gaussian integration gives `E prod_e P_e = det(I + 2 gamma L_G)^-1`
//! with `L_G` the (degree minus multiplicity) Laplacian.

use std::collections::BTreeMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::eigen::eigenvalues_sym;
use crate::error::{Error, Result};
use crate::graphgen::kernel_matrix;
use crate::model::{sample_latent_rows, Seed};
use crate::numeric::{compensated_sum, mean_and_stderr, sample_variance};

pub const MIN_CYCLE: usize = 2;
pub const MAX_CYCLE: usize = 8;

/// Sorted (degree, sorted edge multiplicities) per vertex.
type Invariant = Vec<(u32, Vec<u32>)>;

/// One isomorphism class of multigraphs obtained by identifying
/// non-adjacent vertices of the cycle `C_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleQuotient {
    /// Number of distinct vertices.
    pub k: usize,
    /// Symmetric `k x k` edge multiplicities, zero diagonal.
    pub multiplicity: Vec<Vec<u32>>,
    /// Number of admissible set partitions of the cycle collapsing to this class.
    pub count: u64,
}

impl CycleQuotient {
    /// Edges `(i, j, m)` with `i < j` and multiplicity `m > 0`.
    pub fn edges(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                if self.multiplicity[i][j] > 0 {
                    out.push((i, j, self.multiplicity[i][j]));
                }
            }
        }
        out
    }

    pub fn total_multiplicity(&self) -> u32 {
        self.edges().iter().map(|e| e.2).sum()
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.multiplicity[v].iter().sum()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (u, &m) in self.multiplicity[v].iter().enumerate() {
                if m > 0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Coefficients `c_0 .. c_k` of `det(I + t L) = sum_i c_i t^i`; `c_i` is
    /// the sum of the principal `i x i` minors of the Laplacian.
    pub fn det_polynomial(&self) -> Vec<i128> {
        let l = multigraph_laplacian(self);
        let k = self.k;
        let mut coeffs = vec![0i128; k + 1];
        for mask in 0u32..(1 << k) {
            let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            let minor: Vec<Vec<i128>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| l[i][j] as i128).collect())
                .collect();
            coeffs[idx.len()] += integer_determinant(minor);
        }
        coeffs
    }

    /// Spanning trees (with multiplicity) by Kirchhoff's cofactor.
    pub fn spanning_trees(&self) -> i128 {
        let l = multigraph_laplacian(self);
        let reduced: Vec<Vec<i128>> = (1..self.k)
            .map(|i| (1..self.k).map(|j| l[i][j] as i128).collect())
            .collect();
        integer_determinant(reduced)
    }

    /// Coefficient of `gamma^(k-1)` in `det(I + 2 gamma L)`.
    pub fn leading_gamma_coefficient(&self) -> i128 {
        self.det_polynomial()[self.k - 1] << (self.k - 1)
    }

    fn invariant(&self) -> Invariant {
        let mut inv: Invariant = (0..self.k)
            .map(|v| {
                let mut ms: Vec<u32> = self.multiplicity[v]
                    .iter()
                    .copied()
                    .filter(|&m| m > 0)
                    .collect();
                ms.sort_unstable();
                (self.degree(v), ms)
            })
            .collect();
        inv.sort();
        inv
    }
}

/// Determinant of a square integer matrix by fraction-free (Bareiss)
/// elimination; every division is exact.
pub fn integer_determinant(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Standard multigraph Laplacian: degrees on the diagonal, minus the edge
/// multiplicities off it.
pub fn multigraph_laplacian(q: &CycleQuotient) -> Vec<Vec<i64>> {
    (0..q.k)
        .map(|i| {
            (0..q.k)
                .map(|j| {
                    if i == j {
                        q.degree(i) as i64
                    } else {
                        -(q.multiplicity[i][j] as i64)
                    }
                })
                .collect()
        })
        .collect()
}

fn check_cycle_length(l: usize) -> Result<()> {
    if (MIN_CYCLE..=MAX_CYCLE).contains(&l) {
        Ok(())
    } else {
        Err(Error::CycleLength(l))
    }
}

/// Calls `visit` with every restricted-growth string of length `l`
/// (one per set partition of `0..l`).
fn for_each_partition(l: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(pos: usize, blocks: usize, labels: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if pos == labels.len() {
            visit(labels);
            return;
        }
        for b in 0..=blocks {
            labels[pos] = b;
            rec(pos + 1, blocks.max(b + 1), labels, visit);
        }
    }
    let mut labels = vec![0; l];
    rec(1, 1, &mut labels, visit);
}

fn isomorphic(a: &CycleQuotient, b: &CycleQuotient) -> bool {
    if a.k != b.k || a.invariant() != b.invariant() {
        return false;
    }
    fn extend(
        a: &CycleQuotient,
        b: &CycleQuotient,
        map: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let v = map.len();
        if v == a.k {
            return true;
        }
        for u in 0..b.k {
            if used[u] || a.degree(v) != b.degree(u) {
                continue;
            }
            if (0..v).all(|w| a.multiplicity[v][w] == b.multiplicity[u][map[w]]) {
                map.push(u);
                used[u] = true;
                if extend(a, b, map, used) {
                    return true;
                }
                map.pop();
                used[u] = false;
            }
        }
        false
    }
    extend(a, b, &mut Vec::with_capacity(a.k), &mut vec![false; b.k])
}

/// All isomorphism classes of quotients of `C_l`, with the number of set
/// partitions realising each. Sorted by decreasing `k`, then by invariant.
pub fn enumerate_cycle_quotients(l: usize) -> Result<Vec<CycleQuotient>> {
    check_cycle_length(l)?;
    let mut buckets: BTreeMap<(usize, Invariant), Vec<CycleQuotient>> = BTreeMap::new();
    for_each_partition(l, &mut |labels: &[usize]| {
        if (0..l).any(|i| labels[i] == labels[(i + 1) % l]) {
            return;
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut multiplicity = vec![vec![0u32; k]; k];
        for i in 0..l {
            let (a, b) = (labels[i], labels[(i + 1) % l]);
            multiplicity[a][b] += 1;
            multiplicity[b][a] += 1;
        }
        // C_2 walks the single edge twice; the adjacency matrix above already
        // counts both traversals, matching E P_12^2.
        let q = CycleQuotient {
            k,
            multiplicity,
            count: 1,
        };
        let bucket = buckets.entry((k, q.invariant())).or_default();
        match bucket.iter_mut().find(|c| isomorphic(c, &q)) {
            Some(c) => c.count += 1,
            None => bucket.push(q),
        }
    });
    let mut out: Vec<CycleQuotient> = buckets.into_values().flatten().collect();
    out.sort_by(|a, b| {
        b.k.cmp(&a.k)
            .then_with(|| a.invariant().cmp(&b.invariant()))
    });
    Ok(out)
}

/// `det(I + 2 gamma L)`, evaluated from the exact (nonnegative) polynomial
/// coefficients.
pub fn det_at_gamma(q: &CycleQuotient, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::OutOfDomain {
            value: gamma,
            reason: "gamma must be positive".into(),
        });
    }
    let t = 2.0 * gamma;
    Ok(q.det_polynomial()
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * t + c as f64))
}

/// `E prod_e P_e = 1 / det(I + 2 gamma L)`.
pub fn edge_product_expectation(q: &CycleQuotient, gamma: f64) -> Result<f64> {
    Ok(1.0 / det_at_gamma(q, gamma)?)
}

/// `N (N - 1) ... (N - k + 1)`.
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k)
        .map(|i| n as f64 - i as f64)
        .product::<f64>()
        .max(0.0)
}

/// Exact `E Tr P^l` for `N` kernel vertices.
pub fn exact_expected_trace_moment(n: usize, gamma: f64, l: usize) -> Result<f64> {
    let quotients = enumerate_cycle_quotients(l)?;
    let mut terms = Vec::with_capacity(quotients.len());
    for q in &quotients {
        terms.push(q.count as f64 * falling_factorial(n, q.k) / det_at_gamma(q, gamma)?);
    }
    Ok(compensated_sum(terms))
}

pub fn trace_moment_from_eigenvalues(eigenvalues: &[f64], l: usize) -> f64 {
    compensated_sum(eigenvalues.iter().map(|v| v.powi(l as i32)))
}

/// `Tr P^l = sum_i lambda_i^l`.
pub fn empirical_trace_moment(p: &Mat<f64>, l: usize) -> Result<f64> {
    if l == 2 {
        let n = p.nrows();
        let mut acc = crate::numeric::CompensatedSum::new();
        for j in 0..n {
            for i in 0..n {
                acc.add(p[(i, j)] * p[(i, j)]);
            }
        }
        return Ok(acc.value());
    }
    Ok(trace_moment_from_eigenvalues(&eigenvalues_sym(p)?, l))
}

/// `(1 / 2 gamma) (2 gamma / N)^l m`, the scaling under which the expected
/// moment tends to `1 / l^2`.
pub fn normalize_moment(moment: f64, n: usize, gamma: f64, l: usize) -> f64 {
    (2.0 * gamma / n as f64).powi(l as i32) * moment / (2.0 * gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub value: f64,
    pub limit: f64,
    pub relative_error: f64,
    /// `N / (gamma ln N)`; the limit is only meaningful when this is large.
    pub h1_ratio: f64,
}

pub fn normalized_moment_limit_check(n: usize, gamma: f64, l: usize) -> Result<LimitCheck> {
    let value = normalize_moment(exact_expected_trace_moment(n, gamma, l)?, n, gamma, l);
    let limit = 1.0 / (l * l) as f64;
    Ok(LimitCheck {
        value,
        limit,
        relative_error: (value - limit).abs() / limit,
        h1_ratio: n as f64 / (gamma * (n as f64).ln()),
    })
}

/// Per-`l` Monte Carlo estimate of `E Tr P^l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMoment {
    pub l: usize,
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

/// Raw trace moments `Tr P^l`, `l = 2..=l_max`, of `trials` independent kernel
/// matrices; trial `t` uses latents from `Seed::new(seed, t)`.
pub fn sample_trace_moments(
    n: usize,
    gamma: f64,
    l_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_cycle_length(l_max)?;
    let mut per_l = vec![Vec::with_capacity(trials); l_max - 1];
    for t in 0..trials {
        let x = sample_latent_rows(n, Seed::new(seed, t as u64));
        let p = kernel_matrix(&x, gamma);
        let eig = eigenvalues_sym(p.matrix())?;
        for (idx, l) in (2..=l_max).enumerate() {
            per_l[idx].push(trace_moment_from_eigenvalues(&eig, l));
        }
    }
    Ok(per_l)
}

pub fn monte_carlo_trace_moments(
    n: usize,
    gamma: f64,
    l_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<MonteCarloMoment>> {
    let samples = sample_trace_moments(n, gamma, l_max, trials, seed)?;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(idx, values)| {
            let (mean, standard_error) = mean_and_stderr(values);
            MonteCarloMoment {
                l: idx + 2,
                mean,
                standard_error,
                samples: values.len(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub sample_variance: f64,
    /// `N * sample_variance`, which stays bounded if the variance is `O(1/N)`.
    pub scaled: f64,
    pub trials: usize,
}

/// Variance summary of already normalized moment samples.
pub fn variance_from_samples(normalized: &[f64], n: usize) -> VarianceCheck {
    let v = sample_variance(normalized).max(0.0);
    VarianceCheck {
        sample_variance: v,
        scaled: n as f64 * v,
        trials: normalized.len(),
    }
}

/// Sample variance of the normalized moment over `trials` kernel draws.
pub fn moment_variance_check(
    n: usize,
    gamma: f64,
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<VarianceCheck> {
    check_cycle_length(l)?;
    if trials < 30 {
        return Err(Error::InvalidParams(format!(
            "variance check needs at least 30 trials, got {trials}"
        )));
    }
    let mut normalized = Vec::with_capacity(trials);
    for t in 0..trials {
        let x = sample_latent_rows(n, Seed::new(seed, t as u64));
        let p = kernel_matrix(&x, gamma);
        normalized.push(normalize_moment(
            empirical_trace_moment(p.matrix(), l)?,
            n,
            gamma,
            l,
        ));
    }
    Ok(variance_from_samples(&normalized, n))
}

/// One row of the moment CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientRow {
    pub l: usize,
    pub k: usize,
    pub quotient_id: usize,
    pub count: u64,
    pub spanning_trees: i128,
    /// `1 / (k * spanning trees)`; summing over a given `(l, k)` gives `c_k^-1`.
    pub inv_k_tau: f64,
    pub det_polynomial_coeffs: Vec<i128>,
    /// `E prod_e P_e` at the requested gamma.
    pub expectation: f64,
    /// `count * N^(k) * expectation`.
    pub contribution: f64,
}

pub fn quotient_rows(n: usize, gamma: f64, l_max: usize) -> Result<Vec<QuotientRow>> {
    check_cycle_length(l_max)?;
    let mut rows = Vec::new();
    for l in MIN_CYCLE..=l_max {
        for (id, q) in enumerate_cycle_quotients(l)?.into_iter().enumerate() {
            let expectation = edge_product_expectation(&q, gamma)?;
            let tau = q.spanning_trees();
            rows.push(QuotientRow {
                l,
                k: q.k,
                quotient_id: id,
                count: q.count,
                spanning_trees: tau,
                inv_k_tau: 1.0 / (q.k as f64 * tau as f64),
                det_polynomial_coeffs: q.det_polynomial(),
                expectation,
                contribution: q.count as f64 * falling_factorial(n, q.k) / det_at_gamma(&q, gamma)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_quotient_csv<W: std::io::Write>(rows: &[QuotientRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "l,k,quotient_id,count,spanning_trees,inv_k_tau,det_polynomial_coeffs,expectation,value"
    )?;
    for r in rows {
        let coeffs: Vec<String> = r
            .det_polynomial_coeffs
            .iter()
            .map(|c| c.to_string())
            .collect();
        writeln!(
            out,
            "{},{},{},{},{},{:e},{},{:e},{:e}",
            r.l,
            r.k,
            r.quotient_id,
            r.count,
            r.spanning_trees,
            r.inv_k_tau,
            coeffs.join(" "),
            r.expectation,
            r.contribution
        )?;
    }
    Ok(())
}
