//! Dense symmetric eigendecomposition and the spectral summaries built on it.
//!
//! The decomposition itself (Householder tridiagonalization followed by an
//! implicit-shift tridiagonal solve) is delegated to `faer`; this module owns
//! the ordering, sign convention, input checks and residual verification.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LatentPositions;

/// Relative asymmetry tolerated on input.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Bound on `|Mw - lambda w| / |M|` for every returned pair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Coordinates below this magnitude are skipped when fixing eigenvector signs.
const SIGN_THRESHOLD: f64 = 1e-12;

/// Eigenvalues in descending order plus the leading orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector of the `i`-th largest eigenvalue (`i < k`).
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.eigenvectors[i]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    /// Number of stored eigenvectors.
    pub fn k(&self) -> usize {
        self.eigenvectors.len()
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn top(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Spectral norm `max |lambda|`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues
            .first()
            .map_or(0.0, |&a| a.abs().max(self.eigenvalues[self.n() - 1].abs()))
    }

    /// Indices of the eigenvalues within `tol` of eigenvalue `index`; these
    /// form a contiguous range because the values are sorted.
    pub fn cluster(&self, index: usize, tol: f64) -> std::ops::Range<usize> {
        let centre = self.eigenvalues[index];
        let mut lo = index;
        while lo > 0 && (self.eigenvalues[lo - 1] - centre).abs() <= tol {
            lo -= 1;
        }
        let mut hi = index + 1;
        while hi < self.n() && (self.eigenvalues[hi] - centre).abs() <= tol {
            hi += 1;
        }
        lo..hi
    }
}

fn check_symmetric(m: &Mat<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidParams(format!(
            "matrix must be square, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
            scale = scale.max(v.abs());
            if i < j {
                asym = asym.max((v - m[(j, i)]).abs());
            }
        }
    }
    let tolerance = SYMMETRY_TOLERANCE * scale;
    if asym > tolerance {
        return Err(Error::NonSymmetric {
            max_asymmetry: asym,
            tolerance,
        });
    }
    Ok(())
}

/// Flips `v` so that its first coordinate of magnitude above 1e-12 is positive.
pub fn fix_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|c| c.abs() > SIGN_THRESHOLD) {
        if first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn eigenvalues_sym(m: &Mat<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Convergence(format!("{e:?}")))?;
    values.reverse();
    Ok(values)
}

/// All eigenvalues (descending) and the eigenvectors of the `k` largest.
///
/// Each returned pair satisfies `|Mw - lambda w| <= 1e-8 |M|`; eigenvectors
/// carry a nonnegative first significant coordinate.
pub fn eig_sym(m: &Mat<f64>, k: usize) -> Result<Spectrum> {
    let n = m.nrows();
    if k == 0 {
        return Ok(Spectrum {
            eigenvalues: eigenvalues_sym(m)?,
            eigenvectors: Vec::new(),
        });
    }
    check_symmetric(m)?;
    if k > n {
        return Err(Error::InvalidParams(format!(
            "requested {k} eigenvectors of a {n}x{n} matrix"
        )));
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Convergence(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();

    let top = Mat::from_fn(n, k, |i, j| u[(i, n - 1 - j)]);
    let mut eigenvectors: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..n).map(|i| top[(i, j)]).collect())
        .collect();
    eigenvectors.iter_mut().for_each(|v| fix_sign(v));

    let norm = eigenvalues[0].abs().max(eigenvalues[n - 1].abs());
    let bound = RESIDUAL_TOLERANCE * norm.max(f64::MIN_POSITIVE);
    let product = m * &top;
    for (j, &lambda) in eigenvalues.iter().take(k).enumerate() {
        let residual = (0..n)
            .map(|i| {
                let r = product[(i, j)] - lambda * top[(i, j)];
                r * r
            })
            .sum::<f64>()
            .sqrt();
        if residual > bound && norm > 0.0 {
            return Err(Error::Residual {
                index: j,
                residual,
                bound,
            });
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm(m: &Mat<f64>) -> Result<f64> {
    let values = eigenvalues_sym(m)?;
    Ok(values
        .first()
        .map_or(0.0, |&a| a.abs().max(values[values.len() - 1].abs())))
}

/// Minimum and maximum row sums, which sandwich the Perron root of a
/// nonnegative symmetric matrix.
pub fn row_sum_bounds(p: &Mat<f64>) -> Result<(f64, f64)> {
    let n = p.nrows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            sum += v;
        }
        lo = lo.min(sum);
        hi = hi.max(sum);
    }
    Ok((lo, hi))
}

/// Row sums of kernel vertices lying near the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearOriginReport {
    /// Squared-radius cutoff `2 ln(gamma) / gamma`.
    pub radius_squared: f64,
    /// Vertices inside the cutoff.
    pub vertices: Vec<usize>,
    /// `(sum_j P_ij - N / 2 gamma) / (N / 2 gamma)` per vertex in `vertices`.
    pub deviations: Vec<f64>,
    /// `None` when no vertex falls inside the cutoff.
    pub max_abs_deviation: Option<f64>,
    /// `N / (gamma ln N)`.
    pub h1_ratio: f64,
    /// Whether `h1_ratio` clears the regime margin; outside it the
    /// deviations are descriptive only.
    pub in_regime: bool,
}

/// Minimum `N / (gamma ln N)` for the near-origin diagnostic to be judged.
pub const NEAR_ORIGIN_REGIME_MARGIN: f64 = 2.0;

pub fn near_origin_row_sums(
    p: &Mat<f64>,
    latents: &LatentPositions,
    gamma: f64,
) -> Result<NearOriginReport> {
    if gamma <= 1.0 {
        return Err(Error::OutOfDomain {
            value: gamma,
            reason: "near-origin row sums need gamma > 1 so that ln(gamma) > 0".into(),
        });
    }
    let n = p.nrows();
    if latents.len() != n {
        return Err(Error::InvalidParams(format!(
            "{} latent rows for a {n}x{n} kernel",
            latents.len()
        )));
    }
    let radius_squared = 2.0 * gamma.ln() / gamma;
    let target = n as f64 / (2.0 * gamma);
    let vertices: Vec<usize> = (0..n)
        .filter(|&i| latents.squared_norm(i) <= radius_squared)
        .collect();
    let deviations: Vec<f64> = vertices
        .iter()
        .map(|&i| {
            let s: f64 = (0..n).map(|j| p[(i, j)]).sum();
            (s - target) / target
        })
        .collect();
    let max_abs_deviation = deviations.iter().map(|d| d.abs()).reduce(f64::max);
    let h1_ratio = n as f64 / (gamma * (n as f64).ln());
    Ok(NearOriginReport {
        radius_squared,
        vertices,
        deviations,
        max_abs_deviation,
        h1_ratio,
        in_regime: h1_ratio >= NEAR_ORIGIN_REGIME_MARGIN,
    })
}

/// Uniform-bin histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn centres(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Histogram over `[min, max]` of the values with `bins` uniform bins.
pub fn spectrum_histogram(eigenvalues: &[f64], bins: usize) -> Result<Histogram> {
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if eigenvalues.is_empty() {
        return histogram_with_range(eigenvalues, 0.0, 1.0, bins);
    }
    histogram_with_range(eigenvalues, lo, hi, bins)
}

/// Histogram over an explicit range, used to align several spectra. Values
/// outside the range land in the end bins so counts are always conserved.
pub fn histogram_with_range(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParams(
            "histogram needs at least one bin".into(),
        ));
    }
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + width * b as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v - lo) / width).floor();
        let b = if b.is_nan() {
            0
        } else {
            (b.max(0.0) as usize).min(bins - 1)
        };
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Number of eigenvalues below the third that measure the width of the bulk
/// edge.
pub const BULK_WINDOW: usize = 40;
/// A leading gap counts as a separation when it exceeds this fraction of the
/// bulk edge width `rho3 - rho_{3 + BULK_WINDOW}`. Edge fluctuations of an
/// undetached top eigenvalue stay well below it at N = 2000.
pub const DETACHMENT_FRACTION: f64 = 0.6;

/// Leading eigenvalues, their gaps, and how many of the top two stand clear
/// of the bulk. `rho3` serves as the bulk edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationGap {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub gap21: f64,
    pub gap32: f64,
    pub bulk_edge: f64,
    /// Spread of the `BULK_WINDOW` eigenvalues below `rho3`.
    pub bulk_width: f64,
    /// 2 if `gap32` exceeds `DETACHMENT_FRACTION * bulk_width`, else 1 if
    /// `gap21` does, else 0.
    pub detached: usize,
}

pub fn separation_gap(eigenvalues: &[f64]) -> Result<SeparationGap> {
    let n = eigenvalues.len();
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "separation gap needs N >= 3, got {n}"
        )));
    }
    let (rho1, rho2, rho3) = (eigenvalues[0], eigenvalues[1], eigenvalues[2]);
    let window = BULK_WINDOW.min(n - 3);
    let bulk_width = rho3 - eigenvalues[2 + window];
    let threshold = DETACHMENT_FRACTION * bulk_width;
    let (gap21, gap32) = (rho1 - rho2, rho2 - rho3);
    let detached = if gap32 > threshold {
        2
    } else if gap21 > threshold {
        1
    } else {
        0
    };
    Ok(SeparationGap {
        rho1,
        rho2,
        rho3,
        gap21,
        gap32,
        bulk_edge: rho3,
        bulk_width,
        detached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::BlockMatrix;
    use crate::numeric::dot;

    #[test]
    fn diagonal_matrix() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 3.0, 2.0][i] } else { 0.0 });
        let s = eig_sym(&m, 3).unwrap();
        assert_eq!(s.eigenvalues(), &[3.0, 2.0, 1.0]);
        assert_eq!(s.vector(0), &[0.0, 1.0, 0.0]);
        assert_eq!(s.vector(1), &[0.0, 0.0, 1.0]);
        assert_eq!(s.vector(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn block_matrix_top_pairs() {
        let p0 = BlockMatrix {
            n: 4,
            p1: 0.5,
            p2: 0.25,
        }
        .materialize();
        let s = eig_sym(&p0, 2).unwrap();
        assert!((s.eigenvalues()[0] - 1.5).abs() < 1e-14);
        assert!((s.eigenvalues()[1] - 0.5).abs() < 1e-14);
        assert!(s.eigenvalues()[2].abs() < 1e-14);
        for (c, e) in s.vector(0).iter().zip([0.5; 4]) {
            assert!((c - e).abs() < 1e-14);
        }
        for (c, e) in s.vector(1).iter().zip([0.5, 0.5, -0.5, -0.5]) {
            assert!((c - e).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Mat::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        assert!(matches!(eig_sym(&m, 1), Err(Error::NonSymmetric { .. })));
        assert!(eigenvalues_sym(&m).is_err());
    }

    #[test]
    fn sign_convention_skips_tiny_leading_entries() {
        let mut v = vec![1e-14, -0.6, 0.8];
        fix_sign(&mut v);
        assert_eq!(v, vec![-1e-14, 0.6, -0.8]);
    }

    #[test]
    fn perron_sandwich_and_row_sums() {
        let m = Mat::from_fn(5, 5, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(row_sum_bounds(&m).unwrap(), (4.0, 4.0));
        let neg = Mat::from_fn(2, 2, |i, j| if i == j { 0.0 } else { -1.0 });
        assert!(row_sum_bounds(&neg).is_err());
    }

    #[test]
    fn near_origin_degenerate_input() {
        let n = 10;
        let gamma = 5.0;
        let x = LatentPositions::new(vec![[0.0, 0.0]; n]).unwrap();
        let p = crate::graphgen::kernel_matrix(&x, gamma);
        let r = near_origin_row_sums(p.matrix(), &x, gamma).unwrap();
        assert_eq!(r.vertices.len(), n);
        let expected = (n as f64 - 1.0) * 2.0 * gamma / n as f64 - 1.0;
        for d in &r.deviations {
            assert!((d - expected).abs() < 1e-12);
        }
        assert!(near_origin_row_sums(p.matrix(), &x, 1.0).is_err());
        let far = LatentPositions::new(vec![[10.0, 0.0]; n]).unwrap();
        let r = near_origin_row_sums(p.matrix(), &far, gamma).unwrap();
        assert!(r.vertices.is_empty());
        assert_eq!(r.max_abs_deviation, None);
    }

    #[test]
    fn near_origin_regime_gate() {
        let n = 2000;
        let gamma = 200.0;
        let x = crate::model::sample_latent_rows(n, crate::model::Seed::new(1, 0));
        let p = crate::graphgen::kernel_matrix(&x, gamma);
        let r = near_origin_row_sums(p.matrix(), &x, gamma).unwrap();
        assert!((r.h1_ratio - 2000.0 / (200.0 * 2000f64.ln())).abs() < 1e-12);
        assert!(!r.in_regime);
        assert_eq!(r.vertices.len(), r.deviations.len());
    }

    #[test]
    fn histogram_counts() {
        let h = spectrum_histogram(&[0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        let h = spectrum_histogram(&[2.0, 2.0], 3).unwrap();
        assert_eq!(h.total(), 2);
        assert!(spectrum_histogram(&[1.0], 0).is_err());
        let h = histogram_with_range(&[-5.0, 0.5, 9.0], 0.0, 1.0, 4).unwrap();
        assert_eq!(h.counts, vec![1, 0, 1, 1]);
    }

    #[test]
    fn separation_examples() {
        let mut eig = vec![10.0, 5.0, 1.0];
        eig.extend((0..20).map(|i| 0.9 - 0.01 * i as f64));
        let g = separation_gap(&eig).unwrap();
        assert_eq!(g.gap32, 4.0);
        assert_eq!(g.gap21, 5.0);
        assert_eq!(g.detached, 2);

        let p0 = BlockMatrix {
            n: 10,
            p1: 0.6,
            p2: 0.2,
        };
        let values = eigenvalues_sym(&p0.materialize()).unwrap();
        let g = separation_gap(&values).unwrap();
        assert!((g.gap32 - p0.eigenvalues().1).abs() < 1e-12);
        assert_eq!(g.detached, 2);

        let flat: Vec<f64> = (0..30).map(|i| 10.0 - 0.1 * i as f64).collect();
        assert_eq!(separation_gap(&flat).unwrap().detached, 0);
        assert!(separation_gap(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn orthonormal_eigenvectors() {
        let n = 30;
        let m = Mat::from_fn(n, n, |i, j| ((i * j + i + j) % 7) as f64 - 3.0);
        let m = Mat::from_fn(n, n, |i, j| m[(i, j)] + m[(j, i)]);
        let s = eig_sym(&m, n).unwrap();
        for a in 0..n {
            for b in 0..n {
                let d = dot(s.vector(a), s.vector(b));
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-10 * n as f64);
            }
        }
        let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum: f64 = s.eigenvalues().iter().sum();
        assert!((trace - sum).abs() <= 1e-8 * trace.abs().max(1.0));
    }
}
