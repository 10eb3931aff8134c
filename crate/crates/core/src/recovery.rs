//! Community estimators, sign rounding and recovery metrics.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::eigen::{eig_sym, Spectrum};
use crate::error::{Error, Result};
use crate::numeric::{dot, norm};

/// Inputs are accepted as unit vectors when `| |x| - 1 |` is below this.
pub const UNIT_TOLERANCE: f64 = 1e-8;
/// Relative eigen-gap under which the chosen eigenvector is ambiguous.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// A unit-norm community estimate. When the eigenvalue it came from is
/// (nearly) repeated, `eigenspace` holds an orthonormal basis of the whole
/// cluster and overlaps are evaluated against its best vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub vector: Vec<f64>,
    pub eigenvalue: f64,
    pub eigenspace: Option<Vec<Vec<f64>>>,
}

impl Estimate {
    pub fn is_ambiguous(&self) -> bool {
        self.eigenspace.is_some()
    }

    /// The estimate itself, or the unit vector of the eigenspace closest to
    /// `sigma` when the eigenvalue is degenerate.
    pub fn best_vector(&self, sigma: &[f64]) -> Vec<f64> {
        match &self.eigenspace {
            None => self.vector.clone(),
            Some(basis) => {
                let mut v = vec![0.0; sigma.len()];
                for w in basis {
                    let c = dot(w, sigma);
                    v.iter_mut().zip(w).for_each(|(a, b)| *a += c * b);
                }
                let len = norm(&v);
                if len == 0.0 {
                    return self.vector.clone();
                }
                v.iter_mut().for_each(|a| *a /= len);
                v
            }
        }
    }
}

fn estimate_from(spectrum: &Spectrum, index: usize, matrix: &Mat<f64>) -> Result<Estimate> {
    let tol = DEGENERACY_TOLERANCE * spectrum.norm();
    let cluster = spectrum.cluster(index, tol);
    let eigenspace = if cluster.len() > 1 {
        let full = if cluster.end > spectrum.k() {
            eig_sym(matrix, cluster.end)?
        } else {
            spectrum.clone()
        };
        Some(cluster.map(|i| full.vector(i).to_vec()).collect())
    } else {
        None
    };
    Ok(Estimate {
        vector: spectrum.vector(index).to_vec(),
        eigenvalue: spectrum.eigenvalues()[index],
        eigenspace,
    })
}

/// Normalized eigenvector of the second largest eigenvalue of `A`.
pub fn naive_spectral_estimate(a: &Mat<f64>) -> Result<Estimate> {
    naive_from_spectrum(&eig_sym(a, 3.min(a.nrows()))?, a)
}

/// Same as [`naive_spectral_estimate`] for an already decomposed `A`.
pub fn naive_from_spectrum(spectrum: &Spectrum, a: &Mat<f64>) -> Result<Estimate> {
    if spectrum.k() < 2 {
        return Err(Error::InvalidParams("need at least two vertices".into()));
    }
    estimate_from(spectrum, 1, a)
}

/// Top eigenvector of `A - mean_known * J`, i.e. `A` with the known mean
/// degree direction `N mean v1 v1'` removed.
pub fn davis_kahan_estimate(a: &Mat<f64>, mean_known: f64) -> Result<Estimate> {
    let n = a.nrows();
    let shifted = Mat::from_fn(n, n, |i, j| a[(i, j)] - mean_known);
    let spectrum = eig_sym(&shifted, 2.min(n))?;
    estimate_from(&spectrum, 0, &shifted)
}

/// Davis-Kahan bound `2 sqrt(2) |A - P0|_2 / lambda2` on
/// `min(|sigma - x|, |sigma + x|)` for the known-mean estimator.
pub fn davis_kahan_bound(noise_norm: f64, lambda2: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * noise_norm / lambda2
}

/// `min(|x - y|, |x + y|)`.
pub fn sign_invariant_distance(x: &[f64], y: &[f64]) -> f64 {
    let minus: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let plus: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
    minus.min(plus).sqrt()
}

/// Entrywise sign scaled to unit norm; zeros map to `+1/sqrt(N)`.
pub fn sign_round(x: &[f64]) -> Vec<f64> {
    let h = 1.0 / (x.len() as f64).sqrt();
    x.iter().map(|&v| if v >= 0.0 { h } else { -h }).collect()
}

/// `|sigma' x|` for unit vectors.
pub fn overlap(x: &[f64], sigma: &[f64]) -> Result<f64> {
    for v in [x, sigma] {
        let len = norm(v);
        if (len - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit(len));
        }
    }
    Ok(dot(x, sigma).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recovery {
    None,
    Soft,
    Weak,
    Exact,
}

impl std::fmt::Display for Recovery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Recovery::None => "none",
            Recovery::Soft => "soft",
            Recovery::Weak => "weak",
            Recovery::Exact => "exact",
        };
        f.write_str(s)
    }
}

/// Default recovery threshold.
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Metrics of one estimate against the true communities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub overlap: f64,
    pub rounded_overlap: f64,
    pub hamming_agreement: f64,
    pub classification: Recovery,
    pub epsilon: f64,
    pub ambiguous: bool,
}

/// Raw metrics before thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryMetrics {
    pub overlap: f64,
    pub rounded_overlap: f64,
    pub hamming_agreement: f64,
    /// All labels correct up to a global flip.
    pub all_correct: bool,
}

pub fn recovery_metrics(x: &[f64], sigma: &[f64]) -> Result<RecoveryMetrics> {
    let ov = overlap(x, sigma)?;
    let n = x.len();
    let rounded = sign_round(x);
    let agree = rounded
        .iter()
        .zip(sigma)
        .filter(|(a, b)| (**a > 0.0) == (**b > 0.0))
        .count();
    let best = agree.max(n - agree);
    let rounded_overlap = (2 * agree).abs_diff(n) as f64 / n as f64;
    Ok(RecoveryMetrics {
        overlap: ov,
        rounded_overlap,
        hamming_agreement: best as f64 / n as f64,
        all_correct: best == n,
    })
}

/// Exact if every label is right up to a flip, weak if the agreement reaches
/// `(1 + epsilon) / 2`, soft if the overlap reaches `epsilon`.
pub fn classify_recovery(metrics: &RecoveryMetrics, epsilon: f64) -> Result<Recovery> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfDomain {
            value: epsilon,
            reason: "recovery threshold must lie in (0, 1)".into(),
        });
    }
    Ok(if metrics.all_correct {
        Recovery::Exact
    } else if metrics.hamming_agreement >= (1.0 + epsilon) / 2.0 {
        Recovery::Weak
    } else if metrics.overlap >= epsilon {
        Recovery::Soft
    } else {
        Recovery::None
    })
}

/// Full report for an estimate; degenerate estimates are scored with their
/// best eigenspace vector.
pub fn evaluate(estimate: &Estimate, sigma: &[f64], epsilon: f64) -> Result<RecoveryReport> {
    let x = estimate.best_vector(sigma);
    let metrics = recovery_metrics(&x, sigma)?;
    Ok(RecoveryReport {
        overlap: metrics.overlap,
        rounded_overlap: metrics.rounded_overlap,
        hamming_agreement: metrics.hamming_agreement,
        classification: classify_recovery(&metrics, epsilon)?,
        epsilon,
        ambiguous: estimate.is_ambiguous(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::BlockMatrix;
    use crate::model::{community_vector, ones_direction};

    fn sigma(n: usize) -> Vec<f64> {
        community_vector(n).unwrap().into_vec()
    }

    #[test]
    fn naive_estimator_on_block_matrix() {
        let p0 = BlockMatrix {
            n: 40,
            p1: 0.3,
            p2: 0.1,
        }
        .materialize();
        let e = naive_spectral_estimate(&p0).unwrap();
        let s = sigma(40);
        assert!((overlap(&e.vector, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!(!e.is_ambiguous());
    }

    #[test]
    fn davis_kahan_on_block_matrix() {
        let b = BlockMatrix {
            n: 40,
            p1: 0.3,
            p2: 0.1,
        };
        let e = davis_kahan_estimate(&b.materialize(), 0.2).unwrap();
        let s = sigma(40);
        assert!((overlap(&e.vector, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!(sign_invariant_distance(&e.vector, &s) < 1e-12);
        assert_eq!(davis_kahan_bound(0.0, b.eigenvalues().1), 0.0);
    }

    #[test]
    fn sign_rounding() {
        let s = sigma(6);
        assert_eq!(sign_round(&s), s);
        let h = 1.0 / 6f64.sqrt();
        assert_eq!(sign_round(&[0.1, 0.2, 0.0, 3.0, 1.0, 0.5]), vec![h; 6]);
    }

    #[test]
    fn overlap_values() {
        let n = 8;
        let s = sigma(n);
        let v1 = ones_direction(n);
        assert!((overlap(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!(overlap(&v1, &s).unwrap().abs() < 1e-15);
        let mix: Vec<f64> = s
            .iter()
            .zip(&v1)
            .map(|(a, b)| (a + b) / 2f64.sqrt())
            .collect();
        assert!((overlap(&mix, &s).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            overlap(&[1.0, 1.0], &[1.0, 0.0]),
            Err(Error::NotUnit(_))
        ));
    }

    #[test]
    fn classification_thresholds() {
        let s = sigma(10);
        let m = recovery_metrics(&s, &s).unwrap();
        assert_eq!(classify_recovery(&m, 0.5).unwrap(), Recovery::Exact);
        let flipped: Vec<f64> = s.iter().map(|v| -v).collect();
        let m = recovery_metrics(&flipped, &s).unwrap();
        assert_eq!(classify_recovery(&m, 0.5).unwrap(), Recovery::Exact);
        assert!(classify_recovery(&m, 0.0).is_err());
        assert!(classify_recovery(&m, 1.0).is_err());

        let soft_only = RecoveryMetrics {
            overlap: 0.8,
            rounded_overlap: 0.6,
            hamming_agreement: 0.8,
            all_correct: false,
        };
        assert_eq!(classify_recovery(&soft_only, 0.75).unwrap(), Recovery::Soft);
        let weak = RecoveryMetrics {
            hamming_agreement: 0.9,
            rounded_overlap: 0.8,
            ..soft_only
        };
        assert_eq!(classify_recovery(&weak, 0.75).unwrap(), Recovery::Weak);
    }

    #[test]
    fn degenerate_second_eigenvalue_is_flagged() {
        // two disjoint identical cliques plus an isolated pair: repeated eigenvalues
        let n = 8;
        let a = Mat::from_fn(n, n, |i, j| {
            let block = |k: usize| {
                if k < 3 {
                    0
                } else if k < 6 {
                    1
                } else {
                    2
                }
            };
            if i != j && block(i) == block(j) && block(i) < 2 {
                1.0
            } else {
                0.0
            }
        });
        let e = naive_spectral_estimate(&a).unwrap();
        assert!(e.is_ambiguous());
        let s = sigma(n);
        let best = e.best_vector(&s);
        assert!((norm(&best) - 1.0).abs() < 1e-12);
        let r = evaluate(&e, &s, 0.5).unwrap();
        assert!(r.ambiguous);
        assert!(r.overlap >= overlap(&e.vector, &s).unwrap() - 1e-12);
    }
}
