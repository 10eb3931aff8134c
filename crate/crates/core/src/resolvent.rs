//! Secular function of the rank-two block perturbation.
//!
//! With `mu_j, w_j` the eigenpairs of the geometric part `P1 = kappa P` and
//! `r_j = <v1, w_j>`, `s_j = <sigma, w_j>`, the eigenvalues of `P0 + P1` above
//! `mu_1` are exactly the roots of
//!
//! ```text
//! f(theta) = det(I + P0 (P1 - theta)^-1)
//!          = (1 + l1 a1)(1 + l2 a2) - l1 l2 b^2,
//! a1 = sum r_j^2 / (mu_j - theta), a2 = sum s_j^2 / (mu_j - theta),
//! b  = sum r_j s_j / (mu_j - theta),
//! ```
//!
//! and the squared correlation of the corresponding unit eigenvector with
//! `sigma` is `(1 + l1 a1(theta)) / (l2 f'(theta))`.
//!
//! The `1 / (mu_1 - theta)^2` terms of `a1 a2 - b^2` cancel analytically; they
//! are removed before summation so evaluation stays accurate right above the
//! pole.

use serde::{Deserialize, Serialize};

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Tolerance on `sum r_j^2 = sum s_j^2 = 1`.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of the perturbation and the overlaps of the block
/// eigenvectors with its eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventContext {
    mu: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
}

/// Builds the context from a full spectrum (all `N` eigenvectors) of `P1`.
pub fn build_context(
    p1_spectrum: &Spectrum,
    v1: &[f64],
    sigma: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<ResolventContext> {
    let n = p1_spectrum.n();
    if p1_spectrum.k() != n {
        return Err(Error::InvalidParams(format!(
            "resolvent context needs all {n} eigenvectors, got {}",
            p1_spectrum.k()
        )));
    }
    if v1.len() != n || sigma.len() != n {
        return Err(Error::InvalidParams(
            "block eigenvectors have the wrong length".into(),
        ));
    }
    let r: Vec<f64> = p1_spectrum
        .vectors()
        .iter()
        .map(|w| crate::numeric::dot(v1, w))
        .collect();
    let s: Vec<f64> = p1_spectrum
        .vectors()
        .iter()
        .map(|w| crate::numeric::dot(sigma, w))
        .collect();
    ResolventContext::from_parts(p1_spectrum.eigenvalues().to_vec(), r, s, lambda1, lambda2)
}

/// The three resolvent quadratic forms and their theta-derivatives.
#[derive(Debug, Clone, Copy)]
struct Forms {
    a1: f64,
    a2: f64,
    b: f64,
    /// `a1 a2 - b^2`, evaluated without the cancelling pole terms.
    det: f64,
    da1: f64,
    da2: f64,
    ddet: f64,
}

impl ResolventContext {
    /// Builds a context from raw eigenvalues (any order) and overlaps.
    pub fn from_parts(
        mu: Vec<f64>,
        r: Vec<f64>,
        s: Vec<f64>,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        if mu.is_empty() || mu.len() != r.len() || mu.len() != s.len() {
            return Err(Error::InvalidParams(
                "eigenvalues and overlaps must have equal, nonzero length".into(),
            ));
        }
        for sum in [
            compensated_sum(r.iter().map(|x| x * x)),
            compensated_sum(s.iter().map(|x| x * x)),
        ] {
            if (sum - 1.0).abs() > COMPLETENESS_TOLERANCE {
                return Err(Error::Incomplete { sum });
            }
        }
        let mut order: Vec<usize> = (0..mu.len()).collect();
        order.sort_by(|&i, &j| mu[j].total_cmp(&mu[i]));
        Ok(Self {
            mu: order.iter().map(|&i| mu[i]).collect(),
            r: order.iter().map(|&i| r[i]).collect(),
            s: order.iter().map(|&i| s[i]).collect(),
            lambda1,
            lambda2,
        })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mu1(&self) -> f64 {
        self.mu[0]
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.lambda1, self.lambda2)
    }

    fn check_domain(&self, theta: f64) -> Result<()> {
        if theta.is_nan() || theta <= self.mu[0] {
            return Err(Error::InsideSpectrum {
                theta,
                mu1: self.mu[0],
            });
        }
        Ok(())
    }

    fn forms(&self, theta: f64) -> Forms {
        let (r1, s1) = (self.r[0], self.s[0]);
        let d1 = self.mu[0] - theta;
        let (mut a1r, mut a2r, mut br) = (
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
        );
        let (mut da1r, mut da2r, mut dbr) = (
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
        );
        let (mut cross, mut dcross) = (CompensatedSum::new(), CompensatedSum::new());
        for j in 1..self.mu.len() {
            let inv = 1.0 / (self.mu[j] - theta);
            let inv2 = inv * inv;
            let (rj, sj) = (self.r[j], self.s[j]);
            a1r.add(rj * rj * inv);
            a2r.add(sj * sj * inv);
            br.add(rj * sj * inv);
            da1r.add(rj * rj * inv2);
            da2r.add(sj * sj * inv2);
            dbr.add(rj * sj * inv2);
            let c = r1 * sj - s1 * rj;
            cross.add(c * c * inv);
            dcross.add(c * c * inv2);
        }
        let (a1r, a2r, br) = (a1r.value(), a2r.value(), br.value());
        let (da1r, da2r, dbr) = (da1r.value(), da2r.value(), dbr.value());
        let (cross, dcross) = (cross.value(), dcross.value());
        let inv1 = 1.0 / d1;
        let inv1sq = inv1 * inv1;
        // a1 a2 - b^2 = cross / d1 + (A1 A2 - B^2) over the non-pole indices
        let rest = a1r * a2r - br * br;
        let drest = da1r * a2r + a1r * da2r - 2.0 * br * dbr;
        Forms {
            a1: r1 * r1 * inv1 + a1r,
            a2: s1 * s1 * inv1 + a2r,
            b: r1 * s1 * inv1 + br,
            det: cross * inv1 + rest,
            da1: r1 * r1 * inv1sq + da1r,
            da2: s1 * s1 * inv1sq + da2r,
            ddet: dcross * inv1 + cross * inv1sq + drest,
        }
    }

    /// `a1(theta) = <v1, R1(theta) v1>`.
    pub fn a1(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.forms(theta).a1)
    }

    /// `(a1, a2, b)` at `theta`.
    pub fn quadratic_forms(&self, theta: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(theta)?;
        let f = self.forms(theta);
        Ok((f.a1, f.a2, f.b))
    }

    fn value_from(&self, f: &Forms) -> f64 {
        let (l1, l2) = (self.lambda1, self.lambda2);
        1.0 + l1 * f.a1 + l2 * f.a2 + l1 * l2 * f.det
    }

    fn derivative_from(&self, f: &Forms) -> f64 {
        let (l1, l2) = (self.lambda1, self.lambda2);
        l1 * f.da1 + l2 * f.da2 + l1 * l2 * f.ddet
    }

    /// `f(theta)` for `theta > mu_1`.
    pub fn secular_value(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.value_from(&self.forms(theta)))
    }

    /// `f'(theta)` for `theta > mu_1`.
    pub fn secular_derivative(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        Ok(self.derivative_from(&self.forms(theta)))
    }

    /// Roots of `f` on `(mu_1 + delta, mu_1 + lambda1 + lambda2]`, descending.
    ///
    /// A geometric grid in `theta - mu_1` is scanned for sign changes of `f`;
    /// sign changes of `f'` add the local extrema as extra breakpoints so two
    /// roots inside one grid cell are not missed. Each bracket is bisected to
    /// machine resolution.
    pub fn detached_eigenvalues(&self) -> Result<Vec<f64>> {
        let mu1 = self.mu[0];
        let delta = 1e-9 * mu1.abs().max(1.0);
        let span = self.lambda1.abs() + self.lambda2.abs();
        if span <= delta {
            return Ok(Vec::new());
        }
        let upper = span * (1.0 + 1e-9) + delta;
        let ratio = (upper / delta).powf(1.0 / GRID_POINTS as f64);
        let mut grid: Vec<f64> = (0..=GRID_POINTS)
            .map(|i| mu1 + delta * ratio.powi(i as i32))
            .collect();

        let derivs: Vec<f64> = grid
            .iter()
            .map(|&t| self.derivative_from(&self.forms(t)))
            .collect();
        let mut extra = Vec::new();
        for i in 0..grid.len() - 1 {
            if derivs[i].signum() != derivs[i + 1].signum() {
                extra.push(self.bisect(grid[i], grid[i + 1], |t| {
                    self.derivative_from(&self.forms(t))
                }));
            }
        }
        grid.extend(extra);
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let values: Vec<f64> = grid
            .iter()
            .map(|&t| self.value_from(&self.forms(t)))
            .collect();
        let mut roots = Vec::new();
        for i in 0..grid.len() - 1 {
            let (fa, fb) = (values[i], values[i + 1]);
            if fa == 0.0 {
                roots.push(grid[i]);
            } else if fa.signum() != fb.signum() && fb != 0.0 {
                roots.push(self.bisect(grid[i], grid[i + 1], |t| self.value_from(&self.forms(t))));
            }
        }
        if roots.len() > 2 {
            return Err(Error::TooManyRoots(roots.len()));
        }
        for &root in &roots {
            let forms = self.forms(root);
            let value = self.value_from(&forms);
            let slope = self.derivative_from(&forms);
            if value.abs() > ROOT_TOLERANCE * (root * slope).abs().max(1.0) {
                return Err(Error::Convergence(format!(
                    "secular root at {root} leaves residual {value:e}"
                )));
            }
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        Ok(roots)
    }

    fn bisect<F: Fn(f64) -> f64>(&self, mut lo: f64, mut hi: f64, g: F) -> f64 {
        let mut glo = g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if gm == 0.0 {
                return mid;
            }
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Squared correlation `<w, sigma>^2 / |w|^2` of the eigenvector of
    /// `P0 + P1` belonging to the detached root `theta`.
    pub fn predicted_correlation(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        let forms = self.forms(theta);
        // f' > 0 at the upper root and f' < 0 at the lower one; the numerator
        // 1 + lambda1 a1 carries the same sign, so the ratio is nonnegative.
        let slope = self.derivative_from(&forms);
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::DegenerateDerivative(slope));
        }
        let value = (1.0 + self.lambda1 * forms.a1) / (self.lambda2 * slope);
        if value < -CORRELATION_SLACK {
            return Err(Error::DegenerateDerivative(slope));
        }
        if !(-CORRELATION_SLACK..=1.0 + CORRELATION_SLACK).contains(&value) {
            return Err(Error::OutOfDomain {
                value,
                reason: format!(
                    "predicted squared correlation at theta = {theta} is not in [0, 1]"
                ),
            });
        }
        Ok(value.clamp(0.0, 1.0))
    }

    /// Sufficient condition `lambda2 >= 4 mu_1 (1 + epsilon)` for two
    /// eigenvalues to leave the spectrum of the perturbation.
    pub fn separation_certificate(&self, epsilon: f64) -> SeparationCertificate {
        let mu1 = self.mu[0];
        let threshold = 4.0 * mu1 * (1.0 + epsilon);
        SeparationCertificate {
            holds: self.lambda2 >= threshold,
            lambda2: self.lambda2,
            mu1,
            threshold,
            ratio: self.lambda2 / mu1,
        }
    }
}

const GRID_POINTS: usize = 2000;
const ROOT_TOLERANCE: f64 = 1e-9;
const CORRELATION_SLACK: f64 = 1e-9;

/// Outcome of [`ResolventContext::separation_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub holds: bool,
    pub lambda2: f64,
    pub mu1: f64,
    /// `4 mu_1 (1 + epsilon)`.
    pub threshold: f64,
    /// `lambda2 / mu_1`.
    pub ratio: f64,
}

pub fn secular_value(ctx: &ResolventContext, theta: f64) -> Result<f64> {
    ctx.secular_value(theta)
}

pub fn secular_derivative(ctx: &ResolventContext, theta: f64) -> Result<f64> {
    ctx.secular_derivative(theta)
}

pub fn detached_eigenvalues(ctx: &ResolventContext) -> Result<Vec<f64>> {
    ctx.detached_eigenvalues()
}

pub fn predicted_correlation(ctx: &ResolventContext, theta: f64) -> Result<f64> {
    ctx.predicted_correlation(theta)
}

pub fn separation_certificate(ctx: &ResolventContext, epsilon: f64) -> SeparationCertificate {
    ctx.separation_certificate(epsilon)
}
