//! Closed-form predictions and regime checks for the perturbed block model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::{dot, integrate};

/// `(N (p1 + p2) / 2, N (p1 - p2) / 2)`.
pub fn block_eigenvalues(n: usize, p1: f64, p2: f64) -> (f64, f64) {
    // scaling before subtracting keeps (2000, 0.025, 0.01) at exactly (35, 15)
    let (a, b) = (n as f64 * p1, n as f64 * p2);
    ((a + b) / 2.0, (a - b) / 2.0)
}

pub fn lambda12(params: &ModelParams) -> (f64, f64) {
    block_eigenvalues(params.n, params.p1, params.p2)
}

/// Leading-order top eigenvalue of `kappa P`: `kappa N / (2 gamma)`.
pub fn mu1_approx_raw(n: usize, kappa: f64, gamma: f64) -> f64 {
    kappa * n as f64 / (2.0 * gamma)
}

pub fn mu1_approx(params: &ModelParams) -> f64 {
    mu1_approx_raw(params.n, params.kappa, params.gamma)
}

/// Bound on the spectral norm of the centred adjacency matrix, with the
/// `O(kappa / 2 gamma)` correction taken at coefficient one:
/// `sqrt(kappa N / gamma) + sqrt(N ((p1 + p2) / 2 + kappa / (2 gamma)))`.
pub fn noise_norm_bound(params: &ModelParams) -> f64 {
    let n = params.n as f64;
    let k = params.kappa;
    (k * n / params.gamma).sqrt()
        + (n * ((params.p1 + params.p2) / 2.0 + k / (2.0 * params.gamma))).sqrt()
}

/// `(p1 - p2) / 2 >= (2 kappa / gamma)(1 + epsilon)`, equivalently
/// `lambda2 >= 4 mu1 (1 + epsilon)`.
pub fn separation_condition(params: &ModelParams, epsilon: f64) -> Result<bool> {
    if epsilon <= 0.0 {
        return Err(Error::OutOfDomain {
            value: epsilon,
            reason: "epsilon must be positive".into(),
        });
    }
    Ok((params.p1 - params.p2) / 2.0 >= 2.0 * params.kappa / params.gamma * (1.0 + epsilon))
}

/// Finite-size gates for the asymptotic assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeMargins {
    /// Minimum kernel inverse width.
    pub min_gamma: f64,
    /// Minimum `N / (gamma ln N)`.
    pub min_h1_ratio: f64,
    /// Ratios required to be of order one must fall in `[ratio_low, ratio_high]`.
    pub ratio_low: f64,
    pub ratio_high: f64,
    /// Minimum for quantities required to be large (`lambda2 / sqrt(lambda1)`,
    /// the easy-case ratio).
    pub large: f64,
}

impl Default for RegimeMargins {
    fn default() -> Self {
        Self {
            min_gamma: 20.0,
            min_h1_ratio: 2.0,
            ratio_low: 0.1,
            ratio_high: 10.0,
            large: 1.0,
        }
    }
}

/// One checked inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRecord {
    pub name: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub records: Vec<RegimeRecord>,
    pub notes: Vec<String>,
}

impl RegimeReport {
    pub fn get(&self, name: &str) -> Option<&RegimeRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

fn record(
    name: &str,
    inequality: &str,
    lhs: f64,
    rhs: f64,
    pass: impl Fn(f64) -> bool,
) -> RegimeRecord {
    let ratio = lhs / rhs;
    RegimeRecord {
        name: name.into(),
        inequality: inequality.into(),
        lhs,
        rhs,
        ratio,
        pass: pass(ratio),
    }
}

pub fn check_regimes(params: &ModelParams, margins: &RegimeMargins) -> RegimeReport {
    let n = params.n as f64;
    let (l1, l2) = lambda12(params);
    let mu1 = mu1_approx(params);
    let in_band = |r: f64| r >= margins.ratio_low && r <= margins.ratio_high;
    let records = vec![
        record("gamma", "gamma -> infinity (H1)", params.gamma, 1.0, |r| {
            r >= margins.min_gamma
        }),
        record(
            "h1_ratio",
            "N / (gamma ln N) -> infinity (H1)",
            n,
            params.gamma * n.ln(),
            |r| r >= margins.min_h1_ratio,
        ),
        record(
            "mu1_over_lambda2",
            "kappa N / (2 gamma) ~ lambda2 (H2)",
            mu1,
            l2,
            in_band,
        ),
        record(
            "lambda2_over_lambda1",
            "lambda2 ~ lambda1 (H2)",
            l2,
            l1,
            in_band,
        ),
        record(
            "lambda2_over_sqrt_lambda1",
            "lambda2 >> sqrt(lambda1) (H2)",
            l2,
            l1.sqrt(),
            |r| r >= margins.large,
        ),
        record(
            "easy_case",
            "N (p1 - p2) >> sqrt(N) + N / gamma",
            n * (params.p1 - params.p2),
            n.sqrt() + n / params.gamma,
            |r| r >= margins.large,
        ),
    ];
    let mut notes = Vec::new();
    if params.gamma < margins.min_gamma {
        notes.push(
            "bounded gamma: the constants C1(gamma0), C2(gamma0) are not computed; \
             report the empirical rho(P)/N instead"
                .to_string(),
        );
    }
    RegimeReport { records, notes }
}

/// `lambda1 <v1, w1>^2` and `gamma <v1, w1>^2` for the top eigenvector `w1`
/// of the perturbation. No threshold is applied: the constants involved are
/// only known to exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Report {
    pub r1_squared: f64,
    pub lambda1_r1_squared: f64,
    pub gamma_r1_squared: f64,
    /// `r1^2` below 1e-12.
    pub degenerate: bool,
}

pub fn check_h3(w1: &[f64], v1: &[f64], lambda1: f64, gamma: f64) -> H3Report {
    let r1 = dot(v1, w1);
    let r1_squared = r1 * r1;
    H3Report {
        r1_squared,
        lambda1_r1_squared: lambda1 * r1_squared,
        gamma_r1_squared: gamma * r1_squared,
        degenerate: r1_squared < 1e-12,
    }
}

/// Lower bound on the squared correlation between the second detached
/// eigenvector and `sigma`, for `q = lambda1 / lambda2 > 1` and
/// `x = mu1 / lambda2`:
///
/// ```text
/// (1 - 2x/(q-1)) (1 - (g+1)x)^3 / (1 + (g+1)x/(2(q-1)) + sqrt(q(g+1)x))^2,
/// g = 3 + 4/(q-1),
/// ```
///
/// valid while `(g + 1) x <= 1/2`.
pub fn asymptotic_correlation_bound(q: f64, x: f64) -> Result<f64> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::OutOfDomain {
            value: q,
            reason: "q = lambda1 / lambda2 must exceed 1".into(),
        });
    }
    let g = 3.0 + 4.0 / (q - 1.0);
    if !(x >= 0.0) || (g + 1.0) * x > 0.5 {
        return Err(Error::OutOfDomain {
            value: x,
            reason: format!(
                "x = mu1 / lambda2 must satisfy 0 <= x <= {}",
                0.5 / (g + 1.0)
            ),
        });
    }
    let numerator = (1.0 - 2.0 * x / (q - 1.0)) * (1.0 - (g + 1.0) * x).powi(3);
    let denominator = 1.0 + (g + 1.0) * x / (2.0 * (q - 1.0)) + (q * (g + 1.0) * x).sqrt();
    Ok(numerator / (denominator * denominator))
}

/// Expected number of isolated vertices of the pure kernel graph (edge
/// probability `exp(-gamma |X_i - X_j|^2)`):
///
/// ```text
/// N * integral_0^inf e^{-t} (1 - e^{-c t} / (1 + 2 gamma))^{N-1} dt,  c = 2 gamma / (1 + 2 gamma),
/// ```
///
/// with `t = |X_i|^2 / 2`. The substitution `u = e^{-t}` maps it to
/// `N * integral_0^1 (1 - u^c / (1 + 2 gamma))^{N-1} du`.
pub fn expected_isolated_vertices(n: usize, gamma: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need N >= 2, got {n}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::OutOfDomain {
            value: gamma,
            reason: "gamma must be positive".into(),
        });
    }
    let nf = n as f64;
    let c = 2.0 * gamma / (1.0 + 2.0 * gamma);
    let scale = 1.0 / (1.0 + 2.0 * gamma);
    let exponent = (n - 1) as f64;
    // log1p keeps the large power accurate when u^c / (1 + 2 gamma) is tiny
    let integrand = |u: f64| (exponent * (-(u.powf(c) * scale)).ln_1p()).exp();
    let per_vertex = integrate(integrand, 0.0, 1.0, 1e-10, 10_000)?;
    Ok(nf * per_vertex)
}
