//! Seeded experiment driver: single trials, gamma sweeps, spectrum dumps,
//! moment, regime and isolated-vertex reports, and the files they produce.
//!
//! Trial `t` of a run uses `Seed::new(config.seed, t)`. Latent positions
//! depend only on that seed, so a sweep reuses the same latent cloud at every
//! gamma for a given trial index.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eigen::{
    eig_sym, eigenvalues_sym, histogram_with_range, separation_gap, spectral_norm, Histogram,
    SeparationGap,
};
use crate::error::{Error, Result};
use crate::graphgen::{block_matrix, kernel_matrix, sample_adjacency, sample_model, sigma};
use crate::model::{ones_direction, sample_latent_rows, ModelParams, Seed};
use crate::moments::{
    exact_expected_trace_moment, monte_carlo_trace_moments, normalize_moment, quotient_rows,
    QuotientRow,
};
use crate::numeric::{mean_and_stderr, median, quantile};
use crate::recovery::{
    davis_kahan_bound, davis_kahan_estimate, evaluate, naive_from_spectrum,
    sign_invariant_distance, Recovery, DEFAULT_EPSILON,
};
use crate::resolvent::build_context;
use crate::theory::{
    check_regimes, expected_isolated_vertices, lambda12, mu1_approx, noise_norm_bound,
    separation_condition, RegimeMargins, RegimeReport,
};
use crate::VERSION;

/// Slack in the separation certificate `lambda2 >= 4 mu1 (1 + eps)`.
pub const CERTIFICATE_EPSILON: f64 = 0.05;

pub const DEFAULT_BINS: usize = 100;

/// Normalization note attached to every moment report.
pub const MOMENT_NORMALIZATION_NOTE: &str = "The two displays of the trace-moment proposition disagree by a factor \
of 2 inside the power (Tr(2 gamma P / N)^l versus Tr(gamma P / N)^l). This report uses \
(1 / (2 gamma)) (2 gamma / N)^l E Tr P^l, which tends to 1 / l^2 and reproduces the exact l = 2 value \
N (N - 1) / (1 + 8 gamma).";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Second eigenvector of `A`.
    Naive,
    /// Top eigenvector of `A - mean J` with the mean supplied.
    DavisKahan,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Estimator::Naive),
            "davis_kahan" | "davis-kahan" => Ok(Estimator::DavisKahan),
            other => Err(Error::InvalidParams(format!(
                "unknown estimator {other:?}; expected naive or davis_kahan"
            ))),
        }
    }
}

/// Flat experiment configuration. Every field has a default, so a JSON file
/// only needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_grid: Option<Vec<f64>>,
    /// Base seed value shared by all trials.
    pub seed: u64,
    /// Trials use streams `0..trials` unless `streams` lists them explicitly.
    pub trials: usize,
    pub streams: Option<Vec<u64>>,
    pub estimator: Estimator,
    /// Mean edge probability handed to the Davis-Kahan estimator; defaults
    /// to `(p1 + p2) / 2`.
    pub known_mean: Option<f64>,
    pub epsilon: f64,
    pub bins: usize,
    pub l_max: usize,
    /// Also write binary dumps of `A` and `Q` from `spectra`.
    pub dump_matrices: bool,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            p1: 0.025,
            p2: 0.01,
            kappa: 0.97,
            gamma: 50.0,
            gamma_grid: None,
            seed: 0,
            trials: 5,
            streams: None,
            estimator: Estimator::Naive,
            known_mean: None,
            epsilon: DEFAULT_EPSILON,
            bins: DEFAULT_BINS,
            l_max: 4,
            dump_matrices: false,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.params_at(self.gamma)
    }

    pub fn params_at(&self, gamma: f64) -> Result<ModelParams> {
        ModelParams::new(self.n, self.p1, self.p2, self.kappa, gamma)
    }

    /// The sweep grid, or the single `gamma` when no grid is set.
    pub fn gammas(&self) -> Vec<f64> {
        self.gamma_grid.clone().unwrap_or_else(|| vec![self.gamma])
    }

    pub fn stream_list(&self) -> Vec<u64> {
        self.streams
            .clone()
            .unwrap_or_else(|| (0..self.trials as u64).collect())
    }

    pub fn known_mean_or_default(&self) -> f64 {
        self.known_mean.unwrap_or((self.p1 + self.p2) / 2.0)
    }

    /// Checks that every grid point yields valid parameters and that the
    /// remaining knobs are in range.
    pub fn validate(&self) -> Result<()> {
        let gammas = self.gammas();
        if gammas.is_empty() {
            return Err(Error::InvalidParams("gamma grid is empty".into()));
        }
        for g in gammas {
            self.params_at(g)?;
        }
        if self.stream_list().is_empty() {
            return Err(Error::InvalidParams("no trials requested".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.bins == 0 {
            return Err(Error::InvalidParams("bins must be positive".into()));
        }
        if let Some(m) = self.known_mean {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::InvalidParams(format!(
                    "known_mean must lie in [0, 1], got {m}"
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, ignoring `out_dir`.
    pub fn sha256(&self) -> String {
        let canonical = Self {
            out_dir: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            version: VERSION.to_string(),
            config_sha256: self.sha256(),
            seed: self.seed,
            config: Self {
                out_dir: None,
                ..self.clone()
            },
        }
    }
}

/// Stamped into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

/// Davis-Kahan inequality evaluated on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavisKahanCheck {
    /// `|A - P0|_2`.
    pub noise_norm: f64,
    /// `2 sqrt(2) |A - P0|_2 / lambda2`.
    pub bound: f64,
    /// `min(|sigma - x|, |sigma + x|)`.
    pub distance: f64,
    pub holds: bool,
}

/// Everything recorded about one `(gamma, seed)` trial. Optional fields that
/// are `None` carry a reason code in `nulls`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub params: ModelParams,
    pub seed: Seed,
    pub estimator: Estimator,
    /// Three largest eigenvalues of `A`.
    pub top_eigenvalues: Vec<f64>,
    pub separation: SeparationGap,
    /// Largest eigenvalue of `kappa P`.
    pub mu1: f64,
    pub mu1_approx: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub overlap: f64,
    pub rounded_overlap: f64,
    pub hamming_agreement: f64,
    pub classification: Recovery,
    pub ambiguous: bool,
    /// Detached eigenvalues of `P0 + kappa P`.
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    /// Squared correlation of the `theta2` eigenvector with `sigma`.
    pub predicted_correlation: Option<f64>,
    pub davis_kahan: Option<DavisKahanCheck>,
    /// `lambda2 >= 4 mu1 (1 + 0.05)` with `mu1` measured and with its
    /// closed-form approximation.
    pub certificate_measured: bool,
    pub certificate_closed_form: bool,
    pub regime: BTreeMap<String, bool>,
    pub nulls: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
}

impl TrialRecord {
    /// The record with its timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// One full pipeline run: sample, decompose, estimate, score, predict.
pub fn run_trial(config: &ExperimentConfig, gamma: f64, seed: Seed) -> Result<TrialRecord> {
    let start = Instant::now();
    let params = config.params_at(gamma).map_err(Error::at("config"))?;
    let n = params.n;
    let sample = sample_model(&params, seed).map_err(Error::at("sample"))?;
    let a = sample.adjacency.to_dense();
    let spectrum_a = eig_sym(&a, 3.min(n)).map_err(Error::at("adjacency spectrum"))?;
    let separation =
        separation_gap(spectrum_a.eigenvalues()).map_err(Error::at("separation gap"))?;
    let sig = sigma(n)?;
    let (lambda1, lambda2) = lambda12(&params);
    let mut nulls = BTreeMap::new();

    let (estimate, davis_kahan) = match config.estimator {
        Estimator::Naive => {
            nulls.insert("davis_kahan".into(), "estimator_is_naive".into());
            (
                naive_from_spectrum(&spectrum_a, &a).map_err(Error::at("estimate"))?,
                None,
            )
        }
        Estimator::DavisKahan => {
            let est = davis_kahan_estimate(&a, config.known_mean_or_default())
                .map_err(Error::at("estimate"))?;
            let p0 = block_matrix(&params);
            let noise = Mat::from_fn(n, n, |i, j| a[(i, j)] - p0.entry(i, j));
            let noise_norm = spectral_norm(&noise).map_err(Error::at("noise norm"))?;
            let bound = davis_kahan_bound(noise_norm, lambda2);
            let distance = sign_invariant_distance(&sig, &est.best_vector(&sig));
            let check = DavisKahanCheck {
                noise_norm,
                bound,
                distance,
                holds: distance <= bound,
            };
            (est, Some(check))
        }
    };
    let report = evaluate(&estimate, &sig, config.epsilon).map_err(Error::at("metrics"))?;

    let kp = sample.kernel.scaled(params.kappa);
    let spectrum_p = eig_sym(&kp, n).map_err(Error::at("perturbation spectrum"))?;
    let mu1 = spectrum_p.top();
    let ctx = build_context(&spectrum_p, &ones_direction(n), &sig, lambda1, lambda2)
        .map_err(Error::at("resolvent"))?;
    let roots = ctx
        .detached_eigenvalues()
        .map_err(Error::at("secular roots"))?;
    let theta1 = roots.first().copied();
    let theta2 = roots.get(1).copied();
    if theta1.is_none() {
        nulls.insert("theta1".into(), "no_detached_root".into());
    }
    let predicted_correlation = match theta2 {
        Some(t) => Some(
            ctx.predicted_correlation(t)
                .map_err(Error::at("predicted correlation"))?,
        ),
        None => {
            nulls.insert("theta2".into(), "fewer_than_two_detached_roots".into());
            nulls.insert(
                "predicted_correlation".into(),
                "fewer_than_two_detached_roots".into(),
            );
            None
        }
    };

    let regime = check_regimes(&params, &RegimeMargins::default())
        .records
        .into_iter()
        .map(|r| (r.name, r.pass))
        .collect();

    Ok(TrialRecord {
        params,
        seed,
        estimator: config.estimator,
        top_eigenvalues: spectrum_a.eigenvalues()[..3.min(n)].to_vec(),
        separation,
        mu1,
        mu1_approx: mu1_approx(&params),
        lambda1,
        lambda2,
        overlap: report.overlap,
        rounded_overlap: report.rounded_overlap,
        hamming_agreement: report.hamming_agreement,
        classification: report.classification,
        ambiguous: report.ambiguous,
        theta1,
        theta2,
        predicted_correlation,
        davis_kahan,
        certificate_measured: ctx.separation_certificate(CERTIFICATE_EPSILON).holds,
        certificate_closed_form: separation_condition(&params, CERTIFICATE_EPSILON)?,
        regime,
        nulls,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Trial at `config.gamma` with the first stream.
pub fn run_single(config: &ExperimentConfig) -> Result<TrialRecord> {
    config.validate()?;
    let stream = config.stream_list()[0];
    run_trial(config, config.gamma, Seed::new(config.seed, stream))
}

/// A sweep cell that failed, kept in the output instead of aborting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub gamma: f64,
    pub seed: Seed,
    pub reason: String,
}

/// Per-gamma summary of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub gamma: f64,
    pub trials: usize,
    pub failures: usize,
    pub median_overlap: f64,
    pub q25_overlap: f64,
    pub q75_overlap: f64,
    pub median_hamming: f64,
    /// Fraction of trials where both top eigenvalues of `A` stand clear of the bulk.
    pub two_detached_fraction: f64,
    /// Median over trials that have a second detached root; NaN otherwise.
    pub median_predicted_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<CellFailure>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs every `(gamma, stream)` cell in parallel; output is sorted by
/// `(gamma, stream)` so it does not depend on the worker count.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let cells: Vec<(f64, Seed)> = config
        .gammas()
        .into_iter()
        .flat_map(|g| config.stream_list().into_iter().map(move |s| (g, s)))
        .map(|(g, s)| (g, Seed::new(config.seed, s)))
        .collect();
    let outcomes: Vec<(f64, Seed, Result<TrialRecord>)> = cells
        .into_par_iter()
        .map(|(g, s)| (g, s, run_trial(config, g, s)))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (gamma, seed, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(CellFailure {
                gamma,
                seed,
                reason: e.to_string(),
            }),
        }
    }
    records.sort_by(|a, b| {
        a.params
            .gamma
            .total_cmp(&b.params.gamma)
            .then(a.seed.cmp(&b.seed))
    });
    failures.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.seed.cmp(&b.seed)));
    let aggregate = aggregate(&config.gammas(), &records, &failures);
    Ok(SweepResult {
        records,
        failures,
        aggregate,
    })
}

/// Recomputes the per-gamma table from trial records.
pub fn aggregate(
    gammas: &[f64],
    records: &[TrialRecord],
    failures: &[CellFailure],
) -> Vec<AggregateRow> {
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted
        .into_iter()
        .map(|gamma| {
            let cell: Vec<&TrialRecord> =
                records.iter().filter(|r| r.params.gamma == gamma).collect();
            let overlaps: Vec<f64> = cell.iter().map(|r| r.overlap).collect();
            let hamming: Vec<f64> = cell.iter().map(|r| r.hamming_agreement).collect();
            let predicted: Vec<f64> = cell
                .iter()
                .filter_map(|r| r.predicted_correlation)
                .collect();
            let two = cell.iter().filter(|r| r.separation.detached == 2).count();
            let stat = |v: &[f64], q: f64| {
                if v.is_empty() {
                    f64::NAN
                } else {
                    quantile(v, q)
                }
            };
            AggregateRow {
                gamma,
                trials: cell.len(),
                failures: failures.iter().filter(|f| f.gamma == gamma).count(),
                median_overlap: stat(&overlaps, 0.5),
                q25_overlap: stat(&overlaps, 0.25),
                q75_overlap: stat(&overlaps, 0.75),
                median_hamming: stat(&hamming, 0.5),
                two_detached_fraction: if cell.is_empty() {
                    f64::NAN
                } else {
                    two as f64 / cell.len() as f64
                },
                median_predicted_correlation: if predicted.is_empty() {
                    f64::NAN
                } else {
                    median(&predicted)
                },
            }
        })
        .collect()
}

/// Eigenvalues of the perturbed adjacency, the `kappa = 0` adjacency drawn
/// with the same seed, and the conditional mean, on one shared binning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraReport {
    pub seed: Seed,
    pub perturbed: Vec<f64>,
    pub sbm: Vec<f64>,
    pub mean: Vec<f64>,
    pub perturbed_histogram: Histogram,
    pub sbm_histogram: Histogram,
    pub mean_histogram: Histogram,
    pub perturbed_separation: SeparationGap,
    pub sbm_separation: SeparationGap,
    pub lambda1: f64,
    pub lambda2: f64,
    pub bulk_edge_note: String,
}

/// Matrices behind a [`SpectraReport`], for optional dumping.
pub struct SpectraMatrices {
    pub perturbed: crate::graphgen::AdjacencyMatrix,
    pub conditional_mean: Mat<f64>,
}

pub fn dump_spectra(config: &ExperimentConfig) -> Result<(SpectraReport, SpectraMatrices)> {
    config.validate()?;
    let params = config.params()?;
    let seed = Seed::new(config.seed, config.stream_list()[0]);
    let perturbed = sample_model(&params, seed).map_err(Error::at("sample"))?;
    let sbm = sample_model(&params.with_kappa(0.0)?, seed).map_err(Error::at("sample"))?;
    let eig = |m: &Mat<f64>| eigenvalues_sym(m).map_err(Error::at("spectrum"));
    let ev_perturbed = eig(&perturbed.adjacency.to_dense())?;
    let ev_sbm = eig(&sbm.adjacency.to_dense())?;
    let ev_mean = eig(&perturbed.conditional_mean)?;
    let range = ev_perturbed
        .iter()
        .chain(&ev_sbm)
        .chain(&ev_mean)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let hist = |v: &[f64]| histogram_with_range(v, -range, range, config.bins);
    let (lambda1, lambda2) = lambda12(&params);
    let report = SpectraReport {
        seed,
        perturbed_histogram: hist(&ev_perturbed)?,
        sbm_histogram: hist(&ev_sbm)?,
        mean_histogram: hist(&ev_mean)?,
        perturbed_separation: separation_gap(&ev_perturbed)?,
        sbm_separation: separation_gap(&ev_sbm)?,
        perturbed: ev_perturbed,
        sbm: ev_sbm,
        mean: ev_mean,
        lambda1,
        lambda2,
        bulk_edge_note: "bulk edge is approximated by the third largest eigenvalue".into(),
    };
    Ok((
        report,
        SpectraMatrices {
            perturbed: perturbed.adjacency,
            conditional_mean: perturbed.conditional_mean,
        },
    ))
}

/// One `l` of a moment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub l: usize,
    pub exact: f64,
    pub monte_carlo_mean: Option<f64>,
    pub monte_carlo_standard_error: Option<f64>,
    /// `(mean - exact) / standard_error`.
    pub z_score: Option<f64>,
    pub normalized_exact: f64,
    pub limit: f64,
    pub relative_error_to_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub gamma: f64,
    pub l_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub normalization_note: String,
    pub rows: Vec<MomentRow>,
    pub quotients: Vec<QuotientRow>,
}

/// Exact and (when `trials > 0`) Monte Carlo trace moments for `l = 2..=l_max`.
pub fn run_moments(
    n: usize,
    gamma: f64,
    l_max: usize,
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    let quotients = quotient_rows(n, gamma, l_max)?;
    let mc = if trials > 0 {
        Some(
            monte_carlo_trace_moments(n, gamma, l_max, trials, seed)
                .map_err(Error::at("monte carlo moments"))?,
        )
    } else {
        None
    };
    let mut rows = Vec::new();
    for l in 2..=l_max {
        let exact = exact_expected_trace_moment(n, gamma, l)?;
        let normalized_exact = normalize_moment(exact, n, gamma, l);
        let limit = 1.0 / (l * l) as f64;
        let m = mc.as_ref().map(|v| v[l - 2]);
        rows.push(MomentRow {
            l,
            exact,
            monte_carlo_mean: m.map(|m| m.mean),
            monte_carlo_standard_error: m.map(|m| m.standard_error),
            z_score: m.map(|m| (m.mean - exact) / m.standard_error),
            normalized_exact,
            limit,
            relative_error_to_limit: (normalized_exact - limit).abs() / limit,
        });
    }
    Ok(MomentReport {
        n,
        gamma,
        l_max,
        trials,
        seed,
        normalization_note: MOMENT_NORMALIZATION_NOTE.into(),
        rows,
        quotients,
    })
}

/// Regime diagnostics at one gamma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeEntry {
    pub params: ModelParams,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1_approx: f64,
    pub noise_norm_bound: f64,
    pub separation_condition: bool,
    pub report: RegimeReport,
}

pub fn run_regimes(config: &ExperimentConfig) -> Result<Vec<RegimeEntry>> {
    config.validate()?;
    config
        .gammas()
        .into_iter()
        .map(|g| {
            let params = config.params_at(g)?;
            let (lambda1, lambda2) = lambda12(&params);
            Ok(RegimeEntry {
                params,
                lambda1,
                lambda2,
                mu1_approx: mu1_approx(&params),
                noise_norm_bound: noise_norm_bound(&params),
                separation_condition: separation_condition(&params, CERTIFICATE_EPSILON)?,
                report: check_regimes(&params, &RegimeMargins::default()),
            })
        })
        .collect()
}

/// Isolated vertices of the pure kernel graph `A_ij ~ Bernoulli(P_ij)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolatedReport {
    pub n: usize,
    pub gamma: f64,
    pub expected: f64,
    pub trials: usize,
    pub monte_carlo_mean: Option<f64>,
    pub monte_carlo_standard_error: Option<f64>,
    pub z_score: Option<f64>,
}

/// Isolated-vertex counts of `trials` kernel graphs; trial `t` uses
/// `Seed::new(seed, t)` for both latents and edges.
pub fn sample_isolated_counts(n: usize, gamma: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    (0..trials)
        .map(|t| {
            let s = Seed::new(seed, t as u64);
            let p = kernel_matrix(&sample_latent_rows(n, s), gamma);
            Ok(sample_adjacency(p.matrix(), s)?.isolated_vertices() as f64)
        })
        .collect()
}

pub fn run_isolated(n: usize, gamma: f64, trials: usize, seed: u64) -> Result<IsolatedReport> {
    let expected = expected_isolated_vertices(n, gamma)?;
    let (mean, se) = if trials > 0 {
        let counts = sample_isolated_counts(n, gamma, trials, seed)?;
        let (m, s) = mean_and_stderr(&counts);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    Ok(IsolatedReport {
        n,
        gamma,
        expected,
        trials,
        monte_carlo_mean: mean,
        monte_carlo_standard_error: se,
        z_score: mean.zip(se).map(|(m, s)| (m - expected) / s),
    })
}

/// Output directory resolution: explicit override, then the config, then `.`.
pub fn output_dir(override_dir: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    override_dir
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Writes `value` as pretty JSON with the provenance block on top. Struct
/// fields sit beside `provenance`; any other value goes under `entries`.
pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, value: &T) -> Result<()> {
    let mut out = serde_json::Map::new();
    out.insert("provenance".into(), serde_json::to_value(provenance)?);
    match serde_json::to_value(value)? {
        serde_json::Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("entries".into(), other);
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, &out)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

/// Writes a CSV whose first lines are `#`-prefixed provenance comments.
pub fn write_csv<R, I>(path: &Path, provenance: &Provenance, header: &str, rows: I) -> Result<()>
where
    R: Display,
    I: IntoIterator<Item = R>,
{
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "# geosbm {}", provenance.version)?;
    writeln!(file, "# config_sha256 {}", provenance.config_sha256)?;
    writeln!(file, "# seed {}", provenance.seed)?;
    writeln!(
        file,
        "# config {}",
        serde_json::to_string(&provenance.config)?
    )?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    file.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_single(
    dir: &Path,
    config: &ExperimentConfig,
    record: &TrialRecord,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("single.json");
    write_json(&path, &config.provenance(), record)?;
    Ok(vec![path])
}

pub fn write_sweep(
    dir: &Path,
    config: &ExperimentConfig,
    sweep: &SweepResult,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let prov = config.provenance();
    let records = dir.join("sweep_records.json");
    write_json(&records, &prov, sweep)?;
    let table = dir.join("sweep_aggregate.csv");
    write_csv(
        &table,
        &prov,
        "gamma,trials,failures,median_overlap,q25_overlap,q75_overlap,median_hamming,two_detached_fraction,median_predicted_correlation",
        sweep.aggregate.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.gamma,
                r.trials,
                r.failures,
                r.median_overlap,
                r.q25_overlap,
                r.q75_overlap,
                r.median_hamming,
                r.two_detached_fraction,
                r.median_predicted_correlation
            )
        }),
    )?;
    let trials = dir.join("sweep_trials.csv");
    write_csv(
        &trials,
        &prov,
        "gamma,seed,stream,overlap,rounded_overlap,hamming_agreement,classification,rho1,rho2,rho3,detached,mu1,theta1,theta2,predicted_correlation",
        sweep.records.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.params.gamma,
                r.seed.value,
                r.seed.stream,
                r.overlap,
                r.rounded_overlap,
                r.hamming_agreement,
                r.classification,
                r.separation.rho1,
                r.separation.rho2,
                r.separation.rho3,
                r.separation.detached,
                r.mu1,
                opt(r.theta1),
                opt(r.theta2),
                opt(r.predicted_correlation)
            )
        }),
    )?;
    Ok(vec![records, table, trials])
}

pub fn write_spectra(
    dir: &Path,
    config: &ExperimentConfig,
    report: &SpectraReport,
    matrices: &SpectraMatrices,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let prov = config.provenance();
    let mut paths = Vec::new();
    for (name, h) in [
        ("perturbed", &report.perturbed_histogram),
        ("sbm", &report.sbm_histogram),
        ("mean", &report.mean_histogram),
    ] {
        let path = dir.join(format!("spectra_{name}.csv"));
        write_csv(
            &path,
            &prov,
            "bin_lo,bin_hi,count",
            h.counts
                .iter()
                .enumerate()
                .map(|(b, c)| format!("{},{},{}", h.edges[b], h.edges[b + 1], c)),
        )?;
        paths.push(path);
    }
    let raw = dir.join("spectra_eigenvalues.csv");
    write_csv(
        &raw,
        &prov,
        "index,perturbed,sbm,mean",
        (0..report.perturbed.len()).map(|i| {
            format!(
                "{},{},{},{}",
                i, report.perturbed[i], report.sbm[i], report.mean[i]
            )
        }),
    )?;
    paths.push(raw);
    let summary = dir.join("spectra.json");
    write_json(&summary, &prov, report)?;
    paths.push(summary);
    if config.dump_matrices {
        let a = dir.join("adjacency.ut");
        crate::dump::write_adjacency(&a, &matrices.perturbed)?;
        let q = dir.join("conditional_mean.ut");
        crate::dump::write_dense(&q, &matrices.conditional_mean)?;
        paths.extend([a, q]);
    }
    Ok(paths)
}

pub fn write_moments(
    dir: &Path,
    config: &ExperimentConfig,
    report: &MomentReport,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let prov = config.provenance();
    let json = dir.join("moments.json");
    write_json(&json, &prov, report)?;
    let rows = dir.join("moments.csv");
    write_csv(
        &rows,
        &prov,
        "l,exact,monte_carlo_mean,monte_carlo_standard_error,z_score,normalized_exact,limit,relative_error_to_limit",
        report.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.l,
                r.exact,
                opt(r.monte_carlo_mean),
                opt(r.monte_carlo_standard_error),
                opt(r.z_score),
                r.normalized_exact,
                r.limit,
                r.relative_error_to_limit
            )
        }),
    )?;
    let quotients = dir.join("moments_quotients.csv");
    let mut buf = Vec::new();
    crate::moments::write_quotient_csv(&report.quotients, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    write_csv(&quotients, &prov, &header, lines)?;
    Ok(vec![json, rows, quotients])
}

pub fn write_report<T: Serialize>(
    dir: &Path,
    name: &str,
    config: &ExperimentConfig,
    value: &T,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    write_json(&path, &config.provenance(), value)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 60,
            p1: 0.5,
            p2: 0.1,
            kappa: 0.3,
            gamma: 5.0,
            trials: 2,
            ..Default::default()
        }
    }

    #[test]
    fn defaults_are_the_paper_experiment() {
        let c = ExperimentConfig::default();
        let p = c.params().unwrap();
        assert_eq!(
            (p.n, p.p1, p.p2, p.kappa, p.gamma),
            (2000, 0.025, 0.01, 0.97, 50.0)
        );
        c.validate().unwrap();
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c = ExperimentConfig::from_json_str(
            r#"{"n": 100, "gamma_grid": [10, 20], "estimator": "davis_kahan"}"#,
        )
        .unwrap();
        assert_eq!(c.n, 100);
        assert_eq!(c.gammas(), vec![10.0, 20.0]);
        assert_eq!(c.estimator, Estimator::DavisKahan);
        assert_eq!(c.kappa, 0.97);
        assert!(ExperimentConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"nested": {"a": 1}}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = small();
        c.gamma_grid = Some(vec![1.0, -1.0]);
        assert!(c.validate().unwrap_err().is_config_error());
        let mut c = small();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small();
        c.epsilon = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_config() {
        let a = small();
        let mut b = small();
        assert_eq!(a.sha256(), b.sha256());
        b.seed = 1;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }

    #[test]
    fn single_is_deterministic() {
        let c = small();
        let r1 = run_single(&c).unwrap();
        let r2 = run_single(&c).unwrap();
        assert_eq!(
            serde_json::to_string(&r1.without_timing()).unwrap(),
            serde_json::to_string(&r2.without_timing()).unwrap()
        );
        assert_eq!(r1.top_eigenvalues.len(), 3);
        assert!(r1.rounded_overlap >= 4.0 * r1.overlap - 3.0 - 1e-12);
        assert!(r1.davis_kahan.is_none());
        assert!(r1.nulls.contains_key("davis_kahan"));
    }

    #[test]
    fn sweep_sorted_and_aggregated() {
        let mut c = small();
        c.gamma_grid = Some(vec![8.0, 2.0]);
        let s = run_sweep(&c).unwrap();
        assert_eq!(s.records.len(), 4);
        assert!(s.failures.is_empty());
        assert_eq!(s.records[0].params.gamma, 2.0);
        assert_eq!(s.records[1].seed.stream, 1);
        assert_eq!(s.aggregate.len(), 2);
        let o: Vec<f64> = s.records[..2].iter().map(|r| r.overlap).collect();
        assert_eq!(s.aggregate[0].median_overlap, median(&o));
    }

    #[test]
    fn spectra_counts_and_zero_kappa() {
        let mut c = small();
        let (r, _) = dump_spectra(&c).unwrap();
        for h in [&r.perturbed_histogram, &r.sbm_histogram, &r.mean_histogram] {
            assert_eq!(h.total(), c.n);
            assert_eq!(h.edges, r.perturbed_histogram.edges);
        }
        c.kappa = 0.0;
        let (r, _) = dump_spectra(&c).unwrap();
        assert_eq!(r.perturbed_histogram, r.sbm_histogram);
    }

    #[test]
    fn exact_only_moments() {
        let r = run_moments(200, 3.0, 4, 0, 0).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.monte_carlo_mean.is_none()));
        assert_eq!(r.rows[0].exact, 200.0 * 199.0 / 25.0);
        assert!(r.normalization_note.contains("factor"));
    }

    #[test]
    fn writes_stamped_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = small();
        let rec = run_single(&c).unwrap();
        let paths = write_single(dir.path(), &c, &rec).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(text.contains(&c.sha256()));
        let (r, m) = dump_spectra(&c).unwrap();
        let paths = write_spectra(dir.path(), &c, &r, &m).unwrap();
        let csv = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(csv.starts_with("# geosbm"));
        assert!(csv.contains("# config_sha256"));
    }
}
