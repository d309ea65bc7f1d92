//! Isotropic-Gaussian cluster validation: covariance spectrum and mean-norm
//! checks, plus a sliced Epps-Pulley normality test with Monte-Carlo
//! calibrated critical values.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{OnceLock, RwLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_mean, column_std, covariance, norm, symmetric_eigen_desc, RowMatrix};

pub const DEFAULT_RATIO_MAX: f64 = 10.0;
pub const DEFAULT_MEAN_MAX: f64 = 1.0;
pub const DEFAULT_EIGEN_EPS: f64 = 1e-8;
pub const DEFAULT_SLICES: usize = 32;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Smallest sample the Epps-Pulley statistic is computed for.
pub const EPPS_PULLEY_MIN_SAMPLES: usize = 8;
pub const CALIBRATION_REPLICATIONS: usize = 1000;
pub const CALIBRATION_SEED: u64 = 0x5EED_CA1B;

/// Mean, unbiased covariance and its descending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

pub fn cluster_stats(embeddings: &RowMatrix) -> Result<ClusterStats> {
    let (mean, cov) = covariance(embeddings)?;
    let (eigenvalues, _) = symmetric_eigen_desc(&cov);
    Ok(ClusterStats {
        mean,
        covariance: cov,
        eigenvalues,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyThresholds {
    pub ratio_max: f64,
    pub mean_max: f64,
    pub eps: f64,
}

impl Default for IsotropyThresholds {
    fn default() -> Self {
        Self {
            ratio_max: DEFAULT_RATIO_MAX,
            mean_max: DEFAULT_MEAN_MAX,
            eps: DEFAULT_EIGEN_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotropyVerdict {
    pub eigenvalue_ratio: f64,
    pub mean_norm: f64,
    pub is_isotropic: bool,
    pub mean_near_zero: bool,
    pub passes: bool,
}

/// Eigenvalue-ratio and mean-norm test. Both comparisons are strict, so a
/// value sitting exactly on a threshold fails.
pub fn validate_cluster_gaussian(
    embeddings: &RowMatrix,
    thresholds: &IsotropyThresholds,
) -> Result<IsotropyVerdict> {
    let stats = cluster_stats(embeddings)?;
    Ok(verdict_from_stats(&stats, thresholds))
}

pub fn verdict_from_stats(
    stats: &ClusterStats,
    thresholds: &IsotropyThresholds,
) -> IsotropyVerdict {
    verdict_from_spectrum(&stats.eigenvalues, norm(&stats.mean), thresholds)
}

pub(crate) fn verdict_from_spectrum(
    eigenvalues: &[f64],
    mean_norm: f64,
    thresholds: &IsotropyThresholds,
) -> IsotropyVerdict {
    let max = eigenvalues.first().copied().unwrap_or(0.0);
    let min = eigenvalues.last().copied().unwrap_or(0.0);
    let eigenvalue_ratio = max / (min + thresholds.eps);
    let is_isotropic = eigenvalue_ratio < thresholds.ratio_max;
    let mean_near_zero = mean_norm < thresholds.mean_max;
    IsotropyVerdict {
        eigenvalue_ratio,
        mean_norm,
        is_isotropic,
        mean_near_zero,
        passes: is_isotropic && mean_near_zero,
    }
}

/// `m` unit directions in `R^d`, each a normalized standard-normal draw.
pub fn random_slices(d: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Epps-Pulley statistic against the standard normal, computed on the
/// standardized sample (population variance) through its closed form
///
/// `T = (1/n) Σ_jk exp(−(y_j − y_k)²/2) − √2 Σ_j exp(−y_j²/4) + n/√3`.
pub fn epps_pulley_1d(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < EPPS_PULLEY_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: EPPS_PULLEY_MIN_SAMPLES,
            got: n,
        });
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    let sd = var.sqrt();
    if !(sd > 1e-12) {
        return Err(Error::DegenerateSample);
    }
    let y: Vec<f64> = sample.iter().map(|x| (x - mean) / sd).collect();
    let mut pair_sum = 0.0;
    for j in 0..n {
        let yj = y[j];
        let mut row = 0.0;
        for &yk in &y[j + 1..] {
            let diff = yj - yk;
            row += (-0.5 * diff * diff).exp();
        }
        pair_sum += row;
    }
    let pair_term = (nf + 2.0 * pair_sum) / nf;
    let cross: f64 = y.iter().map(|v| (-0.25 * v * v).exp()).sum();
    let t = pair_term - std::f64::consts::SQRT_2 * cross + nf / 3f64.sqrt();
    Ok(t.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub n: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub replications: usize,
    pub seed: u64,
}

type CacheKey = (usize, u64, usize, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn key(n: usize, alpha: f64, replications: usize, seed: u64) -> CacheKey {
    (n, alpha.to_bits(), replications, seed)
}

/// Monte-Carlo critical value of the Epps-Pulley statistic at sample size
/// `n`: the empirical `1 − alpha` quantile of `replications` statistics of
/// standard-normal samples. Results are memoized process-wide.
pub fn calibrate_critical_value(
    n: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if replications == 0 {
        return Err(Error::invalid("replications must be positive"));
    }
    if n < EPPS_PULLEY_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: EPPS_PULLEY_MIN_SAMPLES,
            got: n,
        });
    }
    let k = key(n, alpha, replications, seed);
    if let Some(v) = cache().read().expect("calibration cache poisoned").get(&k) {
        return Ok(*v);
    }
    let mut stats: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let sample: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            epps_pulley_1d(&sample)
        })
        .collect::<Result<_>>()?;
    stats.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * replications as f64).ceil() as usize;
    let value = stats[rank.clamp(1, replications) - 1];
    cache()
        .write()
        .expect("calibration cache poisoned")
        .entry(k)
        .or_insert(value);
    Ok(value)
}

/// Critical value with the default replication count and seed.
pub fn critical_value(n: usize, alpha: f64) -> Result<f64> {
    calibrate_critical_value(n, alpha, CALIBRATION_REPLICATIONS, CALIBRATION_SEED)
}

/// Snapshot of every memoized critical value, sorted by `(n, alpha)`.
pub fn calibration_entries() -> Vec<CalibrationEntry> {
    let mut out: Vec<CalibrationEntry> = cache()
        .read()
        .expect("calibration cache poisoned")
        .iter()
        .map(
            |(&(n, alpha, replications, seed), &critical_value)| CalibrationEntry {
                n,
                alpha: f64::from_bits(alpha),
                critical_value,
                replications,
                seed,
            },
        )
        .collect();
    out.sort_by(|a, b| {
        (a.n, a.replications, a.seed)
            .cmp(&(b.n, b.replications, b.seed))
            .then(a.alpha.total_cmp(&b.alpha))
    });
    out
}

/// Seeds the in-memory cache from a calibration file. A missing file is not
/// an error; it simply contributes nothing.
pub fn load_calibration_cache(path: &Path) -> Result<usize> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(Error::io(path, e)),
    };
    let entries: Vec<CalibrationEntry> =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let mut c = cache().write().expect("calibration cache poisoned");
    for e in &entries {
        c.insert(key(e.n, e.alpha, e.replications, e.seed), e.critical_value);
    }
    Ok(entries.len())
}

pub fn save_calibration_cache(path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&calibration_entries()).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub directions: Vec<Vec<f64>>,
    pub statistics: Vec<f64>,
    pub critical_value: f64,
    pub alpha: f64,
    pub pass_fraction: f64,
}

/// Standardizes the rows (full-sample mean, per-coordinate scale), projects
/// them on `m` random unit directions and runs the calibrated Epps-Pulley
/// test on every projection.
pub fn sliced_isotropy(
    embeddings: &RowMatrix,
    m: usize,
    seed: u64,
    alpha: f64,
) -> Result<SliceReport> {
    let n = embeddings.nrows();
    if n < EPPS_PULLEY_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: EPPS_PULLEY_MIN_SAMPLES,
            got: n,
        });
    }
    if m == 0 {
        return Err(Error::invalid("slice count must be positive"));
    }
    let mean = column_mean(embeddings);
    let scale: Vec<f64> = column_std(embeddings)
        .into_iter()
        .map(|s| if s > 1e-12 { s } else { 1.0 })
        .collect();
    let standardized = embeddings.map_rows(|src, dst| {
        for (k, out) in dst.iter_mut().enumerate() {
            *out = (src[k] - mean[k]) / scale[k];
        }
    });
    let directions = random_slices(embeddings.ncols(), m, seed);
    let critical_value = critical_value(n, alpha)?;
    let statistics: Vec<f64> = directions
        .par_iter()
        .enumerate()
        .map(|(index, dir)| {
            let projected: Vec<f64> = standardized
                .rows()
                .map(|r| r.iter().zip(dir).map(|(a, b)| a * b).sum())
                .collect();
            epps_pulley_1d(&projected).map_err(|e| Error::Slice {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let passed = statistics.iter().filter(|&&t| t <= critical_value).count();
    Ok(SliceReport {
        directions,
        statistics,
        critical_value,
        alpha,
        pass_fraction: passed as f64 / m as f64,
    })
}
