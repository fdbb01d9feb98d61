//! Random-forest calibration over bootstrapped reliability bins.
//!
//! Calibration predictions are split into equal-width bins. Each non-empty
//! bin is resampled with replacement `n_bootstrap` times; every resample
//! contributes one regression row (mean prediction, empirical rate) weighted
//! by the bin's size. A forest constrained to be non-decreasing in the mean
//! prediction is then fit on those rows and serves as the calibration map.
//!
//! Optional extra features extend the bins into cells over the joint space
//! (probability bin × equal-width bins of each extra feature); the resample
//! means of the extra features become additional unconstrained inputs.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::CalibrationDataset;
use crate::error::{CalibrationError, Result};
use crate::forest::{
    fit_forest, ConstraintVector, FeatureMatrix, ForestParams, Monotonicity, MonotonicForest,
};
use crate::metrics::equal_width_bin;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecalConfig {
    pub n_bins: usize,
    pub n_bootstrap: usize,
    pub forest: ForestParams,
    /// Seed for the bin resamples. The forest has its own seed in `forest`.
    pub seed: u64,
}

impl Default for ForecalConfig {
    fn default() -> Self {
        ForecalConfig::with_seed(0)
    }
}

impl ForecalConfig {
    pub const DEFAULT_BINS: usize = 10;
    pub const DEFAULT_BOOTSTRAP: usize = 100;

    /// Defaults with both the resampling and the forest keyed on `seed`.
    pub fn with_seed(seed: u64) -> Self {
        ForecalConfig {
            n_bins: Self::DEFAULT_BINS,
            n_bootstrap: Self::DEFAULT_BOOTSTRAP,
            forest: ForestParams {
                min_samples_leaf: 1,
                seed: rng::derive_seed(seed, &[u64::MAX]),
                ..ForestParams::default()
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(CalibrationError::InvalidParameter("n_bins must be at least 1".into()));
        }
        if self.n_bootstrap == 0 {
            return Err(CalibrationError::InvalidParameter(
                "n_bootstrap must be at least 1".into(),
            ));
        }
        self.forest.validate()
    }
}

/// One row of the forest's training set: the means of a single bootstrap
/// resample of a bin, weighted by the bin's size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSample {
    pub mu_p: f64,
    pub mu_y: f64,
    pub weight: usize,
}

/// Builds the bootstrap regression dataset: `n_bootstrap` rows per
/// non-empty bin, ordered by bin then resample.
pub fn build_regression_dataset(
    d: &CalibrationDataset,
    n_bins: usize,
    n_bootstrap: usize,
    seed: u64,
) -> Result<Vec<RegressionSample>> {
    Ok(build_cells(d, None, n_bins, n_bootstrap, seed)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

/// As [`build_regression_dataset`], with per-record extra features. Each
/// row also carries the resample means of the extra features.
pub fn build_regression_dataset_with_features(
    d: &CalibrationDataset,
    extras: &[Vec<f64>],
    n_bins: usize,
    n_bootstrap: usize,
    seed: u64,
) -> Result<Vec<(RegressionSample, Vec<f64>)>> {
    build_cells(d, Some(extras), n_bins, n_bootstrap, seed)
}

fn extra_dim(d: &CalibrationDataset, extras: Option<&[Vec<f64>]>) -> Result<usize> {
    let Some(extras) = extras else { return Ok(0) };
    if extras.len() != d.len() {
        return Err(CalibrationError::DimensionMismatch {
            expected: d.len(),
            actual: extras.len(),
        });
    }
    let dim = extras.first().map_or(0, Vec::len);
    for row in extras {
        if row.len() != dim {
            return Err(CalibrationError::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(CalibrationError::InvalidParameter(format!(
                "extra feature {bad} is not finite"
            )));
        }
    }
    Ok(dim)
}

fn build_cells(
    d: &CalibrationDataset,
    extras: Option<&[Vec<f64>]>,
    n_bins: usize,
    n_bootstrap: usize,
    seed: u64,
) -> Result<Vec<(RegressionSample, Vec<f64>)>> {
    if d.is_empty() {
        return Err(CalibrationError::EmptyDataset);
    }
    if n_bins == 0 || n_bootstrap == 0 {
        return Err(CalibrationError::InvalidParameter(
            "n_bins and n_bootstrap must be at least 1".into(),
        ));
    }
    let dim = extra_dim(d, extras)?;
    let extra_rows = extras.unwrap_or(&[]);

    // equal-width bins over each extra feature's observed range
    let ranges: Vec<(f64, f64)> = (0..dim)
        .map(|j| {
            let col = extra_rows.iter().map(|r| r[j]);
            let lo = col.clone().fold(f64::INFINITY, f64::min);
            let hi = col.fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();

    let mut cells: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, &p) in d.probs().iter().enumerate() {
        let mut key = Vec::with_capacity(1 + dim);
        key.push(equal_width_bin(p, n_bins));
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            let v = extra_rows[i][j];
            key.push(if hi > lo {
                equal_width_bin((v - lo) / (hi - lo), n_bins)
            } else {
                0
            });
        }
        cells.entry(key).or_default().push(i);
    }

    let probs = d.probs();
    let labels = d.labels();
    let mut out = Vec::with_capacity(cells.len() * n_bootstrap);
    for (key, members) in &cells {
        let size = members.len();
        let mut path: Vec<u64> = key.iter().map(|&k| k as u64).collect();
        path.push(0);
        for k in 0..n_bootstrap {
            *path.last_mut().unwrap() = k as u64;
            let mut rng = rng::stream(seed, &path);
            let (mut sum_p, mut sum_y) = (0.0, 0.0);
            let mut sum_extra = vec![0.0; dim];
            for _ in 0..size {
                let i = members[rng.random_range(0..size)];
                sum_p += probs[i];
                sum_y += f64::from(labels[i]);
                if dim > 0 {
                    for (acc, v) in sum_extra.iter_mut().zip(&extra_rows[i]) {
                        *acc += v;
                    }
                }
            }
            let n = size as f64;
            out.push((
                RegressionSample {
                    mu_p: (sum_p / n).clamp(0.0, 1.0),
                    mu_y: (sum_y / n).clamp(0.0, 1.0),
                    weight: size,
                },
                sum_extra.into_iter().map(|s| s / n).collect(),
            ));
        }
    }
    Ok(out)
}

/// Fitted calibration map: a forest non-decreasing in the raw probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecalCalibrator {
    forest: MonotonicForest,
    config: ForecalConfig,
    extra_features: usize,
}

impl ForecalCalibrator {
    pub fn fit(d: &CalibrationDataset, config: &ForecalConfig) -> Result<Self> {
        config.validate()?;
        let rows = build_cells(d, None, config.n_bins, config.n_bootstrap, config.seed)?;
        Self::fit_rows(&rows, 0, config)
    }

    /// Fits with extra per-record features; the forest is increasing in the
    /// probability and unconstrained in the extras.
    pub fn fit_with_features(
        d: &CalibrationDataset,
        extras: &[Vec<f64>],
        config: &ForecalConfig,
    ) -> Result<Self> {
        config.validate()?;
        let dim = extra_dim(d, Some(extras))?;
        let rows = build_cells(d, Some(extras), config.n_bins, config.n_bootstrap, config.seed)?;
        Self::fit_rows(&rows, dim, config)
    }

    fn fit_rows(
        rows: &[(RegressionSample, Vec<f64>)],
        dim: usize,
        config: &ForecalConfig,
    ) -> Result<Self> {
        let mut features = Vec::with_capacity(rows.len() * (1 + dim));
        for (s, e) in rows {
            features.push(s.mu_p);
            features.extend_from_slice(e);
        }
        let x = FeatureMatrix::new(rows.len(), 1 + dim, features)?;
        let y: Vec<f64> = rows.iter().map(|(s, _)| s.mu_y).collect();
        let w: Vec<f64> = rows.iter().map(|(s, _)| s.weight as f64).collect();
        let mut directions = vec![Monotonicity::Increasing];
        directions.resize(1 + dim, Monotonicity::Unconstrained);
        let forest = fit_forest(&x, &y, &w, &ConstraintVector::new(directions), &config.forest)?;
        Ok(ForecalCalibrator {
            forest,
            config: config.clone(),
            extra_features: dim,
        })
    }

    pub fn forest(&self) -> &MonotonicForest {
        &self.forest
    }

    pub fn config(&self) -> &ForecalConfig {
        &self.config
    }

    pub fn extra_features(&self) -> usize {
        self.extra_features
    }

    pub fn calibrate(&self, p: f64) -> Result<f64> {
        self.calibrate_with_features(p, &[])
    }

    pub fn calibrate_with_features(&self, p: f64, extra: &[f64]) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(CalibrationError::ProbabilityOutOfRange(p));
        }
        if extra.len() != self.extra_features {
            return Err(CalibrationError::DimensionMismatch {
                expected: self.extra_features,
                actual: extra.len(),
            });
        }
        let mut x = Vec::with_capacity(1 + extra.len());
        x.push(p);
        x.extend_from_slice(extra);
        self.forest.predict(&x)
    }
}
