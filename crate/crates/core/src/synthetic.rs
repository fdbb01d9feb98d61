//! Miscalibrated prediction datasets with a known true calibration map.
//!
//! True event rates `q` are drawn from a Beta distribution, outcomes are
//! Bernoulli(`q`), and the reported probability is a distortion of `q`.
//! For the sigmoid kinds the distortion scales the logit by `k`, so the
//! ideal calibrator is the inverse scaling and temperature scaling can
//! recover `k` exactly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::baselines::sigmoid;
use crate::data::{save_csv_with_columns, CalibrationDataset};
use crate::error::{CalibrationError, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distortion {
    /// `p = σ(k · logit q)` with `k ≥ 1`: pushes predictions toward 0 and 1.
    OverconfidentSigmoid,
    /// `p = σ(k · logit q)` with `k ≤ 1`: pulls predictions toward ½.
    UnderconfidentSigmoid,
    /// `p = clamp(q + k, 0, 1)`.
    Shift,
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distortion::OverconfidentSigmoid => "overconfident",
            Distortion::UnderconfidentSigmoid => "underconfident",
            Distortion::Shift => "shift",
        })
    }
}

impl FromStr for Distortion {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overconfident" | "overconfident-sigmoid" => Ok(Distortion::OverconfidentSigmoid),
            "underconfident" | "underconfident-sigmoid" => Ok(Distortion::UnderconfidentSigmoid),
            "shift" => Ok(Distortion::Shift),
            other => Err(CalibrationError::InvalidParameter(format!(
                "unknown distortion `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: Distortion,
    pub k: f64,
    pub beta_a: f64,
    pub beta_b: f64,
}

impl DistortionSpec {
    /// Sigmoid distortion of severity `k` over Beta(2, 2) true rates.
    pub fn sigmoid(k: f64) -> Self {
        DistortionSpec {
            kind: if k >= 1.0 {
                Distortion::OverconfidentSigmoid
            } else {
                Distortion::UnderconfidentSigmoid
            },
            k,
            beta_a: 2.0,
            beta_b: 2.0,
        }
    }

    pub fn shift(offset: f64) -> Self {
        DistortionSpec {
            kind: Distortion::Shift,
            k: offset,
            beta_a: 2.0,
            beta_b: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CalibrationError::InvalidParameter(msg));
        if !(self.beta_a > 0.0 && self.beta_b > 0.0 && self.beta_a.is_finite() && self.beta_b.is_finite()) {
            return bad(format!(
                "beta shape parameters must be positive, got ({}, {})",
                self.beta_a, self.beta_b
            ));
        }
        if !self.k.is_finite() {
            return bad(format!("severity {} is not finite", self.k));
        }
        match self.kind {
            Distortion::OverconfidentSigmoid if self.k < 1.0 => {
                bad(format!("overconfident distortion needs k >= 1, got {}", self.k))
            }
            Distortion::UnderconfidentSigmoid if !(self.k > 0.0 && self.k <= 1.0) => {
                bad(format!("underconfident distortion needs 0 < k <= 1, got {}", self.k))
            }
            _ => Ok(()),
        }
    }

    fn is_sigmoid(&self) -> bool {
        self.kind != Distortion::Shift
    }

    /// Maps a true rate to the reported probability.
    pub fn distort(&self, q: f64) -> f64 {
        if self.is_sigmoid() {
            if q <= 0.0 || q >= 1.0 || self.k == 1.0 {
                return q;
            }
            sigmoid(self.k * (q.ln() - (-q).ln_1p()))
        } else {
            (q + self.k).clamp(0.0, 1.0)
        }
    }
}

/// Draws `n` records; returns the dataset and the true rates `q`.
pub fn generate(
    n: usize,
    spec: &DistortionSpec,
    seed: u64,
) -> Result<(CalibrationDataset, Vec<f64>)> {
    spec.validate()?;
    if n == 0 {
        return Err(CalibrationError::EmptyDataset);
    }
    let beta = Beta::new(spec.beta_a, spec.beta_b)
        .map_err(|e| CalibrationError::InvalidParameter(e.to_string()))?;
    let mut rng = rng::stream(seed, &[]);
    let mut probs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    for _ in 0..n {
        let q: f64 = beta.sample(&mut rng);
        let y = u8::from(rng.random::<f64>() < q);
        probs.push(spec.distort(q));
        labels.push(y);
        rates.push(q);
    }
    Ok((CalibrationDataset::new(probs, labels)?, rates))
}

/// Two-population fixture: each record carries a group flag (0 or 1); group
/// 0 is distorted with `spec`, group 1 with the reciprocal severity, so the
/// flag is informative about the calibration map.
pub fn generate_grouped(
    n: usize,
    spec: &DistortionSpec,
    seed: u64,
) -> Result<(CalibrationDataset, Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    if !spec.is_sigmoid() || spec.k <= 0.0 {
        return Err(CalibrationError::InvalidParameter(
            "grouped fixture needs a sigmoid distortion".into(),
        ));
    }
    if n == 0 {
        return Err(CalibrationError::EmptyDataset);
    }
    let mirrored = DistortionSpec::sigmoid(1.0 / spec.k);
    let beta = Beta::new(spec.beta_a, spec.beta_b)
        .map_err(|e| CalibrationError::InvalidParameter(e.to_string()))?;
    let mut rng = rng::stream(seed, &[1]);
    let (mut probs, mut labels, mut groups, mut rates) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let q: f64 = beta.sample(&mut rng);
        let y = u8::from(rng.random::<f64>() < q);
        let group = rng.random::<bool>();
        probs.push(if group { mirrored.distort(q) } else { spec.distort(q) });
        labels.push(y);
        groups.push(if group { 1.0 } else { 0.0 });
        rates.push(q);
    }
    Ok((CalibrationDataset::new(probs, labels)?, groups, rates))
}

/// The true calibration map for `spec`: `σ(logit(p) / k)` for the sigmoid
/// kinds, `clamp(p - k, 0, 1)` for shift.
pub fn oracle_calibration(spec: &DistortionSpec, p: f64) -> Result<f64> {
    spec.validate()?;
    if spec.is_sigmoid() {
        if !(p > 0.0 && p < 1.0) {
            return Err(CalibrationError::InvalidParameter(format!(
                "logit undefined at p = {p}"
            )));
        }
        if spec.k == 1.0 {
            return Ok(p);
        }
        Ok(sigmoid((p.ln() - (-p).ln_1p()) / spec.k))
    } else {
        if !(0.0..=1.0).contains(&p) {
            return Err(CalibrationError::ProbabilityOutOfRange(p));
        }
        Ok((p - spec.k).clamp(0.0, 1.0))
    }
}

/// Writes the extended `p,y,q` CSV.
pub fn save_with_rates(
    d: &CalibrationDataset,
    rates: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    save_csv_with_columns(d, &[("q", rates)], path)
}
