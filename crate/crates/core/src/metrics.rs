//! Reliability binning, expected calibration error, AUC and log loss.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::CalibrationDataset;
use crate::error::{CalibrationError, Result};

pub const DEFAULT_BINS: usize = 10;

/// Index of the equal-width bin containing `p`.
///
/// Bin `m` covers `[m/M, (m+1)/M)`; the last bin also takes `p = 1`. The
/// edges are the floating-point values `m as f64 / M as f64`, so this agrees
/// exactly with a direct interval test.
pub fn equal_width_bin(p: f64, bins: usize) -> usize {
    debug_assert!(bins >= 1);
    let m = bins as f64;
    let mut b = ((p * m).floor().max(0.0) as usize).min(bins - 1);
    if b > 0 && p < b as f64 / m {
        b -= 1;
    } else if b + 1 < bins && p >= (b + 1) as f64 / m {
        b += 1;
    }
    b
}

/// One bin of a reliability diagram. The means are `None` for empty bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub bin_index: usize,
    pub count: usize,
    pub mean_pred: Option<f64>,
    pub empirical: Option<f64>,
}

pub fn bin_reliability(d: &CalibrationDataset, bins: usize) -> Result<Vec<ReliabilityBin>> {
    if bins == 0 {
        return Err(CalibrationError::InvalidParameter(
            "bin count must be at least 1".into(),
        ));
    }
    let mut count = vec![0usize; bins];
    let mut sum_p = vec![0.0f64; bins];
    let mut sum_y = vec![0.0f64; bins];
    for (p, y) in d.iter() {
        let b = equal_width_bin(p, bins);
        count[b] += 1;
        sum_p[b] += p;
        sum_y[b] += f64::from(y);
    }
    Ok((0..bins)
        .map(|b| {
            let (mean_pred, empirical) = if count[b] > 0 {
                let n = count[b] as f64;
                (Some(sum_p[b] / n), Some(sum_y[b] / n))
            } else {
                (None, None)
            };
            ReliabilityBin {
                bin_index: b,
                count: count[b],
                mean_pred,
                empirical,
            }
        })
        .collect())
}

/// Expected calibration error with bins weighted by `|B_m| / n`.
pub fn ece(d: &CalibrationDataset, bins: usize) -> Result<f64> {
    if d.is_empty() {
        return Err(CalibrationError::EmptyDataset);
    }
    let n = d.len() as f64;
    let total = bin_reliability(d, bins)?
        .iter()
        .filter_map(|b| match (b.mean_pred, b.empirical) {
            (Some(mp), Some(my)) => Some(b.count as f64 / n * (my - mp).abs()),
            _ => None,
        })
        .sum::<f64>();
    Ok(total.clamp(0.0, 1.0))
}

/// Area under the ROC curve via the Mann-Whitney statistic, ties credited ½.
/// `None` when one class is absent.
pub fn auc(d: &CalibrationDataset) -> Option<f64> {
    let n_pos = d.positives();
    let n_neg = d.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<(f64, u8)> = d.iter().collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    // wins are counted in half-units so the sum stays an exact integer
    let mut half_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < order.len() && order[j].0 == order[i].0 {
            if order[j].1 == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        half_wins += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Some(half_wins as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Mean negative log-likelihood with probabilities clipped into
/// `[clip, 1 - clip]`.
pub fn log_loss(d: &CalibrationDataset, clip: f64) -> Result<f64> {
    if d.is_empty() {
        return Err(CalibrationError::EmptyDataset);
    }
    if !(clip > 0.0 && clip < 0.5) {
        return Err(CalibrationError::InvalidParameter(format!(
            "clip {clip} must lie in (0, 0.5)"
        )));
    }
    let total: f64 = d
        .iter()
        .map(|(p, y)| {
            let p = p.clamp(clip, 1.0 - clip);
            if y == 1 {
                -p.ln()
            } else {
                -(-p).ln_1p()
            }
        })
        .sum();
    Ok(total / d.len() as f64)
}

/// `bin_index,count,mean_pred,empirical`, empty fields for empty bins.
pub fn reliability_csv(bins: &[ReliabilityBin]) -> String {
    let mut out = String::from("bin_index,count,mean_pred,empirical\n");
    for b in bins {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            b.bin_index,
            b.count,
            fmt(b.mean_pred),
            fmt(b.empirical)
        );
    }
    out
}

/// `100 * (after - before) / before`; undefined when `before` is zero.
pub fn percent_change(before: f64, after: f64) -> Option<f64> {
    if before > 0.0 {
        Some(100.0 * (after - before) / before)
    } else {
        None
    }
}

/// Before/after comparison for one calibrator on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub method: String,
    pub ece_before: f64,
    pub ece_after: f64,
    pub auc_before: Option<f64>,
    pub auc_after: Option<f64>,
    pub ece_delta_pct: Option<f64>,
    pub auc_delta_pct: Option<f64>,
}

impl EvalRecord {
    /// Evaluates calibrated probabilities `after` against the raw `before`
    /// dataset (same labels).
    pub fn compute(
        method: impl Into<String>,
        before: &CalibrationDataset,
        after: &CalibrationDataset,
        bins: usize,
    ) -> Result<Self> {
        if before.labels() != after.labels() {
            return Err(CalibrationError::InvalidParameter(
                "before/after datasets carry different labels".into(),
            ));
        }
        let ece_before = ece(before, bins)?;
        let ece_after = ece(after, bins)?;
        let auc_before = auc(before);
        let auc_after = auc(after);
        let auc_delta_pct = match (auc_before, auc_after) {
            (Some(b), Some(a)) => percent_change(b, a),
            _ => None,
        };
        Ok(EvalRecord {
            method: method.into(),
            ece_before,
            ece_after,
            auc_before,
            auc_after,
            ece_delta_pct: percent_change(ece_before, ece_after),
            auc_delta_pct,
        })
    }
}

/// Per-calibrator evaluation records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "method,ece_before,ece_after,auc_before,auc_after,ece_delta_pct,auc_delta_pct";

    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method,
                r.ece_before,
                r.ece_after,
                fmt(r.auc_before),
                fmt(r.auc_after),
                fmt(r.ece_delta_pct),
                fmt(r.auc_delta_pct)
            );
        }
        out
    }
}
