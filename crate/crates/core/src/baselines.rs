//! Comparison calibrators and the tagged [`Calibrator`] envelope shared by
//! every method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::CalibrationDataset;
use crate::error::{CalibrationError, Result};
use crate::forecal::{ForecalCalibrator, ForecalConfig};
use crate::metrics::{equal_width_bin, DEFAULT_BINS};

/// Clip applied to probabilities before taking logits for Platt and
/// temperature fitting.
pub const LOGIT_CLIP: f64 = 1e-6;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(p / (1 - p))` with `p` clipped into `[clip, 1 - clip]`.
pub fn to_logit(p: f64, clip: f64) -> Result<f64> {
    if !(clip > 0.0 && clip < 0.5) {
        return Err(CalibrationError::InvalidParameter(format!(
            "clip {clip} must lie in (0, 0.5)"
        )));
    }
    Ok(logit(p.clamp(clip, 1.0 - clip)))
}

/// Unclipped logit; ±∞ at the endpoints.
fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// `ln(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(CalibrationError::ProbabilityOutOfRange(p))
    }
}

fn require_both_classes(d: &CalibrationDataset, method: &'static str) -> Result<()> {
    let pos = d.positives();
    if pos == 0 || pos == d.len() {
        return Err(CalibrationError::SingleClass(method));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Platt scaling

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

const PLATT_MAX_ITER: usize = 100;
const PLATT_GRAD_TOL: f64 = 1e-10;

/// Mean logistic loss of `sigmoid(a z + b)` against soft targets.
pub fn platt_objective(z: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    z.iter()
        .zip(targets)
        .map(|(&z, &t)| {
            let u = a * z + b;
            softplus(u) - t * u
        })
        .sum::<f64>()
        / z.len() as f64
}

/// Platt's smoothed targets: `(N+ + 1) / (N+ + 2)` for positives and
/// `1 / (N- + 2)` for negatives.
pub fn platt_targets(d: &CalibrationDataset) -> Vec<f64> {
    let n_pos = d.positives() as f64;
    let n_neg = (d.len() - d.positives()) as f64;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    d.labels().iter().map(|&y| if y == 1 { hi } else { lo }).collect()
}

/// Damped Newton minimisation of the logistic loss over `(a, b)`.
pub fn fit_platt(d: &CalibrationDataset) -> Result<PlattParams> {
    require_both_classes(d, "Platt scaling")?;
    let z: Vec<f64> = d
        .probs()
        .iter()
        .map(|&p| to_logit(p, LOGIT_CLIP))
        .collect::<Result<_>>()?;
    let t = platt_targets(d);
    let n = z.len() as f64;

    let (mut a, mut b) = (1.0, 0.0);
    let mut f = platt_objective(&z, &t, a, b);
    for _ in 0..PLATT_MAX_ITER {
        let (mut ga, mut gb) = (0.0, 0.0);
        let (mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0);
        for (&zi, &ti) in z.iter().zip(&t) {
            let s = sigmoid(a * zi + b);
            let r = s - ti;
            let v = s * (1.0 - s);
            ga += r * zi;
            gb += r;
            haa += v * zi * zi;
            hab += v * zi;
            hbb += v;
        }
        let (ga, gb) = (ga / n, gb / n);
        if ga.hypot(gb) < PLATT_GRAD_TOL {
            break;
        }
        let ridge = 1e-12;
        let (haa, hab, hbb) = (haa / n + ridge, hab / n, hbb / n + ridge);
        let det = haa * hbb - hab * hab;
        let (da, db) = if det > 0.0 {
            (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det)
        } else {
            (-ga, -gb)
        };

        let slope = ga * da + gb * db;
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_objective(&z, &t, na, nb);
            if nf <= f + 1e-4 * step * slope {
                a = na;
                b = nb;
                f = nf;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(PlattParams { a, b })
}

impl PlattParams {
    pub fn calibrate(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        if self.a == 0.0 {
            return Ok(sigmoid(self.b));
        }
        Ok(sigmoid(self.a * logit(p) + self.b).clamp(0.0, 1.0))
    }
}

// ---------------------------------------------------------------------------
// Temperature scaling

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureParams {
    pub t: f64,
}

pub const TEMPERATURE_BRACKET: (f64, f64) = (0.05, 20.0);
const GOLDEN_WIDTH: f64 = 1e-8;

/// Mean negative log-likelihood of `sigmoid(z / t)`.
pub fn temperature_objective(z: &[f64], labels: &[u8], t: f64) -> f64 {
    z.iter()
        .zip(labels)
        .map(|(&z, &y)| {
            let u = z / t;
            softplus(u) - f64::from(y) * u
        })
        .sum::<f64>()
        / z.len() as f64
}

/// Golden-section search on `ln t` over [`TEMPERATURE_BRACKET`].
pub fn fit_temperature(d: &CalibrationDataset) -> Result<TemperatureParams> {
    require_both_classes(d, "temperature scaling")?;
    let z: Vec<f64> = d
        .probs()
        .iter()
        .map(|&p| to_logit(p, LOGIT_CLIP))
        .collect::<Result<_>>()?;
    let objective = |s: f64| temperature_objective(&z, d.labels(), s.exp());

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (TEMPERATURE_BRACKET.0.ln(), TEMPERATURE_BRACKET.1.ln());
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > GOLDEN_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    Ok(TemperatureParams {
        t: (0.5 * (lo + hi)).exp(),
    })
}

impl TemperatureParams {
    pub fn calibrate(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        if self.t == 1.0 {
            return Ok(p);
        }
        Ok(sigmoid(logit(p) / self.t).clamp(0.0, 1.0))
    }
}

// ---------------------------------------------------------------------------
// Isotonic regression

/// Non-decreasing step function: `values[i]` applies from `breakpoints[i]`
/// up to the next breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// Pool-adjacent-violators: weighted least-squares non-decreasing fit of
/// `y` in the given order.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // (weighted sum, total weight, element count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((wi * yi, wi, 1));
        while blocks.len() > 1 {
            let (s1, w1, _) = blocks[blocks.len() - 2];
            let (s2, w2, _) = blocks[blocks.len() - 1];
            if s1 / w1 <= s2 / w2 {
                break;
            }
            let (s, w_, c) = blocks.pop().unwrap();
            let last = blocks.last_mut().unwrap();
            last.0 += s;
            last.1 += w_;
            last.2 += c;
        }
    }
    blocks
        .iter()
        .flat_map(|&(s, w, c)| std::iter::repeat_n(s / w, c))
        .collect()
}

/// Weighted isotonic fit of `y` on `x`. Equal `x` values are first merged
/// into one point carrying their weighted mean and total weight.
pub fn isotonic_regression(x: &[f64], y: &[f64], w: &[f64]) -> Result<IsotonicFit> {
    if x.is_empty() {
        return Err(CalibrationError::EmptyDataset);
    }
    if y.len() != x.len() || w.len() != x.len() {
        return Err(CalibrationError::DimensionMismatch {
            expected: x.len(),
            actual: y.len().min(w.len()),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) || w.iter().any(|&v| !(v > 0.0)) {
        return Err(CalibrationError::InvalidParameter(
            "isotonic inputs must be finite with positive weights".into(),
        ));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));

    let mut xs: Vec<f64> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for &i in &order {
        if xs.last() == Some(&x[i]) {
            *sums.last_mut().unwrap() += w[i] * y[i];
            *weights.last_mut().unwrap() += w[i];
        } else {
            xs.push(x[i]);
            sums.push(w[i] * y[i]);
            weights.push(w[i]);
        }
    }
    let means: Vec<f64> = sums.iter().zip(&weights).map(|(s, w)| s / w).collect();
    Ok(IsotonicFit {
        breakpoints: xs,
        values: pava(&means, &weights),
    })
}

pub fn fit_isotonic(d: &CalibrationDataset) -> Result<IsotonicFit> {
    let y: Vec<f64> = d.labels().iter().map(|&v| f64::from(v)).collect();
    let w = vec![1.0; d.len()];
    isotonic_regression(d.probs(), &y, &w)
}

impl IsotonicFit {
    /// Step lookup; inputs left of the first breakpoint take the first value.
    pub fn predict(&self, p: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= p);
        self.values[idx.saturating_sub(1)]
    }

    pub fn calibrate(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.predict(p).clamp(0.0, 1.0))
    }
}

// ---------------------------------------------------------------------------
// Histogram binning

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramFit {
    /// empirical rate per equal-width bin, `None` where the bin was empty
    pub values: Vec<Option<f64>>,
}

pub fn fit_histogram(d: &CalibrationDataset, bins: usize) -> Result<HistogramFit> {
    if bins == 0 {
        return Err(CalibrationError::InvalidParameter(
            "bin count must be at least 1".into(),
        ));
    }
    let mut count = vec![0usize; bins];
    let mut pos = vec![0usize; bins];
    for (p, y) in d.iter() {
        let b = equal_width_bin(p, bins);
        count[b] += 1;
        pos[b] += usize::from(y);
    }
    Ok(HistogramFit {
        values: count
            .iter()
            .zip(&pos)
            .map(|(&c, &k)| (c > 0).then(|| k as f64 / c as f64))
            .collect(),
    })
}

impl HistogramFit {
    pub fn calibrate(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let m = self.values.len();
        let b = equal_width_bin(p, m);
        if let Some(v) = self.values[b] {
            return Ok(v);
        }
        // nearest non-empty bin by center distance, lower side first
        for k in 1..m {
            if let Some(Some(v)) = b.checked_sub(k).map(|i| self.values[i]) {
                return Ok(v);
            }
            if let Some(Some(v)) = self.values.get(b + k) {
                return Ok(*v);
            }
        }
        Err(CalibrationError::Format("histogram has no non-empty bins".into()))
    }
}

// ---------------------------------------------------------------------------
// Bayesian binning into quantiles (uniform-prior ensemble)

/// One equal-frequency binning: samples with `p <= edges[0]` fall in bin 0,
/// and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbqModel {
    pub edges: Vec<f64>,
    /// posterior-mean rate `(n1 + 1) / (n + 2)` per bin
    pub rates: Vec<f64>,
    /// log marginal likelihood of the binning
    pub log_score: f64,
}

impl BbqModel {
    pub fn bin(&self, p: f64) -> usize {
        self.edges.partition_point(|&e| e < p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbqFit {
    pub models: Vec<BbqModel>,
    pub weights: Vec<f64>,
}

/// Candidate bin counts `max(2, ⌊√n / 2⌋) ..= ⌈2√n⌉`.
pub fn bbq_bin_counts(n: usize) -> std::ops::RangeInclusive<usize> {
    let root = (n as f64).sqrt();
    let lo = ((root / 2.0).floor() as usize).max(2);
    let hi = ((2.0 * root).ceil() as usize).max(lo);
    lo..=hi
}

/// Edges of the equal-frequency binning of `sorted` into `bins` groups:
/// midpoints between the last member of one group and the first of the
/// next, with duplicates removed.
pub fn equal_frequency_edges(sorted: &[f64], bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut edges: Vec<f64> = Vec::with_capacity(bins.saturating_sub(1));
    for b in 1..bins {
        let k = b * n / bins;
        if k == 0 || k >= n {
            continue;
        }
        let (lo, hi) = (sorted[k - 1], sorted[k]);
        let mut e = lo + (hi - lo) * 0.5;
        if e >= hi {
            e = lo;
        }
        if edges.last().is_none_or(|&last| e > last) {
            edges.push(e);
        }
    }
    edges
}

pub fn fit_bbq(d: &CalibrationDataset) -> Result<BbqFit> {
    if d.is_empty() {
        return Err(CalibrationError::EmptyDataset);
    }
    let n = d.len();
    let mut sorted = d.probs().to_vec();
    sorted.sort_by(f64::total_cmp);

    // ln k! for k = 0..=n+1
    let mut ln_fact = vec![0.0f64; n + 2];
    for k in 1..ln_fact.len() {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }

    let mut models = Vec::new();
    for bins in bbq_bin_counts(n) {
        let edges = equal_frequency_edges(&sorted, bins);
        let mut pos = vec![0usize; edges.len() + 1];
        let mut tot = vec![0usize; edges.len() + 1];
        let probe = BbqModel {
            edges,
            rates: Vec::new(),
            log_score: 0.0,
        };
        for (p, y) in d.iter() {
            let b = probe.bin(p);
            tot[b] += 1;
            pos[b] += usize::from(y);
        }
        // Beta(1,1) marginal likelihood: B(n1 + 1, n0 + 1) = n1! n0! / (n + 1)!
        let log_score = pos
            .iter()
            .zip(&tot)
            .map(|(&k, &m)| ln_fact[k] + ln_fact[m - k] - ln_fact[m + 1])
            .sum();
        let rates = pos
            .iter()
            .zip(&tot)
            .map(|(&k, &m)| (k as f64 + 1.0) / (m as f64 + 2.0))
            .collect();
        models.push(BbqModel {
            edges: probe.edges,
            rates,
            log_score,
        });
    }

    let max = models
        .iter()
        .map(|m| m.log_score)
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = models.iter().map(|m| (m.log_score - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|r| r / total).collect();
    Ok(BbqFit { models, weights })
}

impl BbqFit {
    pub fn calibrate(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let v: f64 = self
            .models
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * m.rates[m.bin(p)])
            .sum();
        Ok(v.clamp(0.0, 1.0))
    }
}

// ---------------------------------------------------------------------------
// Common envelope

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Platt,
    Temperature,
    Isotonic,
    Histogram,
    Bbq,
    Forecal,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Bbq,
        Method::Forecal,
        Method::Histogram,
        Method::Isotonic,
        Method::Platt,
        Method::Temperature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Platt => "platt",
            Method::Temperature => "temperature",
            Method::Isotonic => "isotonic",
            Method::Histogram => "histogram",
            Method::Bbq => "bbq",
            Method::Forecal => "forecal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "platt" => Ok(Method::Platt),
            "temperature" | "tempscaler" => Ok(Method::Temperature),
            "isotonic" => Ok(Method::Isotonic),
            "histogram" | "hist-binning" => Ok(Method::Histogram),
            "bbq" => Ok(Method::Bbq),
            "forecal" => Ok(Method::Forecal),
            other => Err(CalibrationError::InvalidParameter(format!(
                "unknown method `{other}`"
            ))),
        }
    }
}

/// Method-specific fitting knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub histogram_bins: usize,
    pub forecal: ForecalConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            histogram_bins: DEFAULT_BINS,
            forecal: ForecalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "params", rename_all = "lowercase")]
pub enum Calibrator {
    Platt(PlattParams),
    Temperature(TemperatureParams),
    Isotonic(IsotonicFit),
    Histogram(HistogramFit),
    Bbq(BbqFit),
    Forecal(ForecalCalibrator),
}

const CALIBRATOR_FORMAT: &str = "forecal-calibrator";
const CALIBRATOR_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CalibratorEnvelope {
    format: String,
    version: u32,
    calibrator: Calibrator,
}

impl Calibrator {
    pub fn fit(method: Method, d: &CalibrationDataset, options: &FitOptions) -> Result<Self> {
        Ok(match method {
            Method::Platt => Calibrator::Platt(fit_platt(d)?),
            Method::Temperature => Calibrator::Temperature(fit_temperature(d)?),
            Method::Isotonic => Calibrator::Isotonic(fit_isotonic(d)?),
            Method::Histogram => Calibrator::Histogram(fit_histogram(d, options.histogram_bins)?),
            Method::Bbq => Calibrator::Bbq(fit_bbq(d)?),
            Method::Forecal => Calibrator::Forecal(ForecalCalibrator::fit(d, &options.forecal)?),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Calibrator::Platt(_) => Method::Platt,
            Calibrator::Temperature(_) => Method::Temperature,
            Calibrator::Isotonic(_) => Method::Isotonic,
            Calibrator::Histogram(_) => Method::Histogram,
            Calibrator::Bbq(_) => Method::Bbq,
            Calibrator::Forecal(_) => Method::Forecal,
        }
    }

    pub fn calibrate(&self, p: f64) -> Result<f64> {
        match self {
            Calibrator::Platt(c) => c.calibrate(p),
            Calibrator::Temperature(c) => c.calibrate(p),
            Calibrator::Isotonic(c) => c.calibrate(p),
            Calibrator::Histogram(c) => c.calibrate(p),
            Calibrator::Bbq(c) => c.calibrate(p),
            Calibrator::Forecal(c) => c.calibrate(p),
        }
    }

    /// Calibrates every probability of `d`, keeping its labels.
    pub fn apply(&self, d: &CalibrationDataset) -> Result<CalibrationDataset> {
        let probs = d
            .probs()
            .iter()
            .map(|&p| self.calibrate(p))
            .collect::<Result<Vec<_>>>()?;
        d.with_probs(probs)
    }

    /// One-line description of the fitted parameters.
    pub fn summary(&self) -> String {
        match self {
            Calibrator::Platt(c) => format!("a={:.6} b={:.6}", c.a, c.b),
            Calibrator::Temperature(c) => format!("t={:.6}", c.t),
            Calibrator::Isotonic(c) => {
                let blocks = 1 + c.values.windows(2).filter(|w| w[0] != w[1]).count();
                format!("points={} blocks={}", c.breakpoints.len(), blocks)
            }
            Calibrator::Histogram(c) => format!(
                "bins={} empty={}",
                c.values.len(),
                c.values.iter().filter(|v| v.is_none()).count()
            ),
            Calibrator::Bbq(c) => {
                let best = c
                    .weights
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| c.models[i].rates.len())
                    .unwrap_or(0);
                format!("models={} map_bins={}", c.models.len(), best)
            }
            Calibrator::Forecal(c) => format!(
                "bins={} bootstrap={} trees={} min_leaf={}",
                c.config().n_bins,
                c.config().n_bootstrap,
                c.forest().params().n_trees,
                c.forest().params().min_samples_leaf
            ),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&CalibratorEnvelope {
            format: CALIBRATOR_FORMAT.into(),
            version: CALIBRATOR_VERSION,
            calibrator: self.clone(),
        })
        .map_err(|e| CalibrationError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: CalibratorEnvelope =
            serde_json::from_str(text).map_err(|e| CalibrationError::Format(e.to_string()))?;
        if env.format != CALIBRATOR_FORMAT || env.version != CALIBRATOR_VERSION {
            return Err(CalibrationError::Format(format!(
                "unsupported model format {} v{}",
                env.format, env.version
            )));
        }
        Ok(env.calibrator)
    }
}
