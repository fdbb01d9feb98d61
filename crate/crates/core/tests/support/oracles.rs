//! Straightforward reference implementations used to check the library.
//! Each one follows the defining formula directly and shares no code with
//! the implementation it checks.

#![allow(dead_code)]

/// ECE by explicit interval membership, `|B_m| / n` weighting.
pub fn ece(probs: &[f64], labels: &[u8], bins: usize) -> f64 {
    let n = probs.len() as f64;
    let mut total = 0.0;
    for m in 0..bins {
        let lo = m as f64 / bins as f64;
        let hi = (m + 1) as f64 / bins as f64;
        let members: Vec<usize> = (0..probs.len())
            .filter(|&i| {
                let p = probs[i];
                p >= lo && (p < hi || (m == bins - 1 && p <= hi))
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len() as f64;
        let mean_p: f64 = members.iter().map(|&i| probs[i]).sum::<f64>() / k;
        let mean_y: f64 = members.iter().map(|&i| labels[i] as f64).sum::<f64>() / k;
        total += k / n * (mean_y - mean_p).abs();
    }
    total
}

/// AUC by enumerating every (positive, negative) pair.
pub fn auc(probs: &[f64], labels: &[u8]) -> Option<f64> {
    let mut score = 0.0;
    let mut pairs = 0u64;
    for i in 0..probs.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..probs.len() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1;
            if probs[i] > probs[j] {
                score += 1.0;
            } else if probs[i] == probs[j] {
                score += 0.5;
            }
        }
    }
    (pairs > 0).then(|| score / pairs as f64)
}

/// Monotone weighted least squares by enumerating every partition of the
/// ordered points into contiguous blocks. The optimum is block-constant at
/// block means, so the best monotone candidate is the exact solution.
pub fn isotonic_brute_force(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    assert!((1..=16).contains(&n));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        // bit i set => cut between i and i+1
        let mut fitted = vec![0.0; n];
        let mut start = 0;
        let mut means = Vec::new();
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let sw: f64 = w[start..end].iter().sum();
                let swy: f64 = (start..end).map(|i| w[i] * y[i]).sum();
                let m = swy / sw;
                fitted[start..end].iter_mut().for_each(|v| *v = m);
                means.push(m);
                start = end;
            }
        }
        if means.windows(2).any(|p| p[0] > p[1]) {
            continue;
        }
        let sse: f64 = (0..n).map(|i| w[i] * (y[i] - fitted[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, fitted));
        }
    }
    best.unwrap().1
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Beta(1,1)-Bernoulli marginal likelihood of one bin, `B(n1+1, n0+1)`.
fn bin_marginal(n1: usize, n0: usize) -> f64 {
    factorial(n1) * factorial(n0) / factorial(n1 + n0 + 1)
}

pub struct BbqOracle {
    pub log_scores: Vec<f64>,
    pub weights: Vec<f64>,
    models: Vec<(Vec<f64>, Vec<f64>)>,
}

impl BbqOracle {
    /// Enumerates every candidate equal-frequency binning with bin counts
    /// in `max(2, ⌊√n/2⌋) ..= ⌈2√n⌉` and scores each by direct evaluation
    /// of the marginal likelihood (no log-space arithmetic).
    pub fn new(probs: &[f64], labels: &[u8]) -> Self {
        let n = probs.len();
        let mut sorted = probs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let root = (n as f64).sqrt();
        let lo = ((root / 2.0).floor() as usize).max(2);
        let hi = ((2.0 * root).ceil() as usize).max(lo);

        let mut scores = Vec::new();
        let mut models = Vec::new();
        for bins in lo..=hi {
            let mut edges: Vec<f64> = Vec::new();
            for b in 1..bins {
                let k = b * n / bins;
                if k == 0 || k >= n {
                    continue;
                }
                let (a, c) = (sorted[k - 1], sorted[k]);
                let mut e = a + (c - a) * 0.5;
                if e >= c {
                    e = a;
                }
                if edges.last().is_none_or(|&last| e > last) {
                    edges.push(e);
                }
            }
            let bin_of = |p: f64| edges.iter().filter(|&&e| e < p).count();
            let mut n1 = vec![0usize; edges.len() + 1];
            let mut n0 = vec![0usize; edges.len() + 1];
            for (&p, &y) in probs.iter().zip(labels) {
                if y == 1 {
                    n1[bin_of(p)] += 1;
                } else {
                    n0[bin_of(p)] += 1;
                }
            }
            let score: f64 = n1.iter().zip(&n0).map(|(&a, &b)| bin_marginal(a, b)).product();
            let rates: Vec<f64> = n1
                .iter()
                .zip(&n0)
                .map(|(&a, &b)| (a as f64 + 1.0) / ((a + b) as f64 + 2.0))
                .collect();
            scores.push(score);
            models.push((edges, rates));
        }
        let total: f64 = scores.iter().sum();
        BbqOracle {
            log_scores: scores.iter().map(|s| s.ln()).collect(),
            weights: scores.iter().map(|s| s / total).collect(),
            models,
        }
    }

    pub fn calibrate(&self, p: f64) -> f64 {
        self.models
            .iter()
            .zip(&self.weights)
            .map(|((edges, rates), w)| w * rates[edges.iter().filter(|&&e| e < p).count()])
            .sum()
    }
}

/// Platt objective written out directly from its definition.
fn platt_nll(z: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for (&zi, &ti) in z.iter().zip(t) {
        let s = 1.0 / (1.0 + (-(a * zi + b)).exp());
        total -= ti * s.ln() + (1.0 - ti) * (1.0 - s).ln();
    }
    total / z.len() as f64
}

/// Coarse grid over `[-10, 10]²` followed by successively finer local grids.
pub fn platt_grid_search(z: &[f64], t: &[f64]) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut best_f = f64::INFINITY;
    let mut step = 0.25;
    for i in -40..=40 {
        for j in -40..=40 {
            let (a, b) = (i as f64 * step, j as f64 * step);
            let f = platt_nll(z, t, a, b);
            if f < best_f {
                best_f = f;
                best = (a, b);
            }
        }
    }
    while step > 1e-9 {
        let (ca, cb) = best;
        for i in -10..=10 {
            for j in -10..=10 {
                let (a, b) = (ca + i as f64 * step / 5.0, cb + j as f64 * step / 5.0);
                let f = platt_nll(z, t, a, b);
                if f < best_f {
                    best_f = f;
                    best = (a, b);
                }
            }
        }
        step /= 5.0;
    }
    best
}
