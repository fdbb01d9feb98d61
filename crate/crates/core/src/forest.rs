//! Weighted regression forests with per-feature monotonicity constraints.
//!
//! Trees are grown by exhaustive weighted-variance-reduction search. A split
//! on a constrained feature is admissible only if the children's weighted
//! means are ordered in the constrained direction; the midpoint of the two
//! child values then becomes an upper bound for the lower side and a lower
//! bound for the upper side, and every leaf below is clamped into the bounds
//! it inherits. Leaves are weighted means of their targets, so predictions
//! never leave the range of the training targets.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CalibrationError, Result};
use crate::rng;

/// Direction of the constraint on one feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Decreasing,
    Unconstrained,
    Increasing,
}

impl Monotonicity {
    pub fn from_sign(sign: i8) -> Result<Self> {
        match sign {
            -1 => Ok(Monotonicity::Decreasing),
            0 => Ok(Monotonicity::Unconstrained),
            1 => Ok(Monotonicity::Increasing),
            other => Err(CalibrationError::InvalidParameter(format!(
                "monotonicity sign must be -1, 0 or 1, got {other}"
            ))),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Monotonicity::Decreasing => -1,
            Monotonicity::Unconstrained => 0,
            Monotonicity::Increasing => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintVector(Vec<Monotonicity>);

impl ConstraintVector {
    pub fn new(directions: Vec<Monotonicity>) -> Self {
        ConstraintVector(directions)
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        signs
            .iter()
            .map(|&s| Monotonicity::from_sign(s))
            .collect::<Result<Vec<_>>>()
            .map(ConstraintVector)
    }

    pub fn unconstrained(dim: usize) -> Self {
        ConstraintVector(vec![Monotonicity::Unconstrained; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, feature: usize) -> Option<Monotonicity> {
        self.0.get(feature).copied()
    }

    pub fn as_slice(&self) -> &[Monotonicity] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            min_samples_leaf: 5,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(CalibrationError::InvalidParameter("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(CalibrationError::InvalidParameter(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(CalibrationError::InvalidParameter("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Dense row-major sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CalibrationError::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(CalibrationError::InvalidParameter(format!(
                "feature value {bad} is not finite"
            )));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(CalibrationError::DimensionMismatch {
                expected: cols,
                actual: r.len(),
            });
        }
        FeatureMatrix::new(rows.len(), cols, rows.concat())
    }

    /// Single-feature matrix.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        FeatureMatrix::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

fn to_bound(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// A tree node. Samples with `x[feature] <= threshold` go left. `lower` and
/// `upper` are the value bounds that were active while the node was fit
/// (`None` = unbounded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        lower: Option<f64>,
        upper: Option<f64>,
    },
    Leaf {
        value: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Builds a tree from an explicit node list rooted at index 0. Child
    /// indices must point forward so the structure is acyclic.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(CalibrationError::Format("tree has no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if *left <= i || *right <= i || *left >= nodes.len() || *right >= nodes.len() {
                        return Err(CalibrationError::Format(format!(
                            "node {i} has invalid children ({left}, {right})"
                        )));
                    }
                    if threshold.is_nan() {
                        return Err(CalibrationError::Format(format!("node {i} threshold is NaN")));
                    }
                }
                Node::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return Err(CalibrationError::Format(format!(
                            "leaf {i} value is not finite"
                        )));
                    }
                }
            }
        }
        Ok(RegressionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Training rows after bootstrap aggregation: `count` is the multiplicity
/// used for `min_samples_leaf`, `weight` enters the split criterion.
struct TreeSamples<'a> {
    x: &'a FeatureMatrix,
    rows: Vec<usize>,
    y: Vec<f64>,
    weight: Vec<f64>,
    count: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// number of samples (positions in the sorted order) on the left
    left_len: usize,
    gain: f64,
    left_value: f64,
    right_value: f64,
}

struct Pending {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
    lower: f64,
    upper: f64,
}

struct TreeBuilder<'a> {
    samples: TreeSamples<'a>,
    constraints: &'a ConstraintVector,
    min_samples_leaf: usize,
    max_depth: Option<usize>,
    /// one permutation of sample positions per feature; every pending node
    /// owns the same `[start, end)` range in all of them
    order: Vec<Vec<usize>>,
    goes_left: Vec<bool>,
    scratch: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn new(
        samples: TreeSamples<'a>,
        constraints: &'a ConstraintVector,
        params: &ForestParams,
    ) -> Self {
        let m = samples.rows.len();
        let order = (0..samples.x.cols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..m).collect();
                idx.sort_by(|&a, &b| {
                    samples
                        .x
                        .at(samples.rows[a], f)
                        .total_cmp(&samples.x.at(samples.rows[b], f))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        TreeBuilder {
            constraints,
            min_samples_leaf: params.min_samples_leaf,
            max_depth: params.max_depth,
            order,
            goes_left: vec![false; m],
            scratch: Vec::with_capacity(m),
            nodes: Vec::new(),
            samples,
        }
    }

    fn positions(&self, start: usize, end: usize) -> &[usize] {
        // feature 0's order is as good as any for whole-node statistics
        match self.order.first() {
            Some(o) => &o[start..end],
            None => &[],
        }
    }

    /// Weighted mean clamped into the targets' own range, so rounding cannot
    /// push it outside the hull.
    fn node_value(&self, positions: &[usize]) -> (f64, f64, f64) {
        let s = &self.samples;
        let (mut w, mut wy) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in positions {
            w += s.weight[p];
            wy += s.weight[p] * s.y[p];
            lo = lo.min(s.y[p]);
            hi = hi.max(s.y[p]);
        }
        ((wy / w).clamp(lo, hi), lo, hi)
    }

    fn build(mut self) -> RegressionTree {
        let m = self.samples.rows.len();
        let mut stack = vec![Pending {
            node: 0,
            start: 0,
            end: m,
            depth: 0,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }];
        self.nodes.push(Node::Leaf {
            value: 0.0,
            lower: None,
            upper: None,
        });
        while let Some(task) = stack.pop() {
            let (value, y_lo, y_hi) = self.node_value(self.positions(task.start, task.end));
            let count: usize = self
                .positions(task.start, task.end)
                .iter()
                .map(|&p| self.samples.count[p])
                .sum();
            let can_split = y_lo < y_hi
                && count >= 2 * self.min_samples_leaf
                && self.max_depth.is_none_or(|d| task.depth < d);
            let split = if can_split {
                self.find_split(task.start, task.end, value, task.lower, task.upper)
            } else {
                None
            };
            let Some(split) = split else {
                self.nodes[task.node] = Node::Leaf {
                    value: value.clamp(task.lower, task.upper),
                    lower: to_bound(task.lower),
                    upper: to_bound(task.upper),
                };
                continue;
            };

            let mid = 0.5 * (split.left_value + split.right_value);
            let (left_bounds, right_bounds) = match self.constraints.as_slice()[split.feature] {
                Monotonicity::Increasing => (
                    (task.lower, task.upper.min(mid)),
                    (task.lower.max(mid), task.upper),
                ),
                Monotonicity::Decreasing => (
                    (task.lower.max(mid), task.upper),
                    (task.lower, task.upper.min(mid)),
                ),
                Monotonicity::Unconstrained => {
                    ((task.lower, task.upper), (task.lower, task.upper))
                }
            };

            self.partition(task.start, task.end, split.feature, split.left_len);
            let left = self.nodes.len();
            let right = left + 1;
            for _ in 0..2 {
                self.nodes.push(Node::Leaf {
                    value: 0.0,
                    lower: None,
                    upper: None,
                });
            }
            self.nodes[task.node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
                lower: to_bound(task.lower),
                upper: to_bound(task.upper),
            };
            let mid_pos = task.start + split.left_len;
            stack.push(Pending {
                node: right,
                start: mid_pos,
                end: task.end,
                depth: task.depth + 1,
                lower: right_bounds.0,
                upper: right_bounds.1,
            });
            stack.push(Pending {
                node: left,
                start: task.start,
                end: mid_pos,
                depth: task.depth + 1,
                lower: left_bounds.0,
                upper: left_bounds.1,
            });
        }
        RegressionTree { nodes: self.nodes }
    }

    fn find_split(
        &self,
        start: usize,
        end: usize,
        parent_value: f64,
        lower: f64,
        upper: f64,
    ) -> Option<BestSplit> {
        let s = &self.samples;
        let msl = self.min_samples_leaf;
        let total_count: usize = self.positions(start, end).iter().map(|&p| s.count[p]).sum();
        let (mut total_w, mut total_s) = (0.0, 0.0);
        for &p in self.positions(start, end) {
            total_w += s.weight[p];
            total_s += s.weight[p] * (s.y[p] - parent_value);
        }

        let mut best: Option<BestSplit> = None;
        for (feature, order) in self.order.iter().enumerate() {
            let direction = self.constraints.as_slice()[feature];
            let range = &order[start..end];
            let (mut w_l, mut s_l, mut c_l) = (0.0, 0.0, 0usize);
            for k in 0..range.len() - 1 {
                let p = range[k];
                w_l += s.weight[p];
                s_l += s.weight[p] * (s.y[p] - parent_value);
                c_l += s.count[p];
                let x_here = s.x.at(s.rows[p], feature);
                let x_next = s.x.at(s.rows[range[k + 1]], feature);
                if x_here == x_next {
                    continue;
                }
                let c_r = total_count - c_l;
                if c_l < msl || c_r < msl {
                    continue;
                }
                let w_r = total_w - w_l;
                let s_r = total_s - s_l;
                if w_l <= 0.0 || w_r <= 0.0 {
                    continue;
                }
                let (mean_l, mean_r) = (s_l / w_l, s_r / w_r);
                let admissible = match direction {
                    Monotonicity::Increasing => mean_l <= mean_r,
                    Monotonicity::Decreasing => mean_l >= mean_r,
                    Monotonicity::Unconstrained => true,
                };
                if !admissible {
                    continue;
                }
                let gain = s_l * s_l / w_l + s_r * s_r / w_r;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = x_here + (x_next - x_here) * 0.5;
                    if threshold >= x_next {
                        threshold = x_here;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        left_len: k + 1,
                        gain,
                        left_value: 0.0,
                        right_value: 0.0,
                    });
                }
            }
        }

        let mut best = best?;
        let order = &self.order[best.feature];
        let (left_value, ..) = self.node_value(&order[start..start + best.left_len]);
        let (right_value, ..) = self.node_value(&order[start + best.left_len..end]);
        best.left_value = left_value.clamp(lower, upper);
        best.right_value = right_value.clamp(lower, upper);
        Some(best)
    }

    /// Stable partition of every feature order so the first `left_len`
    /// positions of `[start, end)` are the left child's samples.
    fn partition(&mut self, start: usize, end: usize, feature: usize, left_len: usize) {
        for (k, &p) in self.order[feature][start..end].iter().enumerate() {
            self.goes_left[p] = k < left_len;
        }
        for f in 0..self.order.len() {
            if f == feature {
                continue;
            }
            self.scratch.clear();
            let range = &mut self.order[f][start..end];
            let mut write = 0;
            for k in 0..range.len() {
                let p = range[k];
                if self.goes_left[p] {
                    range[write] = p;
                    write += 1;
                } else {
                    self.scratch.push(p);
                }
            }
            range[write..].copy_from_slice(&self.scratch);
        }
    }
}

/// Ensemble of monotone regression trees; predictions are the tree mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicForest {
    trees: Vec<RegressionTree>,
    params: ForestParams,
    constraints: ConstraintVector,
    /// min and max of the training targets
    target_range: (f64, f64),
}

const FOREST_FORMAT: &str = "forecal-forest";
const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestEnvelope {
    format: String,
    version: u32,
    forest: MonotonicForest,
}

/// Fits a forest on `x` (n × d) with targets `y`, positive weights `w`
/// and one monotonicity direction per feature.
pub fn fit_forest(
    x: &FeatureMatrix,
    y: &[f64],
    w: &[f64],
    constraints: &ConstraintVector,
    params: &ForestParams,
) -> Result<MonotonicForest> {
    params.validate()?;
    let n = x.rows();
    if n == 0 {
        return Err(CalibrationError::EmptyDataset);
    }
    if x.cols() == 0 {
        return Err(CalibrationError::InvalidParameter("feature matrix has no columns".into()));
    }
    if y.len() != n {
        return Err(CalibrationError::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if w.len() != n {
        return Err(CalibrationError::DimensionMismatch {
            expected: n,
            actual: w.len(),
        });
    }
    if constraints.len() != x.cols() {
        return Err(CalibrationError::DimensionMismatch {
            expected: x.cols(),
            actual: constraints.len(),
        });
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(CalibrationError::InvalidParameter(format!("target {bad} is not finite")));
    }
    if let Some(bad) = w.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(CalibrationError::InvalidParameter(format!(
            "sample weight {bad} must be positive and finite"
        )));
    }

    let cumulative: Vec<f64> = w
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect();

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let samples = if params.bootstrap {
                weighted_bootstrap(x, y, &cumulative, params.seed, t as u64)
            } else {
                TreeSamples {
                    x,
                    rows: (0..n).collect(),
                    y: y.to_vec(),
                    weight: w.to_vec(),
                    count: vec![1; n],
                }
            };
            TreeBuilder::new(samples, constraints, params).build()
        })
        .collect();

    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicForest {
        trees,
        params: params.clone(),
        constraints: constraints.clone(),
        target_range: (lo, hi),
    })
}

/// Draws `n` rows with probability proportional to their weights. Each
/// draw contributes unit weight, so the resample itself carries the
/// weighting.
fn weighted_bootstrap<'a>(
    x: &'a FeatureMatrix,
    y: &[f64],
    cumulative: &[f64],
    seed: u64,
    tree: u64,
) -> TreeSamples<'a> {
    let n = cumulative.len();
    let total = cumulative[n - 1];
    let mut rng = rng::stream(seed, &[tree]);
    let mut counts = vec![0usize; n];
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= u).min(n - 1);
        counts[i] += 1;
    }
    let rows: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    TreeSamples {
        x,
        y: rows.iter().map(|&i| y[i]).collect(),
        weight: rows.iter().map(|&i| counts[i] as f64).collect(),
        count: rows.iter().map(|&i| counts[i]).collect(),
        rows,
    }
}

impl MonotonicForest {
    /// Assembles a forest from prebuilt trees.
    pub fn from_parts(
        trees: Vec<RegressionTree>,
        params: ForestParams,
        constraints: ConstraintVector,
        target_range: (f64, f64),
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(CalibrationError::Format("forest has no trees".into()));
        }
        if !(target_range.0 <= target_range.1) {
            return Err(CalibrationError::Format("invalid target range".into()));
        }
        for tree in &trees {
            if let Some(f) = tree.max_feature() {
                if f >= constraints.len() {
                    return Err(CalibrationError::Format(format!(
                        "tree splits on feature {f} but only {} features are declared",
                        constraints.len()
                    )));
                }
            }
        }
        Ok(MonotonicForest {
            trees,
            params,
            constraints,
            target_range,
        })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn constraints(&self) -> &ConstraintVector {
        &self.constraints
    }

    pub fn dim(&self) -> usize {
        self.constraints.len()
    }

    pub fn target_range(&self) -> (f64, f64) {
        self.target_range
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(CalibrationError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(CalibrationError::InvalidParameter(format!(
                "feature value {bad} is not finite"
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        // the mean of in-range leaves can land one ulp outside after rounding
        (sum / self.trees.len() as f64).clamp(self.target_range.0, self.target_range.1)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&ForestEnvelope {
            format: FOREST_FORMAT.into(),
            version: FOREST_VERSION,
            forest: self.clone(),
        })
        .map_err(|e| CalibrationError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: ForestEnvelope =
            serde_json::from_str(text).map_err(|e| CalibrationError::Format(e.to_string()))?;
        if env.format != FOREST_FORMAT || env.version != FOREST_VERSION {
            return Err(CalibrationError::Format(format!(
                "unsupported forest format {} v{}",
                env.format, env.version
            )));
        }
        let f = env.forest;
        let trees = f
            .trees
            .into_iter()
            .map(|t| RegressionTree::from_nodes(t.nodes))
            .collect::<Result<Vec<_>>>()?;
        MonotonicForest::from_parts(trees, f.params, f.constraints, f.target_range)
    }
}

/// First adjacent grid pair whose predictions break the constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneViolation {
    pub index: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

pub const MONOTONE_TOLERANCE: f64 = 1e-12;

/// Sweeps `feature` over `grid` with the remaining coordinates taken from
/// `base` and reports the first adjacent pair that moves against the
/// feature's constraint by more than [`MONOTONE_TOLERANCE`].
pub fn check_monotone(
    forest: &MonotonicForest,
    feature: usize,
    grid: &[f64],
    base: &[f64],
) -> Result<Option<MonotoneViolation>> {
    let direction = forest
        .constraints()
        .get(feature)
        .ok_or(CalibrationError::DimensionMismatch {
            expected: forest.dim(),
            actual: feature + 1,
        })?;
    let sign = match direction {
        Monotonicity::Increasing => 1.0,
        Monotonicity::Decreasing => -1.0,
        Monotonicity::Unconstrained => {
            return Err(CalibrationError::InvalidParameter(format!(
                "feature {feature} is unconstrained"
            )))
        }
    };
    if base.len() != forest.dim() {
        return Err(CalibrationError::DimensionMismatch {
            expected: forest.dim(),
            actual: base.len(),
        });
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(CalibrationError::InvalidParameter("grid must be sorted ascending".into()));
    }
    let mut x = base.to_vec();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &g) in grid.iter().enumerate() {
        x[feature] = g;
        let y = forest.predict(&x)?;
        if let Some((gx, gy)) = prev {
            if sign * (y - gy) < -MONOTONE_TOLERANCE {
                return Ok(Some(MonotoneViolation {
                    index: i - 1,
                    x_lo: gx,
                    x_hi: g,
                    y_lo: gy,
                    y_hi: y,
                }));
            }
        }
        prev = Some((g, y));
    }
    Ok(None)
}
